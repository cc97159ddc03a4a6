// tlle: generate data sets, embed them with LLE / HLLE / TLLE, compare runs,
// and estimate intrinsic dimension.

#include <tlle/tlle.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tlle;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numeric = 3;

// ---------------------------------------------------------------- paths / io

fs::path sibling(const fs::path& p, const std::string& suffix)
{
    fs::path out = p;
    out.replace_extension();
    return fs::path(out.string() + suffix);
}

void require_writable_dir(const fs::path& p)
{
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (!fs::is_directory(dir))
        throw InvalidArgument("output directory does not exist: " + dir.string());
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + p.string());
    out << text;
    if (!out)
        throw InvalidArgument("failed writing " + p.string());
}

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct LoadedInput {
    PointCloud cloud;
    std::string hash;
    std::optional<fs::path> truth_path;
};

/// Reads the cloud and its ground truth: explicit --truth, else <stem>.truth.csv if present.
LoadedInput load_input(const fs::path& in, const std::string& truth_flag)
{
    LoadedInput r;
    const std::string bytes = read_bytes(in);
    r.hash = fnv1a_hex(bytes);
    std::istringstream ss(bytes);
    r.cloud = PointCloud(parse_csv_matrix(ss));
    if (!truth_flag.empty())
        r.truth_path = truth_flag;
    else if (fs::exists(sibling(in, ".truth.csv")))
        r.truth_path = sibling(in, ".truth.csv");
    if (r.truth_path)
        r.cloud.ground_truth = load_csv_matrix(*r.truth_path);
    r.cloud.validate();
    return r;
}

/// Whitespace-separated "x y [z] label" rows for external plotters.
std::string plot_table(const Eigen::MatrixXd& y, const PointCloud& cloud)
{
    std::string out;
    for (Index i = 0; i < y.rows(); ++i) {
        for (Index j = 0; j < y.cols(); ++j) {
            detail::append_double(out, y(i, j));
            out.push_back(' ');
        }
        if (cloud.ground_truth)
            detail::append_double(out, (*cloud.ground_truth)(i, 0));
        else
            out += std::to_string(i);
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------- run specs

/// Parses "method:k=8,d=2,dM=2,m=2[,reg=..,seed=..]".
RunConfig parse_run_spec(const std::string& spec, const RunConfig& defaults)
{
    RunConfig c = defaults;
    const auto colon = spec.find(':');
    c.method = parse_method(spec.substr(0, colon));
    if (colon == std::string::npos)
        return c;
    std::stringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("run spec item '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        double v = 0.0;
        if (!detail::parse_double(value, v))
            throw InvalidArgument("run spec value '" + value + "' is not a number");
        const auto as_index = [&] {
            if (v != std::floor(v))
                throw InvalidArgument("run spec '" + key + "' must be an integer");
            return static_cast<Index>(v);
        };
        if (key == "k")
            c.k = as_index();
        else if (key == "d")
            c.d = as_index();
        else if (key == "dM")
            c.d_manifold = as_index();
        else if (key == "m")
            c.m = as_index();
        else if (key == "reg")
            c.reg = v;
        else if (key == "seed")
            c.seed = static_cast<std::uint64_t>(as_index());
        else if (key == "threshold")
            c.threshold = v;
        else
            throw InvalidArgument("unknown run spec key '" + key + "'");
    }
    return c;
}

std::string describe(const RunConfig& c)
{
    std::string s = std::string(to_string(c.method)) + " k=" + std::to_string(c.k) + " d=" + std::to_string(c.d);
    if (c.method == Method::tlle) {
        if (c.d_manifold)
            s += " dM=" + std::to_string(*c.d_manifold);
        if (c.m)
            s += " m=" + std::to_string(*c.m);
    }
    return s;
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream ss;
    ss << std::setprecision(precision) << v;
    return ss.str();
}

// ---------------------------------------------------------------- commands

struct GenerateArgs {
    std::string dataset;
    Index n = 1500;
    std::uint64_t seed = 0;
    std::string out;
    double hole = 0.1;
    std::string form = "torus";
    Index lift = 0;
    Index dim = 3;
};

int cmd_generate(const GenerateArgs& a)
{
    PointCloud cloud;
    json params;
    if (a.dataset == "swiss-hole") {
        const SwissRollShape shape;
        cloud = gen_swiss_roll_hole(a.n, a.hole, a.seed, shape);
        params = swiss_roll_parameters(a.hole, shape);
    } else if (a.dataset == "trefoil") {
        if (a.form != "torus" && a.form != "lobed")
            throw InvalidArgument("trefoil form must be torus or lobed");
        cloud = gen_trefoil(a.n, a.seed, a.form == "lobed" ? TrefoilForm::lobed : TrefoilForm::torus);
        params = {{"form", a.form}};
    } else if (a.dataset == "gaussian") {
        cloud = gen_gaussian_blob(a.n, a.dim, a.seed);
        params = {{"dim", a.dim}};
    } else {
        throw InvalidArgument("unknown dataset '" + a.dataset + "' (expected swiss-hole, trefoil or gaussian)");
    }
    if (a.lift > 0) {
        cloud = lift_isometric(cloud, a.lift, a.seed);
        params["lift_dim"] = a.lift;
    }

    const fs::path out = a.out;
    require_writable_dir(out);
    json manifest = make_manifest(a.dataset, a.n, a.seed, params);
    manifest["dim"] = cloud.dim();
    manifest["points"] = out.filename().string();
    const std::string points_csv = format_csv(cloud.points);
    manifest["points_hash"] = fnv1a_hex(points_csv);
    write_text(out, points_csv);
    if (cloud.ground_truth) {
        const fs::path truth = sibling(out, ".truth.csv");
        write_text(truth, format_csv(*cloud.ground_truth));
        manifest["ground_truth"] = truth.filename().string();
    }
    write_text(sibling(out, ".manifest.json"), manifest.dump(2) + "\n");
    std::cout << "wrote " << cloud.size() << "x" << cloud.dim() << " points to " << out.string() << "\n";
    return exit_ok;
}

struct EmbedArgs {
    RunConfig config;
    std::string in;
    std::string out;
    std::string truth;
    std::string plot;
    Index k_eval = 0;
};

int cmd_embed(const EmbedArgs& a)
{
    const LoadedInput input = load_input(a.in, a.truth);
    validate_config(a.config, input.cloud.size(), input.cloud.dim());
    const fs::path out = a.out;
    require_writable_dir(out);
    if (!a.plot.empty())
        require_writable_dir(a.plot);

    const auto start = std::chrono::steady_clock::now();
    const PipelineResult r = run_pipeline(input.cloud, a.config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json sidecar = embedding_sidecar(r);
    sidecar["input"] = {{"path", a.in}, {"fnv1a64", input.hash}, {"n", input.cloud.size()}, {"dim", input.cloud.dim()}};
    sidecar["seconds"] = seconds;
    std::optional<EvalReport> report;
    if (input.cloud.ground_truth) {
        report = evaluate(input.cloud, r.embedding, r.neighbors, r.blocks, a.k_eval > 0 ? a.k_eval : a.config.k);
        sidecar["report"] = report->to_json();
        sidecar["ground_truth"] = input.truth_path->string();
    }

    const Eigen::MatrixXd points = r.embedding.points();
    write_text(out, format_csv(points));
    write_text(sibling(out, ".json"), sidecar.dump(2) + "\n");
    if (report)
        write_text(sibling(out, ".report.json"), report->to_json().dump(2) + "\n");
    if (!a.plot.empty())
        write_text(a.plot, plot_table(points, input.cloud));

    std::cout << describe(r.config) << ": N=" << r.embedding.size() << " eigenvalues";
    for (Index j = 0; j < r.embedding.eigenvalues.size(); ++j)
        std::cout << " " << fmt(r.embedding.eigenvalues(j), 6);
    if (r.embedding.degenerate_null_space)
        std::cout << " (degenerate null space)";
    std::cout << "\n";
    if (r.dimension_estimate)
        std::cout << "estimated d_M = " << r.dimension_estimate->dimension << "\n";
    if (report)
        std::cout << "report: " << report->to_json().dump() << "\n";
    return exit_ok;
}

struct CompareArgs {
    RunConfig defaults;
    std::vector<std::string> runs;
    std::string in;
    std::string out;
    std::string truth;
    Index k_eval = 0;
};

int cmd_compare(const CompareArgs& a)
{
    if (a.runs.size() < 2)
        throw InvalidArgument("compare needs at least two --run configurations");
    const LoadedInput input = load_input(a.in, a.truth);
    std::vector<RunConfig> configs;
    for (const auto& spec : a.runs) {
        configs.push_back(parse_run_spec(spec, a.defaults));
        validate_config(configs.back(), input.cloud.size(), input.cloud.dim());
    }
    if (!a.out.empty())
        require_writable_dir(a.out);

    struct Row {
        std::string name;
        std::optional<PipelineResult> result;
        std::optional<EvalReport> report;
        std::string error;
        std::string error_kind;
    };
    std::vector<Row> rows;
    for (const auto& c : configs) {
        Row row;
        row.name = describe(c);
        try {
            row.result = run_pipeline(input.cloud, c);
            row.name = describe(row.result->config);
            row.report = evaluate(input.cloud, row.result->embedding, row.result->neighbors, row.result->blocks,
                                  a.k_eval > 0 ? a.k_eval : c.k);
        } catch (const Error& e) {
            row.error = e.what();
            row.error_kind = e.kind();
        }
        rows.push_back(std::move(row));
    }

    // Mutual similarity-Procrustes error against the first successful run.
    const Row* ref = nullptr;
    for (const auto& r : rows)
        if (r.result) {
            ref = &r;
            break;
        }

    std::cout << std::left << std::setw(28) << "run" << std::setw(14) << "residual" << std::setw(12) << "affine"
              << std::setw(14) << "preservation" << std::setw(12) << "procrustes" << std::setw(12) << "mutual"
              << std::setw(10) << "self_int" << "\n";
    json agg;
    agg["input"] = {{"path", a.in}, {"fnv1a64", input.hash}, {"n", input.cloud.size()}, {"dim", input.cloud.dim()}};
    agg["runs"] = json::array();
    bool failed = false;
    for (const auto& r : rows) {
        json jr;
        jr["name"] = r.name;
        std::cout << std::setw(28) << r.name;
        if (!r.result) {
            failed = true;
            jr["error"] = {{"kind", r.error_kind}, {"message", r.error}};
            std::cout << "error: " << r.error << "\n";
            agg["runs"].push_back(jr);
            continue;
        }
        jr["config"] = r.result->config.to_json();
        jr["eigenvalues"] = embedding_sidecar(*r.result)["eigenvalues"];
        jr["degenerate_null_space"] = r.result->embedding.degenerate_null_space;
        jr["report"] = r.report->to_json();
        std::optional<double> mutual;
        if (ref && ref->result->embedding.dim() == r.result->embedding.dim())
            mutual = procrustes_error(r.result->embedding.points(), ref->result->embedding.points());
        jr["mutual_procrustes"] = mutual ? json(*mutual) : json(nullptr);
        std::cout << std::setw(14) << fmt(r.report->relation_residual) << std::setw(12)
                  << fmt(r.report->affine_projection_score) << std::setw(14) << fmt(r.report->neighborhood_preservation)
                  << std::setw(12) << (r.report->procrustes_error ? fmt(*r.report->procrustes_error) : "-")
                  << std::setw(12) << (mutual ? fmt(*mutual) : "-") << std::setw(10)
                  << (r.report->self_intersection ? (*r.report->self_intersection ? "yes" : "no") : "-") << "\n";
        agg["runs"].push_back(jr);
    }
    if (!a.out.empty())
        write_text(a.out, agg.dump(2) + "\n");
    return failed ? exit_numeric : exit_ok;
}

struct DimArgs {
    std::string in;
    Index k = 8;
    double threshold = 0.25;
    std::string out;
};

int cmd_dim(const DimArgs& a)
{
    PointCloud cloud = load_csv(a.in);
    if (a.k < 1 || a.k > cloud.size() - 1)
        throw InvalidArgument("k must lie in [1, N-1]");
    if (!a.out.empty())
        require_writable_dir(a.out);
    const auto spectra = local_spectra(cloud.points, knn(cloud, a.k));
    const DimensionEstimate est = estimate_intrinsic_dim(spectra, a.threshold);
    std::cout << "d_hat = " << est.dimension << "\n";
    json hist = json::object();
    for (const auto& [dim, votes] : est.histogram) {
        std::cout << "  " << dim << ": " << votes << "\n";
        hist[std::to_string(dim)] = votes;
    }
    if (!est.excluded.empty())
        std::cout << "  excluded (sigma_1 = 0): " << est.excluded.size() << "\n";
    if (!a.out.empty()) {
        json j{{"dimension", est.dimension}, {"histogram", hist}, {"excluded", est.excluded.size()},
               {"k", a.k}, {"threshold", a.threshold}};
        write_text(a.out, j.dump(2) + "\n");
    }
    return exit_ok;
}

int report_error(int code, const std::string& kind, const std::string& message)
{
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    return code;
}

void add_run_options(CLI::App* cmd, RunConfig& c, std::string& method, std::optional<Index>& dm,
                     std::optional<Index>& m, bool& allow_degenerate)
{
    cmd->add_option("--method", method, "lle, hlle or tlle")->check(CLI::IsMember({"lle", "hlle", "tlle"}));
    cmd->add_option("--k", c.k, "neighbors per point");
    cmd->add_option("--d", c.d, "target dimension");
    cmd->add_option("--dM", dm, "manifold dimension (tlle; estimated when omitted)");
    cmd->add_option("--m", m, "h-weights per neighborhood (tlle)");
    cmd->add_option("--reg", c.reg, "LLE regularization");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--threshold", c.threshold, "significance ratio for the d_M estimate");
    cmd->add_flag("--allow-degenerate", allow_degenerate,
                  "return an embedding even if the alignment matrix has several zero eigenvalues");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tangential LLE and related embeddings"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write a synthetic data set");
    generate->add_option("dataset", gen.dataset, "swiss-hole, trefoil or gaussian")->required();
    generate->add_option("--n", gen.n, "number of points");
    generate->add_option("--seed", gen.seed, "random seed");
    generate->add_option("--out", gen.out, "output CSV")->required();
    generate->add_option("--hole", gen.hole, "swiss-hole: hole area fraction");
    generate->add_option("--form", gen.form, "trefoil: torus or lobed");
    generate->add_option("--lift", gen.lift, "embed isometrically into this many dimensions");
    generate->add_option("--dim", gen.dim, "gaussian: dimension");

    EmbedArgs emb;
    std::string emb_method = "tlle";
    std::optional<Index> emb_dm, emb_m;
    bool emb_degenerate = false;
    auto* embed = app.add_subcommand("embed", "compute an embedding");
    add_run_options(embed, emb.config, emb_method, emb_dm, emb_m, emb_degenerate);
    embed->add_option("--in", emb.in, "input CSV")->required();
    embed->add_option("--out", emb.out, "embedding CSV")->required();
    embed->add_option("--truth", emb.truth, "ground-truth CSV (default: <input stem>.truth.csv if present)");
    embed->add_option("--plot", emb.plot, "also write a whitespace table x y [z] label");
    embed->add_option("--k-eval", emb.k_eval, "neighborhood size for preservation (default k)");

    CompareArgs cmp;
    std::string cmp_method = "tlle";
    std::optional<Index> cmp_dm, cmp_m;
    bool cmp_degenerate = false;
    auto* compare = app.add_subcommand("compare", "run several configurations on one input");
    add_run_options(compare, cmp.defaults, cmp_method, cmp_dm, cmp_m, cmp_degenerate);
    compare->add_option("--run", cmp.runs, "method:k=..,d=..,dM=..,m=.. (repeat)");
    compare->add_option("--in", cmp.in, "input CSV")->required();
    compare->add_option("--out", cmp.out, "aggregate JSON");
    compare->add_option("--truth", cmp.truth, "ground-truth CSV (default: <input stem>.truth.csv if present)");
    compare->add_option("--k-eval", cmp.k_eval, "neighborhood size for preservation (default k)");

    DimArgs dim;
    auto* dimcmd = app.add_subcommand("dim", "estimate intrinsic dimension");
    dimcmd->add_option("--in", dim.in, "input CSV")->required();
    dimcmd->add_option("--k", dim.k, "neighbors per point");
    dimcmd->add_option("--threshold", dim.threshold, "significance ratio");
    dimcmd->add_option("--out", dim.out, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(exit_validation, "usage", e.what());
    }

    try {
        set_thread_count(threads);
        if (*generate)
            return cmd_generate(gen);
        if (*embed) {
            emb.config.method = parse_method(emb_method);
            emb.config.d_manifold = emb_dm;
            emb.config.m = emb_m;
            emb.config.solve.allow_degenerate = emb_degenerate;
            return cmd_embed(emb);
        }
        if (*compare) {
            cmp.defaults.method = parse_method(cmp_method);
            cmp.defaults.d_manifold = cmp_dm;
            cmp.defaults.m = cmp_m;
            cmp.defaults.solve.allow_degenerate = cmp_degenerate;
            return cmd_compare(cmp);
        }
        if (*dimcmd)
            return cmd_dim(dim);
    } catch (const NumericError& e) {
        return report_error(exit_numeric, e.kind(), e.what());
    } catch (const Error& e) {
        return report_error(exit_validation, e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error(1, "internal", e.what());
    }
    return exit_ok;
}
