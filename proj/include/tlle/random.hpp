#pragma once

#include <cstdint>
#include <random>

namespace tlle {

/// splitmix64 finalizer; used to derive independent per-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Engine for stream `stream` of a global seed. Results depend only on
/// (seed, stream), never on evaluation order.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0)
{
    return std::mt19937_64{mix_seed(seed, stream)};
}

} // namespace tlle
