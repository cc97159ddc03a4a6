#pragma once

#include <Eigen/Core>

#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tlle {

inline void set_thread_count(int threads)
{
#ifdef _OPENMP
    if (threads > 0)
        omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

/// Runs body(i) for i in [0, n) across threads. If any call throws, the
/// exception from the smallest failing i is rethrown, so the reported error
/// does not depend on scheduling.
template <class Body>
void parallel_for(Eigen::Index n, Body&& body)
{
    Eigen::Index first_failure = std::numeric_limits<Eigen::Index>::max();
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(tlle_parallel_for)
            {
                if (i < first_failure) {
                    first_failure = i;
                    failure = std::current_exception();
                }
            }
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace tlle
