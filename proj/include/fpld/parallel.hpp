// OpenMP work distribution. Every parallel kernel in the library writes its
// results into pre-sized slots indexed by work item and reduces them in a
// fixed order afterwards, so the serial path (threads == 1) and the OpenMP
// path produce bitwise identical output.
#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpld {

// threads == 0: library default (hardware threads); threads >= 1: exactly
// that many.
inline int resolve_threads(int threads) {
#ifdef _OPENMP
    if (threads <= 0) return omp_get_max_threads();
    return threads;
#else
    (void)threads;
    return 1;
#endif
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& body) {
    const int n_threads = resolve_threads(threads);
    if (n_threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (long long i = 0; i < static_cast<long long>(count); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

inline double wall_time_seconds() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return 0.0;
#endif
}

}  // namespace fpld
