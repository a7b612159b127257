#pragma once

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ffl {

// Every field kernel comes in the same code path twice: Exec::Serial is the
// reference, Exec::Parallel runs the identical per-point work under OpenMP.
// Results are bitwise equal (pointwise writes, order-independent reductions).
enum class Exec { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Applies the FFL_THREADS cap; call once at process start.
inline void init_threads_from_env() {
#ifdef _OPENMP
    if (const char* s = std::getenv("FFL_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

template <class F>
inline void parallel_for(Exec exec, long n, F&& body) {
    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long i = 0; i < n; ++i) body(i);
    } else {
        for (long i = 0; i < n; ++i) body(i);
    }
}

}  // namespace ffl
