#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eqlib {

// Worker count: EQLIB_THREADS caps it, 0 or unset means auto.
// Results must not depend on this value; all kernels reduce in fixed order.
int worker_count();
void set_worker_count(int n);

// Parallel loop over [0, n). The body must only touch disjoint state per index.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
#ifdef _OPENMP
    const int nt = worker_count();
    if (nt > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#endif
    for (std::int64_t i = 0; i < n; ++i) fn(i);
}

// Deterministic per-index RNG substream: splitmix64 mix of (seed, index).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

}  // namespace eqlib
