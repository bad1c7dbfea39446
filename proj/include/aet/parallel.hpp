#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aet {

// Every data-parallel kernel in this project comes in two flavours selected
// by this tag: a plain serial loop (the reference implementation used by the
// comparison tests and the benchmark) and an OpenMP version. Results of the
// two lanes agree exactly for scatter-style kernels and up to floating-point
// summation order for reductions; the deterministic reductions below remove
// even that difference.
enum class Exec { serial, par };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <class F>
void parallel_for(std::size_t n, Exec ex, F&& body) {
#ifdef _OPENMP
    if (ex == Exec::par && n > 1) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)ex;
#endif
    for (std::size_t i = 0; i < n; ++i) {
        body(i);
    }
}

// Chunked reductions: partial sums are computed per fixed-size chunk (in
// parallel) and combined in chunk order, so the result does not depend on the
// thread count. Chunk size is fixed; changing it changes the rounding.
inline constexpr std::size_t kReductionChunk = 4096;

double sum_chunked(std::span<const double> a, Exec ex);
double dot_chunked(std::span<const double> a, std::span<const double> b, Exec ex);

// Generic deterministic reduction over n items: term(i) is accumulated into
// per-chunk partials which are then summed in index order.
template <class Term>
double reduce_chunked(std::size_t n, Exec ex, Term&& term) {
    if (n == 0) return 0.0;
    const std::size_t nchunks = (n + kReductionChunk - 1) / kReductionChunk;
    std::vector<double> partial(nchunks, 0.0);
    parallel_for(nchunks, ex, [&](std::size_t c) {
        const std::size_t lo = c * kReductionChunk;
        const std::size_t hi = lo + kReductionChunk < n ? lo + kReductionChunk : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[c] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace aet
