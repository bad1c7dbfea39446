#include "aet/parallel.hpp"

namespace aet {

double sum_chunked(std::span<const double> a, Exec ex) {
    return reduce_chunked(a.size(), ex, [&](std::size_t i) { return a[i]; });
}

double dot_chunked(std::span<const double> a, std::span<const double> b, Exec ex) {
    return reduce_chunked(a.size(), ex, [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace aet
