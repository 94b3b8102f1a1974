#include "superct/threading.hpp"

#include <omp.h>

namespace superct::par {

namespace {
int g_threads = 0;
}

void set_threads(int n) {
    g_threads = n > 0 ? n : 0;
    if (n > 0) omp_set_num_threads(n);
}

int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace {

template <class BlockFn>
double blocked_reduce(std::size_t n, BlockFn&& fn) {
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    if (nblocks <= 1) return n ? fn(0, n) : 0.0;
    std::vector<double> partial(nblocks);
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t len = lo + kBlock <= n ? kBlock : n - lo;
        partial[static_cast<std::size_t>(b)] = fn(lo, len);
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

}  // namespace

double blocked_sumsq(const double* x, std::size_t n) {
    return blocked_reduce(n, [&](std::size_t lo, std::size_t len) { return kern::sumsq(len, x + lo); });
}

double blocked_dot(const double* x, const double* y, std::size_t n) {
    return blocked_reduce(n, [&](std::size_t lo, std::size_t len) { return kern::dot(len, x + lo, y + lo); });
}

double blocked_wssq(const double* w, const double* r, std::size_t n) {
    return blocked_reduce(n, [&](std::size_t lo, std::size_t len) { return kern::wssq(len, w + lo, r + lo); });
}

}  // namespace superct::par
