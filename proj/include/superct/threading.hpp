#pragma once

#include <cstddef>
#include <vector>

#include "superct/kernels.hpp"

// Deterministic reductions: work is split into fixed-size blocks (independent
// of thread count), block partials are computed in parallel and combined
// sequentially in block order. Results are bit-identical for any --threads.

namespace superct::par {

inline constexpr std::size_t kBlock = 8192;

void set_threads(int n);  // n <= 0 restores the default (all cores)
int threads();

double blocked_sumsq(const double* x, std::size_t n);
double blocked_dot(const double* x, const double* y, std::size_t n);
double blocked_wssq(const double* w, const double* r, std::size_t n);

}  // namespace superct::par
