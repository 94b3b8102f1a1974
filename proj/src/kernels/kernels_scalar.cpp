#include "superct/kernels.hpp"

#include <cmath>

// Reference lane. Reductions mirror the 4-lane accumulator structure of the
// SIMD backends exactly; do not "simplify" them into a single accumulator.

namespace superct::kern {
namespace {

void s_axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_add(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void s_sub(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] -= x[i];
}

void s_mul(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

void s_sub_mul(std::size_t n, const double* a, const double* b, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] -= a[i] * b[i];
}

void s_lincomb(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

double s_dot(std::size_t n, const double* x, const double* y) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4) {
        acc[0] += x[i + 0] * y[i + 0];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < n; ++i) s += x[i] * y[i];
    return s;
}

double s_sumsq(std::size_t n, const double* x) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4) {
        acc[0] += x[i + 0] * x[i + 0];
        acc[1] += x[i + 1] * x[i + 1];
        acc[2] += x[i + 2] * x[i + 2];
        acc[3] += x[i + 3] * x[i + 3];
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
    return s;
}

double s_wssq(std::size_t n, const double* w, const double* r) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4) {
        acc[0] += w[i + 0] * (r[i + 0] * r[i + 0]);
        acc[1] += w[i + 1] * (r[i + 1] * r[i + 1]);
        acc[2] += w[i + 2] * (r[i + 2] * r[i + 2]);
        acc[3] += w[i + 3] * (r[i + 3] * r[i + 3]);
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < n; ++i) s += w[i] * (r[i] * r[i]);
    return s;
}

std::size_t s_hard_threshold(std::size_t n, double gamma, const double* x, double* out) {
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool keep = !(std::fabs(x[i]) < gamma);
        out[i] = keep ? x[i] : 0.0;
        nnz += keep ? 1u : 0u;
    }
    return nnz;
}

void s_relu(std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_mask(std::size_t n, const double* x, double* g) {
    for (std::size_t i = 0; i < n; ++i) g[i] = x[i] > 0.0 ? g[i] : 0.0;
}

const Backend kScalar = {
    "scalar", s_axpy,  s_scale, s_add,  s_sub,   s_mul,  s_sub_mul,        s_lincomb,
    s_dot,    s_sumsq, s_wssq,  s_hard_threshold, s_relu, s_relu_mask,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

}  // namespace superct::kern
