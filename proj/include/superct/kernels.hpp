#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel double-precision primitives with interchangeable backends.
// Every backend follows the same arithmetic contract so results are
// bit-identical across lanes:
//   - elementwise ops apply the identical per-element expression;
//   - reductions run 4 interleaved accumulators over the main body,
//     combined as (a0+a1)+(a2+a3), remainder elements added last in order.
// Backend selection happens once at startup (cpuid); tests may force a lane.

namespace superct::kern {

struct Backend {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // x[i] *= a
    void (*scale)(std::size_t n, double a, double* x);
    // y[i] += x[i]
    void (*add)(std::size_t n, const double* x, double* y);
    // y[i] -= x[i]
    void (*sub)(std::size_t n, const double* x, double* y);
    // y[i] *= x[i]
    void (*mul)(std::size_t n, const double* x, double* y);
    // y[i] -= a[i] * b[i]   (solver update step x -= g * dinv)
    void (*sub_mul)(std::size_t n, const double* a, const double* b, double* y);
    // z[i] = a*x[i] + b*y[i]
    void (*lincomb)(std::size_t n, double a, const double* x, double b, const double* y, double* z);

    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sumsq)(std::size_t n, const double* x);
    // sum_i w[i] * r[i]^2
    double (*wssq)(std::size_t n, const double* w, const double* r);

    // out[i] = |x[i]| < gamma ? 0 : x[i]; returns number of survivors
    std::size_t (*hard_threshold)(std::size_t n, double gamma, const double* x, double* out);
    // out[i] = max(x[i], 0)
    void (*relu)(std::size_t n, const double* x, double* out);
    // g[i] = x[i] > 0 ? g[i] : 0   (backward mask for relu at pre-activation x)
    void (*relu_mask)(std::size_t n, const double* x, double* g);
};

const Backend& scalar_backend();
const Backend* simd_backend();   // nullptr if the CPU lacks the SIMD lane

// Active backend (SIMD when available unless forced otherwise).
const Backend& active();

// Force a lane by name ("scalar", "simd", "auto"). Returns false if unknown
// or unavailable. Intended for tests and the CLI --no-simd escape hatch.
bool force_backend(const char* name);

// Convenience forwarders.
inline void axpy(std::size_t n, double a, const double* x, double* y) { active().axpy(n, a, x, y); }
inline void scale(std::size_t n, double a, double* x) { active().scale(n, a, x); }
inline void add(std::size_t n, const double* x, double* y) { active().add(n, x, y); }
inline void sub(std::size_t n, const double* x, double* y) { active().sub(n, x, y); }
inline void mul(std::size_t n, const double* x, double* y) { active().mul(n, x, y); }
inline void sub_mul(std::size_t n, const double* a, const double* b, double* y) { active().sub_mul(n, a, b, y); }
inline void lincomb(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    active().lincomb(n, a, x, b, y, z);
}
inline double dot(std::size_t n, const double* x, const double* y) { return active().dot(n, x, y); }
inline double sumsq(std::size_t n, const double* x) { return active().sumsq(n, x); }
inline double wssq(std::size_t n, const double* w, const double* r) { return active().wssq(n, w, r); }
inline std::size_t hard_threshold(std::size_t n, double gamma, const double* x, double* out) {
    return active().hard_threshold(n, gamma, x, out);
}
inline void relu(std::size_t n, const double* x, double* out) { active().relu(n, x, out); }
inline void relu_mask(std::size_t n, const double* x, double* g) { active().relu_mask(n, x, g); }

}  // namespace superct::kern
