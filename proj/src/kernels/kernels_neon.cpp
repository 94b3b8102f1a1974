#include "superct/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

// NEON lane, 2 doubles per register. Two accumulator registers reproduce the
// 4-lane reduction structure of the scalar reference: accv0 = (acc0, acc1),
// accv1 = (acc2, acc3), combined as (acc0+acc1)+(acc2+acc3).

namespace superct::kern {
namespace {

inline double reduce4(float64x2_t a01, float64x2_t a23) {
    double s01 = vgetq_lane_f64(a01, 0) + vgetq_lane_f64(a01, 1);
    double s23 = vgetq_lane_f64(a23, 0) + vgetq_lane_f64(a23, 1);
    return s01 + s23;
}

void v_axpy(std::size_t n, double a, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(3);
    float64x2_t va = vdupq_n_f64(a);
    for (std::size_t i = 0; i < body; i += 4) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
        vst1q_f64(y + i + 2, vaddq_f64(vld1q_f64(y + i + 2), vmulq_f64(va, vld1q_f64(x + i + 2))));
    }
    for (std::size_t i = body; i < n; ++i) y[i] += a * x[i];
}

void v_scale(std::size_t n, double a, double* x) {
    std::size_t body = n & ~std::size_t(1);
    float64x2_t va = vdupq_n_f64(a);
    for (std::size_t i = 0; i < body; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
    for (std::size_t i = body; i < n; ++i) x[i] *= a;
}

void v_add(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(1);
    for (std::size_t i = 0; i < body; i += 2)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] += x[i];
}

void v_sub(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(1);
    for (std::size_t i = 0; i < body; i += 2)
        vst1q_f64(y + i, vsubq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] -= x[i];
}

void v_mul(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(1);
    for (std::size_t i = 0; i < body; i += 2)
        vst1q_f64(y + i, vmulq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] *= x[i];
}

void v_sub_mul(std::size_t n, const double* a, const double* b, double* y) {
    std::size_t body = n & ~std::size_t(1);
    for (std::size_t i = 0; i < body; i += 2) {
        float64x2_t prod = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        vst1q_f64(y + i, vsubq_f64(vld1q_f64(y + i), prod));
    }
    for (std::size_t i = body; i < n; ++i) y[i] -= a[i] * b[i];
}

void v_lincomb(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    std::size_t body = n & ~std::size_t(1);
    float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b);
    for (std::size_t i = 0; i < body; i += 2)
        vst1q_f64(z + i, vaddq_f64(vmulq_f64(va, vld1q_f64(x + i)), vmulq_f64(vb, vld1q_f64(y + i))));
    for (std::size_t i = body; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

double v_dot(std::size_t n, const double* x, const double* y) {
    std::size_t body = n & ~std::size_t(3);
    float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < body; i += 4) {
        a01 = vaddq_f64(a01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        a23 = vaddq_f64(a23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double s = reduce4(a01, a23);
    for (std::size_t i = body; i < n; ++i) s += x[i] * y[i];
    return s;
}

double v_sumsq(std::size_t n, const double* x) {
    std::size_t body = n & ~std::size_t(3);
    float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < body; i += 4) {
        float64x2_t v0 = vld1q_f64(x + i), v1 = vld1q_f64(x + i + 2);
        a01 = vaddq_f64(a01, vmulq_f64(v0, v0));
        a23 = vaddq_f64(a23, vmulq_f64(v1, v1));
    }
    double s = reduce4(a01, a23);
    for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
    return s;
}

double v_wssq(std::size_t n, const double* w, const double* r) {
    std::size_t body = n & ~std::size_t(3);
    float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < body; i += 4) {
        float64x2_t r0 = vld1q_f64(r + i), r1 = vld1q_f64(r + i + 2);
        a01 = vaddq_f64(a01, vmulq_f64(vld1q_f64(w + i), vmulq_f64(r0, r0)));
        a23 = vaddq_f64(a23, vmulq_f64(vld1q_f64(w + i + 2), vmulq_f64(r1, r1)));
    }
    double s = reduce4(a01, a23);
    for (std::size_t i = body; i < n; ++i) s += w[i] * (r[i] * r[i]);
    return s;
}

std::size_t v_hard_threshold(std::size_t n, double gamma, const double* x, double* out) {
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool keep = !(std::fabs(x[i]) < gamma);
        out[i] = keep ? x[i] : 0.0;
        nnz += keep ? 1u : 0u;
    }
    return nnz;
}

void v_relu(std::size_t n, const double* x, double* out) {
    std::size_t body = n & ~std::size_t(1);
    const float64x2_t zero = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < body; i += 2) {
        float64x2_t vx = vld1q_f64(x + i);
        uint64x2_t keep = vcgtq_f64(vx, zero);
        vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vx), keep)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_mask(std::size_t n, const double* x, double* g) {
    std::size_t body = n & ~std::size_t(1);
    const float64x2_t zero = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < body; i += 2) {
        uint64x2_t keep = vcgtq_f64(vld1q_f64(x + i), zero);
        vst1q_f64(g + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vld1q_f64(g + i)), keep)));
    }
    for (std::size_t i = body; i < n; ++i) g[i] = x[i] > 0.0 ? g[i] : 0.0;
}

const Backend kNeon = {
    "neon",  v_axpy,  v_scale, v_add,  v_sub,   v_mul,  v_sub_mul,        v_lincomb,
    v_dot,   v_sumsq, v_wssq,  v_hard_threshold, v_relu, v_relu_mask,
};

}  // namespace

const Backend* simd_backend() { return &kNeon; }

}  // namespace superct::kern

#endif  // __aarch64__
