#include "superct/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

// AVX2 lane, 4 doubles per register. No FMA: mul+add keeps every lane
// bit-identical to the scalar reference (and to -ffp-contract=off codegen).

namespace superct::kern {
namespace {

inline double reduce4(__m256d acc) {
    __m128d lo = _mm256_castpd256_pd128(acc);   // acc0, acc1
    __m128d hi = _mm256_extractf128_pd(acc, 1); // acc2, acc3
    __m128d s01 = _mm_hadd_pd(lo, lo);
    __m128d s23 = _mm_hadd_pd(hi, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s01, s23));
}

void v_axpy(std::size_t n, double a, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(3);
    __m256d va = _mm256_set1_pd(a);
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = body; i < n; ++i) y[i] += a * x[i];
}

void v_scale(std::size_t n, double a, double* x) {
    std::size_t body = n & ~std::size_t(3);
    __m256d va = _mm256_set1_pd(a);
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (std::size_t i = body; i < n; ++i) x[i] *= a;
}

void v_add(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] += x[i];
}

void v_sub(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] -= x[i];
}

void v_mul(std::size_t n, const double* x, double* y) {
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (std::size_t i = body; i < n; ++i) y[i] *= x[i];
}

void v_sub_mul(std::size_t n, const double* a, const double* b, double* y) {
    std::size_t body = n & ~std::size_t(3);
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (std::size_t i = body; i < n; ++i) y[i] -= a[i] * b[i];
}

void v_lincomb(std::size_t n, double a, const double* x, double b, const double* y, double* z) {
    std::size_t body = n & ~std::size_t(3);
    __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d t = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                                  _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(z + i, t);
    }
    for (std::size_t i = body; i < n; ++i) z[i] = a * x[i] + b * y[i];
}

double v_dot(std::size_t n, const double* x, const double* y) {
    std::size_t body = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double s = reduce4(acc);
    for (std::size_t i = body; i < n; ++i) s += x[i] * y[i];
    return s;
}

double v_sumsq(std::size_t n, const double* x) {
    std::size_t body = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vx));
    }
    double s = reduce4(acc);
    for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
    return s;
}

double v_wssq(std::size_t n, const double* w, const double* r) {
    std::size_t body = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d vr = _mm256_loadu_pd(r + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(vr, vr)));
    }
    double s = reduce4(acc);
    for (std::size_t i = body; i < n; ++i) s += w[i] * (r[i] * r[i]);
    return s;
}

std::size_t v_hard_threshold(std::size_t n, double gamma, const double* x, double* out) {
    std::size_t body = n & ~std::size_t(3);
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d vg = _mm256_set1_pd(gamma);
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d drop = _mm256_cmp_pd(_mm256_and_pd(vx, abs_mask), vg, _CMP_LT_OQ);
        _mm256_storeu_pd(out + i, _mm256_andnot_pd(drop, vx));
        nnz += 4u - (std::size_t)__builtin_popcount((unsigned)_mm256_movemask_pd(drop));
    }
    for (std::size_t i = body; i < n; ++i) {
        bool keep = !(std::fabs(x[i]) < gamma);
        out[i] = keep ? x[i] : 0.0;
        nnz += keep ? 1u : 0u;
    }
    return nnz;
}

void v_relu(std::size_t n, const double* x, double* out) {
    std::size_t body = n & ~std::size_t(3);
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (std::size_t i = body; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_mask(std::size_t n, const double* x, double* g) {
    std::size_t body = n & ~std::size_t(3);
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d keep = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(g + i, _mm256_and_pd(_mm256_loadu_pd(g + i), keep));
    }
    for (std::size_t i = body; i < n; ++i) g[i] = x[i] > 0.0 ? g[i] : 0.0;
}

const Backend kAvx2 = {
    "avx2",  v_axpy,  v_scale, v_add,  v_sub,   v_mul,  v_sub_mul,        v_lincomb,
    v_dot,   v_sumsq, v_wssq,  v_hard_threshold, v_relu, v_relu_mask,
};

}  // namespace

const Backend* simd_backend() {
    return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
}

}  // namespace superct::kern

#endif  // x86_64
