#include "superct/operators.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "superct/kernels.hpp"
#include "superct/projector_detail.hpp"
#include "superct/rng.hpp"
#include "superct/threading.hpp"

namespace superct {

FanBeamProjector::FanBeamProjector(FanBeamGeometry geom) : geom_(std::move(geom)) {
    geom_.validate();
    const size_t nv = static_cast<size_t>(geom_.n_views);
    src_x_.resize(nv);
    src_y_.resize(nv);
    dir_x_.resize(nv);
    dir_y_.resize(nv);
    for (size_t i = 0; i < nv; ++i) {
        const double b = geom_.angles_rad[i];
        src_x_[i] = geom_.source_to_center_mm * std::cos(b);
        src_y_[i] = geom_.source_to_center_mm * std::sin(b);
        dir_x_[i] = -std::sin(b);
        dir_y_[i] = std::cos(b);
    }
}

size_t FanBeamProjector::domain_size() const {
    return static_cast<size_t>(geom_.image_rows) * geom_.image_cols;
}

size_t FanBeamProjector::range_size() const {
    return static_cast<size_t>(geom_.n_views) * geom_.n_dets;
}

void FanBeamProjector::apply(const double* x, double* y) const {
    const int nv = geom_.n_views, nd = geom_.n_dets;
#pragma omp parallel for schedule(static)
    for (int view = 0; view < nv; ++view) {
        double* out = y + static_cast<size_t>(view) * nd;
        for (int det = 0; det < nd; ++det) {
            double acc = 0.0;
            trace_ray(view, det, [&](size_t idx, double len) { acc += len * x[idx]; });
            out[det] = acc;
        }
    }
}

void FanBeamProjector::apply_adjoint(const double* y, double* x) const {
    const int nv = geom_.n_views, nd = geom_.n_dets;
    const size_t np = domain_size();
    // Fixed view-block partials, merged in block order: results do not depend
    // on the number of threads.
    const int nblocks = std::min(nv, 32);
    std::vector<std::vector<double>> partial(static_cast<size_t>(nblocks));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
        auto& img = partial[static_cast<size_t>(b)];
        img.assign(np, 0.0);
        const int v0 = static_cast<int>(static_cast<long long>(b) * nv / nblocks);
        const int v1 = static_cast<int>(static_cast<long long>(b + 1) * nv / nblocks);
        for (int view = v0; view < v1; ++view) {
            const double* in = y + static_cast<size_t>(view) * nd;
            for (int det = 0; det < nd; ++det) {
                const double s = in[det];
                if (s == 0.0) continue;
                trace_ray(view, det, [&](size_t idx, double len) { img[idx] += len * s; });
            }
        }
    }
    std::memset(x, 0, np * sizeof(double));
    for (int b = 0; b < nblocks; ++b) kern::add(np, partial[static_cast<size_t>(b)].data(), x);
}

void IdentityOperator::apply(const double* x, double* y) const {
    std::memcpy(y, x, n_ * sizeof(double));
}

void IdentityOperator::apply_adjoint(const double* y, double* x) const {
    std::memcpy(x, y, n_ * sizeof(double));
}

void ScaledOperator::apply(const double* x, double* y) const {
    base_.apply(x, y);
    kern::scale(base_.range_size(), c_, y);
}

void ScaledOperator::apply_adjoint(const double* y, double* x) const {
    base_.apply_adjoint(y, x);
    kern::scale(base_.domain_size(), c_, x);
}

namespace {

void check_image_dims(const Image& img, const FanBeamGeometry& geom) {
    if (img.rows != geom.image_rows || img.cols != geom.image_cols)
        throw std::invalid_argument("image dims do not match geometry");
}

void check_sino_dims(const Sinogram& s, const FanBeamGeometry& geom) {
    if (s.n_views != geom.n_views || s.n_dets != geom.n_dets)
        throw std::invalid_argument("sinogram dims do not match geometry");
}

}  // namespace

Sinogram forward_project(const Image& img, const FanBeamProjector& proj) {
    check_image_dims(img, proj.geometry());
    Sinogram out(proj.geometry().n_views, proj.geometry().n_dets, proj.geometry().id());
    proj.apply(img.data(), out.data());
    return out;
}

Image back_project(const Sinogram& sino, const FanBeamProjector& proj) {
    check_sino_dims(sino, proj.geometry());
    Image out(proj.geometry().image_rows, proj.geometry().image_cols, proj.geometry().pixel_size_mm);
    proj.apply_adjoint(sino.data(), out.data());
    return out;
}

Sinogram forward_project(const Image& img, const FanBeamGeometry& geom) {
    return forward_project(img, FanBeamProjector(geom));
}

Image back_project(const Sinogram& sino, const FanBeamGeometry& geom) {
    return back_project(sino, FanBeamProjector(geom));
}

double operator_norm_sq(const LinearOperator& op, const double* weights, int iters, uint64_t seed) {
    if (iters < 1) throw std::invalid_argument("operator_norm_sq: iters must be >= 1");
    const size_t np = op.domain_size(), nd = op.range_size();
    std::vector<double> v(np), sino(nd), w(np);
    std::mt19937_64 eng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& e : v) e = uni(eng);
    double nrm = std::sqrt(par::blocked_sumsq(v.data(), np));
    if (nrm == 0.0) return 0.0;
    kern::scale(np, 1.0 / nrm, v.data());

    double rho = 0.0;
    for (int it = 0; it < iters; ++it) {
        op.apply(v.data(), sino.data());
        if (weights) kern::mul(nd, weights, sino.data());
        op.apply_adjoint(sino.data(), w.data());
        const double denom = par::blocked_dot(v.data(), v.data(), np);
        rho = par::blocked_dot(v.data(), w.data(), np) / denom;
        const double wn = std::sqrt(par::blocked_sumsq(w.data(), np));
        if (wn == 0.0) return 0.0;
        std::swap(v, w);
        kern::scale(np, 1.0 / wn, v.data());
    }
    return rho;
}

double operator_norm_sq(const FanBeamGeometry& geom, const StatWeights& weights, int iters, uint64_t seed) {
    FanBeamProjector proj(geom);
    if (weights.n_views != geom.n_views || weights.n_dets != geom.n_dets)
        throw std::invalid_argument("operator_norm_sq: weight dims do not match geometry");
    return operator_norm_sq(proj, weights.data(), iters, seed);
}

}  // namespace superct
