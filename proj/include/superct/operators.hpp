#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "superct/geometry.hpp"
#include "superct/image.hpp"

namespace superct {

// y = A x with an exact adjoint (same discretization weights, transposed).
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual size_t domain_size() const = 0;
    virtual size_t range_size() const = 0;
    virtual void apply(const double* x, double* y) const = 0;
    virtual void apply_adjoint(const double* y, double* x) const = 0;
};

// Ray-driven fan-beam projector with exact ray/pixel intersection lengths.
// Forward and adjoint share one traversal, so the adjoint is exact by
// construction. Line integrals are in mm * (pixel units).
class FanBeamProjector : public LinearOperator {
public:
    explicit FanBeamProjector(FanBeamGeometry geom);

    size_t domain_size() const override;
    size_t range_size() const override;
    void apply(const double* x, double* y) const override;
    void apply_adjoint(const double* y, double* x) const override;

    const FanBeamGeometry& geometry() const { return geom_; }

    // Length-weighted pixel visits of one ray; visit(pixel_index, length_mm).
    template <class Visit>
    void trace_ray(int view, int det, Visit&& visit) const;

private:
    FanBeamGeometry geom_;
    std::vector<double> src_x_, src_y_;  // per view
    std::vector<double> dir_x_, dir_y_;  // detector line direction per view
};

class IdentityOperator : public LinearOperator {
public:
    explicit IdentityOperator(size_t n) : n_(n) {}
    size_t domain_size() const override { return n_; }
    size_t range_size() const override { return n_; }
    void apply(const double* x, double* y) const override;
    void apply_adjoint(const double* y, double* x) const override;

private:
    size_t n_;
};

// c * A; folds unit conversions into the operator.
class ScaledOperator : public LinearOperator {
public:
    ScaledOperator(const LinearOperator& base, double c) : base_(base), c_(c) {}
    size_t domain_size() const override { return base_.domain_size(); }
    size_t range_size() const override { return base_.range_size(); }
    void apply(const double* x, double* y) const override;
    void apply_adjoint(const double* y, double* x) const override;

private:
    const LinearOperator& base_;
    double c_;
};

Sinogram forward_project(const Image& img, const FanBeamGeometry& geom);
Image back_project(const Sinogram& sino, const FanBeamGeometry& geom);

Sinogram forward_project(const Image& img, const FanBeamProjector& proj);
Image back_project(const Sinogram& sino, const FanBeamProjector& proj);

// Largest eigenvalue of A' W A by power iteration (Rayleigh quotients are
// nondecreasing for symmetric PSD operators). Deterministic given seed.
double operator_norm_sq(const LinearOperator& op, const double* weights, int iters, uint64_t seed);
double operator_norm_sq(const FanBeamGeometry& geom, const StatWeights& weights, int iters, uint64_t seed);

}  // namespace superct

#include "superct/projector_detail.hpp"  // trace_ray definition
