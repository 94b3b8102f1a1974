#pragma once

#include <vector>

#include "superct/geometry.hpp"
#include "superct/image.hpp"
#include "superct/operators.hpp"
#include "superct/patches.hpp"
#include "superct/transforms.hpp"

namespace superct {

enum class Neighborhood { Four, Eight };

struct EpParams {
    double delta = 20.0;  // HU
    double beta = 0.0;
    Neighborhood neighborhood = Neighborhood::Eight;
    std::vector<double> kappa;  // per-pixel map; empty = uniform 1
};

// phi(t) = delta^2 (|t/delta| - log(1 + |t/delta|))
double ep_potential(double t, double delta);
// phi'(t) = t / (1 + |t/delta|)
double ep_potential_deriv(double t, double delta);
// Huber-type surrogate weight omega(t) = phi'(t)/t = 1/(1 + |t/delta|), omega(0)=1.
double ep_curvature(double t, double delta);

// R_EP(x) = sum_j sum_{k in N_j} kappa_j kappa_k phi(x_j - x_k); each unordered
// neighbor pair is counted twice (symmetric double sum).
double ep_value(const Image& x, const EpParams& p);
Image ep_gradient(const Image& x, const EpParams& p);
// Diagonal H with R_EP(x+d) <= R_EP(x) + g'd + (1/2) sum_j H_j d_j^2 at x.
std::vector<double> ep_curvature_diag(const Image& x, const EpParams& p);

// kappa_j = sqrt( (A' w)_j / (A' 1)_j ), 0/0 -> 0.
std::vector<double> kappa_map(const LinearOperator& A, const StatWeights& W, int rows, int cols);
std::vector<double> kappa_map(const FanBeamGeometry& geom, const StatWeights& W);

// tau_j = mean of kappa^2 over patch j, normalized to mean 1 across patches.
std::vector<double> tau_weights(const std::vector<double>& kappa, int rows, int cols,
                                const PatchConfig& cfg);

// Reconstruction-time transform-sparsity regularizer state: codes/clusters are
// refreshed by sparse coding, the quadratic part drives the image update.
struct UltraRegState {
    const TransformBank* bank = nullptr;
    double gamma = 20.0;
    std::vector<double> tau;  // per patch; empty = uniform 1
    SparseCodeResult sc;

    void refresh(const Image& x);  // exact sparse coding + clustering at x
};

// sum_j tau_j { ||O_{k_j} P_j x - z_j||^2 + gamma^2 ||z_j||_0 }
double ultra_reg_value(const Image& x, const UltraRegState& st);
// Quadratic part only (codes fixed): sum_j tau_j ||O_{k_j} P_j x - z_j||^2
double ultra_quad_value(const Image& x, const UltraRegState& st);
// Gradient of the quadratic part: 2 sum_j tau_j P_j' O' (O P_j x - z_j)
Image ultra_reg_gradient(const Image& x, const UltraRegState& st);
// Diagonal H bounding the (fixed-code) Hessian: 2 max_k lam_max(O'O) * overlap_tau.
std::vector<double> ultra_curvature_diag(const UltraRegState& st, int rows, int cols);

double bank_max_eig(const TransformBank& bank);

}  // namespace superct
