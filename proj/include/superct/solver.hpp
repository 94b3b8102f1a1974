#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "superct/image.hpp"
#include "superct/operators.hpp"
#include "superct/regularizers.hpp"

namespace superct {

struct SolveConfig {
    int outer_iters = 20;  // I
    int inner_iters = 5;   // P, image steps per alternation (ULTRA only)
    double beta = 0.0;
    double mu = 0.0;
    double gamma = 20.0;     // ULTRA sparsity threshold
    bool accelerate = true;  // Nesterov with monotone restart
    double tolerance = 0.0;  // early stop on relative cost change; 0 = off
};

struct SolveTrace {
    std::vector<double> cost;     // objective after each outer iteration
    std::vector<double> seconds;  // cumulative wall time
};

struct SolverDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Weighted-least-squares system in the units the operator works in.
// For HU-domain reconstruction wrap the projector in a ScaledOperator.
struct PwlsSystem {
    const LinearOperator* A = nullptr;
    const Sinogram* y = nullptr;
    const StatWeights* W = nullptr;
    int rows = 0, cols = 0;
    double pixel_size_mm = 1.0;
};

// min_x ||y - Ax||_W^2 + beta * sum_j tau_j ||O_kj P_j x - z_j||^2 (optional)
//       + mu ||x - anchor||^2
// Codes/clusters in `quad` stay fixed. Monotone majorize-minimize iterations.
std::pair<Image, SolveTrace> solve_quadratic_anchor(const PwlsSystem& sys, const UltraRegState* quad,
                                                    double beta, double mu, const Image* anchor,
                                                    const Image& x0, const SolveConfig& cfg);

// min_x ||y - Ax||_W^2 + beta R_EP(x) + mu ||x - anchor||^2
std::pair<Image, SolveTrace> solve_ep(const PwlsSystem& sys, const EpParams& ep, double mu,
                                      const Image* anchor, const Image& x0, const SolveConfig& cfg);

struct UltraSolveResult {
    Image x;
    SolveTrace trace;  // joint cost after each alternation
    UltraRegState state;
};

// cfg.outer_iters alternations of {cfg.inner_iters image steps on the
// fixed-code quadratic, then exact sparse coding + clustering}.
UltraSolveResult solve_ultra(const PwlsSystem& sys, const TransformBank& bank, double gamma,
                             std::vector<double> tau, double beta, double mu, const Image* anchor,
                             const Image& x0, const SolveConfig& cfg);

// Standalone baselines with pinned configurations.
SolveConfig pwls_ep_baseline_config();     // beta = 2^16, delta = 20, 100 iterations
SolveConfig pwls_ultra_baseline_config();  // beta = 1e4, gamma = 25, 1000 alternations, P = 5

std::pair<Image, SolveTrace> pwls_ep_baseline(const PwlsSystem& sys, const Image& x0,
                                              const std::vector<double>& kappa);
UltraSolveResult pwls_ultra_baseline(const PwlsSystem& sys, const TransformBank& bank,
                                     const Image& x0, const std::vector<double>& tau);

}  // namespace superct
