#pragma once

#include <cstdint>
#include <vector>

#include "superct/image.hpp"
#include "superct/patches.hpp"

namespace superct {

// Union of K square sparsifying transforms over patch vectors.
struct TransformBank {
    int K = 0;
    int m = 0;
    std::vector<std::vector<double>> omegas;  // K matrices, m x m row-major
    double lambda0 = 31.0;
    double eta = 20.0;  // training threshold
    PatchConfig patch;
    uint64_t training_seed = 0;

    void validate() const;  // shapes + nonsingularity (|det| > 1e-12)
};

struct SparseCodeResult {
    int m = 0;
    long n = 0;
    std::vector<double> codes;  // component-major, same layout as PatchMatrix
    std::vector<int> clusters;  // per patch, 0-based
    double objective = 0.0;     // sum_j tau_j (||O_k x_j - z_j||^2 + gamma^2 ||z_j||_0)
};

std::vector<double> hard_threshold(const std::vector<double>& v, double gamma);

// Per patch: pick the transform minimizing
//   ||O_k x - H_g(O_k x)||^2 + g^2 ||H_g(O_k x)||_0  (+ energy_j * cluster_bias[k]),
// ties to the smallest k; codes are the hard-thresholded coefficients of the
// winner. tau scales each patch's contribution to the reported objective.
SparseCodeResult sparse_code_and_cluster(const PatchMatrix& X, const TransformBank& bank,
                                         double threshold, const std::vector<double>& tau = {},
                                         const std::vector<double>& cluster_bias = {},
                                         const std::vector<double>& patch_energy = {});

// Global minimizer of ||O X - Z||_F^2 + lambda (||O||_F^2 - log|det O|):
// factor X X' + lambda I = L L', full SVD of inv(L) X Z' = U S V',
// return 0.5 V (S + (S^2 + 2 lambda I)^{1/2}) U' inv(L).
std::vector<double> update_transform(const double* Xk, const double* Zk, int m, long nk,
                                     double lambda_k);

double transform_regularizer(const std::vector<double>& omega, int m);  // ||O||_F^2 - log|det O|

std::vector<double> dct2_matrix(int side);
std::vector<double> random_rotation_of_dct(int side, uint64_t seed);

struct LearnTrace {
    std::vector<double> objective;  // full training objective per alternation
    int reseeded_clusters = 0;
};

// Alternating minimization of the union-of-transforms training objective:
// sparse coding + clustering (with the per-patch share of lambda_k Q(O_k)),
// then per-cluster closed-form transform updates. Deterministic given seed.
TransformBank learn_ultra(const std::vector<Image>& images, int K, const PatchConfig& cfg,
                          int iters, double lambda0, double eta, uint64_t seed,
                          LearnTrace* trace = nullptr);

// Training objective of a bank state on a patch set (for tests/traces).
double ultra_training_objective(const PatchMatrix& X, const TransformBank& bank,
                                const SparseCodeResult& sc);

}  // namespace superct
