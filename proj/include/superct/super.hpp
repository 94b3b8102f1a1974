#pragma once

#include <memory>
#include <string>
#include <vector>

#include "superct/denoiser.hpp"
#include "superct/geometry.hpp"
#include "superct/image.hpp"
#include "superct/regularizers.hpp"
#include "superct/solver.hpp"
#include "superct/transforms.hpp"

namespace superct {

enum class PriorKind { None, Ep, Ultra };

enum class SuperMode {
    Full,            // denoise then MBIR with data + prior + mu-anchor
    SequentialOnly,  // J = 0: denoisers chained, no MBIR
    DataTermOnly,    // beta = mu = 0: denoise then data-fidelity descent
    SupervisedOnly,  // beta = 0: data + mu-anchor only
};

struct SuperConfig {
    int layers = 5;  // L
    PriorKind prior = PriorKind::Ep;
    SuperMode mode = SuperMode::Full;

    double beta = 32768.0;  // 2^15 for EP, 5e3 for ULTRA at paper scale
    double mu = 5e4;        // 5e4 EP / 5e5 ULTRA at paper scale
    double delta = 20.0;    // EP potential parameter
    double gamma = 20.0;    // ULTRA threshold
    Neighborhood neighborhood = Neighborhood::Eight;
    bool kappa_weighting = true;  // per-case kappa map (EP) and tau weights (ULTRA)

    SolveConfig solver;  // outer_iters = I, inner_iters = P
    DenoiserSpec dn_spec = DenoiserSpec::reference();
    TrainConfig dn_train;

    bool warm_start_prev = false;  // init MBIR at previous layer image, not the anchor
    uint64_t seed = 0;

    std::string to_json() const;
    static SuperConfig from_json(const std::string& text);
};

struct TrainingCase {
    std::string id;
    Sinogram y;
    StatWeights W;
    Image x0;      // FBP initialization
    Image x_star;  // reference
};

struct LayerMetrics {
    double mean_rmse = 0.0;
    double mean_snr = 0.0;
    double mean_ssim = 0.0;
};

struct LayeredSuperModel {
    std::vector<DenoiserWeights> layers;  // theta^(1..L)
    SuperConfig cfg;
    std::shared_ptr<const TransformBank> bank;  // ULTRA prior artifact
    std::string config_hash;
    std::vector<LayerMetrics> val_metrics;  // one entry per layer (empty without val cases)
};

struct SuperTrainResult {
    LayeredSuperModel model;
    std::vector<Image> train_images;  // training-time xhat^(L), one per case
};

// Greedy layer-wise training: per layer, fit the denoiser on
// (xhat^(l-1), x*) pairs, then run the anchored MBIR update on every case.
SuperTrainResult super_train(const std::vector<TrainingCase>& cases,
                             const std::vector<TrainingCase>& val, const FanBeamGeometry& geom,
                             const SuperConfig& cfg, std::shared_ptr<const TransformBank> bank);

struct SuperReconResult {
    Image final;
    std::vector<Image> per_layer;     // xhat^(1..L)
    std::vector<SolveTrace> traces;   // per-layer MBIR cost traces
};

SuperReconResult super_reconstruct(const Sinogram& y, const StatWeights& W, const Image& x0,
                                   const LayeredSuperModel& model, const FanBeamGeometry& geom);

// RMS distance between x and one further layer update applied at x with the
// last layer's weights; small values indicate an approximate fixed point.
double evaluate_fixed_point_residual(const Sinogram& y, const StatWeights& W,
                                     const LayeredSuperModel& model, const FanBeamGeometry& geom,
                                     const Image& x);

std::string config_hash_hex(const SuperConfig& cfg, const TransformBank* bank);
std::string model_hash_hex(const LayeredSuperModel& model);

void save_model(const std::string& dir, const LayeredSuperModel& model);
LayeredSuperModel load_model(const std::string& dir);

}  // namespace superct
