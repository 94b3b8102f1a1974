#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "superct/image.hpp"

namespace superct {

struct LayerSpec {
    enum class Kind { Conv, Relu };
    Kind kind = Kind::Conv;
    int out_channels = 0;  // conv only; kernel 3x3, pad 1, stride 1
    bool bias = true;
};

// Image-to-image residual denoiser description. Images are normalized to
// [0,1] by the window before entering the conv stack; with residual_skip the
// network output is added back in HU units (window width is a power of two so
// zero weights give the exact identity).
struct DenoiserSpec {
    std::vector<LayerSpec> layers;
    bool residual_skip = true;
    double window_lo = 0.0;
    double window_hi = 2048.0;

    void validate() const;
    long param_count() const;
    std::string to_json() const;
    static DenoiserSpec from_json(const std::string& text);

    // conv(1->16) relu conv(16->16) relu conv(16->1), residual skip
    static DenoiserSpec reference();
};

struct TrainMeta {
    int epochs = 0;
    double learning_rate = 0.0;
    double momentum = 0.0;
    int batch = 0;
    uint64_t seed = 0;
    std::vector<double> loss_curve;  // mean per-pixel loss per epoch
};

struct DenoiserWeights {
    DenoiserSpec spec;
    std::vector<double> params;
    TrainMeta meta;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 0.25;  // step on the per-pixel-mean gradient
    double momentum = 0.9;        // in [0,1), SGD only
    int batch = 4;
    uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DenoiserWeights denoiser_init(const DenoiserSpec& spec, uint64_t seed);

Image denoiser_apply(const DenoiserWeights& w, const Image& x);

// Sum over pairs of squared error in normalized units, with its exact
// reverse-mode gradient.
std::pair<double, std::vector<double>> denoiser_loss_and_gradient(const DenoiserWeights& w,
                                                                  const std::vector<Image>& inputs,
                                                                  const std::vector<Image>& targets);

// SGD with momentum over seeded-shuffled epochs; deterministic given seed.
DenoiserWeights denoiser_train(const DenoiserSpec& spec, const DenoiserWeights* init,
                               const std::vector<Image>& inputs, const std::vector<Image>& targets,
                               const TrainConfig& cfg);

}  // namespace superct
