#pragma once

#include <cstdint>
#include <string>

#include "superct/geometry.hpp"
#include "superct/image.hpp"

namespace superct {

// Water attenuation at 1000 modified HU: 0.0193/mm. Images are modified HU,
// so mu = hu * kHuToMu.
inline constexpr double kMuWaterPerMm = 0.0193;
inline constexpr double kHuWater = 1000.0;
inline constexpr double kHuToMu = kMuWaterPerMm / kHuWater;

struct DoseParams {
    double I0 = 1e4;       // incident photons per ray
    double sigma2 = 25.0;  // electronic noise variance (counts^2)
    double epsilon = 0.1;  // count floor before the log
    uint64_t seed = 0;
    // w_i = ybar^2/(ybar+sigma^2) by default; alternative w_i = ybar.
    bool poisson_only_weights = false;

    void validate() const;
    std::string to_json() const;
    static DoseParams from_json(const std::string& text);
};

// Named dose presets: I0 in {1e4, 2e4, 8e4, 1e5, 2e5}, sigma^2 = 25.
DoseParams dose_preset(const std::string& name, uint64_t seed);

Image hu_to_mu(const Image& hu);

// Post-log low-dose measurements from a reference image (modified HU):
//   l_i = [A mu(x*)]_i,  count = Poisson(I0 e^{-l_i}) + N(0, sigma^2),
//   y_i = -log(max(count, eps)/I0).
// Per-ray RNG streams derived from (seed, ray index): parallelization-order
// independent and bit-reproducible.
Sinogram simulate_low_dose(const Image& ref_hu, const FanBeamGeometry& geom, const DoseParams& p);

// Same noise model applied to precomputed line integrals.
Sinogram simulate_low_dose_from_line_integrals(const Sinogram& line_integrals, const DoseParams& p);

// Delta-method inverse variance of post-log data: w_i = ybar^2/(ybar+sigma^2),
// ybar = I0 e^{-y_i}.
StatWeights compute_weights(const Sinogram& y, const DoseParams& p);

}  // namespace superct
