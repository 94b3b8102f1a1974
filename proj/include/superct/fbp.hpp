#pragma once

#include "superct/geometry.hpp"
#include "superct/image.hpp"

namespace superct {

enum class FilterKind { Ramp, Hann };

// Fan-beam filtered backprojection for the flat-detector geometry:
// cosine pre-weighting on the virtual isocenter detector, frequency-domain
// ramp filtering per view (optionally Hann-apodized), distance-weighted
// pixel-driven backprojection with linear detector interpolation.
// Output is in the units of x for which sino = A x (1/mm when sino is
// unitless line integrals).
Image fbp(const Sinogram& sino, const FanBeamGeometry& geom, FilterKind filter = FilterKind::Hann);

}  // namespace superct
