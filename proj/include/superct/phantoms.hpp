#pragma once

#include <cstdint>
#include <vector>

#include "superct/image.hpp"

namespace superct {

// Additive ellipse phantom description in normalized coordinates
// ([-1,1] across the image, y up). Values are modified HU (water = 1000).
struct Ellipse {
    double value = 0.0;
    double a = 0.0, b = 0.0;       // semi-axes
    double cx = 0.0, cy = 0.0;     // center
    double rot_deg = 0.0;
};

struct EllipsePhantomSpec {
    std::vector<Ellipse> ellipses;
    double background_hu = 0.0;
    int size = 0;
    double pixel_size_mm = 1.0;
    uint64_t seed = 0;  // set by random_phantom for provenance
};

Image render_phantom(const EllipsePhantomSpec& spec);

// Canonical 10-ellipse head phantom rescaled to modified HU (skull = 2000).
EllipsePhantomSpec shepp_logan_spec(int n, double pixel_size_mm = 1.0);
Image shepp_logan(int n, double pixel_size_mm = 1.0);

struct RandomPhantomRanges {
    int min_inner = 3, max_inner = 8;
    double body_value_lo = 950.0, body_value_hi = 1060.0;
    double inner_value_lo = -350.0, inner_value_hi = 700.0;
    double inner_axis_lo = 0.05, inner_axis_hi = 0.35;
    double hu_clamp_lo = 0.0, hu_clamp_hi = 2400.0;
};

EllipsePhantomSpec random_phantom_spec(int n, double pixel_size_mm, const RandomPhantomRanges& ranges,
                                       uint64_t seed);
Image random_phantom(int n, double pixel_size_mm, const RandomPhantomRanges& ranges, uint64_t seed);

}  // namespace superct
