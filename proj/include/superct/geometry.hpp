#pragma once

#include <string>
#include <vector>

namespace superct {

// 2D fan-beam geometry with a flat (equidistant) detector line. The source
// rotates at radius source_to_center_mm; the detector line sits
// source_to_det_mm from the source, perpendicular to the central ray.
struct FanBeamGeometry {
    int n_dets = 0;
    int n_views = 0;
    double det_spacing_mm = 0.0;
    // Detector shift in cells (quarter-offset doubles radial sampling over 2*pi).
    double det_offset_cells = 0.0;
    double source_to_det_mm = 0.0;
    double source_to_center_mm = 0.0;
    std::vector<double> angles_rad;

    int image_rows = 0;
    int image_cols = 0;
    double pixel_size_mm = 0.0;

    void validate() const;  // throws std::invalid_argument
    std::string id() const;

    double image_width_mm() const { return image_cols * pixel_size_mm; }
    double image_height_mm() const { return image_rows * pixel_size_mm; }

    static std::vector<double> regular_angles(int n_views);

    // Full-scale config: 736 dets x 1152 views, 1.2858 mm pitch,
    // 1085.6 / 595 mm distances, 512^2 @ 0.69 mm.
    static FanBeamGeometry paper_scale();
    // Desk config: 256 dets x 288 views, distances scaled by 1/4, 128^2 @ 0.7 mm.
    static FanBeamGeometry desk_scale();
    // Tiny config for dense-matrix oracles: 32 dets x 24 views, 16^2 image.
    static FanBeamGeometry tiny_scale();

    std::string to_json() const;
    static FanBeamGeometry from_json(const std::string& text);
};

}  // namespace superct
