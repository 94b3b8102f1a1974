#include "superct/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "superct/rng.hpp"

namespace superct {

using nlohmann::json;

void FanBeamGeometry::validate() const {
    if (n_dets < 1 || n_views < 1) throw std::invalid_argument("geometry: detector/view counts must be >= 1");
    if (!(det_spacing_mm > 0.0)) throw std::invalid_argument("geometry: det_spacing_mm must be positive");
    if (!(source_to_center_mm > 0.0) || !(source_to_det_mm > 0.0))
        throw std::invalid_argument("geometry: distances must be positive");
    if (!(source_to_center_mm < source_to_det_mm))
        throw std::invalid_argument("geometry: source_to_center_mm must be < source_to_det_mm");
    if (static_cast<int>(angles_rad.size()) != n_views)
        throw std::invalid_argument("geometry: angles_rad size must equal n_views");
    if (image_rows < 1 || image_cols < 1 || !(pixel_size_mm > 0.0))
        throw std::invalid_argument("geometry: image grid must be positive");
    // Source must stay outside the image support.
    const double half_diag = 0.5 * std::hypot(image_width_mm(), image_height_mm());
    if (source_to_center_mm <= half_diag)
        throw std::invalid_argument("geometry: source orbit intersects the image support");
}

std::vector<double> FanBeamGeometry::regular_angles(int n_views) {
    std::vector<double> a(static_cast<size_t>(n_views));
    for (int i = 0; i < n_views; ++i)
        a[static_cast<size_t>(i)] = 2.0 * std::numbers::pi * i / n_views;
    return a;
}

FanBeamGeometry FanBeamGeometry::paper_scale() {
    FanBeamGeometry g;
    g.n_dets = 736;
    g.n_views = 1152;
    g.det_spacing_mm = 1.2858;
    g.source_to_det_mm = 1085.6;
    g.source_to_center_mm = 595.0;
    g.angles_rad = regular_angles(g.n_views);
    g.image_rows = g.image_cols = 512;
    g.pixel_size_mm = 0.69;
    return g;
}

FanBeamGeometry FanBeamGeometry::desk_scale() {
    FanBeamGeometry g;
    g.n_dets = 256;
    g.n_views = 288;
    g.det_spacing_mm = 1.05;
    g.det_offset_cells = 0.25;
    g.source_to_det_mm = 1085.6 / 4.0;
    g.source_to_center_mm = 595.0 / 4.0;
    g.angles_rad = regular_angles(g.n_views);
    g.image_rows = g.image_cols = 128;
    g.pixel_size_mm = 0.7;
    return g;
}

FanBeamGeometry FanBeamGeometry::tiny_scale() {
    FanBeamGeometry g;
    g.n_dets = 32;
    g.n_views = 24;
    g.det_spacing_mm = 2.2;
    g.source_to_det_mm = 1085.6 / 16.0;
    g.source_to_center_mm = 595.0 / 16.0;
    g.angles_rad = regular_angles(g.n_views);
    g.image_rows = g.image_cols = 16;
    g.pixel_size_mm = 1.4;
    return g;
}

std::string FanBeamGeometry::id() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](uint64_t v) { h = splitmix64(h ^ v); };
    auto mixd = [&](double v) {
        uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        __builtin_memcpy(&bits, &v, sizeof bits);
        mix(bits);
    };
    mix(static_cast<uint64_t>(n_dets));
    mix(static_cast<uint64_t>(n_views));
    mixd(det_spacing_mm);
    mixd(det_offset_cells);
    mixd(source_to_det_mm);
    mixd(source_to_center_mm);
    mix(static_cast<uint64_t>(image_rows));
    mix(static_cast<uint64_t>(image_cols));
    mixd(pixel_size_mm);
    for (double a : angles_rad) mixd(a);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string FanBeamGeometry::to_json() const {
    json j;
    j["n_dets"] = n_dets;
    j["n_views"] = n_views;
    j["det_spacing_mm"] = det_spacing_mm;
    j["det_offset_cells"] = det_offset_cells;
    j["source_to_det_mm"] = source_to_det_mm;
    j["source_to_center_mm"] = source_to_center_mm;
    j["angles_rad"] = angles_rad;
    j["image_rows"] = image_rows;
    j["image_cols"] = image_cols;
    j["pixel_size_mm"] = pixel_size_mm;
    return j.dump(2);
}

FanBeamGeometry FanBeamGeometry::from_json(const std::string& text) {
    json j = json::parse(text);
    FanBeamGeometry g;
    g.n_dets = j.at("n_dets").get<int>();
    g.n_views = j.at("n_views").get<int>();
    g.det_spacing_mm = j.at("det_spacing_mm").get<double>();
    g.det_offset_cells = j.value("det_offset_cells", 0.0);
    g.source_to_det_mm = j.at("source_to_det_mm").get<double>();
    g.source_to_center_mm = j.at("source_to_center_mm").get<double>();
    if (j.contains("angles_rad"))
        g.angles_rad = j.at("angles_rad").get<std::vector<double>>();
    else
        g.angles_rad = regular_angles(g.n_views);
    g.image_rows = j.at("image_rows").get<int>();
    g.image_cols = j.at("image_cols").get<int>();
    g.pixel_size_mm = j.at("pixel_size_mm").get<double>();
    g.validate();
    return g;
}

}  // namespace superct
