#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace superct {

// 2D reconstruction grid, row-major, modified Hounsfield units (water = 1000).
struct Image {
    int rows = 0;
    int cols = 0;
    double pixel_size_mm = 1.0;
    std::vector<double> px;

    Image() = default;
    Image(int r, int c, double psz, double fill = 0.0)
        : rows(r), cols(c), pixel_size_mm(psz), px(static_cast<size_t>(r) * c, fill) {
        if (r <= 0 || c <= 0 || !(psz > 0.0))
            throw std::invalid_argument("Image: dims and pixel size must be positive");
    }

    size_t size() const { return px.size(); }
    double& at(int r, int c) { return px[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return px[static_cast<size_t>(r) * cols + c]; }
    double* data() { return px.data(); }
    const double* data() const { return px.data(); }

    bool same_dims(const Image& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const {
        for (double v : px)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Post-log line integrals, row-major (view-major: v[view * n_dets + det]).
struct Sinogram {
    int n_views = 0;
    int n_dets = 0;
    std::string geometry_id;
    std::vector<double> v;

    Sinogram() = default;
    Sinogram(int nv, int nd, std::string gid = {}, double fill = 0.0)
        : n_views(nv), n_dets(nd), geometry_id(std::move(gid)),
          v(static_cast<size_t>(nv) * nd, fill) {
        if (nv <= 0 || nd <= 0) throw std::invalid_argument("Sinogram: dims must be positive");
    }

    size_t size() const { return v.size(); }
    double& at(int view, int det) { return v[static_cast<size_t>(view) * n_dets + det]; }
    double at(int view, int det) const { return v[static_cast<size_t>(view) * n_dets + det]; }
    double* data() { return v.data(); }
    const double* data() const { return v.data(); }
    bool same_dims(const Sinogram& o) const { return n_views == o.n_views && n_dets == o.n_dets; }
};

// Diagonal of the statistical weighting matrix W, one entry per sinogram bin.
struct StatWeights {
    int n_views = 0;
    int n_dets = 0;
    std::vector<double> v;

    StatWeights() = default;
    StatWeights(int nv, int nd, double fill = 0.0)
        : n_views(nv), n_dets(nd), v(static_cast<size_t>(nv) * nd, fill) {
        if (nv <= 0 || nd <= 0) throw std::invalid_argument("StatWeights: dims must be positive");
    }

    size_t size() const { return v.size(); }
    double* data() { return v.data(); }
    const double* data() const { return v.data(); }
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace superct
