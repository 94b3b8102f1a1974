#pragma once

#include <vector>

#include "superct/image.hpp"

namespace superct {

struct PatchConfig {
    int side = 8;    // sqrt(m)
    int stride = 1;  // interior-only patches at this stride
};

inline int patch_grid_rows(int rows, const PatchConfig& c) { return (rows - c.side) / c.stride + 1; }
inline int patch_grid_cols(int cols, const PatchConfig& c) { return (cols - c.side) / c.stride + 1; }
inline long patch_count(int rows, int cols, const PatchConfig& c) {
    return static_cast<long>(patch_grid_rows(rows, c)) * patch_grid_cols(cols, c);
}

// Component-major patch matrix: row i holds component i of every patch
// (n contiguous doubles), so transform application runs on long rows.
// Within a patch, components are column-major: component c*side + r is image
// pixel (r0 + r, c0 + c). Patches are ordered row-major by origin.
struct PatchMatrix {
    int m = 0;
    long n = 0;
    std::vector<double> data;

    PatchMatrix() = default;
    PatchMatrix(int m_, long n_) : m(m_), n(n_), data(static_cast<size_t>(m_) * n_, 0.0) {}
    double* row(int i) { return data.data() + static_cast<size_t>(i) * n; }
    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * n; }
    double at(int comp, long j) const { return data[static_cast<size_t>(comp) * n + j]; }
};

PatchMatrix extract_patches(const Image& img, const PatchConfig& cfg);

// out += sum_j P_j^T vals(:, j). Deterministic: fixed patch-blocks merged in
// order regardless of thread count.
void scatter_add_patches(const PatchMatrix& vals, const PatchConfig& cfg, Image& out);

// Per-pixel sum of w_j over patches containing the pixel (w empty = 1 each).
std::vector<double> patch_weight_overlap(int rows, int cols, const PatchConfig& cfg,
                                         const std::vector<double>& w);

}  // namespace superct
