#include "superct/patches.hpp"

#include <stdexcept>

#include "superct/kernels.hpp"

namespace superct {

namespace {

void check_cfg(const Image& img, const PatchConfig& cfg) {
    if (cfg.side <= 0 || cfg.stride <= 0) throw std::invalid_argument("patch config must be positive");
    if (cfg.side > img.rows || cfg.side > img.cols)
        throw std::invalid_argument("patch larger than image");
}

}  // namespace

PatchMatrix extract_patches(const Image& img, const PatchConfig& cfg) {
    check_cfg(img, cfg);
    const int gr = patch_grid_rows(img.rows, cfg);
    const int gc = patch_grid_cols(img.cols, cfg);
    const int m = cfg.side * cfg.side;
    PatchMatrix X(m, static_cast<long>(gr) * gc);
#pragma omp parallel for schedule(static)
    for (int comp = 0; comp < m; ++comp) {
        const int pc = comp / cfg.side;  // column within patch
        const int pr = comp % cfg.side;  // row within patch
        double* out = X.row(comp);
        for (int oy = 0; oy < gr; ++oy) {
            const double* src = img.data() +
                                static_cast<size_t>(oy * cfg.stride + pr) * img.cols + pc;
            double* dst = out + static_cast<size_t>(oy) * gc;
            for (int ox = 0; ox < gc; ++ox) dst[ox] = src[static_cast<size_t>(ox) * cfg.stride];
        }
    }
    return X;
}

void scatter_add_patches(const PatchMatrix& vals, const PatchConfig& cfg, Image& out) {
    check_cfg(out, cfg);
    const int gr = patch_grid_rows(out.rows, cfg);
    const int gc = patch_grid_cols(out.cols, cfg);
    if (vals.n != static_cast<long>(gr) * gc || vals.m != cfg.side * cfg.side)
        throw std::invalid_argument("scatter_add_patches: shape mismatch");
    // Fixed row-band partials over patch-origin rows; merge in order.
    const int nblocks = std::min(gr, 16);
    std::vector<std::vector<double>> partial(static_cast<size_t>(nblocks));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
        auto& img = partial[static_cast<size_t>(b)];
        img.assign(out.size(), 0.0);
        const int y0 = static_cast<int>(static_cast<long long>(b) * gr / nblocks);
        const int y1 = static_cast<int>(static_cast<long long>(b + 1) * gr / nblocks);
        for (int oy = y0; oy < y1; ++oy) {
            for (int ox = 0; ox < gc; ++ox) {
                const long j = static_cast<long>(oy) * gc + ox;
                const int r0 = oy * cfg.stride, c0 = ox * cfg.stride;
                for (int comp = 0; comp < vals.m; ++comp) {
                    const int pc = comp / cfg.side, pr = comp % cfg.side;
                    img[static_cast<size_t>(r0 + pr) * out.cols + (c0 + pc)] += vals.at(comp, j);
                }
            }
        }
    }
    for (int b = 0; b < nblocks; ++b) kern::add(out.size(), partial[static_cast<size_t>(b)].data(), out.data());
}

std::vector<double> patch_weight_overlap(int rows, int cols, const PatchConfig& cfg,
                                         const std::vector<double>& w) {
    const int gr = patch_grid_rows(rows, cfg);
    const int gc = patch_grid_cols(cols, cfg);
    std::vector<double> out(static_cast<size_t>(rows) * cols, 0.0);
    for (int oy = 0; oy < gr; ++oy) {
        for (int ox = 0; ox < gc; ++ox) {
            const long j = static_cast<long>(oy) * gc + ox;
            const double wj = w.empty() ? 1.0 : w[static_cast<size_t>(j)];
            for (int r = 0; r < cfg.side; ++r) {
                double* row = out.data() + static_cast<size_t>(oy * cfg.stride + r) * cols + ox * cfg.stride;
                for (int c = 0; c < cfg.side; ++c) row[c] += wj;
            }
        }
    }
    return out;
}

}  // namespace superct
