#pragma once

#include <string>

#include "superct/image.hpp"

namespace superct {

// sqrt(sum_j (xhat_j - xstar_j)^2 / N_p), in the images' units (HU here).
double rmse(const Image& xhat, const Image& xstar);

// 10 log10(||xstar||^2 / ||xhat - xstar||^2); +inf on zero error.
double snr_db(const Image& xhat, const Image& xstar);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 400.0;  // display window width
};

// Mean local SSIM over Gaussian-weighted windows (valid positions only).
double ssim(const Image& xhat, const Image& xstar, const SsimParams& p = {});

struct RoiSpec {
    int row0 = 0, col0 = 0, rows = 0, cols = 0;
    std::string label;
};

struct BiasStd {
    double bias = 0.0;      // mean(xhat_roi - xstar_roi)
    double std = 0.0;       // sample std of xhat within the ROI
    double bs_index = 0.0;  // sqrt(bias^2 + std^2)
};

BiasStd bias_std(const Image& xhat, const Image& xstar, const RoiSpec& roi);

}  // namespace superct
