#include "superct/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace superct {

namespace {

void check_dims(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("metrics: image dims mismatch");
}

}  // namespace

double rmse(const Image& xhat, const Image& xstar) {
    check_dims(xhat, xstar);
    double acc = 0.0;
    for (size_t i = 0; i < xhat.size(); ++i) {
        const double d = xhat.px[i] - xstar.px[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(xhat.size()));
}

double snr_db(const Image& xhat, const Image& xstar) {
    check_dims(xhat, xstar);
    double ref = 0.0, err = 0.0;
    for (size_t i = 0; i < xhat.size(); ++i) {
        ref += xstar.px[i] * xstar.px[i];
        const double d = xhat.px[i] - xstar.px[i];
        err += d * d;
    }
    if (ref == 0.0) throw std::invalid_argument("snr: zero reference image");
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(ref / err);
}

double ssim(const Image& xhat, const Image& xstar, const SsimParams& p) {
    check_dims(xhat, xstar);
    if (p.window < 1 || p.window > xhat.rows || p.window > xhat.cols)
        throw std::invalid_argument("ssim: window does not fit the image");

    const int win = p.window;
    std::vector<double> g(static_cast<size_t>(win));
    const double c0 = 0.5 * (win - 1);
    double gsum = 0.0;
    for (int i = 0; i < win; ++i) {
        g[static_cast<size_t>(i)] = std::exp(-0.5 * (i - c0) * (i - c0) / (p.sigma * p.sigma));
        gsum += g[static_cast<size_t>(i)];
    }
    for (auto& v : g) v /= gsum;

    const int rows = xhat.rows, cols = xhat.cols;
    const int or_ = rows - win + 1, oc = cols - win + 1;

    // Separable weighted moments: rows pass then columns pass.
    auto hpass = [&](const std::vector<double>& src, std::vector<double>& dst) {
        // src rows x cols -> dst rows x oc
        dst.assign(static_cast<size_t>(rows) * oc, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double* s = src.data() + static_cast<size_t>(r) * cols;
            double* d = dst.data() + static_cast<size_t>(r) * oc;
            for (int c = 0; c < oc; ++c) {
                double acc = 0.0;
                for (int t = 0; t < win; ++t) acc += g[static_cast<size_t>(t)] * s[c + t];
                d[c] = acc;
            }
        }
    };
    auto vpass = [&](const std::vector<double>& src, std::vector<double>& dst) {
        // src rows x oc -> dst or x oc
        dst.assign(static_cast<size_t>(or_) * oc, 0.0);
        for (int r = 0; r < or_; ++r) {
            double* d = dst.data() + static_cast<size_t>(r) * oc;
            for (int t = 0; t < win; ++t) {
                const double* s = src.data() + static_cast<size_t>(r + t) * oc;
                const double w = g[static_cast<size_t>(t)];
                for (int c = 0; c < oc; ++c) d[c] += w * s[c];
            }
        }
    };
    auto window_mean = [&](const std::vector<double>& field, std::vector<double>& out) {
        std::vector<double> tmp;
        hpass(field, tmp);
        vpass(tmp, out);
    };

    const size_t n = xhat.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        xx[i] = xhat.px[i] * xhat.px[i];
        yy[i] = xstar.px[i] * xstar.px[i];
        xy[i] = xhat.px[i] * xstar.px[i];
    }
    std::vector<double> mx, my, mxx, myy, mxy;
    window_mean(xhat.px, mx);
    window_mean(xstar.px, my);
    window_mean(xx, mxx);
    window_mean(yy, myy);
    window_mean(xy, mxy);

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double acc = 0.0;
    const size_t m = static_cast<size_t>(or_) * oc;
    for (size_t i = 0; i < m; ++i) {
        const double sx = mxx[i] - mx[i] * mx[i];
        const double sy = myy[i] - my[i] * my[i];
        const double sxy = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(m);
}

BiasStd bias_std(const Image& xhat, const Image& xstar, const RoiSpec& roi) {
    check_dims(xhat, xstar);
    if (roi.row0 < 0 || roi.col0 < 0 || roi.rows < 1 || roi.cols < 1 ||
        roi.row0 + roi.rows > xhat.rows || roi.col0 + roi.cols > xhat.cols)
        throw std::invalid_argument("bias_std: ROI out of bounds");
    const long n = static_cast<long>(roi.rows) * roi.cols;
    double mean_hat = 0.0, bias = 0.0;
    for (int r = 0; r < roi.rows; ++r)
        for (int c = 0; c < roi.cols; ++c) {
            const double h = xhat.at(roi.row0 + r, roi.col0 + c);
            bias += h - xstar.at(roi.row0 + r, roi.col0 + c);
            mean_hat += h;
        }
    bias /= static_cast<double>(n);
    mean_hat /= static_cast<double>(n);
    double var = 0.0;
    for (int r = 0; r < roi.rows; ++r)
        for (int c = 0; c < roi.cols; ++c) {
            const double d = xhat.at(roi.row0 + r, roi.col0 + c) - mean_hat;
            var += d * d;
        }
    BiasStd out;
    out.bias = bias;
    out.std = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    out.bs_index = std::sqrt(out.bias * out.bias + out.std * out.std);
    return out;
}

}  // namespace superct
