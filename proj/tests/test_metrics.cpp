#include <doctest.h>

#include <cmath>
#include <random>

#include "superct/io.hpp"
#include "superct/metrics.hpp"

using namespace superct;

namespace {

Image random_image(int rows, int cols, uint64_t seed, double lo = -10.0, double hi = 10.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    Image img(rows, cols, 1.0);
    for (auto& v : img.px) v = uni(eng);
    return img;
}

}  // namespace

TEST_CASE("rmse basics and direct-summation oracle") {
    Image a = random_image(9, 7, 1);
    CHECK(rmse(a, a) == 0.0);
    Image b = a;
    for (auto& v : b.px) v += 3.5;
    CHECK(rmse(b, a) == doctest::Approx(3.5).epsilon(1e-14));
    Image c = random_image(9, 7, 2);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a.px[i] - c.px[i]) * (a.px[i] - c.px[i]);
    CHECK(rmse(a, c) == doctest::Approx(std::sqrt(acc / a.size())).epsilon(1e-12));
    Image wrong(3, 3, 1.0);
    CHECK_THROWS_AS((void)rmse(a, wrong), std::invalid_argument);
}

TEST_CASE("snr: log ratio, scale invariance, sentinels") {
    Image star(10, 10, 1.0, 1.0);  // ||x*||^2 = 100
    Image hat = star;
    hat.px[0] += 1.0;  // ||e||^2 = 1
    CHECK(snr_db(hat, star) == doctest::Approx(20.0).epsilon(1e-12));
    // ||x*|| = 100, ||e|| = 1 -> 40 dB
    Image star2(10, 10, 1.0, 10.0);
    Image hat2 = star2;
    hat2.px[0] += 1.0;
    CHECK(snr_db(hat2, star2) == doctest::Approx(40.0).epsilon(1e-9));
    Image hat3 = hat2, star3 = star2;
    for (auto& v : hat3.px) v *= 2.5;
    for (auto& v : star3.px) v *= 2.5;
    CHECK(snr_db(hat3, star3) == doctest::Approx(snr_db(hat2, star2)).epsilon(1e-12));
    CHECK(std::isinf(snr_db(star, star)));
    Image zero(10, 10, 1.0, 0.0);
    CHECK_THROWS_AS((void)snr_db(hat, zero), std::invalid_argument);
}

TEST_CASE("cross-metric identity: snr from rmse") {
    Image a = random_image(12, 12, 5, 0.0, 100.0);
    Image b = random_image(12, 12, 6, 0.0, 100.0);
    const double r = rmse(a, b);
    double ref = 0.0;
    for (double v : b.px) ref += v * v;
    const double want = 20.0 * std::log10(std::sqrt(ref) / (r * std::sqrt(static_cast<double>(a.size()))));
    CHECK(snr_db(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ssim: identity, anti-correlation, literal-formula oracle") {
    SsimParams p;
    p.window = 5;
    p.dynamic_range = 20.0;
    Image a = random_image(8, 8, 11);
    CHECK(ssim(a, a, p) == doctest::Approx(1.0).epsilon(1e-12));

    // Zero mean per window: alternating checker with random amplitude.
    Image zm(8, 8, 1.0);
    std::mt19937_64 eng(12);
    std::uniform_real_distribution<double> amp(3.0, 5.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) zm.at(r, c) = (((r + c) % 2) * 2 - 1) * amp(eng);
    Image neg = zm;
    for (auto& v : neg.px) v = -v;
    CHECK(ssim(neg, zm, p) < 0.0);

    // Literal per-window recomputation.
    Image b = random_image(8, 8, 13);
    const double got = ssim(a, b, p);
    const int win = p.window;
    std::vector<double> g(static_cast<size_t>(win) * win);
    double gsum = 0.0;
    const double c0 = 0.5 * (win - 1);
    for (int r = 0; r < win; ++r)
        for (int c = 0; c < win; ++c) {
            const double wr = std::exp(-0.5 * (r - c0) * (r - c0) / (p.sigma * p.sigma));
            const double wc = std::exp(-0.5 * (c - c0) * (c - c0) / (p.sigma * p.sigma));
            g[static_cast<size_t>(r) * win + c] = wr * wc;
            gsum += wr * wc;
        }
    for (auto& v : g) v /= gsum;
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double acc = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + win <= 8; ++r0)
        for (int cc0 = 0; cc0 + win <= 8; ++cc0) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int r = 0; r < win; ++r)
                for (int c = 0; c < win; ++c) {
                    const double w = g[static_cast<size_t>(r) * win + c];
                    const double xv = a.at(r0 + r, cc0 + c), yv = b.at(r0 + r, cc0 + c);
                    mx += w * xv;
                    my += w * yv;
                    mxx += w * xv * xv;
                    myy += w * yv * yv;
                    mxy += w * xv * yv;
                }
            const double sx = mxx - mx * mx, sy = myy - my * my, sxy = mxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
            ++count;
        }
    CHECK(got == doctest::Approx(acc / count).epsilon(1e-9));
    CHECK_THROWS_AS((void)ssim(a, b, SsimParams{11, 1.5, 0.01, 0.03, 400.0}), std::invalid_argument);
}

TEST_CASE("rmse and snr are invariant under a common pixel permutation") {
    Image a = random_image(6, 6, 21), b = random_image(6, 6, 22);
    Image ap(6, 6, 1.0), bp(6, 6, 1.0);
    for (size_t i = 0; i < a.size(); ++i) {
        const size_t j = (i * 17 + 5) % a.size();
        ap.px[i] = a.px[j];
        bp.px[i] = b.px[j];
    }
    CHECK(rmse(ap, bp) == doctest::Approx(rmse(a, b)).epsilon(1e-13));
    CHECK(snr_db(ap, bp) == doctest::Approx(snr_db(a, b)).epsilon(1e-13));
}

TEST_CASE("bias_std: trivial cases and a direct oracle") {
    Image star(8, 8, 1.0, 5.0);
    RoiSpec roi{2, 3, 4, 4, "roi1"};
    SUBCASE("identical constant ROI gives zeros") {
        BiasStd r = bias_std(star, star, roi);
        CHECK(r.bias == 0.0);
        CHECK(r.std == 0.0);
        CHECK(r.bs_index == 0.0);
    }
    SUBCASE("constant offset on a constant ROI") {
        Image hat = star;
        for (auto& v : hat.px) v += 3.0;
        BiasStd r = bias_std(hat, star, roi);
        CHECK(r.bias == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(r.std == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.bs_index == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("random ROI matches a direct computation") {
        Image hat = random_image(8, 8, 31, 0.0, 10.0);
        Image ref = random_image(8, 8, 32, 0.0, 10.0);
        BiasStd r = bias_std(hat, ref, roi);
        double bias = 0.0, mean = 0.0;
        const int n = roi.rows * roi.cols;
        for (int rr = 0; rr < roi.rows; ++rr)
            for (int cc = 0; cc < roi.cols; ++cc) {
                bias += hat.at(roi.row0 + rr, roi.col0 + cc) - ref.at(roi.row0 + rr, roi.col0 + cc);
                mean += hat.at(roi.row0 + rr, roi.col0 + cc);
            }
        bias /= n;
        mean /= n;
        double var = 0.0;
        for (int rr = 0; rr < roi.rows; ++rr)
            for (int cc = 0; cc < roi.cols; ++cc) {
                const double d = hat.at(roi.row0 + rr, roi.col0 + cc) - mean;
                var += d * d;
            }
        CHECK(r.bias == doctest::Approx(bias).epsilon(1e-12));
        CHECK(r.std == doctest::Approx(std::sqrt(var / (n - 1))).epsilon(1e-12));
        CHECK(r.bs_index == doctest::Approx(std::sqrt(bias * bias + var / (n - 1))).epsilon(1e-12));
    }
    SUBCASE("out-of-bounds ROI throws") {
        CHECK_THROWS_AS((void)bias_std(star, star, RoiSpec{6, 6, 4, 4, "bad"}), std::invalid_argument);
    }
}

TEST_CASE("grid containers round-trip bit-identically") {
    const std::string dir = "/tmp/superct_io_test";
    (void)!std::system(("mkdir -p " + dir).c_str());
    Image img = random_image(13, 11, 41, 0.0, 2000.0);
    img.pixel_size_mm = 0.7;
    save_image(dir + "/img.sprg", img);
    Image back = load_image(dir + "/img.sprg");
    CHECK(back.rows == 13);
    CHECK(back.pixel_size_mm == 0.7);
    save_image(dir + "/img2.sprg", back);
    CHECK(file_hash(dir + "/img.sprg") == file_hash(dir + "/img2.sprg"));

    Sinogram s(5, 9, "geomid");
    for (size_t i = 0; i < s.size(); ++i) s.v[i] = 0.25 * static_cast<double>(i);
    save_sinogram(dir + "/s.sprg", s, 1.05);
    Sinogram sb = load_sinogram(dir + "/s.sprg");
    CHECK(sb.geometry_id == "geomid");
    save_sinogram(dir + "/s2.sprg", sb, 1.05);
    CHECK(file_hash(dir + "/s.sprg") == file_hash(dir + "/s2.sprg"));

    TransformBank bank;
    bank.K = 2;
    bank.m = 4;
    bank.patch = {2, 1};
    bank.omegas = {dct2_matrix(2), random_rotation_of_dct(2, 3)};
    save_transform_bank(dir + "/bank.sprg", bank);
    TransformBank bb = load_transform_bank(dir + "/bank.sprg");
    CHECK(bb.K == 2);
    save_transform_bank(dir + "/bank2.sprg", bb);
    CHECK(file_hash(dir + "/bank.sprg") == file_hash(dir + "/bank2.sprg"));

    DenoiserWeights w = denoiser_init(DenoiserSpec::reference(), 7);
    w.meta.loss_curve = {1.0, 0.5};
    save_denoiser(dir + "/dn.sprg", w);
    DenoiserWeights wb = load_denoiser(dir + "/dn.sprg");
    CHECK(wb.params.size() == w.params.size());
    save_denoiser(dir + "/dn2.sprg", wb);
    CHECK(file_hash(dir + "/dn.sprg") == file_hash(dir + "/dn2.sprg"));
    // Applying reloaded weights is bit-stable across save/load cycles.
    Image x = random_image(9, 9, 51, 0.0, 2000.0);
    Image y1 = denoiser_apply(wb, x);
    DenoiserWeights wc = load_denoiser(dir + "/dn2.sprg");
    Image y2 = denoiser_apply(wc, x);
    CHECK(y1.px == y2.px);

    CHECK_THROWS_AS((void)load_image(dir + "/nope.sprg"), IoError);
    CHECK_THROWS_AS((void)load_sinogram(dir + "/img.sprg"), IoError);
}
