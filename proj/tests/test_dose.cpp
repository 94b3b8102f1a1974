#include <doctest.h>

#include <cmath>
#include <vector>

#include "superct/dose.hpp"
#include "superct/operators.hpp"
#include "superct/phantoms.hpp"
#include "superct/threading.hpp"

using namespace superct;

namespace {

Sinogram constant_li(double ell, int n_views = 100, int n_dets = 1000) {
    Sinogram s(n_views, n_dets);
    for (auto& v : s.v) v = ell;
    return s;
}

}  // namespace

TEST_CASE("near-noiseless high dose keeps y near zero at l=0") {
    DoseParams p;
    p.I0 = 1e9;
    p.sigma2 = 0.0;
    p.seed = 7;
    Sinogram y = simulate_low_dose_from_line_integrals(constant_li(0.0), p);
    // Poisson relative deviation ~ 3/sqrt(I0) at 99.7%; allow a few outliers.
    int bad = 0;
    for (double v : y.v) {
        if (std::fabs(v) >= 3e-4) ++bad;
    }
    CHECK(bad <= static_cast<int>(0.005 * static_cast<double>(y.size())));
}

TEST_CASE("same seed gives bit-identical sinograms, independent of threads") {
    DoseParams p;
    p.I0 = 1e4;
    p.seed = 123;
    Sinogram li = constant_li(1.5, 64, 64);
    par::set_threads(1);
    Sinogram a = simulate_low_dose_from_line_integrals(li, p);
    par::set_threads(8);
    Sinogram b = simulate_low_dose_from_line_integrals(li, p);
    par::set_threads(0);
    CHECK(a.v == b.v);

    DoseParams p2 = p;
    p2.seed = 124;
    Sinogram c = simulate_low_dose_from_line_integrals(li, p2);
    CHECK(a.v != c.v);
}

TEST_CASE("Monte-Carlo moments match delta-method predictions") {
    // l in {0,1,2,4}, I0=1e4, sigma2=25; 1e5 draws each; 5% tolerance.
    DoseParams p;
    p.I0 = 1e4;
    p.sigma2 = 25.0;
    const size_t n = 100000;
    for (double ell : {0.0, 1.0, 2.0, 4.0}) {
        p.seed = 1000 + static_cast<uint64_t>(ell * 7);
        Sinogram li = constant_li(ell, 100, 1000);
        Sinogram y = simulate_low_dose_from_line_integrals(li, p);
        REQUIRE(y.size() == n);
        double mean = 0.0;
        for (double v : y.v) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y.v) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n - 1);

        const double ybar = p.I0 * std::exp(-ell);
        const double pred_var = (ybar + p.sigma2) / (ybar * ybar);
        const double pred_sd = std::sqrt(pred_var);
        CHECK(std::fabs(mean - ell) <= 0.05 * std::max(ell, pred_sd));
        CHECK(std::fabs(var - pred_var) <= 0.05 * pred_var);
    }
}

TEST_CASE("counts are clamped at epsilon so y is bounded") {
    DoseParams p;
    p.I0 = 100.0;
    p.sigma2 = 400.0;  // frequent negative counts at this dose
    p.epsilon = 0.1;
    p.seed = 5;
    Sinogram y = simulate_low_dose_from_line_integrals(constant_li(6.0, 50, 50), p);
    const double cap = std::log(p.I0 / p.epsilon);
    for (double v : y.v) CHECK(v <= cap + 1e-12);
}

TEST_CASE("negative line integrals signal a unit misconfiguration") {
    DoseParams p;
    Sinogram li = constant_li(0.0, 4, 4);
    li.v[5] = -1e-6;
    CHECK_THROWS_AS((void)simulate_low_dose_from_line_integrals(li, p), DataError);
}

TEST_CASE("compute_weights formula and monotonicity") {
    DoseParams p;
    p.I0 = 1e4;
    p.sigma2 = 25.0;
    SUBCASE("direct value at y=0") {
        Sinogram y = constant_li(0.0, 1, 1);
        StatWeights w = compute_weights(y, p);
        CHECK(w.v[0] == doctest::Approx(1e8 / 10025.0).epsilon(1e-12));
    }
    SUBCASE("sigma2=0 reduces to ybar") {
        DoseParams q = p;
        q.sigma2 = 0.0;
        Sinogram y = constant_li(1.3, 1, 1);
        StatWeights w = compute_weights(y, q);
        CHECK(w.v[0] == doctest::Approx(1e4 * std::exp(-1.3)).epsilon(1e-12));
    }
    SUBCASE("poisson-only switch") {
        DoseParams q = p;
        q.poisson_only_weights = true;
        Sinogram y = constant_li(0.7, 1, 1);
        StatWeights w = compute_weights(y, q);
        CHECK(w.v[0] == doctest::Approx(1e4 * std::exp(-0.7)).epsilon(1e-12));
    }
    SUBCASE("strictly decreasing in y") {
        Sinogram y(1, 64);
        for (int i = 0; i < 64; ++i) y.v[static_cast<size_t>(i)] = -1.0 + 0.1 * i;
        StatWeights w = compute_weights(y, p);
        for (int i = 1; i < 64; ++i)
            CHECK(w.v[static_cast<size_t>(i)] < w.v[static_cast<size_t>(i - 1)]);
    }
    SUBCASE("huge y decays to zero gracefully") {
        Sinogram y = constant_li(800.0, 1, 1);
        StatWeights w = compute_weights(y, p);
        CHECK(w.v[0] >= 0.0);
        CHECK(w.v[0] < 1e-300);
    }
}

TEST_CASE("empirical mean of y converges to the line integral (small bias)") {
    DoseParams p;
    p.I0 = 1e5;
    p.sigma2 = 25.0;
    p.seed = 77;
    const double ell = 2.0;
    Sinogram y = simulate_low_dose_from_line_integrals(constant_li(ell, 200, 500), p);
    double mean = 0.0;
    for (double v : y.v) mean += v;
    mean /= static_cast<double>(y.size());
    const double ybar = p.I0 * std::exp(-ell);
    // Second-order delta-method bias of -log.
    const double bias = (ybar + p.sigma2) / (2.0 * ybar * ybar);
    CHECK(std::fabs(mean - ell - bias) <= 5.0 * std::sqrt((ybar + p.sigma2) / (ybar * ybar) / static_cast<double>(y.size())));
}

TEST_CASE("dose presets expose the paper dose levels") {
    for (auto& [name, i0] : std::vector<std::pair<std::string, double>>{
             {"1e4", 1e4}, {"2e4", 2e4}, {"8e4", 8e4}, {"1e5", 1e5}, {"2e5", 2e5}}) {
        DoseParams p = dose_preset(name, 1);
        CHECK(p.I0 == i0);
        CHECK(p.sigma2 == 25.0);
    }
    CHECK_THROWS_AS((void)dose_preset("3e9", 0), std::invalid_argument);
}

TEST_CASE("simulate_low_dose end-to-end on a phantom stays in range") {
    FanBeamGeometry g = FanBeamGeometry::tiny_scale();
    Image ph = shepp_logan(16, g.pixel_size_mm);
    DoseParams p;
    p.I0 = 1e4;
    p.seed = 9;
    Sinogram y = simulate_low_dose(ph, g, p);
    for (double v : y.v) {
        CHECK(std::isfinite(v));
        CHECK(v <= std::log(p.I0 / p.epsilon) + 1e-12);
    }
}
