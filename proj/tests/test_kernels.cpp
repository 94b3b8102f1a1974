#include <doctest.h>

#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "superct/kernels.hpp"
#include "superct/threading.hpp"

using namespace superct;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed, double lo = -3.0, double hi = 3.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    std::vector<double> v(n);
    for (auto& e : v) e = uni(eng);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

// Every lane must produce bit-identical results on identical inputs; sizes
// cover remainders around the vector width.
TEST_CASE("scalar and simd lanes are bit-identical") {
    const kern::Backend& sc = kern::scalar_backend();
    const kern::Backend* sv = kern::simd_backend();
    if (!sv) {
        MESSAGE("no SIMD lane on this CPU; scalar-only");
        return;
    }
    for (size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 65, 1000, 4097}) {
        auto x = random_vec(n, 11 * n + 1);
        auto y = random_vec(n, 13 * n + 2);
        auto w = random_vec(n, 17 * n + 3, 0.0, 5.0);

        auto y1 = y, y2 = y;
        sc.axpy(n, 1.7, x.data(), y1.data());
        sv->axpy(n, 1.7, x.data(), y2.data());
        CHECK(bits_equal(y1, y2));

        y1 = y; y2 = y;
        sc.scale(n, -0.3, y1.data());
        sv->scale(n, -0.3, y2.data());
        CHECK(bits_equal(y1, y2));

        y1 = y; y2 = y;
        sc.add(n, x.data(), y1.data());
        sv->add(n, x.data(), y2.data());
        CHECK(bits_equal(y1, y2));

        y1 = y; y2 = y;
        sc.sub(n, x.data(), y1.data());
        sv->sub(n, x.data(), y2.data());
        CHECK(bits_equal(y1, y2));

        y1 = y; y2 = y;
        sc.mul(n, x.data(), y1.data());
        sv->mul(n, x.data(), y2.data());
        CHECK(bits_equal(y1, y2));

        y1 = y; y2 = y;
        sc.sub_mul(n, x.data(), w.data(), y1.data());
        sv->sub_mul(n, x.data(), w.data(), y2.data());
        CHECK(bits_equal(y1, y2));

        std::vector<double> z1(n), z2(n);
        sc.lincomb(n, 2.5, x.data(), -1.25, y.data(), z1.data());
        sv->lincomb(n, 2.5, x.data(), -1.25, y.data(), z2.data());
        CHECK(bits_equal(z1, z2));

        CHECK(sc.dot(n, x.data(), y.data()) == sv->dot(n, x.data(), y.data()));
        CHECK(sc.sumsq(n, x.data()) == sv->sumsq(n, x.data()));
        CHECK(sc.wssq(n, w.data(), x.data()) == sv->wssq(n, w.data(), x.data()));

        std::vector<double> t1(n), t2(n);
        size_t k1 = sc.hard_threshold(n, 1.0, x.data(), t1.data());
        size_t k2 = sv->hard_threshold(n, 1.0, x.data(), t2.data());
        CHECK(k1 == k2);
        CHECK(bits_equal(t1, t2));

        sc.relu(n, x.data(), t1.data());
        sv->relu(n, x.data(), t2.data());
        CHECK(bits_equal(t1, t2));

        auto g1 = y, g2 = y;
        sc.relu_mask(n, x.data(), g1.data());
        sv->relu_mask(n, x.data(), g2.data());
        CHECK(bits_equal(g1, g2));
    }
}

TEST_CASE("hard_threshold keeps ties and survivors exactly") {
    const double in[] = {25.0, -10.0, 0.0, -20.0, 19.999999999};
    double out[5];
    size_t nnz = kern::hard_threshold(5, 20.0, in, out);
    CHECK(nnz == 2);
    CHECK(out[0] == 25.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 0.0);
    CHECK(out[3] == -20.0);  // |v| == gamma survives
    CHECK(out[4] == 0.0);
}

TEST_CASE("hard_threshold with gamma=0 is the identity") {
    auto x = random_vec(257, 5);
    std::vector<double> out(x.size());
    size_t nnz = kern::hard_threshold(x.size(), 0.0, x.data(), out.data());
    CHECK(nnz == x.size());
    CHECK(bits_equal(x, out));
}

TEST_CASE("blocked reductions are independent of thread count") {
    auto x = random_vec(100003, 99);
    auto y = random_vec(100003, 100);
    par::set_threads(1);
    double s1 = par::blocked_sumsq(x.data(), x.size());
    double d1 = par::blocked_dot(x.data(), y.data(), x.size());
    par::set_threads(8);
    double s8 = par::blocked_sumsq(x.data(), x.size());
    double d8 = par::blocked_dot(x.data(), y.data(), x.size());
    par::set_threads(0);
    CHECK(s1 == s8);
    CHECK(d1 == d8);
}

TEST_CASE("force_backend switches lanes") {
    REQUIRE(kern::force_backend("scalar"));
    CHECK(std::string(kern::active().name) == "scalar");
    kern::force_backend("auto");
    if (kern::simd_backend()) CHECK(std::string(kern::active().name) != "scalar");
}
