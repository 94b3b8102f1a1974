#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "superct/dataset.hpp"
#include "superct/io.hpp"
#include "superct/phantoms.hpp"

using namespace superct;

namespace {

FanBeamGeometry small_geom() {
    FanBeamGeometry g = FanBeamGeometry::desk_scale();
    g.image_rows = g.image_cols = 32;
    g.pixel_size_mm = 2.8;
    g.n_dets = 128;
    g.det_spacing_mm = 2.2;
    g.n_views = 72;
    g.angles_rad = FanBeamGeometry::regular_angles(72);
    return g;
}

}  // namespace

TEST_CASE("shepp_logan: shape, skull value, background, membership oracle") {
    Image ph = shepp_logan(128);
    CHECK(ph.rows == 128);
    CHECK(ph.cols == 128);
    double mx = ph.px[0];
    for (double v : ph.px) mx = std::max(mx, v);
    CHECK(mx == doctest::Approx(2000.0));  // skull
    CHECK(ph.at(0, 0) == 0.0);             // outside the outer ellipse
    CHECK(ph.at(2, 64) == 0.0);

    // Independent per-ellipse membership oracle at sampled points.
    EllipsePhantomSpec spec = shepp_logan_spec(128);
    const int samples[5][2] = {{64, 64}, {30, 64}, {64, 30}, {100, 64}, {64, 100}};
    for (const auto& s : samples) {
        const int r = s[0], c = s[1];
        const double y = 1.0 - (r + 0.5) * 2.0 / 128;
        const double x = (c + 0.5) * 2.0 / 128 - 1.0;
        double want = spec.background_hu;
        for (const auto& e : spec.ellipses) {
            const double phi = e.rot_deg * 3.14159265358979323846 / 180.0;
            const double dx = x - e.cx, dy = y - e.cy;
            const double xr = dx * std::cos(phi) + dy * std::sin(phi);
            const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
            if (xr * xr / (e.a * e.a) + yr * yr / (e.b * e.b) <= 1.0) want += e.value;
        }
        CHECK(ph.at(r, c) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)shepp_logan(8), std::invalid_argument);
}

TEST_CASE("random_phantom: determinism, range, decorrelation") {
    RandomPhantomRanges rg;
    Image a = random_phantom(64, 1.0, rg, 7);
    Image b = random_phantom(64, 1.0, rg, 7);
    CHECK(a.px == b.px);
    for (double v : a.px) {
        CHECK(v >= rg.hu_clamp_lo);
        CHECK(v <= rg.hu_clamp_hi);
    }
    Image c = random_phantom(64, 1.0, rg, 8);
    size_t differ = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a.px[i] != c.px[i]) ++differ;
    CHECK(differ >= a.size() / 100);
}

TEST_CASE("build_dataset: splits, round-trip, determinism") {
    const std::string dir1 = "/tmp/superct_ds1", dir2 = "/tmp/superct_ds2";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    FanBeamGeometry g = small_geom();
    DoseParams dose;
    dose.I0 = 1e4;
    DatasetManifest m1 = build_dataset(3, 1, 2, g, dose, 99, dir1);
    CHECK(m1.train.size() == 3);
    CHECK(m1.val.size() == 1);
    CHECK(m1.test.size() == 2);

    SUBCASE("split ids are disjoint and files exist") {
        DatasetManifest m = load_manifest(dir1);
        std::set<std::string> ids;
        for (const auto* split : {&m.train, &m.val, &m.test})
            for (const auto& e : *split) CHECK(ids.insert(e.id).second);
    }
    SUBCASE("cases load back and rewrite bit-identically") {
        DatasetManifest m = load_manifest(dir1);
        TrainingCase c = load_case(dir1, m.train[0]);
        CHECK(c.y.n_views == g.n_views);
        CHECK(c.x0.rows == 32);
        save_image(dir1 + "/rt.sprg", c.x_star);
        CHECK(file_hash(dir1 + "/rt.sprg") == file_hash(dir1 + "/" + m.train[0].xstar));
    }
    SUBCASE("same seed regenerates identical files") {
        DatasetManifest m2 = build_dataset(3, 1, 2, g, dose, 99, dir2);
        DatasetManifest m1b = load_manifest(dir1);
        for (size_t s = 0; s < 3; ++s) {
            const auto& e1 = s == 0 ? m1b.train : s == 1 ? m1b.val : m1b.test;
            const auto& e2 = s == 0 ? m2.train : s == 1 ? m2.val : m2.test;
            for (size_t i = 0; i < e1.size(); ++i) {
                CHECK(file_hash(dir1 + "/" + e1[i].xstar) == file_hash(dir2 + "/" + e2[i].xstar));
                CHECK(file_hash(dir1 + "/" + e1[i].y) == file_hash(dir2 + "/" + e2[i].y));
                CHECK(file_hash(dir1 + "/" + e1[i].w) == file_hash(dir2 + "/" + e2[i].w));
                CHECK(file_hash(dir1 + "/" + e1[i].x0) == file_hash(dir2 + "/" + e2[i].x0));
            }
        }
        CHECK(file_hash(dir1 + "/manifest.json") == file_hash(dir2 + "/manifest.json"));
    }
    SUBCASE("geometry file loads back") {
        FanBeamGeometry g2 = load_geometry_file(dir1 + "/geometry.json");
        CHECK(g2.id() == g.id());
    }
}

TEST_CASE("import_dataset consumes raw float32 images with sidecars") {
    const std::string src = "/tmp/superct_import_src", dst = "/tmp/superct_import_dst";
    std::filesystem::remove_all(src);
    std::filesystem::remove_all(dst);
    std::filesystem::create_directories(src);
    FanBeamGeometry g = small_geom();

    Image ref = random_phantom(32, g.pixel_size_mm, {}, 5);
    std::vector<float> raw(ref.size());
    for (size_t i = 0; i < ref.size(); ++i) raw[i] = static_cast<float>(ref.px[i]);
    {
        std::ofstream f(src + "/caseA.raw", std::ios::binary);
        f.write(reinterpret_cast<const char*>(raw.data()),
                static_cast<std::streamsize>(raw.size() * sizeof(float)));
    }
    write_text_file(src + "/caseA.json",
                    "{\"raw\":\"caseA.raw\",\"rows\":32,\"cols\":32,\"pixel_size_mm\":2.8,"
                    "\"role\":\"test\"}");
    DoseParams dose;
    dose.I0 = 1e4;
    DatasetManifest m = import_dataset(src, g, dose, 7, dst);
    CHECK(m.test.size() == 1);
    CHECK(m.train.empty());
    TrainingCase c = load_case(dst, m.test[0]);
    // Stored reference equals the imported raw data at float precision.
    for (size_t i = 0; i < c.x_star.size(); ++i)
        CHECK(c.x_star.px[i] == static_cast<double>(raw[i]));
}
