#include "superct/phantoms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "superct/rng.hpp"

namespace superct {

Image render_phantom(const EllipsePhantomSpec& spec) {
    if (spec.size < 16) throw std::invalid_argument("phantom: size must be >= 16");
    const int n = spec.size;
    Image img(n, n, spec.pixel_size_mm, spec.background_hu);
    struct E {
        double ct, st, a2, b2, cx, cy, v;
    };
    std::vector<E> es;
    es.reserve(spec.ellipses.size());
    for (const auto& e : spec.ellipses) {
        const double phi = e.rot_deg * std::numbers::pi / 180.0;
        es.push_back({std::cos(phi), std::sin(phi), e.a * e.a, e.b * e.b, e.cx, e.cy, e.value});
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < n; ++r) {
        const double y = 1.0 - (r + 0.5) * 2.0 / n;
        double* row = img.data() + static_cast<size_t>(r) * n;
        for (int c = 0; c < n; ++c) {
            const double x = (c + 0.5) * 2.0 / n - 1.0;
            double acc = spec.background_hu;
            for (const auto& e : es) {
                const double dx = x - e.cx, dy = y - e.cy;
                const double xr = dx * e.ct + dy * e.st;
                const double yr = -dx * e.st + dy * e.ct;
                if (xr * xr / e.a2 + yr * yr / e.b2 <= 1.0) acc += e.v;
            }
            row[c] = acc;
        }
    }
    return img;
}

EllipsePhantomSpec shepp_logan_spec(int n, double pixel_size_mm) {
    // value, a, b, cx, cy, rot
    static const double tab[10][6] = {
        {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
        {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
        {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
        {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
        {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
        {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
        {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
        {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
        {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
        {0.01, 0.0230, 0.0460, 0.06, -0.6050, 90.0},
    };
    EllipsePhantomSpec spec;
    spec.size = n;
    spec.pixel_size_mm = pixel_size_mm;
    spec.background_hu = 0.0;
    for (const auto& row : tab)
        spec.ellipses.push_back({row[0] * 1000.0, row[1], row[2], row[3], row[4], row[5]});
    return spec;
}

Image shepp_logan(int n, double pixel_size_mm) { return render_phantom(shepp_logan_spec(n, pixel_size_mm)); }

EllipsePhantomSpec random_phantom_spec(int n, double pixel_size_mm, const RandomPhantomRanges& rg,
                                       uint64_t seed) {
    EllipsePhantomSpec spec;
    spec.size = n;
    spec.pixel_size_mm = pixel_size_mm;
    spec.seed = seed;
    std::mt19937_64 eng(splitmix64(seed));
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng);
    };

    Ellipse body;
    body.a = uni(0.72, 0.92);
    body.b = uni(0.72, 0.92);
    body.cx = uni(-0.04, 0.04);
    body.cy = uni(-0.04, 0.04);
    body.rot_deg = uni(-20.0, 20.0);
    body.value = uni(rg.body_value_lo, rg.body_value_hi);
    spec.ellipses.push_back(body);

    const int n_inner = std::uniform_int_distribution<int>(rg.min_inner, rg.max_inner)(eng);
    for (int i = 0; i < n_inner; ++i) {
        Ellipse e;
        e.a = uni(rg.inner_axis_lo, rg.inner_axis_hi);
        e.b = uni(rg.inner_axis_lo, rg.inner_axis_hi);
        // Keep the feature inside the body.
        const double rad = uni(0.0, 0.55);
        const double th = uni(0.0, 2.0 * std::numbers::pi);
        e.cx = body.cx + rad * body.a * std::cos(th);
        e.cy = body.cy + rad * body.b * std::sin(th);
        e.rot_deg = uni(0.0, 180.0);
        e.value = uni(rg.inner_value_lo, rg.inner_value_hi);
        spec.ellipses.push_back(e);
    }
    return spec;
}

Image random_phantom(int n, double pixel_size_mm, const RandomPhantomRanges& rg, uint64_t seed) {
    const EllipsePhantomSpec spec = random_phantom_spec(n, pixel_size_mm, rg, seed);
    Image img = render_phantom(spec);
    for (auto& v : img.px) v = std::min(std::max(v, rg.hu_clamp_lo), rg.hu_clamp_hi);
    return img;
}

}  // namespace superct
