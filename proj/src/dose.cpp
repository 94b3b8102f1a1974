#include "superct/dose.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "superct/operators.hpp"
#include "superct/rng.hpp"

namespace superct {

using nlohmann::json;

void DoseParams::validate() const {
    if (!(I0 > 0.0)) throw std::invalid_argument("dose: I0 must be positive");
    if (sigma2 < 0.0) throw std::invalid_argument("dose: sigma2 must be nonnegative");
    if (!(epsilon > 0.0)) throw std::invalid_argument("dose: epsilon must be positive");
    if (!(epsilon < I0)) throw std::invalid_argument("dose: epsilon must be well below I0");
}

std::string DoseParams::to_json() const {
    json j;
    j["I0"] = I0;
    j["sigma2"] = sigma2;
    j["epsilon"] = epsilon;
    j["seed"] = seed;
    j["poisson_only_weights"] = poisson_only_weights;
    return j.dump(2);
}

DoseParams DoseParams::from_json(const std::string& text) {
    json j = json::parse(text);
    DoseParams p;
    p.I0 = j.value("I0", 1e4);
    p.sigma2 = j.value("sigma2", 25.0);
    p.epsilon = j.value("epsilon", 0.1);
    p.seed = j.value("seed", uint64_t(0));
    p.poisson_only_weights = j.value("poisson_only_weights", false);
    p.validate();
    return p;
}

DoseParams dose_preset(const std::string& name, uint64_t seed) {
    DoseParams p;
    p.seed = seed;
    if (name == "1e4")
        p.I0 = 1e4;
    else if (name == "2e4")
        p.I0 = 2e4;
    else if (name == "8e4")
        p.I0 = 8e4;
    else if (name == "1e5")
        p.I0 = 1e5;
    else if (name == "2e5")
        p.I0 = 2e5;
    else
        throw std::invalid_argument("unknown dose preset: " + name);
    return p;
}

Image hu_to_mu(const Image& hu) {
    Image mu = hu;
    for (auto& v : mu.px) v *= kHuToMu;
    return mu;
}

Sinogram simulate_low_dose_from_line_integrals(const Sinogram& li, const DoseParams& p) {
    p.validate();
    Sinogram y(li.n_views, li.n_dets, li.geometry_id);
    const size_t n = li.size();
    for (size_t i = 0; i < n; ++i)
        if (li.v[i] < -1e-9)
            throw DataError("simulate_low_dose: negative line integral (unit misconfiguration?)");
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const size_t idx = static_cast<size_t>(i);
        CounterRng rng(derive_seed(p.seed, idx));
        const double lam = p.I0 * std::exp(-li.v[idx]);
        double count;
        if (lam > 0.0) {
            std::poisson_distribution<long long> pois(lam);
            count = static_cast<double>(pois(rng));
        } else {
            count = 0.0;
        }
        if (p.sigma2 > 0.0) {
            std::normal_distribution<double> gauss(0.0, std::sqrt(p.sigma2));
            count += gauss(rng);
        }
        y.v[idx] = -std::log(std::max(count, p.epsilon) / p.I0);
    }
    return y;
}

Sinogram simulate_low_dose(const Image& ref_hu, const FanBeamGeometry& geom, const DoseParams& p) {
    Sinogram li = forward_project(hu_to_mu(ref_hu), geom);
    return simulate_low_dose_from_line_integrals(li, p);
}

StatWeights compute_weights(const Sinogram& y, const DoseParams& p) {
    p.validate();
    StatWeights w(y.n_views, y.n_dets);
    const size_t n = y.size();
    for (size_t i = 0; i < n; ++i) {
        const double ybar = p.I0 * std::exp(-y.v[i]);
        w.v[i] = p.poisson_only_weights ? ybar : ybar * ybar / (ybar + p.sigma2);
    }
    return w;
}

}  // namespace superct
