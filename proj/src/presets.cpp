#include "superct/presets.hpp"

#include <stdexcept>

namespace superct::presets {

SuperConfig super_ep_paper() {
    SuperConfig c;
    c.layers = 15;
    c.prior = PriorKind::Ep;
    c.beta = 32768.0;  // 2^15
    c.delta = 20.0;
    c.mu = 5e4;
    c.solver.outer_iters = 20;
    c.dn_train.epochs = 30;
    return c;
}

SuperConfig super_ultra_paper() {
    SuperConfig c;
    c.layers = 15;
    c.prior = PriorKind::Ultra;
    c.beta = 5e3;
    c.gamma = 20.0;
    c.mu = 5e5;
    c.solver.outer_iters = 20;
    c.solver.inner_iters = 5;
    c.dn_train.epochs = 30;
    return c;
}

// Desk weights calibrated on the seeded 128^2 / I0=1e4 synthetic corpus.
SuperConfig super_ep_desk() {
    SuperConfig c = super_ep_paper();
    c.layers = 5;
    c.beta = 32768.0;
    c.mu = 5e4;
    c.solver.outer_iters = 12;
    c.dn_train.epochs = 25;
    return c;
}

SuperConfig super_ultra_desk() {
    SuperConfig c = super_ultra_paper();
    c.layers = 5;
    c.beta = 5e3;
    c.gamma = 20.0;
    c.mu = 5e5;
    c.solver.outer_iters = 8;
    c.solver.inner_iters = 3;
    c.dn_train.epochs = 25;
    return c;
}

double pwls_ep_desk_beta() { return 65536.0; }
double pwls_ultra_desk_beta() { return 1e4; }
double pwls_ultra_desk_gamma() { return 25.0; }

SolveConfig pwls_ep_desk() {
    SolveConfig cfg;
    cfg.outer_iters = 60;
    cfg.beta = pwls_ep_desk_beta();
    return cfg;
}

SolveConfig pwls_ultra_desk() {
    SolveConfig cfg;
    cfg.outer_iters = 60;
    cfg.inner_iters = 3;
    cfg.beta = pwls_ultra_desk_beta();
    cfg.gamma = pwls_ultra_desk_gamma();
    return cfg;
}

FanBeamGeometry geometry(const std::string& name) {
    if (name == "desk") return FanBeamGeometry::desk_scale();
    if (name == "paper") return FanBeamGeometry::paper_scale();
    if (name == "tiny") return FanBeamGeometry::tiny_scale();
    throw std::invalid_argument("unknown geometry preset: " + name);
}

SuperConfig super_preset(const std::string& name) {
    if (name == "paper-ep") return super_ep_paper();
    if (name == "paper-ultra") return super_ultra_paper();
    if (name == "desk-ep") return super_ep_desk();
    if (name == "desk-ultra") return super_ultra_desk();
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace superct::presets
