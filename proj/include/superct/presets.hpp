#pragma once

#include <string>

#include "superct/dose.hpp"
#include "superct/geometry.hpp"
#include "superct/solver.hpp"
#include "superct/super.hpp"

namespace superct::presets {

// Full-scale configurations: EP {beta=2^15, delta=20, mu=5e4}, ULTRA
// {beta=5e3, gamma=20, mu=5e5}, I=20, P=5, L=15; standalone baselines
// EP {beta=2^16, 100 iters} and ULTRA {beta=1e4, gamma=25, 1000 alternations}.
SuperConfig super_ep_paper();
SuperConfig super_ultra_paper();

// Desk-scale configurations (128^2, 256x288 geometry, I0=1e4): paper
// structure with weights recalibrated for the desk operator scale and
// iteration counts sized for minutes-scale runs.
SuperConfig super_ep_desk();
SuperConfig super_ultra_desk();

SolveConfig pwls_ep_desk();
SolveConfig pwls_ultra_desk();
double pwls_ep_desk_beta();
double pwls_ultra_desk_beta();
double pwls_ultra_desk_gamma();

// Transform-bank learning defaults at desk scale.
struct UltraLearnDesk {
    int K = 5;
    int iters = 30;
    double lambda0 = 31.0;
    double eta = 20.0;
    PatchConfig patch{8, 2};
};

FanBeamGeometry geometry(const std::string& name);  // "desk" | "paper" | "tiny"
SuperConfig super_preset(const std::string& name);  // "paper-ep" | "paper-ultra" | "desk-ep" | "desk-ultra"

}  // namespace superct::presets
