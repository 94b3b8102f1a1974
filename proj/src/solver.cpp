#include "superct/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>

#include "superct/kernels.hpp"
#include "superct/threading.hpp"

namespace superct {

namespace {

using Clock = std::chrono::steady_clock;

struct RegModel {
    // value/gradient/curvature of beta * R at a point (anchor and data terms
    // are handled by the engine); constant adds cost terms independent of x.
    std::function<double(const Image&)> value;
    std::function<Image(const Image&)> gradient;
    std::function<std::vector<double>(const Image&)> curvature;  // 1/2-form diag
    double constant = 0.0;
};

struct EngineState {
    Image x;
    std::vector<double> ax;  // A x cached
    double cost = 0.0;
};

void check_system(const PwlsSystem& sys, const Image& x0) {
    if (!sys.A || !sys.y || !sys.W) throw std::invalid_argument("solver: incomplete system");
    if (sys.A->range_size() != sys.y->size() || sys.W->size() != sys.y->size())
        throw std::invalid_argument("solver: operator/sinogram dims mismatch");
    if (sys.A->domain_size() != static_cast<size_t>(sys.rows) * sys.cols ||
        !x0.same_dims(Image(sys.rows, sys.cols, sys.pixel_size_mm)))
        throw std::invalid_argument("solver: image dims mismatch");
}

double eval_cost(const PwlsSystem& sys, const RegModel& reg, double mu, const Image* anchor,
                 const Image& x, const std::vector<double>& ax, std::vector<double>& scratch) {
    const size_t nd = sys.y->size();
    scratch.resize(nd);
    kern::lincomb(nd, 1.0, ax.data(), -1.0, sys.y->data(), scratch.data());
    double cost = par::blocked_wssq(sys.W->data(), scratch.data(), nd);
    if (reg.value) cost += reg.value(x);
    cost += reg.constant;
    if (mu != 0.0 && anchor) {
        std::vector<double> d(x.size());
        kern::lincomb(x.size(), 1.0, x.data(), -1.0, anchor->data(), d.data());
        cost += mu * par::blocked_sumsq(d.data(), d.size());
    }
    return cost;
}

// Gradient of the full cost at point v with A v cached; writes into g.
void eval_gradient(const PwlsSystem& sys, const RegModel& reg, double mu, const Image* anchor,
                   const Image& v, const std::vector<double>& av, Image& g,
                   std::vector<double>& scratch) {
    const size_t nd = sys.y->size();
    const size_t np = v.size();
    scratch.resize(nd);
    kern::lincomb(nd, 1.0, av.data(), -1.0, sys.y->data(), scratch.data());
    kern::mul(nd, sys.W->data(), scratch.data());
    sys.A->apply_adjoint(scratch.data(), g.data());
    kern::scale(np, 2.0, g.data());
    if (reg.gradient) {
        Image rg = reg.gradient(v);
        kern::add(np, rg.data(), g.data());
    }
    if (mu != 0.0 && anchor) {
        // g += 2 mu (v - anchor)
        kern::axpy(np, 2.0 * mu, v.data(), g.data());
        kern::axpy(np, -2.0 * mu, anchor->data(), g.data());
    }
}

// Monotone MM engine: diagonal-majorizer steps, Nesterov acceleration with
// restart on any cost increase. Returns after `iters` iterations; trace gets
// one cost entry per iteration.
void run_engine(const PwlsSystem& sys, const RegModel& reg, double mu, const Image* anchor,
                EngineState& st, int iters, bool accelerate, double tolerance, SolveTrace* trace,
                Clock::time_point t0) {
    const size_t np = st.x.size();
    const size_t nd = sys.y->size();

    // Data-term curvature diag: 2 A'(W (A 1)).
    std::vector<double> dcurv(np), ones(np, 1.0), sino(nd);
    sys.A->apply(ones.data(), sino.data());
    kern::mul(nd, sys.W->data(), sino.data());
    sys.A->apply_adjoint(sino.data(), dcurv.data());
    kern::scale(np, 2.0, dcurv.data());

    Image x_prev = st.x;
    std::vector<double> ax_prev = st.ax;
    double tmom = 1.0;
    bool have_prev = false;

    Image v(sys.rows, sys.cols, sys.pixel_size_mm), g(sys.rows, sys.cols, sys.pixel_size_mm);
    Image cand(sys.rows, sys.cols, sys.pixel_size_mm);
    std::vector<double> av(nd), acand(nd), scratch(nd), dinv(np);

    auto make_step = [&](const Image& at, const std::vector<double>& a_at, Image& out) {
        eval_gradient(sys, reg, mu, anchor, at, a_at, g, scratch);
        std::vector<double> h = reg.curvature ? reg.curvature(at) : std::vector<double>(np, 0.0);
        for (size_t i = 0; i < np; ++i) {
            double hi = dcurv[i] + h[i] + 2.0 * mu;
            dinv[i] = hi > 0.0 ? 1.0 / hi : 0.0;
        }
        out = at;
        kern::sub_mul(np, g.data(), dinv.data(), out.data());
    };

    for (int it = 0; it < iters; ++it) {
        bool accepted = false;
        if (accelerate && have_prev) {
            const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tmom * tmom));
            const double c = (tmom - 1.0) / tnext;
            kern::lincomb(np, 1.0 + c, st.x.data(), -c, x_prev.data(), v.data());
            kern::lincomb(nd, 1.0 + c, st.ax.data(), -c, ax_prev.data(), av.data());
            make_step(v, av, cand);
            sys.A->apply(cand.data(), acand.data());
            const double cost_cand = eval_cost(sys, reg, mu, anchor, cand, acand, scratch);
            if (std::isfinite(cost_cand) && cost_cand <= st.cost) {
                x_prev = st.x;
                ax_prev = st.ax;
                st.x = cand;
                st.ax = acand;
                st.cost = cost_cand;
                tmom = tnext;
                accepted = true;
            }
        }
        if (!accepted) {
            // Plain majorize-minimize step from x: never increases the cost.
            make_step(st.x, st.ax, cand);
            sys.A->apply(cand.data(), acand.data());
            const double cost_cand = eval_cost(sys, reg, mu, anchor, cand, acand, scratch);
            if (!std::isfinite(cost_cand))
                throw SolverDivergence("solver: non-finite cost (bad majorizer or weights)");
            if (cost_cand <= st.cost) {
                x_prev = st.x;
                ax_prev = st.ax;
                st.x = cand;
                st.ax = acand;
                st.cost = cost_cand;
                have_prev = true;
            }
            tmom = 1.0;
        } else {
            have_prev = true;
        }
        if (trace) {
            trace->cost.push_back(st.cost);
            trace->seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        }
        if (tolerance > 0.0 && trace && trace->cost.size() >= 2) {
            const double prev = trace->cost[trace->cost.size() - 2];
            if (std::fabs(prev - st.cost) <= tolerance * std::max(std::fabs(prev), 1.0)) break;
        }
    }
}

EngineState init_state(const PwlsSystem& sys, const RegModel& reg, double mu, const Image* anchor,
                       const Image& x0) {
    EngineState st;
    st.x = x0;
    st.ax.resize(sys.y->size());
    sys.A->apply(st.x.data(), st.ax.data());
    std::vector<double> scratch;
    st.cost = eval_cost(sys, reg, mu, anchor, st.x, st.ax, scratch);
    if (!std::isfinite(st.cost)) throw SolverDivergence("solver: non-finite initial cost");
    return st;
}

}  // namespace

std::pair<Image, SolveTrace> solve_quadratic_anchor(const PwlsSystem& sys, const UltraRegState* quad,
                                                    double beta, double mu, const Image* anchor,
                                                    const Image& x0, const SolveConfig& cfg) {
    check_system(sys, x0);
    RegModel reg;
    if (quad && beta != 0.0) {
        reg.value = [&, beta](const Image& x) { return beta * ultra_quad_value(x, *quad); };
        reg.gradient = [&, beta](const Image& x) {
            Image g = ultra_reg_gradient(x, *quad);
            kern::scale(g.size(), beta, g.data());
            return g;
        };
        std::vector<double> h = ultra_curvature_diag(*quad, sys.rows, sys.cols);
        kern::scale(h.size(), beta, h.data());
        reg.curvature = [h](const Image&) { return h; };
    }
    EngineState st = init_state(sys, reg, mu, anchor, x0);
    SolveTrace trace;
    run_engine(sys, reg, mu, anchor, st, cfg.outer_iters, cfg.accelerate, cfg.tolerance, &trace,
               Clock::now());
    return {std::move(st.x), std::move(trace)};
}

std::pair<Image, SolveTrace> solve_ep(const PwlsSystem& sys, const EpParams& ep, double mu,
                                      const Image* anchor, const Image& x0, const SolveConfig& cfg) {
    check_system(sys, x0);
    const double beta = ep.beta != 0.0 ? ep.beta : cfg.beta;
    RegModel reg;
    if (beta != 0.0) {
        reg.value = [&, beta](const Image& x) { return beta * ep_value(x, ep); };
        reg.gradient = [&, beta](const Image& x) {
            Image g = ep_gradient(x, ep);
            kern::scale(g.size(), beta, g.data());
            return g;
        };
        reg.curvature = [&, beta](const Image& x) {
            std::vector<double> h = ep_curvature_diag(x, ep);
            kern::scale(h.size(), beta, h.data());
            return h;
        };
    }
    EngineState st = init_state(sys, reg, mu, anchor, x0);
    SolveTrace trace;
    run_engine(sys, reg, mu, anchor, st, cfg.outer_iters, cfg.accelerate, cfg.tolerance, &trace,
               Clock::now());
    return {std::move(st.x), std::move(trace)};
}

UltraSolveResult solve_ultra(const PwlsSystem& sys, const TransformBank& bank, double gamma,
                             std::vector<double> tau, double beta, double mu, const Image* anchor,
                             const Image& x0, const SolveConfig& cfg) {
    check_system(sys, x0);
    bank.validate();
    UltraSolveResult res;
    res.state.bank = &bank;
    res.state.gamma = gamma;
    res.state.tau = std::move(tau);
    res.state.refresh(x0);

    const auto t0 = Clock::now();
    const double g2 = gamma * gamma;
    auto l0_term = [&]() {
        double acc = 0.0;
        for (long j = 0; j < res.state.sc.n; ++j) {
            long nnz = 0;
            for (int i = 0; i < bank.m; ++i)
                if (res.state.sc.codes[static_cast<size_t>(i) * res.state.sc.n + j] != 0.0) ++nnz;
            const double t = res.state.tau.empty() ? 1.0 : res.state.tau[static_cast<size_t>(j)];
            acc += t * g2 * static_cast<double>(nnz);
        }
        return beta * acc;
    };

    RegModel reg;
    reg.value = [&](const Image& x) { return beta * ultra_quad_value(x, res.state); };
    reg.gradient = [&](const Image& x) {
        Image g = ultra_reg_gradient(x, res.state);
        kern::scale(g.size(), beta, g.data());
        return g;
    };

    EngineState st;
    st.x = x0;
    st.ax.resize(sys.y->size());
    sys.A->apply(st.x.data(), st.ax.data());

    for (int alt = 0; alt < cfg.outer_iters; ++alt) {
        reg.constant = l0_term();
        std::vector<double> h = ultra_curvature_diag(res.state, sys.rows, sys.cols);
        kern::scale(h.size(), beta, h.data());
        reg.curvature = [h](const Image&) { return h; };

        std::vector<double> scratch;
        st.cost = eval_cost(sys, reg, mu, anchor, st.x, st.ax, scratch);
        if (!std::isfinite(st.cost)) throw SolverDivergence("solve_ultra: non-finite cost");
        run_engine(sys, reg, mu, anchor, st, cfg.inner_iters, cfg.accelerate, 0.0, nullptr, t0);

        res.state.refresh(st.x);  // exact minimization over codes and clusters
        reg.constant = l0_term();
        st.cost = eval_cost(sys, reg, mu, anchor, st.x, st.ax, scratch);
        res.trace.cost.push_back(st.cost);
        res.trace.seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        if (cfg.tolerance > 0.0 && res.trace.cost.size() >= 2) {
            const double prev = res.trace.cost[res.trace.cost.size() - 2];
            if (std::fabs(prev - st.cost) <= cfg.tolerance * std::max(std::fabs(prev), 1.0)) break;
        }
    }
    res.x = std::move(st.x);
    return res;
}

SolveConfig pwls_ep_baseline_config() {
    SolveConfig cfg;
    cfg.outer_iters = 100;
    cfg.beta = 65536.0;  // 2^16
    cfg.mu = 0.0;
    return cfg;
}

SolveConfig pwls_ultra_baseline_config() {
    SolveConfig cfg;
    cfg.outer_iters = 1000;
    cfg.inner_iters = 5;
    cfg.beta = 1e4;
    cfg.gamma = 25.0;
    cfg.mu = 0.0;
    return cfg;
}

std::pair<Image, SolveTrace> pwls_ep_baseline(const PwlsSystem& sys, const Image& x0,
                                              const std::vector<double>& kappa) {
    const SolveConfig cfg = pwls_ep_baseline_config();
    EpParams ep;
    ep.delta = 20.0;
    ep.beta = cfg.beta;
    ep.kappa = kappa;
    return solve_ep(sys, ep, 0.0, nullptr, x0, cfg);
}

UltraSolveResult pwls_ultra_baseline(const PwlsSystem& sys, const TransformBank& bank,
                                     const Image& x0, const std::vector<double>& tau) {
    const SolveConfig cfg = pwls_ultra_baseline_config();
    return solve_ultra(sys, bank, cfg.gamma, tau, cfg.beta, 0.0, nullptr, x0, cfg);
}

}  // namespace superct
