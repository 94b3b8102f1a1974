#include "superct/super.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "superct/dose.hpp"
#include "superct/io.hpp"
#include "superct/metrics.hpp"
#include "superct/rng.hpp"

namespace superct {

namespace fs = std::filesystem;
using nlohmann::json;

std::string SuperConfig::to_json() const {
    json j;
    j["layers"] = layers;
    j["prior"] = prior == PriorKind::None ? "none" : prior == PriorKind::Ep ? "ep" : "ultra";
    j["mode"] = mode == SuperMode::Full             ? "full"
                : mode == SuperMode::SequentialOnly ? "sequential"
                : mode == SuperMode::DataTermOnly   ? "data-term-only"
                                                    : "supervised-only";
    j["beta"] = beta;
    j["mu"] = mu;
    j["delta"] = delta;
    j["gamma"] = gamma;
    j["neighborhood"] = neighborhood == Neighborhood::Eight ? 8 : 4;
    j["kappa_weighting"] = kappa_weighting;
    j["solver_outer_iters"] = solver.outer_iters;
    j["solver_inner_iters"] = solver.inner_iters;
    j["solver_accelerate"] = solver.accelerate;
    j["dn_spec"] = json::parse(dn_spec.to_json());
    j["dn_epochs"] = dn_train.epochs;
    j["dn_learning_rate"] = dn_train.learning_rate;
    j["dn_momentum"] = dn_train.momentum;
    j["dn_batch"] = dn_train.batch;
    j["warm_start_prev"] = warm_start_prev;
    j["seed"] = seed;
    return j.dump(2);
}

SuperConfig SuperConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    SuperConfig c;
    c.layers = j.value("layers", 5);
    const std::string prior = j.value("prior", "ep");
    c.prior = prior == "none" ? PriorKind::None : prior == "ultra" ? PriorKind::Ultra : PriorKind::Ep;
    const std::string mode = j.value("mode", "full");
    c.mode = mode == "sequential"        ? SuperMode::SequentialOnly
             : mode == "data-term-only"  ? SuperMode::DataTermOnly
             : mode == "supervised-only" ? SuperMode::SupervisedOnly
                                         : SuperMode::Full;
    c.beta = j.value("beta", 32768.0);
    c.mu = j.value("mu", 5e4);
    c.delta = j.value("delta", 20.0);
    c.gamma = j.value("gamma", 20.0);
    c.neighborhood = j.value("neighborhood", 8) == 4 ? Neighborhood::Four : Neighborhood::Eight;
    c.kappa_weighting = j.value("kappa_weighting", true);
    c.solver.outer_iters = j.value("solver_outer_iters", 20);
    c.solver.inner_iters = j.value("solver_inner_iters", 5);
    c.solver.accelerate = j.value("solver_accelerate", true);
    if (j.contains("dn_spec")) c.dn_spec = DenoiserSpec::from_json(j.at("dn_spec").dump());
    c.dn_train.epochs = j.value("dn_epochs", 30);
    c.dn_train.learning_rate = j.value("dn_learning_rate", 0.25);
    c.dn_train.momentum = j.value("dn_momentum", 0.9);
    c.dn_train.batch = j.value("dn_batch", 4);
    c.warm_start_prev = j.value("warm_start_prev", false);
    c.seed = j.value("seed", uint64_t(0));
    return c;
}

std::string config_hash_hex(const SuperConfig& cfg, const TransformBank* bank) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::string cj = cfg.to_json();
    mix_bytes(cj.data(), cj.size());
    if (bank) {
        mix_bytes(&bank->K, sizeof bank->K);
        for (const auto& o : bank->omegas) mix_bytes(o.data(), o.size() * sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string model_hash_hex(const LayeredSuperModel& model) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::string ch = model.config_hash;
    mix_bytes(ch.data(), ch.size());
    for (const auto& w : model.layers) mix_bytes(w.params.data(), w.params.size() * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Per-case immutable context for MBIR updates.
struct CaseContext {
    FanBeamProjector* proj = nullptr;  // shared
    std::unique_ptr<ScaledOperator> A;
    PwlsSystem sys;
    std::vector<double> kappa;  // empty when kappa_weighting is off
    std::vector<double> tau;    // per patch (ULTRA)
};

CaseContext make_context(FanBeamProjector& proj, const Sinogram& y, const StatWeights& W,
                         const SuperConfig& cfg, const TransformBank* bank) {
    CaseContext ctx;
    ctx.proj = &proj;
    ctx.A = std::make_unique<ScaledOperator>(proj, kHuToMu);
    ctx.sys.A = ctx.A.get();
    ctx.sys.y = &y;
    ctx.sys.W = &W;
    ctx.sys.rows = proj.geometry().image_rows;
    ctx.sys.cols = proj.geometry().image_cols;
    ctx.sys.pixel_size_mm = proj.geometry().pixel_size_mm;
    if (cfg.kappa_weighting) {
        ctx.kappa = kappa_map(*ctx.A, W, ctx.sys.rows, ctx.sys.cols);
        if (cfg.prior == PriorKind::Ultra && bank)
            ctx.tau = tau_weights(ctx.kappa, ctx.sys.rows, ctx.sys.cols, bank->patch);
    }
    return ctx;
}

// One SUPER layer: denoise, then the mode-appropriate MBIR update.
Image layer_update(const CaseContext& ctx, const DenoiserWeights& weights, const SuperConfig& cfg,
                   const TransformBank* bank, const Image& x_prev, SolveTrace* trace) {
    Image d = denoiser_apply(weights, x_prev);
    if (cfg.mode == SuperMode::SequentialOnly) return d;

    const Image& init = cfg.warm_start_prev ? x_prev : d;
    SolveConfig scfg = cfg.solver;

    if (cfg.mode == SuperMode::DataTermOnly) {
        auto [x, tr] = solve_quadratic_anchor(ctx.sys, nullptr, 0.0, 0.0, nullptr, init, scfg);
        if (trace) *trace = std::move(tr);
        return std::move(x);
    }
    if (cfg.mode == SuperMode::SupervisedOnly || cfg.prior == PriorKind::None) {
        auto [x, tr] = solve_quadratic_anchor(ctx.sys, nullptr, 0.0, cfg.mu,
                                              cfg.mu != 0.0 ? &d : nullptr, init, scfg);
        if (trace) *trace = std::move(tr);
        return std::move(x);
    }
    if (cfg.prior == PriorKind::Ep) {
        EpParams ep;
        ep.delta = cfg.delta;
        ep.beta = cfg.beta;
        ep.neighborhood = cfg.neighborhood;
        ep.kappa = ctx.kappa;
        auto [x, tr] = solve_ep(ctx.sys, ep, cfg.mu, cfg.mu != 0.0 ? &d : nullptr, init, scfg);
        if (trace) *trace = std::move(tr);
        return std::move(x);
    }
    // ULTRA
    UltraSolveResult res = solve_ultra(ctx.sys, *bank, cfg.gamma, ctx.tau, cfg.beta, cfg.mu,
                                       cfg.mu != 0.0 ? &d : nullptr, init, scfg);
    if (trace) {
        trace->cost = std::move(res.trace.cost);
        trace->seconds = std::move(res.trace.seconds);
    }
    return std::move(res.x);
}

void check_case(const TrainingCase& c, const FanBeamGeometry& geom) {
    if (c.y.n_views != geom.n_views || c.y.n_dets != geom.n_dets ||
        c.W.n_views != geom.n_views || c.W.n_dets != geom.n_dets ||
        c.x0.rows != geom.image_rows || c.x0.cols != geom.image_cols ||
        !c.x_star.same_dims(c.x0))
        throw std::invalid_argument("training case dims inconsistent with geometry: " + c.id);
}

}  // namespace

SuperTrainResult super_train(const std::vector<TrainingCase>& cases,
                             const std::vector<TrainingCase>& val, const FanBeamGeometry& geom,
                             const SuperConfig& cfg, std::shared_ptr<const TransformBank> bank) {
    if (cases.empty()) throw std::invalid_argument("super_train: no training cases");
    if (cfg.prior == PriorKind::Ultra && !bank)
        throw std::invalid_argument("super_train: ULTRA prior requires a transform bank");
    for (const auto& c : cases) check_case(c, geom);
    for (const auto& c : val) check_case(c, geom);

    FanBeamProjector proj(geom);
    std::vector<CaseContext> ctx;
    ctx.reserve(cases.size());
    for (const auto& c : cases) ctx.push_back(make_context(proj, c.y, c.W, cfg, bank.get()));
    std::vector<CaseContext> vctx;
    vctx.reserve(val.size());
    for (const auto& c : val) vctx.push_back(make_context(proj, c.y, c.W, cfg, bank.get()));

    SuperTrainResult out;
    out.model.cfg = cfg;
    out.model.bank = bank;
    out.model.config_hash = config_hash_hex(cfg, bank.get());

    std::vector<Image> cur;
    cur.reserve(cases.size());
    for (const auto& c : cases) cur.push_back(c.x0);
    std::vector<Image> vcur;
    for (const auto& c : val) vcur.push_back(c.x0);

    std::vector<Image> targets;
    targets.reserve(cases.size());
    for (const auto& c : cases) targets.push_back(c.x_star);

    for (int layer = 0; layer < cfg.layers; ++layer) {
        TrainConfig tc = cfg.dn_train;
        tc.seed = derive_seed(cfg.seed, 0xD0, static_cast<uint64_t>(layer));
        DenoiserWeights w = denoiser_train(cfg.dn_spec, nullptr, cur, targets, tc);
        out.model.layers.push_back(w);

        std::string layer_error;
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < static_cast<long>(cases.size()); ++i) {
            try {
                cur[static_cast<size_t>(i)] = layer_update(ctx[static_cast<size_t>(i)], w, cfg,
                                                           bank.get(), cur[static_cast<size_t>(i)],
                                                           nullptr);
            } catch (const std::exception& e) {
#pragma omp critical
                layer_error = "case " + cases[static_cast<size_t>(i)].id + ": " + e.what();
            }
        }
        if (!layer_error.empty())
            throw SolverDivergence("super_train: layer " + std::to_string(layer + 1) +
                                   " image update failed: " + layer_error);

        if (!val.empty()) {
            LayerMetrics lm;
            std::string val_error;
#pragma omp parallel for schedule(dynamic, 1)
            for (long i = 0; i < static_cast<long>(val.size()); ++i) {
                try {
                    vcur[static_cast<size_t>(i)] =
                        layer_update(vctx[static_cast<size_t>(i)], w, cfg, bank.get(),
                                     vcur[static_cast<size_t>(i)], nullptr);
                } catch (const std::exception& e) {
#pragma omp critical
                    val_error = "case " + val[static_cast<size_t>(i)].id + ": " + e.what();
                }
            }
            if (!val_error.empty())
                throw SolverDivergence("super_train: layer " + std::to_string(layer + 1) +
                                       " validation update failed: " + val_error);
            for (size_t i = 0; i < val.size(); ++i) {
                lm.mean_rmse += rmse(vcur[i], val[i].x_star);
                lm.mean_snr += snr_db(vcur[i], val[i].x_star);
                lm.mean_ssim += ssim(vcur[i], val[i].x_star);
            }
            const double n = static_cast<double>(val.size());
            lm.mean_rmse /= n;
            lm.mean_snr /= n;
            lm.mean_ssim /= n;
            out.model.val_metrics.push_back(lm);
        }
    }
    out.train_images = std::move(cur);
    return out;
}

SuperReconResult super_reconstruct(const Sinogram& y, const StatWeights& W, const Image& x0,
                                   const LayeredSuperModel& model, const FanBeamGeometry& geom) {
    FanBeamProjector proj(geom);
    CaseContext ctx = make_context(proj, y, W, model.cfg, model.bank.get());
    SuperReconResult out;
    Image cur = x0;
    for (const auto& w : model.layers) {
        SolveTrace trace;
        cur = layer_update(ctx, w, model.cfg, model.bank.get(), cur, &trace);
        out.per_layer.push_back(cur);
        out.traces.push_back(std::move(trace));
    }
    out.final = cur;
    return out;
}

double evaluate_fixed_point_residual(const Sinogram& y, const StatWeights& W,
                                     const LayeredSuperModel& model, const FanBeamGeometry& geom,
                                     const Image& x) {
    if (model.layers.empty()) throw std::invalid_argument("fixed point residual: empty model");
    FanBeamProjector proj(geom);
    CaseContext ctx = make_context(proj, y, W, model.cfg, model.bank.get());
    Image next = layer_update(ctx, model.layers.back(), model.cfg, model.bank.get(), x, nullptr);
    return rmse(next, x);
}

void save_model(const std::string& dir, const LayeredSuperModel& model) {
    fs::create_directories(dir);
    json j;
    j["L"] = static_cast<int>(model.layers.size());
    j["config"] = json::parse(model.cfg.to_json());
    j["config_hash"] = model.config_hash;
    j["model_hash"] = model_hash_hex(model);
    json metrics = json::array();
    for (const auto& m : model.val_metrics)
        metrics.push_back({{"rmse", m.mean_rmse}, {"snr", m.mean_snr}, {"ssim", m.mean_ssim}});
    j["val_metrics"] = metrics;
    j["bank_file"] = model.bank ? "bank.sprg" : "";
    write_text_file(dir + "/manifest.json", j.dump(2));
    for (size_t i = 0; i < model.layers.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "layer_%03zu.dn", i);
        save_denoiser(dir + "/" + name, model.layers[i]);
    }
    if (model.bank) save_transform_bank(dir + "/bank.sprg", *model.bank);
}

LayeredSuperModel load_model(const std::string& dir) {
    json j = json::parse(read_text_file(dir + "/manifest.json"));
    LayeredSuperModel model;
    model.cfg = SuperConfig::from_json(j.at("config").dump());
    model.config_hash = j.value("config_hash", "");
    const int L = j.at("L").get<int>();
    for (int i = 0; i < L; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "layer_%03d.dn", i);
        model.layers.push_back(load_denoiser(dir + "/" + name));
    }
    const std::string bank_file = j.value("bank_file", std::string{});
    if (!bank_file.empty())
        model.bank = std::make_shared<TransformBank>(load_transform_bank(dir + "/" + bank_file));
    for (const auto& m : j.value("val_metrics", json::array()))
        model.val_metrics.push_back(
            {m.value("rmse", 0.0), m.value("snr", 0.0), m.value("ssim", 0.0)});
    return model;
}

}  // namespace superct
