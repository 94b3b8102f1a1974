#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "superct/dataset.hpp"
#include "superct/fbp.hpp"
#include "superct/io.hpp"
#include "superct/kernels.hpp"
#include "superct/metrics.hpp"
#include "superct/presets.hpp"
#include "superct/solver.hpp"
#include "superct/super.hpp"
#include "superct/threading.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace superct;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolve = 4;

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CliError(kExitIo, "cannot open config: " + path);
    try {
        return json::parse(f);
    } catch (const std::exception& e) {
        throw CliError(kExitConfig, "config parse error in " + path + ": " + e.what());
    }
}

FanBeamGeometry geometry_from_config(const json& j, const std::string& base_dir) {
    if (!j.contains("geometry")) return FanBeamGeometry::desk_scale();
    const auto& g = j.at("geometry");
    if (g.is_string()) {
        const std::string s = g.get<std::string>();
        if (s == "desk" || s == "paper" || s == "tiny") return presets::geometry(s);
        const std::string path = fs::path(s).is_absolute() ? s : base_dir + "/" + s;
        if (!fs::exists(path)) throw CliError(kExitIo, "geometry file not found: " + path);
        return load_geometry_file(path);
    }
    return FanBeamGeometry::from_json(g.dump());
}

DoseParams dose_from_config(const json& j, uint64_t seed) {
    if (!j.contains("dose")) return dose_preset("1e4", seed);
    const auto& d = j.at("dose");
    if (d.is_string()) return dose_preset(d.get<std::string>(), seed);
    DoseParams p = DoseParams::from_json(d.dump());
    p.seed = seed;
    return p;
}

void write_trace_csv(const std::string& path, const SolveTrace& trace) {
    std::string out = "iteration,cost,seconds\n";
    for (size_t i = 0; i < trace.cost.size(); ++i) {
        char line[96];
        std::snprintf(line, sizeof line, "%zu,%.17g,%.6f\n", i + 1, trace.cost[i],
                      i < trace.seconds.size() ? trace.seconds[i] : 0.0);
        out += line;
    }
    write_text_file(path, out);
}

int cmd_simulate(const std::string& config_path, std::optional<uint64_t> seed_flag) {
    json cfg = load_config(config_path);
    const std::string out_dir = cfg.value("out_dir", "");
    if (out_dir.empty()) throw CliError(kExitConfig, "simulate: out_dir is required");
    const uint64_t seed = seed_flag.value_or(cfg.value("seed", uint64_t(0)));
    FanBeamGeometry geom = geometry_from_config(cfg, fs::path(config_path).parent_path().string());
    DoseParams dose = dose_from_config(cfg, seed);
    const int n_train = cfg.value("n_train", 40);
    const int n_val = cfg.value("n_val", 5);
    const int n_test = cfg.value("n_test", 10);
    if (cfg.contains("import_dir")) {
        import_dataset(cfg.at("import_dir").get<std::string>(), geom, dose, seed, out_dir);
    } else {
        build_dataset(n_train, n_val, n_test, geom, dose, seed, out_dir);
    }
    std::printf("simulate: wrote dataset to %s (train=%d val=%d test=%d, I0=%g)\n", out_dir.c_str(),
                n_train, n_val, n_test, dose.I0);
    return kExitOk;
}

int cmd_learn_transforms(const std::string& config_path, std::optional<uint64_t> seed_flag) {
    json cfg = load_config(config_path);
    const std::string manifest_dir = cfg.value("manifest_dir", "");
    const std::string out_bank = cfg.value("out_bank", "");
    if (manifest_dir.empty() || out_bank.empty())
        throw CliError(kExitConfig, "learn-transforms: manifest_dir and out_bank are required");
    if (!fs::exists(manifest_dir + "/manifest.json"))
        throw CliError(kExitIo, "manifest not found in " + manifest_dir);
    DatasetManifest m = load_manifest(manifest_dir);

    presets::UltraLearnDesk defaults;
    const int K = cfg.value("K", defaults.K);
    const int iters = cfg.value("iters", defaults.iters);
    const double lambda0 = cfg.value("lambda0", defaults.lambda0);
    const double eta = cfg.value("eta", defaults.eta);
    PatchConfig patch;
    patch.side = cfg.value("patch_side", defaults.patch.side);
    patch.stride = cfg.value("stride", defaults.patch.stride);
    const uint64_t seed = seed_flag.value_or(cfg.value("seed", uint64_t(0)));
    const int max_images = cfg.value("n_images", 18);

    std::vector<Image> refs;
    for (const auto& e : m.train) {
        if (static_cast<int>(refs.size()) >= max_images) break;
        refs.push_back(load_image(manifest_dir + "/" + e.xstar));
    }
    if (refs.empty()) throw CliError(kExitConfig, "learn-transforms: no training images");

    LearnTrace trace;
    TransformBank bank = learn_ultra(refs, K, patch, iters, lambda0, eta, seed, &trace);
    const std::string parent = fs::path(out_bank).parent_path().string();
    if (!parent.empty()) fs::create_directories(parent);
    save_transform_bank(out_bank, bank);
    if (cfg.contains("trace_csv")) {
        SolveTrace tr;
        tr.cost = trace.objective;
        tr.seconds.assign(trace.objective.size(), 0.0);
        write_trace_csv(cfg.at("trace_csv").get<std::string>(), tr);
    }
    std::printf("learn-transforms: K=%d m=%d from %zu images, %d alternations -> %s\n", bank.K,
                bank.m, refs.size(), iters, out_bank.c_str());
    if (trace.reseeded_clusters > 0)
        std::printf("learn-transforms: note: %d empty clusters re-seeded\n", trace.reseeded_clusters);
    return kExitOk;
}

SuperConfig super_config_from(const json& cfg, const std::string& method,
                              std::optional<uint64_t> seed_flag) {
    std::string preset = cfg.value("preset", "desk");
    SuperConfig sc;
    if (method == "super-ep" || method == "sequential" || method == "data-term-only" ||
        method == "supervised-only")
        sc = preset == "paper" ? presets::super_ep_paper() : presets::super_ep_desk();
    else if (method == "super-ultra")
        sc = preset == "paper" ? presets::super_ultra_paper() : presets::super_ultra_desk();
    else
        throw CliError(kExitConfig, "not a trainable method: " + method);

    if (method == "sequential") sc.mode = SuperMode::SequentialOnly;
    if (method == "data-term-only") {
        sc.mode = SuperMode::DataTermOnly;
        sc.beta = 0.0;
        sc.mu = 0.0;
        sc.solver.outer_iters = cfg.value("iters", 5);
    }
    if (method == "supervised-only") {
        sc.mode = SuperMode::SupervisedOnly;
        sc.beta = 0.0;
    }

    if (cfg.contains("L")) sc.layers = cfg.at("L").get<int>();
    if (cfg.contains("beta")) sc.beta = cfg.at("beta").get<double>();
    if (cfg.contains("mu")) sc.mu = cfg.at("mu").get<double>();
    if (cfg.contains("gamma")) sc.gamma = cfg.at("gamma").get<double>();
    if (cfg.contains("delta")) sc.delta = cfg.at("delta").get<double>();
    if (cfg.contains("iters") && method != "data-term-only")
        sc.solver.outer_iters = cfg.at("iters").get<int>();
    if (cfg.contains("inner_iters")) sc.solver.inner_iters = cfg.at("inner_iters").get<int>();
    if (cfg.contains("epochs")) sc.dn_train.epochs = cfg.at("epochs").get<int>();
    if (cfg.contains("learning_rate")) sc.dn_train.learning_rate = cfg.at("learning_rate").get<double>();
    if (cfg.contains("batch")) sc.dn_train.batch = cfg.at("batch").get<int>();
    sc.seed = seed_flag.value_or(cfg.value("seed", uint64_t(0)));
    return sc;
}

int cmd_train_super(const std::string& config_path, std::optional<uint64_t> seed_flag) {
    json cfg = load_config(config_path);
    const std::string manifest_dir = cfg.value("manifest_dir", "");
    const std::string out_model = cfg.value("out_model_dir", "");
    const std::string method = cfg.value("method", "super-ep");
    if (manifest_dir.empty() || out_model.empty())
        throw CliError(kExitConfig, "train-super: manifest_dir and out_model_dir are required");
    if (!fs::exists(manifest_dir + "/manifest.json"))
        throw CliError(kExitIo, "manifest not found in " + manifest_dir);

    DatasetManifest m = load_manifest(manifest_dir);
    FanBeamGeometry geom = load_geometry_file(manifest_dir + "/" + m.geometry_file);
    SuperConfig sc = super_config_from(cfg, method, seed_flag);

    std::shared_ptr<TransformBank> bank;
    if (method == "super-ultra") {
        const std::string bank_path = cfg.value("bank", "");
        if (bank_path.empty()) throw CliError(kExitConfig, "train-super: ULTRA needs a bank path");
        if (!fs::exists(bank_path)) throw CliError(kExitIo, "bank not found: " + bank_path);
        bank = std::make_shared<TransformBank>(load_transform_bank(bank_path));
    }

    std::vector<TrainingCase> cases = load_split(manifest_dir, m.train);
    std::vector<TrainingCase> val = load_split(manifest_dir, m.val);

    SuperTrainResult result;
    try {
        result = super_train(cases, val, geom, sc, bank);
    } catch (const SolverDivergence& e) {
        throw CliError(kExitSolve, e.what());
    } catch (const TrainingError& e) {
        throw CliError(kExitSolve, e.what());
    }
    save_model(out_model, result.model);

    std::string csv = "layer,mean_rmse,mean_snr,mean_ssim\n";
    for (size_t i = 0; i < result.model.val_metrics.size(); ++i) {
        char line[128];
        std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f\n", i + 1,
                      result.model.val_metrics[i].mean_rmse, result.model.val_metrics[i].mean_snr,
                      result.model.val_metrics[i].mean_ssim);
        csv += line;
    }
    write_text_file(out_model + "/val_metrics.csv", csv);
    if (cfg.value("dump_train_images", false)) {
        fs::create_directories(out_model + "/train_final");
        for (size_t i = 0; i < cases.size(); ++i)
            save_image(out_model + "/train_final/" + cases[i].id + ".sprg",
                       result.train_images[i]);
    }
    std::printf("train-super: %s L=%d -> %s (model hash %s)\n", method.c_str(), sc.layers,
                out_model.c_str(), model_hash_hex(result.model).c_str());
    return kExitOk;
}

struct MetricsRow {
    std::string id, method;
    int layer;
    double rmse_v, snr_v, ssim_v;
};

void append_metrics(std::string& csv, const MetricsRow& r) {
    char line[256];
    std::snprintf(line, sizeof line, "%s,%s,%d,%.6f,%.6f,%.6f\n", r.id.c_str(), r.method.c_str(),
                  r.layer, r.rmse_v, r.snr_v, r.ssim_v);
    csv += line;
}

int cmd_reconstruct(const std::string& config_path, std::optional<uint64_t> seed_flag,
                    bool dump_layers_flag) {
    (void)seed_flag;  // reconstruction is deterministic; flag kept for symmetry
    json cfg = load_config(config_path);
    const std::string manifest_dir = cfg.value("manifest_dir", "");
    const std::string out_dir = cfg.value("out_dir", "");
    const std::string method = cfg.value("method", "fbp");
    if (manifest_dir.empty() || out_dir.empty())
        throw CliError(kExitConfig, "reconstruct: manifest_dir and out_dir are required");
    if (!fs::exists(manifest_dir + "/manifest.json"))
        throw CliError(kExitIo, "manifest not found in " + manifest_dir);
    const bool dump_layers = dump_layers_flag || cfg.value("dump_layers", false);

    DatasetManifest m = load_manifest(manifest_dir);
    FanBeamGeometry geom = load_geometry_file(manifest_dir + "/" + m.geometry_file);
    const std::string split = cfg.value("split", "test");
    const auto& entries = split == "train" ? m.train : split == "val" ? m.val : m.test;
    if (entries.empty()) throw CliError(kExitConfig, "reconstruct: split '" + split + "' is empty");

    const bool needs_model = method == "super-ep" || method == "super-ultra" ||
                             method == "sequential" || method == "data-term-only" ||
                             method == "supervised-only";
    LayeredSuperModel model;
    if (needs_model) {
        const std::string model_dir = cfg.value("model_dir", "");
        if (model_dir.empty()) throw CliError(kExitConfig, "reconstruct: method needs model_dir");
        if (!fs::exists(model_dir + "/manifest.json"))
            throw CliError(kExitIo, "model not found in " + model_dir);
        model = load_model(model_dir);
    }
    std::shared_ptr<TransformBank> bank;
    if (method == "pwls-ultra") {
        const std::string bank_path = cfg.value("bank", "");
        if (bank_path.empty()) throw CliError(kExitConfig, "reconstruct: pwls-ultra needs a bank");
        if (!fs::exists(bank_path)) throw CliError(kExitIo, "bank not found: " + bank_path);
        bank = std::make_shared<TransformBank>(load_transform_bank(bank_path));
    }
    const std::string preset = cfg.value("preset", "desk");

    fs::create_directories(out_dir);
    std::string csv = "case,method,layer,rmse,snr,ssim\n";
    SsimParams ssim_p;

    for (const auto& e : entries) {
        TrainingCase c = load_case(manifest_dir, e);
        FanBeamProjector proj(geom);
        ScaledOperator A(proj, kHuToMu);
        PwlsSystem sys{&A, &c.y, &c.W, geom.image_rows, geom.image_cols, geom.pixel_size_mm};

        std::vector<Image> layer_images;
        Image final_img(geom.image_rows, geom.image_cols, geom.pixel_size_mm);
        try {
            if (method == "fbp") {
                final_img = fbp(c.y, geom, FilterKind::Hann);
                for (auto& v : final_img.px) v /= kHuToMu;
            } else if (method == "pwls-ep") {
                SolveConfig scfg =
                    preset == "paper" ? pwls_ep_baseline_config() : presets::pwls_ep_desk();
                EpParams ep;
                ep.delta = 20.0;
                ep.beta = scfg.beta;
                ep.kappa = kappa_map(A, c.W, geom.image_rows, geom.image_cols);
                auto [x, trace] = solve_ep(sys, ep, 0.0, nullptr, c.x0, scfg);
                final_img = std::move(x);
                write_trace_csv(out_dir + "/" + e.id + "_trace.csv", trace);
            } else if (method == "pwls-ultra") {
                SolveConfig scfg =
                    preset == "paper" ? pwls_ultra_baseline_config() : presets::pwls_ultra_desk();
                auto kappa = kappa_map(A, c.W, geom.image_rows, geom.image_cols);
                auto tau = tau_weights(kappa, geom.image_rows, geom.image_cols, bank->patch);
                UltraSolveResult r = solve_ultra(sys, *bank, scfg.gamma, tau, scfg.beta, 0.0,
                                                 nullptr, c.x0, scfg);
                final_img = std::move(r.x);
                write_trace_csv(out_dir + "/" + e.id + "_trace.csv", r.trace);
            } else {
                SuperReconResult r = super_reconstruct(c.y, c.W, c.x0, model, geom);
                final_img = std::move(r.final);
                layer_images = std::move(r.per_layer);
                if (!r.traces.empty() && !r.traces.back().cost.empty())
                    write_trace_csv(out_dir + "/" + e.id + "_trace.csv", r.traces.back());
            }
        } catch (const SolverDivergence& ex) {
            throw CliError(kExitSolve, std::string("reconstruct: ") + ex.what());
        }

        save_image(out_dir + "/" + e.id + "_" + method + ".sprg", final_img);
        const int final_layer = needs_model ? static_cast<int>(model.layers.size()) : 0;
        append_metrics(csv, {e.id, method, final_layer, rmse(final_img, c.x_star),
                             snr_db(final_img, c.x_star), ssim(final_img, c.x_star, ssim_p)});
        if (dump_layers && !layer_images.empty()) {
            for (size_t l = 0; l < layer_images.size(); ++l) {
                char name[64];
                std::snprintf(name, sizeof name, "%s_%s_layer%02zu.sprg", e.id.c_str(),
                              method.c_str(), l + 1);
                save_image(out_dir + "/" + name, layer_images[l]);
                if (l + 1 < layer_images.size())
                    append_metrics(csv, {e.id, method, static_cast<int>(l + 1),
                                         rmse(layer_images[l], c.x_star),
                                         snr_db(layer_images[l], c.x_star),
                                         ssim(layer_images[l], c.x_star, ssim_p)});
            }
        }
    }
    const std::string csv_path = cfg.value("metrics_csv", out_dir + "/metrics.csv");
    write_text_file(csv_path, csv);
    std::printf("reconstruct: %s on %zu '%s' cases -> %s\n", method.c_str(), entries.size(),
                split.c_str(), out_dir.c_str());
    return kExitOk;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& output) {
    if (inputs.empty()) throw CliError(kExitConfig, "report: no input CSVs");
    struct Key {
        std::string method;
        int layer;
        bool operator<(const Key& o) const {
            return method < o.method || (method == o.method && layer < o.layer);
        }
    };
    std::map<Key, std::vector<std::array<double, 3>>> groups;
    for (const auto& path : inputs) {
        std::ifstream f(path);
        if (!f) throw CliError(kExitIo, "cannot open metrics CSV: " + path);
        std::string line;
        if (!std::getline(f, line) || line.rfind("case,method,layer", 0) != 0)
            throw CliError(kExitConfig, "malformed metrics CSV header in " + path);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::array<std::string, 6> cells;
            size_t pos = 0;
            for (int i = 0; i < 6; ++i) {
                const size_t comma = line.find(',', pos);
                cells[static_cast<size_t>(i)] =
                    line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
                if (comma == std::string::npos && i < 5)
                    throw CliError(kExitConfig, "malformed metrics row in " + path + ": " + line);
                pos = comma + 1;
            }
            try {
                groups[{cells[1], std::stoi(cells[2])}].push_back(
                    {std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])});
            } catch (const std::exception&) {
                throw CliError(kExitConfig, "malformed metrics row in " + path + ": " + line);
            }
        }
    }
    if (groups.empty()) throw CliError(kExitConfig, "report: no data rows");

    json out;
    const char* names[3] = {"rmse", "snr", "ssim"};
    for (const auto& [key, rows] : groups) {
        json stats;
        for (int mi = 0; mi < 3; ++mi) {
            std::vector<double> v;
            v.reserve(rows.size());
            for (const auto& r : rows) v.push_back(r[static_cast<size_t>(mi)]);
            std::sort(v.begin(), v.end());
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            json s;
            s["mean"] = mean;
            s["median"] = quantile_sorted(v, 0.5);
            s["q25"] = quantile_sorted(v, 0.25);
            s["q75"] = quantile_sorted(v, 0.75);
            s["min"] = v.front();
            s["max"] = v.back();
            s["count"] = v.size();
            stats[names[mi]] = s;
        }
        out[key.method]["layer_" + std::to_string(key.layer)] = stats;
    }
    if (output.empty())
        std::cout << out.dump(2) << "\n";
    else
        write_text_file(output, out.dump(2));
    std::printf("report: %zu method/layer groups\n", groups.size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale fan-beam CT reconstruction with layered supervised/unsupervised priors"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<uint64_t> seed_flag;
    int threads = 0;
    bool dump_layers = false;
    bool no_simd = false;
    std::vector<std::string> report_inputs;
    std::string report_output;

    app.add_option("--threads", threads, "cap worker threads (0 = all cores)");
    app.add_flag("--no-simd", no_simd, "force the scalar kernel lane");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic low-dose dataset");
    sim->add_option("--config", config_path, "JSON config")->required();
    sim->add_option("--seed", seed_flag, "override config seed");

    auto* learn = app.add_subcommand("learn-transforms", "learn a union of sparsifying transforms");
    learn->add_option("--config", config_path, "JSON config")->required();
    learn->add_option("--seed", seed_flag, "override config seed");

    auto* train = app.add_subcommand("train-super", "layer-wise training of a layered model");
    train->add_option("--config", config_path, "JSON config")->required();
    train->add_option("--seed", seed_flag, "override config seed");

    auto* rec = app.add_subcommand("reconstruct", "reconstruct a split and emit metrics");
    rec->add_option("--config", config_path, "JSON config")->required();
    rec->add_option("--seed", seed_flag, "override config seed");
    rec->add_flag("--dump-layers", dump_layers, "write per-layer intermediate images");

    auto* rep = app.add_subcommand("report", "aggregate metrics CSVs into a summary JSON");
    rep->add_option("--inputs", report_inputs, "metrics CSV files")->required()->expected(-1);
    rep->add_option("--output", report_output, "summary JSON path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    par::set_threads(threads);
    if (no_simd) kern::force_backend("scalar");

    try {
        if (sim->parsed()) return cmd_simulate(config_path, seed_flag);
        if (learn->parsed()) return cmd_learn_transforms(config_path, seed_flag);
        if (train->parsed()) return cmd_train_super(config_path, seed_flag);
        if (rec->parsed()) return cmd_reconstruct(config_path, seed_flag, dump_layers);
        if (rep->parsed()) return cmd_report(report_inputs, report_output);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const SolverDivergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolve;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolve;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
