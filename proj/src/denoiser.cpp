#include "superct/denoiser.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "superct/kernels.hpp"
#include "superct/rng.hpp"

namespace superct {

using nlohmann::json;

void DenoiserSpec::validate() const {
    if (layers.empty()) throw ModelError("denoiser: empty layer list");
    if (!(window_hi > window_lo)) throw ModelError("denoiser: bad window");
    int ch = 1;
    bool last_conv_out1 = false;
    for (const auto& l : layers) {
        if (l.kind == LayerSpec::Kind::Conv) {
            if (l.out_channels < 1) throw ModelError("denoiser: conv needs out_channels");
            ch = l.out_channels;
            last_conv_out1 = (ch == 1);
        }
    }
    if (!last_conv_out1) throw ModelError("denoiser: last conv must emit one channel");
    if (layers.back().kind != LayerSpec::Kind::Conv)
        throw ModelError("denoiser: network must end with a conv layer");
}

long DenoiserSpec::param_count() const {
    long count = 0;
    int in_ch = 1;
    for (const auto& l : layers) {
        if (l.kind != LayerSpec::Kind::Conv) continue;
        count += static_cast<long>(l.out_channels) * in_ch * 9 + (l.bias ? l.out_channels : 0);
        in_ch = l.out_channels;
    }
    return count;
}

std::string DenoiserSpec::to_json() const {
    json j;
    j["residual_skip"] = residual_skip;
    j["window_lo"] = window_lo;
    j["window_hi"] = window_hi;
    json ls = json::array();
    for (const auto& l : layers) {
        if (l.kind == LayerSpec::Kind::Conv)
            ls.push_back({{"conv", l.out_channels}, {"bias", l.bias}});
        else
            ls.push_back({{"relu", true}});
    }
    j["layers"] = ls;
    return j.dump();
}

DenoiserSpec DenoiserSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    DenoiserSpec s;
    s.residual_skip = j.value("residual_skip", true);
    s.window_lo = j.value("window_lo", 0.0);
    s.window_hi = j.value("window_hi", 2048.0);
    for (const auto& l : j.at("layers")) {
        if (l.contains("conv"))
            s.layers.push_back({LayerSpec::Kind::Conv, l.at("conv").get<int>(), l.value("bias", true)});
        else
            s.layers.push_back({LayerSpec::Kind::Relu, 0, false});
    }
    s.validate();
    return s;
}

DenoiserSpec DenoiserSpec::reference() {
    DenoiserSpec s;
    s.layers = {{LayerSpec::Kind::Conv, 16, true}, {LayerSpec::Kind::Relu, 0, false},
                {LayerSpec::Kind::Conv, 16, true}, {LayerSpec::Kind::Relu, 0, false},
                {LayerSpec::Kind::Conv, 1, true}};
    return s;
}

namespace {

// Channel plane stack with a 1-pixel zero border for 3x3 convs.
struct Planes {
    int ch = 0, h = 0, w = 0;
    std::vector<double> data;  // [ch][h+2][w+2]

    Planes() = default;
    Planes(int c, int hh, int ww) : ch(c), h(hh), w(ww), data(static_cast<size_t>(c) * (hh + 2) * (ww + 2), 0.0) {}
    double* row(int c, int r) {  // padded row r in [0, h+2)
        return data.data() + (static_cast<size_t>(c) * (h + 2) + r) * (w + 2);
    }
    const double* row(int c, int r) const {
        return data.data() + (static_cast<size_t>(c) * (h + 2) + r) * (w + 2);
    }
    double* interior(int c, int r) { return row(c, r + 1) + 1; }  // unpadded row r
    const double* interior(int c, int r) const { return row(c, r + 1) + 1; }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

struct ConvDims {
    int in_ch, out_ch;
    bool bias;
    long w_off;  // into params
};

std::vector<ConvDims> conv_table(const DenoiserSpec& spec) {
    std::vector<ConvDims> t;
    int in_ch = 1;
    long off = 0;
    for (const auto& l : spec.layers) {
        if (l.kind != LayerSpec::Kind::Conv) continue;
        t.push_back({in_ch, l.out_channels, l.bias, off});
        off += static_cast<long>(l.out_channels) * in_ch * 9 + (l.bias ? l.out_channels : 0);
        in_ch = l.out_channels;
    }
    return t;
}

void conv_forward(const double* params, const ConvDims& cd, const Planes& in, Planes& out) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cd.out_ch; ++oc) {
        const double b =
            cd.bias ? params[cd.w_off + static_cast<long>(cd.out_ch) * cd.in_ch * 9 + oc] : 0.0;
        for (int r = 0; r < in.h; ++r) {
            double* orow = out.interior(oc, r);
            for (int c = 0; c < in.w; ++c) orow[c] = b;
        }
        for (int ic = 0; ic < cd.in_ch; ++ic) {
            const double* w = params + cd.w_off + (static_cast<long>(oc) * cd.in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy) {
                for (int r = 0; r < in.h; ++r) {
                    const double* irow = in.row(ic, r + dy);
                    double* orow = out.interior(oc, r);
                    for (int dx = 0; dx < 3; ++dx)
                        kern::axpy(static_cast<size_t>(in.w), w[dy * 3 + dx], irow + dx, orow);
                }
            }
        }
    }
}

// gout is the gradient at this layer's output; accumulates gin and gparams.
void conv_backward(const double* params, const ConvDims& cd, const Planes& in, const Planes& gout,
                   Planes& gin, double* gparams) {
    gin.zero();
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < cd.in_ch; ++ic) {
        for (int oc = 0; oc < cd.out_ch; ++oc) {
            const double* w = params + cd.w_off + (static_cast<long>(oc) * cd.in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy)
                for (int r = 0; r < in.h; ++r) {
                    const double* grow = gout.interior(oc, r);
                    double* girow = gin.row(ic, r + dy);
                    for (int dx = 0; dx < 3; ++dx)
                        kern::axpy(static_cast<size_t>(in.w), w[dy * 3 + dx], grow, girow + dx);
                }
        }
    }
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cd.out_ch; ++oc) {
        for (int ic = 0; ic < cd.in_ch; ++ic) {
            double* gw = gparams + cd.w_off + (static_cast<long>(oc) * cd.in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy)
                for (int dx = 0; dx < 3; ++dx) {
                    double acc = 0.0;
                    for (int r = 0; r < in.h; ++r)
                        acc += kern::dot(static_cast<size_t>(in.w), gout.interior(oc, r),
                                         in.row(ic, r + dy) + dx);
                    gw[dy * 3 + dx] += acc;
                }
        }
        if (cd.bias) {
            double acc = 0.0;
            for (int r = 0; r < in.h; ++r) {
                const double* grow = gout.interior(oc, r);
                double racc[4] = {0.0, 0.0, 0.0, 0.0};
                int body = in.w & ~3;
                for (int c = 0; c < body; c += 4) {
                    racc[0] += grow[c];
                    racc[1] += grow[c + 1];
                    racc[2] += grow[c + 2];
                    racc[3] += grow[c + 3];
                }
                double s = (racc[0] + racc[1]) + (racc[2] + racc[3]);
                for (int c = body; c < in.w; ++c) s += grow[c];
                acc += s;
            }
            gparams[cd.w_off + static_cast<long>(cd.out_ch) * cd.in_ch * 9 + oc] += acc;
        }
    }
}

// Forward through the stack in normalized units; returns per-layer outputs
// (keep = true) for backprop. acts[0] is the normalized input.
std::vector<Planes> forward_planes(const DenoiserWeights& w, const Image& x, bool keep) {
    const auto convs = conv_table(w.spec);
    const double width = w.spec.window_hi - w.spec.window_lo;
    std::vector<Planes> acts;
    Planes cur(1, x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        double* row = cur.interior(0, r);
        const double* src = x.data() + static_cast<size_t>(r) * x.cols;
        for (int c = 0; c < x.cols; ++c) row[c] = (src[c] - w.spec.window_lo) / width;
    }
    if (keep) acts.push_back(cur);
    size_t conv_i = 0;
    for (const auto& l : w.spec.layers) {
        if (l.kind == LayerSpec::Kind::Conv) {
            Planes next(convs[conv_i].out_ch, x.rows, x.cols);
            conv_forward(w.params.data(), convs[conv_i], cur, next);
            ++conv_i;
            cur = std::move(next);
        } else {
            Planes next = cur;
            for (int c = 0; c < cur.ch; ++c)
                for (int r = 0; r < cur.h; ++r)
                    kern::relu(static_cast<size_t>(cur.w), cur.interior(c, r), next.interior(c, r));
            cur = std::move(next);
        }
        if (keep) acts.push_back(cur);
    }
    if (!keep) acts.push_back(std::move(cur));
    return acts;
}

void check_weights(const DenoiserWeights& w) {
    w.spec.validate();
    if (static_cast<long>(w.params.size()) != w.spec.param_count())
        throw ModelError("denoiser: parameter count does not match spec");
}

}  // namespace

DenoiserWeights denoiser_init(const DenoiserSpec& spec, uint64_t seed) {
    spec.validate();
    DenoiserWeights w;
    w.spec = spec;
    w.params.assign(static_cast<size_t>(spec.param_count()), 0.0);
    std::mt19937_64 eng(splitmix64(seed));
    const auto table = conv_table(spec);
    for (size_t ci = 0; ci < table.size(); ++ci) {
        const auto& cd = table[ci];
        if (ci + 1 == table.size()) continue;  // final conv starts at zero: exact identity start
        const double bound = std::sqrt(6.0 / (static_cast<double>(cd.in_ch) * 9.0));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (long i = 0; i < static_cast<long>(cd.out_ch) * cd.in_ch * 9; ++i)
            w.params[static_cast<size_t>(cd.w_off + i)] = uni(eng);
        // biases start at zero
    }
    w.meta.seed = seed;
    return w;
}

Image denoiser_apply(const DenoiserWeights& w, const Image& x) {
    check_weights(w);
    auto acts = forward_planes(w, x, false);
    const Planes& out = acts.back();
    if (out.ch != 1) throw ModelError("denoiser: output is not single-channel");
    const double width = w.spec.window_hi - w.spec.window_lo;
    Image y(x.rows, x.cols, x.pixel_size_mm);
    for (int r = 0; r < x.rows; ++r) {
        const double* orow = out.interior(0, r);
        double* yrow = y.data() + static_cast<size_t>(r) * x.cols;
        if (w.spec.residual_skip) {
            const double* xrow = x.data() + static_cast<size_t>(r) * x.cols;
            for (int c = 0; c < x.cols; ++c) yrow[c] = xrow[c] + width * orow[c];
        } else {
            for (int c = 0; c < x.cols; ++c) yrow[c] = orow[c] * width + w.spec.window_lo;
        }
    }
    return y;
}

std::pair<double, std::vector<double>> denoiser_loss_and_gradient(const DenoiserWeights& w,
                                                                  const std::vector<Image>& inputs,
                                                                  const std::vector<Image>& targets) {
    check_weights(w);
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("loss_and_gradient: inputs/targets mismatch");
    const auto convs = conv_table(w.spec);
    const double width = w.spec.window_hi - w.spec.window_lo;
    const size_t np = w.params.size();

    const int n = static_cast<int>(inputs.size());
    std::vector<double> losses(static_cast<size_t>(n), 0.0);
    std::vector<std::vector<double>> grads(static_cast<size_t>(n));

#pragma omp parallel for schedule(static)
    for (int t = 0; t < n; ++t) {
        const Image& x = inputs[static_cast<size_t>(t)];
        const Image& tgt = targets[static_cast<size_t>(t)];
        if (!x.same_dims(tgt)) throw std::invalid_argument("loss_and_gradient: pair dims mismatch");
        auto acts = forward_planes(w, x, true);
        const Planes& out = acts.back();

        // residual: yn = xn + out; else yn = out. Target normalized.
        Planes gout(1, x.rows, x.cols);
        double loss = 0.0;
        for (int r = 0; r < x.rows; ++r) {
            const double* orow = out.interior(0, r);
            const double* xrow = acts.front().interior(0, r);
            const double* trow = tgt.data() + static_cast<size_t>(r) * x.cols;
            double* grow = gout.interior(0, r);
            for (int c = 0; c < x.cols; ++c) {
                const double tn = (trow[c] - w.spec.window_lo) / width;
                const double yn = (w.spec.residual_skip ? xrow[c] : 0.0) + orow[c];
                const double d = yn - tn;
                loss += d * d;
                grow[c] = 2.0 * d;
            }
        }
        losses[static_cast<size_t>(t)] = loss;

        auto& gp = grads[static_cast<size_t>(t)];
        gp.assign(np, 0.0);
        // Walk layers backward; acts[i] is the output of layer i-1.
        Planes g = std::move(gout);
        int conv_i = static_cast<int>(convs.size()) - 1;
        for (int li = static_cast<int>(w.spec.layers.size()) - 1; li >= 0; --li) {
            const Planes& in_act = acts[static_cast<size_t>(li)];
            if (w.spec.layers[static_cast<size_t>(li)].kind == LayerSpec::Kind::Conv) {
                Planes gin(convs[static_cast<size_t>(conv_i)].in_ch, g.h, g.w);
                conv_backward(w.params.data(), convs[static_cast<size_t>(conv_i)], in_act, g, gin,
                              gp.data());
                // Padded border gradients correspond to zero padding; clear them.
                for (int c = 0; c < gin.ch; ++c) {
                    std::memset(gin.row(c, 0), 0, sizeof(double) * static_cast<size_t>(gin.w + 2));
                    std::memset(gin.row(c, gin.h + 1), 0, sizeof(double) * static_cast<size_t>(gin.w + 2));
                    for (int r = 1; r <= gin.h; ++r) {
                        gin.row(c, r)[0] = 0.0;
                        gin.row(c, r)[gin.w + 1] = 0.0;
                    }
                }
                g = std::move(gin);
                --conv_i;
            } else {
                for (int c = 0; c < g.ch; ++c)
                    for (int r = 0; r < g.h; ++r)
                        kern::relu_mask(static_cast<size_t>(g.w), in_act.interior(c, r),
                                        g.interior(c, r));
            }
        }
    }

    double total = 0.0;
    for (double l : losses) total += l;
    std::vector<double> grad(np, 0.0);
    for (const auto& gp : grads) kern::add(np, gp.data(), grad.data());
    return {total, std::move(grad)};
}

DenoiserWeights denoiser_train(const DenoiserSpec& spec, const DenoiserWeights* init,
                               const std::vector<Image>& inputs, const std::vector<Image>& targets,
                               const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (inputs.empty() || inputs.size() != targets.size())
        throw std::invalid_argument("train: need nonempty paired data");
    DenoiserWeights w = init ? *init : denoiser_init(spec, cfg.seed);
    check_weights(w);

    const size_t np = w.params.size();
    std::vector<double> velocity(np, 0.0);
    std::vector<double> adam_m, adam_v;
    if (cfg.optimizer == Optimizer::Adam) {
        adam_m.assign(np, 0.0);
        adam_v.assign(np, 0.0);
    }
    long step = 0;
    std::vector<size_t> order(inputs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 eng(splitmix64(cfg.seed ^ 0x5eed5eedULL));

    const int batch = std::max(1, cfg.batch);
    w.meta.epochs = cfg.epochs;
    w.meta.learning_rate = cfg.learning_rate;
    w.meta.momentum = cfg.momentum;
    w.meta.batch = batch;
    w.meta.seed = cfg.seed;
    w.meta.loss_curve.clear();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), eng);
        double epoch_loss = 0.0;
        double epoch_px = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(batch));
            std::vector<Image> bi, bt;
            double px_count = 0.0;
            for (size_t i = start; i < stop; ++i) {
                bi.push_back(inputs[order[i]]);
                bt.push_back(targets[order[i]]);
                px_count += static_cast<double>(inputs[order[i]].size());
            }
            auto [loss, grad] = denoiser_loss_and_gradient(w, bi, bt);
            if (!std::isfinite(loss))
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += loss;
            epoch_px += px_count;
            const double scale = 1.0 / px_count;
            if (cfg.optimizer == Optimizer::Adam) {
                ++step;
                const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
                for (size_t i = 0; i < np; ++i) {
                    const double g = grad[i] * scale;
                    adam_m[i] = cfg.adam_beta1 * adam_m[i] + (1.0 - cfg.adam_beta1) * g;
                    adam_v[i] = cfg.adam_beta2 * adam_v[i] + (1.0 - cfg.adam_beta2) * g * g;
                    w.params[i] -= cfg.learning_rate * (adam_m[i] / bc1) /
                                   (std::sqrt(adam_v[i] / bc2) + cfg.adam_eps);
                }
            } else {
                for (size_t i = 0; i < np; ++i) {
                    velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * scale * grad[i];
                    w.params[i] += velocity[i];
                }
            }
        }
        w.meta.loss_curve.push_back(epoch_loss / epoch_px);
    }
    return w;
}

}  // namespace superct
