#include "superct/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(__BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__, "SPRG1 writer assumes a little-endian host");

namespace superct {

using nlohmann::json;

namespace {

constexpr char kMagic[6] = {'S', 'P', 'R', 'G', '1', '\n'};

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

std::vector<double> to_f64(const std::vector<float>& v) {
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
    return out;
}

}  // namespace

void write_grid(const std::string& path, const std::string& kind, int rows, int cols,
                const std::string& header_extra_json, const std::vector<float>& values) {
    if (values.size() != static_cast<size_t>(rows) * cols)
        throw IoError("write_grid: payload size mismatch for " + path);
    json j = header_extra_json.empty() ? json::object() : json::parse(header_extra_json);
    j["kind"] = kind;
    j["rows"] = rows;
    j["cols"] = cols;
    const std::string header = j.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(kMagic, sizeof kMagic);
    const uint32_t hlen = static_cast<uint32_t>(header.size());
    f.write(reinterpret_cast<const char*>(&hlen), 4);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!f) throw IoError("write failed: " + path);
}

GridFile read_grid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char magic[6];
    f.read(magic, 6);
    if (!f || std::memcmp(magic, kMagic, 6) != 0) throw IoError("bad magic in " + path);
    uint32_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 4);
    if (!f || hlen > (1u << 24)) throw IoError("bad header length in " + path);
    std::string header(hlen, '\0');
    f.read(header.data(), hlen);
    if (!f) throw IoError("truncated header in " + path);
    GridFile g;
    g.header_json = header;
    json j = json::parse(header);
    g.kind = j.at("kind").get<std::string>();
    g.rows = j.at("rows").get<int>();
    g.cols = j.at("cols").get<int>();
    if (g.rows <= 0 || g.cols <= 0) throw IoError("bad dims in " + path);
    g.values.resize(static_cast<size_t>(g.rows) * g.cols);
    f.read(reinterpret_cast<char*>(g.values.data()),
           static_cast<std::streamsize>(g.values.size() * sizeof(float)));
    if (!f) throw IoError("truncated payload in " + path);
    return g;
}

void save_image(const std::string& path, const Image& img) {
    json extra;
    extra["pixel_size_mm"] = img.pixel_size_mm;
    extra["units"] = "HU_mod";
    write_grid(path, "image", img.rows, img.cols, extra.dump(), to_f32(img.px));
}

Image load_image(const std::string& path) {
    GridFile g = read_grid(path);
    if (g.kind != "image") throw IoError("not an image container: " + path);
    json j = json::parse(g.header_json);
    Image img(g.rows, g.cols, j.value("pixel_size_mm", 1.0));
    img.px = to_f64(g.values);
    return img;
}

void save_sinogram(const std::string& path, const Sinogram& s, double det_spacing_mm) {
    json extra;
    extra["det_spacing_mm"] = det_spacing_mm;
    extra["units"] = "line_integral";
    extra["geometry_id"] = s.geometry_id;
    write_grid(path, "sinogram", s.n_views, s.n_dets, extra.dump(), to_f32(s.v));
}

Sinogram load_sinogram(const std::string& path) {
    GridFile g = read_grid(path);
    if (g.kind != "sinogram") throw IoError("not a sinogram container: " + path);
    json j = json::parse(g.header_json);
    Sinogram s(g.rows, g.cols, j.value("geometry_id", std::string{}));
    s.v = to_f64(g.values);
    return s;
}

void save_stat_weights(const std::string& path, const StatWeights& w) {
    write_grid(path, "weights", w.n_views, w.n_dets, "", to_f32(w.v));
}

StatWeights load_stat_weights(const std::string& path) {
    GridFile g = read_grid(path);
    if (g.kind != "weights") throw IoError("not a weights container: " + path);
    StatWeights w(g.rows, g.cols);
    w.v = to_f64(g.values);
    return w;
}

void save_transform_bank(const std::string& path, const TransformBank& bank) {
    json extra;
    extra["K"] = bank.K;
    extra["m"] = bank.m;
    extra["lambda0"] = bank.lambda0;
    extra["eta"] = bank.eta;
    extra["patch_side"] = bank.patch.side;
    extra["stride"] = bank.patch.stride;
    extra["seed"] = bank.training_seed;
    std::vector<float> payload;
    payload.reserve(static_cast<size_t>(bank.K) * bank.m * bank.m);
    for (const auto& o : bank.omegas)
        for (double v : o) payload.push_back(static_cast<float>(v));
    write_grid(path, "transform_bank", bank.K, bank.m * bank.m, extra.dump(), payload);
}

TransformBank load_transform_bank(const std::string& path) {
    GridFile g = read_grid(path);
    if (g.kind != "transform_bank") throw IoError("not a transform bank: " + path);
    json j = json::parse(g.header_json);
    TransformBank bank;
    bank.K = j.at("K").get<int>();
    bank.m = j.at("m").get<int>();
    bank.lambda0 = j.value("lambda0", 31.0);
    bank.eta = j.value("eta", 20.0);
    bank.patch.side = j.at("patch_side").get<int>();
    bank.patch.stride = j.value("stride", 1);
    bank.training_seed = j.value("seed", uint64_t(0));
    if (g.rows != bank.K || g.cols != bank.m * bank.m) throw IoError("bank payload mismatch: " + path);
    bank.omegas.resize(static_cast<size_t>(bank.K));
    for (int k = 0; k < bank.K; ++k) {
        auto& o = bank.omegas[static_cast<size_t>(k)];
        o.resize(static_cast<size_t>(bank.m) * bank.m);
        for (size_t i = 0; i < o.size(); ++i)
            o[i] = static_cast<double>(g.values[static_cast<size_t>(k) * o.size() + i]);
    }
    bank.validate();
    return bank;
}

void save_denoiser(const std::string& path, const DenoiserWeights& w) {
    json extra;
    extra["spec"] = json::parse(w.spec.to_json());
    extra["epochs"] = w.meta.epochs;
    extra["learning_rate"] = w.meta.learning_rate;
    extra["momentum"] = w.meta.momentum;
    extra["batch"] = w.meta.batch;
    extra["seed"] = w.meta.seed;
    extra["loss_curve"] = w.meta.loss_curve;
    write_grid(path, "denoiser", 1, static_cast<int>(w.params.size()), extra.dump(), to_f32(w.params));
}

DenoiserWeights load_denoiser(const std::string& path) {
    GridFile g = read_grid(path);
    if (g.kind != "denoiser") throw IoError("not a denoiser container: " + path);
    json j = json::parse(g.header_json);
    DenoiserWeights w;
    w.spec = DenoiserSpec::from_json(j.at("spec").dump());
    w.params = to_f64(g.values);
    if (static_cast<long>(w.params.size()) != w.spec.param_count())
        throw IoError("denoiser payload mismatch: " + path);
    w.meta.epochs = j.value("epochs", 0);
    w.meta.learning_rate = j.value("learning_rate", 0.0);
    w.meta.momentum = j.value("momentum", 0.0);
    w.meta.batch = j.value("batch", 0);
    w.meta.seed = j.value("seed", uint64_t(0));
    w.meta.loss_curve = j.value("loss_curve", std::vector<double>{});
    return w;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path);
}

uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace superct
