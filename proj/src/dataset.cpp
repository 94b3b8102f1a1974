#include "superct/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "superct/fbp.hpp"
#include "superct/io.hpp"
#include "superct/operators.hpp"
#include "superct/rng.hpp"

namespace superct {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json entry_to_json(const DatasetManifest::Entry& e) {
    return {{"id", e.id}, {"xstar", e.xstar}, {"y", e.y}, {"w", e.w}, {"x0", e.x0}};
}

DatasetManifest::Entry entry_from_json(const json& j) {
    return {j.at("id").get<std::string>(), j.at("xstar").get<std::string>(),
            j.at("y").get<std::string>(), j.at("w").get<std::string>(),
            j.at("x0").get<std::string>()};
}

}  // namespace

std::string DatasetManifest::to_json() const {
    json j;
    j["geometry_file"] = geometry_file;
    j["dose"] = json::parse(dose.to_json());
    j["seed"] = seed;
    for (const auto* split : {&train, &val, &test}) {
        json arr = json::array();
        for (const auto& e : *split) arr.push_back(entry_to_json(e));
        j[split == &train ? "train" : split == &val ? "val" : "test"] = arr;
    }
    return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetManifest m;
    m.geometry_file = j.value("geometry_file", "geometry.json");
    m.dose = DoseParams::from_json(j.at("dose").dump());
    m.seed = j.value("seed", uint64_t(0));
    for (const auto& e : j.value("train", json::array())) m.train.push_back(entry_from_json(e));
    for (const auto& e : j.value("val", json::array())) m.val.push_back(entry_from_json(e));
    for (const auto& e : j.value("test", json::array())) m.test.push_back(entry_from_json(e));
    return m;
}

namespace {

DatasetManifest::Entry write_case(const std::string& out_dir, const std::string& id,
                                  const Image& xstar, const FanBeamGeometry& geom,
                                  const DoseParams& dose, uint64_t case_seed) {
    DoseParams p = dose;
    p.seed = case_seed;
    Sinogram y = simulate_low_dose(xstar, geom, p);
    StatWeights w = compute_weights(y, p);
    Image x0 = fbp(y, geom, FilterKind::Hann);
    for (auto& v : x0.px) v /= kHuToMu;  // back to modified HU

    DatasetManifest::Entry e;
    e.id = id;
    e.xstar = id + "_xstar.sprg";
    e.y = id + "_y.sprg";
    e.w = id + "_w.sprg";
    e.x0 = id + "_x0.sprg";
    save_image(out_dir + "/" + e.xstar, xstar);
    save_sinogram(out_dir + "/" + e.y, y, geom.det_spacing_mm);
    save_stat_weights(out_dir + "/" + e.w, w);
    save_image(out_dir + "/" + e.x0, x0);
    return e;
}

}  // namespace

DatasetManifest build_dataset(int n_train, int n_val, int n_test, const FanBeamGeometry& geom,
                              const DoseParams& dose, uint64_t seed, const std::string& out_dir,
                              const RandomPhantomRanges& ranges) {
    if (n_train < 1 || n_test < 1 || n_val < 0)
        throw std::invalid_argument("build_dataset: counts must be >= 1 (val may be 0)");
    geom.validate();
    dose.validate();
    fs::create_directories(out_dir);

    DatasetManifest m;
    m.dose = dose;
    m.seed = seed;
    write_text_file(out_dir + "/" + m.geometry_file, geom.to_json());

    struct Split {
        const char* name;
        int count;
        std::vector<DatasetManifest::Entry>* out;
        uint64_t salt;
    };
    std::vector<DatasetManifest::Entry> train, val, test;
    const Split splits[] = {{"train", n_train, &train, 0x11},
                            {"val", n_val, &val, 0x22},
                            {"test", n_test, &test, 0x33}};
    for (const auto& sp : splits) {
        sp.out->resize(static_cast<size_t>(sp.count));
#pragma omp parallel for schedule(dynamic, 1)
        for (int i = 0; i < sp.count; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s_%03d", sp.name, i);
            const uint64_t phantom_seed = derive_seed(seed, sp.salt, static_cast<uint64_t>(i));
            Image xstar = random_phantom(geom.image_rows, geom.pixel_size_mm, ranges, phantom_seed);
            const uint64_t noise_seed = derive_seed(seed, sp.salt ^ 0xFF, static_cast<uint64_t>(i));
            (*sp.out)[static_cast<size_t>(i)] = write_case(out_dir, id, xstar, geom, m.dose, noise_seed);
        }
    }
    m.train = std::move(train);
    m.val = std::move(val);
    m.test = std::move(test);
    save_manifest(out_dir, m);
    return m;
}

DatasetManifest import_dataset(const std::string& src_dir, const FanBeamGeometry& geom,
                               const DoseParams& dose, uint64_t seed, const std::string& out_dir) {
    geom.validate();
    fs::create_directories(out_dir);
    DatasetManifest m;
    m.dose = dose;
    m.seed = seed;
    write_text_file(out_dir + "/" + m.geometry_file, geom.to_json());

    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::directory_iterator(src_dir))
        if (entry.path().extension() == ".json") sidecars.push_back(entry.path());
    std::sort(sidecars.begin(), sidecars.end());
    if (sidecars.empty()) throw IoError("import_dataset: no JSON sidecars in " + src_dir);

    uint64_t idx = 0;
    for (const auto& sc : sidecars) {
        json j = json::parse(read_text_file(sc.string()));
        const int rows = j.at("rows").get<int>();
        const int cols = j.at("cols").get<int>();
        if (rows != geom.image_rows || cols != geom.image_cols)
            throw IoError("import_dataset: image dims in " + sc.string() + " do not match geometry");
        const std::string raw = (sc.parent_path() / j.at("raw").get<std::string>()).string();
        std::ifstream f(raw, std::ios::binary);
        if (!f) throw IoError("import_dataset: cannot open raw file " + raw);
        std::vector<float> buf(static_cast<size_t>(rows) * cols);
        f.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!f) throw IoError("import_dataset: truncated raw file " + raw);
        Image xstar(rows, cols, j.value("pixel_size_mm", geom.pixel_size_mm));
        for (size_t i = 0; i < buf.size(); ++i) xstar.px[i] = static_cast<double>(buf[i]);

        const std::string role = j.value("role", "train");
        const std::string id = sc.stem().string();
        auto entry = write_case(out_dir, id, xstar, geom, dose, derive_seed(seed, 0x77, idx++));
        if (role == "test")
            m.test.push_back(entry);
        else if (role == "val")
            m.val.push_back(entry);
        else
            m.train.push_back(entry);
    }
    save_manifest(out_dir, m);
    return m;
}

DatasetManifest load_manifest(const std::string& dir) {
    DatasetManifest m = DatasetManifest::from_json(read_text_file(dir + "/manifest.json"));
    // Integrity: ids unique across splits, files present.
    std::vector<std::string> ids;
    for (const auto* split : {&m.train, &m.val, &m.test})
        for (const auto& e : *split) {
            ids.push_back(e.id);
            for (const std::string* p : {&e.xstar, &e.y, &e.w, &e.x0})
                if (!fs::exists(dir + "/" + *p)) throw IoError("manifest references missing file: " + *p);
        }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw IoError("manifest has duplicate case ids across splits");
    return m;
}

void save_manifest(const std::string& dir, const DatasetManifest& m) {
    write_text_file(dir + "/manifest.json", m.to_json());
}

TrainingCase load_case(const std::string& dir, const DatasetManifest::Entry& e) {
    TrainingCase c;
    c.id = e.id;
    c.x_star = load_image(dir + "/" + e.xstar);
    c.y = load_sinogram(dir + "/" + e.y);
    c.W = load_stat_weights(dir + "/" + e.w);
    c.x0 = load_image(dir + "/" + e.x0);
    return c;
}

std::vector<TrainingCase> load_split(const std::string& dir,
                                     const std::vector<DatasetManifest::Entry>& split) {
    std::vector<TrainingCase> out;
    out.reserve(split.size());
    for (const auto& e : split) out.push_back(load_case(dir, e));
    return out;
}

FanBeamGeometry load_geometry_file(const std::string& path) {
    return FanBeamGeometry::from_json(read_text_file(path));
}

}  // namespace superct
