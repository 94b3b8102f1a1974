#pragma once

#include <string>
#include <vector>

#include "superct/dose.hpp"
#include "superct/geometry.hpp"
#include "superct/phantoms.hpp"
#include "superct/super.hpp"

namespace superct {

struct DatasetManifest {
    struct Entry {
        std::string id;
        std::string xstar, y, w, x0;  // paths relative to the manifest directory
    };
    std::string geometry_file = "geometry.json";
    DoseParams dose;
    uint64_t seed = 0;
    std::vector<Entry> train, val, test;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

// Generates seeded random phantoms, simulates low-dose sinograms, computes
// weights and FBP initializations, and writes everything under out_dir.
DatasetManifest build_dataset(int n_train, int n_val, int n_test, const FanBeamGeometry& geom,
                              const DoseParams& dose, uint64_t seed, const std::string& out_dir,
                              const RandomPhantomRanges& ranges = {});

// Import hook: every "<name>.json" sidecar in src_dir describes a raw float32
// reference image {raw, rows, cols, pixel_size_mm, role}; measurements are
// simulated exactly as in build_dataset.
DatasetManifest import_dataset(const std::string& src_dir, const FanBeamGeometry& geom,
                               const DoseParams& dose, uint64_t seed, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& dir);
void save_manifest(const std::string& dir, const DatasetManifest& m);

TrainingCase load_case(const std::string& dir, const DatasetManifest::Entry& e);
std::vector<TrainingCase> load_split(const std::string& dir,
                                     const std::vector<DatasetManifest::Entry>& split);

FanBeamGeometry load_geometry_file(const std::string& path);

}  // namespace superct
