#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "superct/denoiser.hpp"
#include "superct/image.hpp"
#include "superct/transforms.hpp"

namespace superct {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SPRG1 grid container: magic "SPRG1\n", 4-byte little-endian header length,
// UTF-8 JSON header {kind, rows, cols, ...}, row-major float32 LE payload.
struct GridFile {
    std::string header_json;  // parsed by callers that need extras
    std::string kind;
    int rows = 0, cols = 0;
    std::vector<float> values;
};

void write_grid(const std::string& path, const std::string& kind, int rows, int cols,
                const std::string& header_extra_json, const std::vector<float>& values);
GridFile read_grid(const std::string& path);

void save_image(const std::string& path, const Image& img);
Image load_image(const std::string& path);

void save_sinogram(const std::string& path, const Sinogram& s, double det_spacing_mm);
Sinogram load_sinogram(const std::string& path);

void save_stat_weights(const std::string& path, const StatWeights& w);
StatWeights load_stat_weights(const std::string& path);

void save_transform_bank(const std::string& path, const TransformBank& bank);
TransformBank load_transform_bank(const std::string& path);

void save_denoiser(const std::string& path, const DenoiserWeights& w);
DenoiserWeights load_denoiser(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

uint64_t file_hash(const std::string& path);  // FNV-1a over the raw bytes

}  // namespace superct
