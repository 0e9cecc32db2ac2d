#pragma once

#include <string>

#include "exemplar/train.hpp"

namespace exemplar::contrast {

// Checkpoint layout: <dir>/manifest.json naming shapes, config and RNG state,
// plus companion files of raw little-endian arrays (32-bit floats for
// parameters/buffers/keys, 32-bit ints for labels). Writing, reading and
// re-writing a checkpoint reproduces the files byte-for-byte.
void save_checkpoint(const std::string& dir, const TrainState& state);
TrainState load_checkpoint(const std::string& dir);

// Raw array helpers (exposed for tests).
void write_f32_file(const std::string& path, const nn::Vec& values);
nn::Vec read_f32_file(const std::string& path);
void write_i32_file(const std::string& path, const std::vector<int>& values);
std::vector<int> read_i32_file(const std::string& path);

}  // namespace exemplar::contrast
