#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmk/labels.hpp"

namespace dmk {

struct SplitManifest {
  std::vector<std::string> train;  // scene_ids, lexicographically sorted
  std::vector<std::string> val;
  uint64_t seed = 0;
  double val_fraction = 0.2;
};

// Per-disaster stratified split: for a disaster with N scenes,
// floor(val_fraction * N) go to validation, chosen by a seeded shuffle of
// that disaster's sorted scene_ids. Bit-stable across runs and platforms.
SplitManifest stratified_split(const DatasetManifest& manifest, double val_fraction,
                               uint64_t seed);

// train.txt / val.txt (one scene_id per line) plus split.json recording
// seed and fraction.
void write_split(const SplitManifest& split, const std::filesystem::path& out_dir);
std::vector<std::string> read_scene_list(const std::filesystem::path& path);

}  // namespace dmk
