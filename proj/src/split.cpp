#include "dmk/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "dmk/prng.hpp"

namespace dmk {

SplitManifest stratified_split(const DatasetManifest& manifest, double val_fraction,
                               uint64_t seed) {
  if (manifest.entries.empty()) throw std::invalid_argument("stratified_split: empty manifest");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("stratified_split: val_fraction must be in (0,1)");

  std::map<std::string, std::vector<std::string>> by_disaster;
  for (const ManifestEntry& e : manifest.entries) by_disaster[e.disaster].push_back(e.scene_id);

  SplitManifest split;
  split.seed = seed;
  split.val_fraction = val_fraction;
  for (auto& [disaster, ids] : by_disaster) {
    if (ids.empty()) continue;
    std::sort(ids.begin(), ids.end());
    Prng rng(Prng::mix(seed, fnv1a64(disaster)));
    rng.shuffle(ids);
    const size_t val_n =
        static_cast<size_t>(std::floor(val_fraction * static_cast<double>(ids.size())));
    split.val.insert(split.val.end(), ids.begin(), ids.begin() + val_n);
    split.train.insert(split.train.end(), ids.begin() + val_n, ids.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

void write_split(const SplitManifest& split, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write_list = [&](const std::vector<std::string>& ids, const char* name) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error(std::string("cannot write ") + name);
    for (const std::string& id : ids) out << id << '\n';
  };
  write_list(split.train, "train.txt");
  write_list(split.val, "val.txt");
  nlohmann::json meta = {
      {"seed", split.seed},
      {"val_fraction", split.val_fraction},
      {"train_count", split.train.size()},
      {"val_count", split.val.size()},
  };
  std::ofstream out(out_dir / "split.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write split.json");
  out << meta.dump(2) << '\n';
}

std::vector<std::string> read_scene_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

}  // namespace dmk
