#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmk/geometry.hpp"

namespace dmk {

// Four-level joint damage scale, ordinal 0..3.
enum class DamageClass : int {
  no_damage = 0,
  minor_damage = 1,
  major_damage = 2,
  destroyed = 3,
};

constexpr int kNumDamageClasses = 4;

std::string_view damage_name(DamageClass c);
std::optional<DamageClass> damage_from_name(std::string_view name);

// Dense masks use 0 = background and 1..4 = damage levels. These two are
// the only place the ordinal<->mask-class shift lives.
int mask_class_from_damage(DamageClass c);
DamageClass damage_from_mask_class(int mask_class);

struct BuildingAnnotation {
  std::string uid;
  Polygon footprint;
  // Absent for pre-disaster-only labels and for "un-classified" buildings.
  std::optional<DamageClass> damage;
  // Subtype was literally "un-classified"; carried through but excluded
  // from every metric denominator.
  bool unclassified = false;

  bool operator==(const BuildingAnnotation&) const = default;
};

struct SceneLabel {
  std::string scene_id;
  std::string disaster_name;
  int width = 0;
  int height = 0;
  std::vector<BuildingAnnotation> buildings;

  bool operator==(const SceneLabel&) const = default;
};

struct ManifestEntry {
  std::string scene_id;
  std::string disaster;
  std::string pre_image;
  std::string post_image;
  std::string label;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  // Directory the relative paths in entries resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& rel) const;
};

struct ParseWarnings {
  std::vector<std::string> messages;
};

// WKT POLYGON text -> polygon. Trailing duplicate closing vertices are
// dropped; every ring needs >=3 distinct finite vertices.
Polygon parse_wkt_polygon(const std::string& text);
std::string to_wkt(const Polygon& poly);

// xBD-style label JSON. Out-of-bounds vertices are clamped to
// [0,width]x[0,height] with a warning rather than rejected.
SceneLabel parse_scene_label(const std::string& text, ParseWarnings* warnings = nullptr);
std::string serialize_scene_label(const SceneLabel& label);

SceneLabel load_scene_label(const std::filesystem::path& path, ParseWarnings* warnings = nullptr);
void save_scene_label(const SceneLabel& label, const std::filesystem::path& path);

// Manifest CSV with header scene_id,disaster,pre_image,post_image,label.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct DisasterStats {
  int64_t images = 0;
  int64_t buildings = 0;
  std::array<int64_t, kNumDamageClasses> class_counts{};
  int64_t unlabeled = 0;  // damage absent (pre-only or un-classified)
};

struct DistributionReport {
  int64_t images = 0;
  int64_t buildings = 0;
  std::array<int64_t, kNumDamageClasses> class_counts{};
  int64_t unlabeled = 0;
  std::map<std::string, DisasterStats> per_disaster;
  std::map<int64_t, int64_t> buildings_per_image;  // histogram
  std::vector<std::string> errors;                 // per-entry failures, non-fatal
};

DistributionReport dataset_stats(const DatasetManifest& manifest);
std::string distribution_report_json(const DistributionReport& report);

}  // namespace dmk
