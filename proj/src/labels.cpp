#include "dmk/labels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dmk {

using nlohmann::json;

std::string_view damage_name(DamageClass c) {
  switch (c) {
    case DamageClass::no_damage: return "no-damage";
    case DamageClass::minor_damage: return "minor-damage";
    case DamageClass::major_damage: return "major-damage";
    case DamageClass::destroyed: return "destroyed";
  }
  throw std::invalid_argument("damage_name: bad ordinal");
}

std::optional<DamageClass> damage_from_name(std::string_view name) {
  if (name == "no-damage") return DamageClass::no_damage;
  if (name == "minor-damage") return DamageClass::minor_damage;
  if (name == "major-damage") return DamageClass::major_damage;
  if (name == "destroyed") return DamageClass::destroyed;
  return std::nullopt;
}

int mask_class_from_damage(DamageClass c) { return static_cast<int>(c) + 1; }

DamageClass damage_from_mask_class(int mask_class) {
  if (mask_class < 1 || mask_class > 4)
    throw std::invalid_argument("damage_from_mask_class: class must be in 1..4");
  return static_cast<DamageClass>(mask_class - 1);
}

std::filesystem::path DatasetManifest::resolve(const std::string& rel) const {
  std::filesystem::path p(rel);
  return p.is_absolute() ? p : base_dir / p;
}

// ---------------------------------------------------------------------------
// WKT

namespace {

void skip_ws(const char*& p) {
  while (*p == ' ' || *p == '\t' || *p == '\r' || *p == '\n') ++p;
}

bool consume(const char*& p, char c) {
  skip_ws(p);
  if (*p != c) return false;
  ++p;
  return true;
}

double parse_number(const char*& p) {
  skip_ws(p);
  char* end = nullptr;
  double v = std::strtod(p, &end);
  if (end == p) throw std::runtime_error("wkt: expected a number");
  p = end;
  return v;
}

Ring parse_ring(const char*& p) {
  if (!consume(p, '(')) throw std::runtime_error("wkt: expected '(' opening a ring");
  Ring ring;
  while (true) {
    Point v;
    v.x = parse_number(p);
    v.y = parse_number(p);
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw std::runtime_error("wkt: non-finite coordinate");
    ring.push_back(v);
    skip_ws(p);
    if (*p == ',') {
      ++p;
      continue;
    }
    if (*p == ')') {
      ++p;
      break;
    }
    throw std::runtime_error("wkt: expected ',' or ')' inside a ring");
  }
  // Drop the conventional repeated closing vertex.
  while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  std::set<std::pair<double, double>> distinct;
  for (const Point& v : ring) distinct.insert({v.x, v.y});
  if (distinct.size() < 3) throw std::runtime_error("wkt: ring has fewer than 3 distinct vertices");
  return ring;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

Polygon parse_wkt_polygon(const std::string& text) {
  const char* p = text.c_str();
  skip_ws(p);
  static constexpr std::string_view kw = "POLYGON";
  for (char c : kw) {
    if (std::toupper(static_cast<unsigned char>(*p)) != c)
      throw std::runtime_error("wkt: expected POLYGON keyword");
    ++p;
  }
  if (!consume(p, '(')) throw std::runtime_error("wkt: expected '(' after POLYGON");
  Polygon poly;
  poly.exterior = parse_ring(p);
  skip_ws(p);
  while (*p == ',') {
    ++p;
    poly.holes.push_back(parse_ring(p));
    skip_ws(p);
  }
  if (!consume(p, ')')) throw std::runtime_error("wkt: expected closing ')'");
  skip_ws(p);
  if (*p != '\0') throw std::runtime_error("wkt: trailing characters after polygon");
  return poly;
}

std::string to_wkt(const Polygon& poly) {
  std::string out = "POLYGON (";
  auto write_ring = [&out](const Ring& ring) {
    out += '(';
    for (size_t i = 0; i < ring.size(); ++i) {
      if (i) out += ", ";
      append_number(out, ring[i].x);
      out += ' ';
      append_number(out, ring[i].y);
    }
    // Close the ring the way WKT writers conventionally do.
    out += ", ";
    append_number(out, ring[0].x);
    out += ' ';
    append_number(out, ring[0].y);
    out += ')';
  };
  write_ring(poly.exterior);
  for (const Ring& hole : poly.holes) {
    out += ", ";
    write_ring(hole);
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------
// Scene labels

namespace {

void clamp_polygon(Polygon& poly, int width, int height, const std::string& uid,
                   ParseWarnings* warnings) {
  bool clamped = false;
  auto clamp_ring = [&](Ring& ring) {
    for (Point& v : ring) {
      double cx = std::clamp(v.x, 0.0, static_cast<double>(width));
      double cy = std::clamp(v.y, 0.0, static_cast<double>(height));
      if (cx != v.x || cy != v.y) clamped = true;
      v.x = cx;
      v.y = cy;
    }
  };
  clamp_ring(poly.exterior);
  for (Ring& hole : poly.holes) clamp_ring(hole);
  if (clamped && warnings)
    warnings->messages.push_back("building " + uid + ": vertices clamped to image bounds");
}

}  // namespace

SceneLabel parse_scene_label(const std::string& text, ParseWarnings* warnings) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("label: malformed JSON: ") + e.what());
  }
  if (!root.contains("metadata")) throw std::runtime_error("label: missing metadata");
  const json& meta = root["metadata"];
  SceneLabel label;
  try {
    label.disaster_name = meta.at("disaster").get<std::string>();
    label.width = meta.at("width").get<int>();
    label.height = meta.at("height").get<int>();
    label.scene_id = meta.at("id").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("label: incomplete metadata: ") + e.what());
  }
  if (label.width <= 0 || label.height <= 0)
    throw std::runtime_error("label: width and height must be positive");

  if (!root.contains("features") || !root["features"].contains("xy"))
    throw std::runtime_error("label: missing features.xy");

  std::set<std::string> seen_uids;
  for (const json& feat : root["features"]["xy"]) {
    if (!feat.contains("wkt") || !feat.contains("properties"))
      throw std::runtime_error("label: feature missing wkt or properties");
    const json& props = feat["properties"];
    const std::string ftype = props.value("feature_type", "building");
    if (ftype != "building") {
      if (warnings)
        warnings->messages.push_back("skipping feature of type '" + ftype + "'");
      continue;
    }
    BuildingAnnotation b;
    if (!props.contains("uid")) throw std::runtime_error("label: building without uid");
    b.uid = props["uid"].get<std::string>();
    if (!seen_uids.insert(b.uid).second)
      throw std::runtime_error("label: duplicate building uid " + b.uid);
    b.footprint = parse_wkt_polygon(feat["wkt"].get<std::string>());
    clamp_polygon(b.footprint, label.width, label.height, b.uid, warnings);
    if (props.contains("subtype")) {
      const std::string subtype = props["subtype"].get<std::string>();
      if (subtype == "un-classified") {
        b.unclassified = true;
        if (warnings)
          warnings->messages.push_back("building " + b.uid + " is un-classified");
      } else {
        auto dmg = damage_from_name(subtype);
        if (!dmg) throw std::runtime_error("label: unknown damage subtype '" + subtype + "'");
        b.damage = *dmg;
      }
    }
    label.buildings.push_back(std::move(b));
  }
  return label;
}

std::string serialize_scene_label(const SceneLabel& label) {
  json features = json::array();
  for (const BuildingAnnotation& b : label.buildings) {
    json props = {{"feature_type", "building"}, {"uid", b.uid}};
    if (b.unclassified)
      props["subtype"] = "un-classified";
    else if (b.damage)
      props["subtype"] = std::string(damage_name(*b.damage));
    features.push_back({{"wkt", to_wkt(b.footprint)}, {"properties", props}});
  }
  json root = {
      {"metadata",
       {{"disaster", label.disaster_name},
        {"width", label.width},
        {"height", label.height},
        {"id", label.scene_id}}},
      {"features", {{"xy", features}}},
  };
  return root.dump(2);
}

SceneLabel load_scene_label(const std::filesystem::path& path, ParseWarnings* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open label file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scene_label(ss.str(), warnings);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_scene_label(const SceneLabel& label, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write label file " + path.string());
  out << serialize_scene_label(label) << '\n';
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("manifest is empty: " + path.string());
  if (split_csv_line(line) !=
      std::vector<std::string>{"scene_id", "disaster", "pre_image", "post_image", "label"})
    throw std::runtime_error("manifest: unexpected header in " + path.string());
  std::set<std::string> seen;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 5)
      throw std::runtime_error("manifest: line " + std::to_string(lineno) + " has " +
                               std::to_string(f.size()) + " fields, expected 5");
    if (!seen.insert(f[0]).second)
      throw std::runtime_error("manifest: duplicate scene_id " + f[0]);
    m.entries.push_back({f[0], f[1], f[2], f[3], f[4]});
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << "scene_id,disaster,pre_image,post_image,label\n";
  for (const ManifestEntry& e : manifest.entries)
    out << e.scene_id << ',' << e.disaster << ',' << e.pre_image << ',' << e.post_image << ','
        << e.label << '\n';
}

// ---------------------------------------------------------------------------
// Statistics

DistributionReport dataset_stats(const DatasetManifest& manifest) {
  DistributionReport r;
  for (const ManifestEntry& e : manifest.entries) {
    SceneLabel label;
    try {
      label = load_scene_label(manifest.resolve(e.label));
    } catch (const std::exception& ex) {
      r.errors.push_back(e.scene_id + ": " + ex.what());
      continue;
    }
    DisasterStats& d = r.per_disaster[label.disaster_name];
    ++d.images;
    ++r.images;
    int64_t n = static_cast<int64_t>(label.buildings.size());
    d.buildings += n;
    r.buildings += n;
    ++r.buildings_per_image[n];
    for (const BuildingAnnotation& b : label.buildings) {
      if (b.damage) {
        ++d.class_counts[static_cast<int>(*b.damage)];
        ++r.class_counts[static_cast<int>(*b.damage)];
      } else {
        ++d.unlabeled;
        ++r.unlabeled;
      }
    }
  }
  return r;
}

std::string distribution_report_json(const DistributionReport& r) {
  json per_disaster = json::object();
  for (const auto& [name, d] : r.per_disaster) {
    per_disaster[name] = {
        {"images", d.images},
        {"buildings", d.buildings},
        {"class_counts", d.class_counts},
        {"unlabeled", d.unlabeled},
    };
  }
  json hist = json::object();
  for (const auto& [count, images] : r.buildings_per_image)
    hist[std::to_string(count)] = images;
  json root = {
      {"images", r.images},
      {"buildings", r.buildings},
      {"class_counts", r.class_counts},
      {"unlabeled", r.unlabeled},
      {"per_disaster", per_disaster},
      {"buildings_per_image", hist},
      {"errors", r.errors},
  };
  return root.dump(2);
}

}  // namespace dmk
