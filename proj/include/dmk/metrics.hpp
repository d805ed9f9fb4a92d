#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmk/labels.hpp"
#include "dmk/raster.hpp"

namespace dmk {

// KxK pixel or building counts, rows = ground truth, cols = prediction.
// Merge is elementwise sum, so per-scene matrices can be accumulated in
// any order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k);

  int k() const { return k_; }
  uint64_t at(int gt, int pred) const { return counts_[static_cast<size_t>(gt) * k_ + pred]; }
  void add(int gt, int pred, uint64_t n = 1);

  // One count per pixel at (gt, pred); masks must match in size.
  void accumulate(const Mask& pred, const Mask& gt);
  // Same, skipping pixels flagged in ignore.
  void accumulate(const Mask& pred, const Mask& gt, const BinaryMask& ignore);

  ConfusionMatrix& merge(const ConfusionMatrix& other);

  uint64_t row_sum(int gt) const;
  uint64_t col_sum(int pred) const;
  uint64_t total() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_;
  std::vector<uint64_t> counts_;
};

// Per-class intersection-over-union; classes with no presence on either
// side report -1 (excluded from the mean).
std::vector<double> per_class_iou(const ConfusionMatrix& cm);
double miou(const ConfusionMatrix& cm);

// Per-class F1 = 2TP/(2TP+FP+FN), 0 when the denominator is 0.
std::vector<double> per_class_f1(const ConfusionMatrix& cm);
// Ground-truth-support-weighted average of per-class F1.
double weighted_f1(const ConfusionMatrix& cm);

// Challenge metric: 0.3 * segmentation F1 + 0.7 * classification F1.
double combined_score(double seg_f1, double cls_f1);

struct BuildingScores {
  ConfusionMatrix matrix{kNumDamageClasses};
  int64_t missed = 0;  // footprints with no predicted building pixel
};

// Per-building assignment: majority vote of predicted pixels inside each
// footprint, background ignored; all-background footprints are counted
// as missed and excluded from the matrix.
BuildingScores building_level_scores(
    const Mask& pred, std::span<const std::pair<Polygon, DamageClass>> gt_buildings);

struct ScoreReport {
  double seg_f1 = 0.0;
  double cls_f1_weighted = 0.0;
  std::array<double, kNumDamageClasses> per_class_f1{};
  double miou = 0.0;
  double combined = 0.0;
};

// Micro-accumulated scoring of aligned prediction/ground-truth pairs.
// Buildings without a damage label are masked out of the counts.
ScoreReport score_dataset(std::span<const Mask> preds, std::span<const SceneLabel> gts);

// Pixel-level 5-class confusion matrix for one scene (0 background,
// 1..4 damage); the ground-truth mask is rasterized from the label.
ConfusionMatrix scene_confusion(const Mask& pred, const SceneLabel& gt);

ScoreReport report_from_confusion(const ConfusionMatrix& cm);

// Report JSON with 5-decimal fixed formatting.
std::string score_report_json(const ScoreReport& report);

}  // namespace dmk
