#include "dmk/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "dmk/kernels.hpp"

namespace dmk {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k), counts_(static_cast<size_t>(k) * k, 0) {
  if (k < 2) throw std::invalid_argument("ConfusionMatrix: k must be >= 2");
}

void ConfusionMatrix::add(int gt, int pred, uint64_t n) {
  if (gt < 0 || gt >= k_ || pred < 0 || pred >= k_)
    throw std::invalid_argument("ConfusionMatrix: class out of range");
  counts_[static_cast<size_t>(gt) * k_ + pred] += n;
}

void ConfusionMatrix::accumulate(const Mask& pred, const Mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("accumulate: dimension mismatch");
  for (uint8_t v : pred.data)
    if (v >= k_) throw std::invalid_argument("accumulate: prediction class out of range");
  for (uint8_t v : gt.data)
    if (v >= k_) throw std::invalid_argument("accumulate: ground-truth class out of range");
  kernels::confusion_accumulate(gt.data.data(), pred.data.data(), gt.data.size(), k_,
                                counts_.data());
}

void ConfusionMatrix::accumulate(const Mask& pred, const Mask& gt, const BinaryMask& ignore) {
  if (pred.width != gt.width || pred.height != gt.height || ignore.width != gt.width ||
      ignore.height != gt.height)
    throw std::invalid_argument("accumulate: dimension mismatch");
  for (size_t i = 0; i < gt.data.size(); ++i) {
    if (ignore.data[i]) continue;
    const int g = gt.data[i], p = pred.data[i];
    if (g >= k_ || p >= k_) throw std::invalid_argument("accumulate: class out of range");
    counts_[static_cast<size_t>(g) * k_ + p] += 1;
  }
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw std::invalid_argument("merge: size mismatch");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

uint64_t ConfusionMatrix::row_sum(int gt) const {
  uint64_t s = 0;
  for (int p = 0; p < k_; ++p) s += at(gt, p);
  return s;
}

uint64_t ConfusionMatrix::col_sum(int pred) const {
  uint64_t s = 0;
  for (int g = 0; g < k_; ++g) s += at(g, pred);
  return s;
}

uint64_t ConfusionMatrix::total() const {
  uint64_t s = 0;
  for (uint64_t v : counts_) s += v;
  return s;
}

std::vector<double> per_class_iou(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.k());
  for (int c = 0; c < cm.k(); ++c) {
    const uint64_t tp = cm.at(c, c);
    const uint64_t denom = cm.row_sum(c) + cm.col_sum(c) - tp;  // TP+FP+FN
    out[c] = denom == 0 ? -1.0 : static_cast<double>(tp) / static_cast<double>(denom);
  }
  return out;
}

double miou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int present = 0;
  for (double v : per_class_iou(cm)) {
    if (v < 0.0) continue;
    sum += v;
    ++present;
  }
  if (present == 0) throw std::invalid_argument("miou: every class is empty");
  return sum / present;
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.k());
  for (int c = 0; c < cm.k(); ++c) {
    const uint64_t tp = cm.at(c, c);
    const uint64_t fn = cm.row_sum(c) - tp;
    const uint64_t fp = cm.col_sum(c) - tp;
    const uint64_t denom = 2 * tp + fp + fn;
    out[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return out;
}

double weighted_f1(const ConfusionMatrix& cm) {
  const std::vector<double> f1 = per_class_f1(cm);
  double weighted = 0.0;
  uint64_t support = 0;
  for (int c = 0; c < cm.k(); ++c) {
    const uint64_t s = cm.row_sum(c);
    weighted += static_cast<double>(s) * f1[c];
    support += s;
  }
  if (support == 0) throw std::invalid_argument("weighted_f1: no ground-truth mass");
  return weighted / static_cast<double>(support);
}

double combined_score(double seg_f1, double cls_f1) {
  if (seg_f1 < 0.0 || seg_f1 > 1.0 || cls_f1 < 0.0 || cls_f1 > 1.0)
    throw std::invalid_argument("combined_score: inputs must be in [0,1]");
  return 0.3 * seg_f1 + 0.7 * cls_f1;
}

BuildingScores building_level_scores(
    const Mask& pred, std::span<const std::pair<Polygon, DamageClass>> gt_buildings) {
  BuildingScores scores;
  for (const auto& [footprint, damage] : gt_buildings) {
    std::array<int64_t, 5> votes{};
    for_each_interior_pixel(footprint, pred.width, pred.height,
                            [&](int x, int y) { ++votes[pred.at(x, y)]; });
    int best = 0;  // 0 = no building pixel seen; background votes are ignored
    for (int c = 1; c <= 4; ++c)
      if (votes[c] > 0 && (best == 0 || votes[c] >= votes[best])) best = c;  // ties -> higher
    if (best == 0) {
      ++scores.missed;
      continue;
    }
    scores.matrix.add(static_cast<int>(damage), best - 1);
  }
  return scores;
}

ConfusionMatrix scene_confusion(const Mask& pred, const SceneLabel& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("scene_confusion: prediction size differs from label");
  std::vector<std::pair<Polygon, int>> labeled;
  BinaryMask ignore(gt.width, gt.height);
  bool any_ignored = false;
  for (const BuildingAnnotation& b : gt.buildings) {
    if (b.damage) {
      labeled.emplace_back(b.footprint, mask_class_from_damage(*b.damage));
    } else {
      for_each_interior_pixel(b.footprint, gt.width, gt.height,
                              [&](int x, int y) { ignore.at(x, y) = 1; });
      any_ignored = true;
    }
  }
  const Mask gt_mask = rasterize(labeled, gt.width, gt.height);
  ConfusionMatrix cm(5);
  if (any_ignored)
    cm.accumulate(pred, gt_mask, ignore);
  else
    cm.accumulate(pred, gt_mask);
  return cm;
}

ScoreReport report_from_confusion(const ConfusionMatrix& cm) {
  if (cm.k() != 5) throw std::invalid_argument("report_from_confusion: expected 5 classes");
  ScoreReport r;

  // Localization: binary building-vs-background with building positive.
  uint64_t tp = 0, fp = 0, fn = 0;
  for (int g = 1; g < 5; ++g)
    for (int p = 1; p < 5; ++p) tp += cm.at(g, p);
  for (int p = 1; p < 5; ++p) fp += cm.at(0, p);
  for (int g = 1; g < 5; ++g) fn += cm.at(g, 0);
  const uint64_t seg_denom = 2 * tp + fp + fn;
  r.seg_f1 = seg_denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(seg_denom);

  // Damage classification on ground-truth building pixels: per-class F1
  // over classes 1..4; a background prediction on a building pixel counts
  // against recall, background rows do not contribute false positives.
  double weighted = 0.0;
  uint64_t support = 0;
  for (int c = 1; c < 5; ++c) {
    const uint64_t ctp = cm.at(c, c);
    const uint64_t cfn = cm.row_sum(c) - ctp;
    uint64_t cfp = 0;
    for (int g = 1; g < 5; ++g)
      if (g != c) cfp += cm.at(g, c);
    const uint64_t denom = 2 * ctp + cfp + cfn;
    const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(ctp) / static_cast<double>(denom);
    r.per_class_f1[c - 1] = f1;
    weighted += static_cast<double>(cm.row_sum(c)) * f1;
    support += cm.row_sum(c);
  }
  r.cls_f1_weighted = support == 0 ? 0.0 : weighted / static_cast<double>(support);
  r.miou = miou(cm);
  r.combined = combined_score(r.seg_f1, r.cls_f1_weighted);
  return r;
}

ScoreReport score_dataset(std::span<const Mask> preds, std::span<const SceneLabel> gts) {
  if (preds.size() != gts.size())
    throw std::invalid_argument("score_dataset: prediction count differs from label count");
  if (preds.empty()) throw std::invalid_argument("score_dataset: empty input");
  ConfusionMatrix cm(5);
  for (size_t i = 0; i < preds.size(); ++i) cm.merge(scene_confusion(preds[i], gts[i]));
  return report_from_confusion(cm);
}

std::string score_report_json(const ScoreReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\n"
                "  \"seg_f1\": %.5f,\n"
                "  \"cls_f1_weighted\": %.5f,\n"
                "  \"per_class_f1\": [%.5f, %.5f, %.5f, %.5f],\n"
                "  \"miou\": %.5f,\n"
                "  \"combined\": %.5f\n"
                "}\n",
                r.seg_f1, r.cls_f1_weighted, r.per_class_f1[0], r.per_class_f1[1],
                r.per_class_f1[2], r.per_class_f1[3], r.miou, r.combined);
  return buf;
}

}  // namespace dmk
