#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmk/autodiff.hpp"
#include "dmk/imaging.hpp"
#include "dmk/labels.hpp"
#include "dmk/raster.hpp"

namespace dmk {

struct ConvBlockSpec {
  int filters;
  int kernel;
  int stride;
  bool operator==(const ConvBlockSpec&) const = default;
};

// Toy feature extractor: each block is conv (zero-padded kernel/2) +
// relu + 2x2 maxpool.
struct TowerConfig {
  int input_side = 64;
  int in_channels = 3;
  std::vector<ConvBlockSpec> blocks{{8, 3, 1}, {16, 3, 1}};

  int feature_side() const;
  int feature_channels() const;
  int feature_dim() const;
  bool operator==(const TowerConfig&) const = default;
};

enum class BranchKind { none, disaster_one_hot, ssim_scalar };

std::string_view branch_name(BranchKind k);
BranchKind branch_from_name(std::string_view name);

struct ExtraBranch {
  BranchKind kind = BranchKind::none;
  int num_disasters = 0;  // one-hot length when kind == disaster_one_hot
  int dim() const;
};

// Twin-tower damage classifier: tower(pre) ++ tower(post) ++ optional
// extra features -> two fully connected layers -> 4 logits.
struct ClassifierModel {
  TowerConfig tower;
  ExtraBranch branch;
  bool shared_towers = true;
  int hidden_dim = 128;

  std::vector<ad::Tensor> pre_tower;   // conv kernels per block
  std::vector<ad::Tensor> post_tower;  // empty when towers are shared
  ad::Tensor fc1_w, fc1_b, fc2_w, fc2_b;

  static ClassifierModel init(const TowerConfig& tower, const ExtraBranch& branch,
                              bool shared_towers, int hidden_dim, uint64_t seed);

  // pre/post: N x C x side x side normalized patches; extra: N x branch
  // dim (undefined tensor when the branch is none). Returns N x 4 logits.
  ad::Tensor forward(ad::Graph& g, const ad::Tensor& pre, const ad::Tensor& post,
                     const ad::Tensor& extra) const;
  std::vector<ad::Tensor> parameters() const;
};

// Single patch pair -> 4 logits. Patches must be normalized and sized
// tower.input_side; extra must match the branch dimension.
std::array<double, 4> classify_building(const ClassifierModel& model, const ImageBuffer& pre_patch,
                                        const ImageBuffer& post_patch,
                                        const std::vector<double>& extra = {});

// Scene-level disaster-name classifier over channel-concatenated pre and
// post images.
struct DisasterModel {
  TowerConfig tower;  // in_channels = 6
  int hidden_dim = 64;
  int num_disasters = 0;

  std::vector<ad::Tensor> stack;
  ad::Tensor fc1_w, fc1_b, fc2_w, fc2_b;

  static DisasterModel init(int input_side, int num_disasters, uint64_t seed);
  ad::Tensor forward(ad::Graph& g, const ad::Tensor& x) const;
  std::vector<ad::Tensor> parameters() const;
};

// Images are resized to the model's input side and normalized internally.
std::vector<double> classify_disaster(const DisasterModel& model, const ImageBuffer& pre,
                                      const ImageBuffer& post);

// Encoder-decoder per-pixel classifier. With in(3)/classes(2) on
// pre-disaster images it is the two-step localizer; with classes(5) on
// normalized difference images it is the single-shot damage mapper.
struct SegmenterConfig {
  int in_channels = 3;
  int num_classes = 2;
  int base_filters = 8;
  bool operator==(const SegmenterConfig&) const = default;
};

struct SegmenterModel {
  SegmenterConfig config;
  ad::Tensor enc1, enc2, dec1, out_conv;

  static SegmenterModel init(const SegmenterConfig& config, uint64_t seed);
  // input N x C x H x W -> N x num_classes x H x W logits.
  ad::Tensor forward(ad::Graph& g, const ad::Tensor& input) const;
  std::vector<ad::Tensor> parameters() const;
};

// Per-pixel argmax, ties toward the lower class index.
Mask segment_image(const SegmenterModel& model, const ImageBuffer& input);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  uint64_t seed = 42;
  double lr = 8e-4;
  int batch = 32;
  int epochs = 30;
  BranchKind branch = BranchKind::none;
  bool share_towers = true;
  int patch_side = 64;
  // Stop once train accuracy reaches this value; 0 disables.
  double early_stop_train_acc = 0.0;
};

// key=value lines, '#' comments. Keys: seed, lr, batch, epochs, branch,
// share_towers, patch_side, early_stop_train_acc.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

std::string history_csv(std::span<const EpochStats> history);

struct CropSample {
  ImageBuffer pre;   // normalized patch
  ImageBuffer post;  // normalized patch
  std::vector<double> extra;
  int label = 0;  // damage ordinal 0..3
};

std::vector<EpochStats> train_classifier(ClassifierModel& model,
                                         std::span<const CropSample> train,
                                         std::span<const CropSample> val,
                                         const TrainConfig& config);

double eval_classifier(const ClassifierModel& model, std::span<const CropSample> samples);

struct SceneSample {
  ImageBuffer image;  // normalized model input
  Mask target;        // per-pixel classes < num_classes
};

std::vector<EpochStats> train_segmenter(SegmenterModel& model, std::span<const SceneSample> train,
                                        std::span<const SceneSample> val,
                                        const TrainConfig& config);

struct DisasterSample {
  ImageBuffer pre;   // normalized, tower input side
  ImageBuffer post;  // normalized
  int label = 0;
};

std::vector<EpochStats> train_disaster(DisasterModel& model, std::span<const DisasterSample> train,
                                       std::span<const DisasterSample> val,
                                       const TrainConfig& config);

// Builds classifier samples for one scene: a patch pair per building that
// carries a damage label. Patches are raw crops resized by crop, then
// normalized; the ssim branch scalar is computed on the resized raw crops.
std::vector<CropSample> extract_crop_samples(const ImageBuffer& pre, const ImageBuffer& post,
                                             const SceneLabel& label, const CropSpec& crop,
                                             BranchKind branch,
                                             const std::vector<std::string>& disaster_names);

// ---------------------------------------------------------------------------
// Two-step pipeline

// Stage interfaces are plain callables so oracle doubles can stand in for
// trained models. classify receives the raw (unnormalized) resized crops
// plus the predicted footprint and returns a damage ordinal 0..3.
using SegmentFn = std::function<BinaryMask(const ImageBuffer& pre)>;
using ClassifyFn = std::function<int(const ImageBuffer& pre_patch, const ImageBuffer& post_patch,
                                     const Polygon& footprint)>;

// segment pre -> polygonize -> crop pre/post per building -> classify ->
// paint each footprint with predicted class 1..4.
Mask run_two_step(const ImageBuffer& pre, const ImageBuffer& post, const SegmentFn& segment,
                  const ClassifyFn& classify, const CropSpec& crop = {}, int min_area = 4);

SegmentFn model_segment_fn(const SegmenterModel& model);
// disaster_onehot applies when the model has a one-hot branch; the ssim
// branch scalar is computed per crop internally.
ClassifyFn model_classify_fn(const ClassifierModel& model,
                             std::vector<double> disaster_onehot = {});

// ---------------------------------------------------------------------------
// Persistence: <dir>/model.dmk holds parameters, <dir>/model.json the
// architecture plus optional disaster-name list.

void save_classifier(const ClassifierModel& model, const std::filesystem::path& dir,
                     const std::vector<std::string>& disaster_names = {});
ClassifierModel load_classifier(const std::filesystem::path& dir,
                                std::vector<std::string>* disaster_names = nullptr);

void save_disaster_model(const DisasterModel& model, const std::filesystem::path& dir,
                         const std::vector<std::string>& disaster_names);
DisasterModel load_disaster_model(const std::filesystem::path& dir,
                                  std::vector<std::string>* disaster_names = nullptr);

void save_segmenter(const SegmenterModel& model, const std::filesystem::path& dir);
SegmenterModel load_segmenter(const std::filesystem::path& dir);

}  // namespace dmk
