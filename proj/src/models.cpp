#include "dmk/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dmk {

using ad::Graph;
using ad::Tensor;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Shapes

namespace {

int conv_out_side(int side, int kernel, int stride, int pad) {
  return (side + 2 * pad - kernel) / stride + 1;
}

int pool_out_side(int side) { return (side - 2) / 2 + 1; }

}  // namespace

int TowerConfig::feature_side() const {
  int side = input_side;
  for (const ConvBlockSpec& b : blocks) {
    side = conv_out_side(side, b.kernel, b.stride, b.kernel / 2);
    if (side < 2) throw std::invalid_argument("tower: input side too small for the block stack");
    side = pool_out_side(side);
  }
  return side;
}

int TowerConfig::feature_channels() const {
  return blocks.empty() ? in_channels : blocks.back().filters;
}

int TowerConfig::feature_dim() const {
  const int side = feature_side();
  return feature_channels() * side * side;
}

int ExtraBranch::dim() const {
  switch (kind) {
    case BranchKind::none: return 0;
    case BranchKind::disaster_one_hot: return num_disasters;
    case BranchKind::ssim_scalar: return 1;
  }
  throw std::invalid_argument("ExtraBranch: bad kind");
}

std::string_view branch_name(BranchKind k) {
  switch (k) {
    case BranchKind::none: return "none";
    case BranchKind::disaster_one_hot: return "disaster";
    case BranchKind::ssim_scalar: return "ssim";
  }
  throw std::invalid_argument("branch_name: bad kind");
}

BranchKind branch_from_name(std::string_view name) {
  if (name == "none") return BranchKind::none;
  if (name == "disaster") return BranchKind::disaster_one_hot;
  if (name == "ssim") return BranchKind::ssim_scalar;
  throw std::invalid_argument("unknown branch kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tensor plumbing

namespace {

std::vector<Tensor> init_tower(const TowerConfig& cfg, Prng& rng, const std::string& prefix) {
  std::vector<Tensor> kernels;
  int channels = cfg.in_channels;
  for (size_t i = 0; i < cfg.blocks.size(); ++i) {
    const ConvBlockSpec& b = cfg.blocks[i];
    const int fan_in = channels * b.kernel * b.kernel;
    const int fan_out = b.filters * b.kernel * b.kernel;
    kernels.push_back(ad::xavier_uniform({b.filters, channels, b.kernel, b.kernel}, fan_in,
                                         fan_out, rng, prefix + "." + std::to_string(i)));
    channels = b.filters;
  }
  return kernels;
}

Tensor tower_forward(Graph& g, const Tensor& x, const TowerConfig& cfg,
                     const std::vector<Tensor>& kernels) {
  Tensor h = x;
  for (size_t i = 0; i < cfg.blocks.size(); ++i) {
    const ConvBlockSpec& b = cfg.blocks[i];
    h = g.conv2d(h, kernels[i], b.stride, b.kernel / 2);
    h = g.relu(h);
    h = g.maxpool2d(h, 2, 2);
  }
  return g.flatten(h);
}

// Interleaved HWC images -> one N x C x H x W tensor.
Tensor to_nchw(const std::vector<const ImageBuffer*>& imgs) {
  const int n = static_cast<int>(imgs.size());
  const int c = imgs[0]->channels, h = imgs[0]->height, w = imgs[0]->width;
  Tensor t = Tensor::zeros({n, c, h, w});
  auto& v = t.values();
  for (int ni = 0; ni < n; ++ni) {
    const ImageBuffer& img = *imgs[ni];
    if (img.channels != c || img.height != h || img.width != w)
      throw std::invalid_argument("batch images must share dimensions");
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          v[((static_cast<size_t>(ni) * c + ci) * h + y) * w + x] = img.at(x, y, ci);
  }
  return t;
}

int argmax_row(const std::vector<double>& v, size_t offset, int k) {
  int best = 0;
  for (int i = 1; i < k; ++i)
    if (v[offset + i] > v[offset + best]) best = i;  // ties -> lower index
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// ClassifierModel

ClassifierModel ClassifierModel::init(const TowerConfig& tower, const ExtraBranch& branch,
                                      bool shared_towers, int hidden_dim, uint64_t seed) {
  if (branch.kind == BranchKind::disaster_one_hot && branch.num_disasters < 1)
    throw std::invalid_argument("classifier: one-hot branch needs num_disasters >= 1");
  ClassifierModel m;
  m.tower = tower;
  m.branch = branch;
  m.shared_towers = shared_towers;
  m.hidden_dim = hidden_dim;
  Prng rng(Prng::mix(seed, fnv1a64("classifier-init")));
  m.pre_tower = init_tower(tower, rng, "pre_tower");
  if (!shared_towers) m.post_tower = init_tower(tower, rng, "post_tower");
  const int concat_dim = 2 * tower.feature_dim() + branch.dim();
  m.fc1_w = ad::xavier_uniform({concat_dim, hidden_dim}, concat_dim, hidden_dim, rng, "fc1.w");
  m.fc1_b = Tensor::zeros({hidden_dim}, true);
  m.fc1_b.set_name("fc1.b");
  m.fc2_w = ad::xavier_uniform({hidden_dim, 4}, hidden_dim, 4, rng, "fc2.w");
  m.fc2_b = Tensor::zeros({4}, true);
  m.fc2_b.set_name("fc2.b");
  return m;
}

Tensor ClassifierModel::forward(Graph& g, const Tensor& pre, const Tensor& post,
                                const Tensor& extra) const {
  if (pre.rank() != 4 || post.rank() != 4)
    throw std::invalid_argument("classifier: patches must be N x C x H x W");
  if (pre.dim(2) != tower.input_side || pre.dim(3) != tower.input_side ||
      post.dim(2) != tower.input_side || post.dim(3) != tower.input_side)
    throw std::invalid_argument("classifier: patch side differs from tower input side");
  const std::vector<Tensor>& post_kernels = shared_towers ? pre_tower : post_tower;
  Tensor feat_pre = tower_forward(g, pre, tower, pre_tower);
  Tensor feat_post = tower_forward(g, post, tower, post_kernels);
  std::vector<Tensor> parts{feat_pre, feat_post};
  if (branch.dim() > 0) {
    if (!extra.defined() || extra.rank() != 2 || extra.dim(1) != branch.dim())
      throw std::invalid_argument("classifier: extra features do not match the branch");
    parts.push_back(extra);
  } else if (extra.defined()) {
    throw std::invalid_argument("classifier: extra features given but the branch is none");
  }
  Tensor h = g.concat(parts, 1);
  h = g.relu(g.linear(h, fc1_w, fc1_b));
  return g.linear(h, fc2_w, fc2_b);
}

std::vector<Tensor> ClassifierModel::parameters() const {
  std::vector<Tensor> params = pre_tower;
  params.insert(params.end(), post_tower.begin(), post_tower.end());
  params.push_back(fc1_w);
  params.push_back(fc1_b);
  params.push_back(fc2_w);
  params.push_back(fc2_b);
  return params;
}

std::array<double, 4> classify_building(const ClassifierModel& model, const ImageBuffer& pre_patch,
                                        const ImageBuffer& post_patch,
                                        const std::vector<double>& extra) {
  if (pre_patch.width != model.tower.input_side || pre_patch.height != model.tower.input_side ||
      post_patch.width != model.tower.input_side || post_patch.height != model.tower.input_side)
    throw std::invalid_argument("classify_building: wrong patch size");
  const int ed = model.branch.dim();
  if (static_cast<int>(extra.size()) != ed)
    throw std::invalid_argument("classify_building: extra features do not match the branch");
  Graph g;
  Tensor pre_t = to_nchw({&pre_patch});
  Tensor post_t = to_nchw({&post_patch});
  Tensor extra_t;
  if (ed > 0) extra_t = Tensor::from_values({1, ed}, extra);
  Tensor logits = model.forward(g, pre_t, post_t, extra_t);
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = logits.values()[i];
  return out;
}

// ---------------------------------------------------------------------------
// DisasterModel

DisasterModel DisasterModel::init(int input_side, int num_disasters, uint64_t seed) {
  if (num_disasters < 2)
    throw std::invalid_argument("disaster model: need at least 2 disasters");
  DisasterModel m;
  m.tower.input_side = input_side;
  m.tower.in_channels = 6;
  m.num_disasters = num_disasters;
  Prng rng(Prng::mix(seed, fnv1a64("disaster-init")));
  m.stack = init_tower(m.tower, rng, "stack");
  const int d = m.tower.feature_dim();
  m.fc1_w = ad::xavier_uniform({d, m.hidden_dim}, d, m.hidden_dim, rng, "fc1.w");
  m.fc1_b = Tensor::zeros({m.hidden_dim}, true);
  m.fc1_b.set_name("fc1.b");
  m.fc2_w = ad::xavier_uniform({m.hidden_dim, num_disasters}, m.hidden_dim, num_disasters, rng,
                               "fc2.w");
  m.fc2_b = Tensor::zeros({num_disasters}, true);
  m.fc2_b.set_name("fc2.b");
  return m;
}

Tensor DisasterModel::forward(Graph& g, const Tensor& x) const {
  Tensor h = tower_forward(g, x, tower, stack);
  h = g.relu(g.linear(h, fc1_w, fc1_b));
  return g.linear(h, fc2_w, fc2_b);
}

std::vector<Tensor> DisasterModel::parameters() const {
  std::vector<Tensor> params = stack;
  params.push_back(fc1_w);
  params.push_back(fc1_b);
  params.push_back(fc2_w);
  params.push_back(fc2_b);
  return params;
}

namespace {

Tensor disaster_input(const DisasterModel& model, const ImageBuffer& pre,
                      const ImageBuffer& post) {
  const int side = model.tower.input_side;
  const ImageBuffer rp = normalize(resize_bilinear(pre, side, side));
  const ImageBuffer rq = normalize(resize_bilinear(post, side, side));
  if (rp.channels != 3 || rq.channels != 3)
    throw std::invalid_argument("classify_disaster: expected RGB images");
  Tensor t = Tensor::zeros({1, 6, side, side});
  auto& v = t.values();
  for (int ci = 0; ci < 3; ++ci)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        v[(static_cast<size_t>(ci) * side + y) * side + x] = rp.at(x, y, ci);
        v[(static_cast<size_t>(3 + ci) * side + y) * side + x] = rq.at(x, y, ci);
      }
  return t;
}

}  // namespace

std::vector<double> classify_disaster(const DisasterModel& model, const ImageBuffer& pre,
                                      const ImageBuffer& post) {
  Graph g;
  Tensor logits = model.forward(g, disaster_input(model, pre, post));
  return logits.values();
}

// ---------------------------------------------------------------------------
// SegmenterModel

SegmenterModel SegmenterModel::init(const SegmenterConfig& config, uint64_t seed) {
  if (config.num_classes < 2) throw std::invalid_argument("segmenter: need >= 2 classes");
  SegmenterModel m;
  m.config = config;
  Prng rng(Prng::mix(seed, fnv1a64("segmenter-init")));
  const int f = config.base_filters;
  auto conv_param = [&rng](int out_c, int in_c, const char* name) {
    return ad::xavier_uniform({out_c, in_c, 3, 3}, in_c * 9, out_c * 9, rng, name);
  };
  m.enc1 = conv_param(f, config.in_channels, "enc1");
  m.enc2 = conv_param(2 * f, f, "enc2");
  m.dec1 = conv_param(f, 2 * f, "dec1");
  m.out_conv = conv_param(config.num_classes, f, "out_conv");
  return m;
}

Tensor SegmenterModel::forward(Graph& g, const Tensor& input) const {
  if (input.rank() != 4) throw std::invalid_argument("segmenter: input must be N x C x H x W");
  if (input.dim(2) < 4 || input.dim(3) < 4)
    throw std::invalid_argument("segmenter: input must be at least 4 x 4");
  Tensor e1 = g.relu(g.conv2d(input, enc1, 1, 1));
  Tensor p1 = g.maxpool2d(e1, 2, 2);
  Tensor e2 = g.relu(g.conv2d(p1, enc2, 1, 1));
  Tensor p2 = g.maxpool2d(e2, 2, 2);
  Tensor u1 = g.upsample_nearest(p2, p1.dim(2), p1.dim(3));
  Tensor d1 = g.relu(g.conv2d(u1, dec1, 1, 1));
  Tensor u0 = g.upsample_nearest(d1, input.dim(2), input.dim(3));
  return g.conv2d(u0, out_conv, 1, 1);
}

std::vector<Tensor> SegmenterModel::parameters() const {
  return {enc1, enc2, dec1, out_conv};
}

Mask segment_image(const SegmenterModel& model, const ImageBuffer& input) {
  Graph g;
  Tensor logits = model.forward(g, to_nchw({&input}));
  const int k = model.config.num_classes;
  const int h = input.height, w = input.width;
  Mask out(w, h);
  const auto& v = logits.values();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (v[(static_cast<size_t>(c) * h + y) * w + x] >
            v[(static_cast<size_t>(best) * h + y) * w + x])
          best = c;
      out.at(x, y) = static_cast<uint8_t>(best);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto l = line.find_first_not_of(" \t\r");
    if (l == std::string::npos) continue;
    const auto r = line.find_last_not_of(" \t\r");
    line = line.substr(l, r - l + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed")
        cfg.seed = std::stoull(value);
      else if (key == "lr")
        cfg.lr = std::stod(value);
      else if (key == "batch")
        cfg.batch = std::stoi(value);
      else if (key == "epochs")
        cfg.epochs = std::stoi(value);
      else if (key == "branch")
        cfg.branch = branch_from_name(value);
      else if (key == "share_towers")
        cfg.share_towers = value == "true" || value == "1";
      else if (key == "patch_side")
        cfg.patch_side = std::stoi(value);
      else if (key == "early_stop_train_acc")
        cfg.early_stop_train_acc = std::stod(value);
      else
        throw std::runtime_error("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  if (cfg.batch < 1 || cfg.epochs < 1 || cfg.lr <= 0.0)
    throw std::runtime_error("config: batch, epochs and lr must be positive");
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string history_csv(std::span<const EpochStats> history) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_acc\n";
  for (const EpochStats& s : history) {
    char line[128];
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f\n", s.epoch, s.train_loss, s.train_acc,
                  s.val_acc);
    out << line;
  }
  return out.str();
}

namespace {

// Shared SGD epoch driver. run_batch returns (summed loss, correct count).
std::vector<EpochStats> run_training(size_t train_size, const TrainConfig& cfg,
                                     std::span<Tensor> params,
                                     const std::function<std::pair<double, int64_t>(
                                         std::span<const size_t>)>& run_batch,
                                     const std::function<double()>& run_val,
                                     int64_t units_per_sample) {
  if (train_size == 0) throw std::invalid_argument("train: empty dataset");
  Prng rng(Prng::mix(cfg.seed, fnv1a64("epoch-shuffle")));
  std::vector<size_t> idx(train_size);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::vector<EpochStats> history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(idx);
    double loss_sum = 0.0;
    int64_t correct = 0;
    for (size_t b = 0; b < idx.size(); b += static_cast<size_t>(cfg.batch)) {
      const size_t n = std::min(static_cast<size_t>(cfg.batch), idx.size() - b);
      ad::zero_grad(params);
      auto [loss, ok] = run_batch(std::span<const size_t>(idx).subspan(b, n));
      if (!std::isfinite(loss)) throw std::runtime_error("train: loss became non-finite");
      loss_sum += loss;
      correct += ok;
      ad::sgd_step(params, cfg.lr);
    }
    EpochStats s;
    s.epoch = epoch;
    s.train_loss = loss_sum / static_cast<double>(train_size);
    s.train_acc =
        static_cast<double>(correct) / static_cast<double>(train_size * units_per_sample);
    s.val_acc = run_val ? run_val() : 0.0;
    history.push_back(s);
    if (cfg.early_stop_train_acc > 0.0 && s.train_acc >= cfg.early_stop_train_acc) break;
  }
  return history;
}

}  // namespace

std::vector<EpochStats> train_classifier(ClassifierModel& model,
                                         std::span<const CropSample> train,
                                         std::span<const CropSample> val,
                                         const TrainConfig& config) {
  const int ed = model.branch.dim();
  auto check = [&](std::span<const CropSample> set) {
    for (const CropSample& s : set) {
      if (s.label < 0 || s.label > 3)
        throw std::invalid_argument("train_classifier: label outside 0..3");
      if (static_cast<int>(s.extra.size()) != ed)
        throw std::invalid_argument("train_classifier: extra features do not match the branch");
    }
  };
  check(train);
  check(val);

  auto params_vec = model.parameters();
  auto forward_batch = [&](std::span<const CropSample> set, std::span<const size_t> which,
                           Graph& g) {
    std::vector<const ImageBuffer*> pre, post;
    std::vector<double> extras;
    std::vector<int> labels;
    for (size_t i : which) {
      const CropSample& s = set[i];
      pre.push_back(&s.pre);
      post.push_back(&s.post);
      extras.insert(extras.end(), s.extra.begin(), s.extra.end());
      labels.push_back(s.label);
    }
    Tensor extra_t;
    if (ed > 0)
      extra_t = Tensor::from_values({static_cast<int>(which.size()), ed}, std::move(extras));
    Tensor logits = model.forward(g, to_nchw(pre), to_nchw(post), extra_t);
    return std::make_pair(std::move(logits), std::move(labels));
  };

  auto run_batch = [&](std::span<const size_t> which) {
    Graph g;
    auto [logits, labels] = forward_batch(train, which, g);
    int64_t correct = 0;
    for (size_t i = 0; i < labels.size(); ++i)
      if (argmax_row(logits.values(), i * 4, 4) == labels[i]) ++correct;
    Tensor loss = g.softmax_cross_entropy(logits, labels);
    const double total = loss.values()[0] * static_cast<double>(labels.size());
    g.backward(loss);
    return std::make_pair(total, correct);
  };

  std::function<double()> run_val;
  if (!val.empty()) run_val = [&]() { return eval_classifier(model, val); };
  return run_training(train.size(), config, params_vec, run_batch, run_val, 1);
}

double eval_classifier(const ClassifierModel& model, std::span<const CropSample> samples) {
  if (samples.empty()) throw std::invalid_argument("eval_classifier: empty set");
  const int ed = model.branch.dim();
  int64_t correct = 0;
  constexpr size_t kEvalBatch = 64;
  for (size_t b = 0; b < samples.size(); b += kEvalBatch) {
    const size_t n = std::min(kEvalBatch, samples.size() - b);
    std::vector<const ImageBuffer*> pre, post;
    std::vector<double> extras;
    std::vector<int> labels;
    for (size_t i = b; i < b + n; ++i) {
      pre.push_back(&samples[i].pre);
      post.push_back(&samples[i].post);
      extras.insert(extras.end(), samples[i].extra.begin(), samples[i].extra.end());
      labels.push_back(samples[i].label);
    }
    Graph g;
    Tensor extra_t;
    if (ed > 0) extra_t = Tensor::from_values({static_cast<int>(n), ed}, std::move(extras));
    Tensor logits = model.forward(g, to_nchw(pre), to_nchw(post), extra_t);
    for (size_t i = 0; i < labels.size(); ++i)
      if (argmax_row(logits.values(), i * 4, 4) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::vector<EpochStats> train_segmenter(SegmenterModel& model, std::span<const SceneSample> train,
                                        std::span<const SceneSample> val,
                                        const TrainConfig& config) {
  const int k = model.config.num_classes;
  auto check = [&](std::span<const SceneSample> set) {
    for (const SceneSample& s : set) {
      if (s.target.width != s.image.width || s.target.height != s.image.height)
        throw std::invalid_argument("train_segmenter: target size differs from image");
      for (uint8_t v : s.target.data)
        if (v >= k) throw std::invalid_argument("train_segmenter: target class out of range");
    }
  };
  check(train);
  check(val);
  if (train.empty()) throw std::invalid_argument("train_segmenter: empty dataset");
  const int64_t pixels = static_cast<int64_t>(train[0].image.width) * train[0].image.height;

  auto params_vec = model.parameters();
  auto eval_pixels = [&](std::span<const SceneSample> set) {
    int64_t correct = 0, total = 0;
    for (const SceneSample& s : set) {
      const Mask pred = segment_image(model, s.image);
      for (size_t i = 0; i < pred.data.size(); ++i)
        if (pred.data[i] == s.target.data[i]) ++correct;
      total += static_cast<int64_t>(pred.data.size());
    }
    return static_cast<double>(correct) / static_cast<double>(total);
  };

  auto run_batch = [&](std::span<const size_t> which) {
    std::vector<const ImageBuffer*> imgs;
    std::vector<int> labels;
    for (size_t i : which) {
      imgs.push_back(&train[i].image);
      for (uint8_t v : train[i].target.data) labels.push_back(v);
    }
    Graph g;
    Tensor logits = model.forward(g, to_nchw(imgs));
    Tensor rows = g.per_pixel_rows(logits);
    int64_t correct = 0;
    for (size_t i = 0; i < labels.size(); ++i)
      if (argmax_row(rows.values(), i * k, k) == labels[i]) ++correct;
    Tensor loss = g.softmax_cross_entropy(rows, labels);
    const double total = loss.values()[0] * static_cast<double>(labels.size());
    g.backward(loss);
    // Scale to per-sample units: run_training divides by pixels later.
    return std::make_pair(total / static_cast<double>(pixels), correct);
  };

  std::function<double()> run_val;
  if (!val.empty()) run_val = [&]() { return eval_pixels(val); };
  return run_training(train.size(), config, params_vec, run_batch, run_val, pixels);
}

std::vector<EpochStats> train_disaster(DisasterModel& model, std::span<const DisasterSample> train,
                                       std::span<const DisasterSample> val,
                                       const TrainConfig& config) {
  const int k = model.num_disasters;
  auto check = [&](std::span<const DisasterSample> set) {
    for (const DisasterSample& s : set)
      if (s.label < 0 || s.label >= k)
        throw std::invalid_argument("train_disaster: label out of range");
  };
  check(train);
  check(val);

  const int side = model.tower.input_side;
  auto to_input = [&](const DisasterSample& s) {
    Tensor t = Tensor::zeros({1, 6, side, side});
    auto& v = t.values();
    if (s.pre.width != side || s.pre.height != side || s.post.width != side ||
        s.post.height != side || s.pre.channels != 3 || s.post.channels != 3)
      throw std::invalid_argument("train_disaster: samples must be RGB at the tower side");
    for (int ci = 0; ci < 3; ++ci)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          v[(static_cast<size_t>(ci) * side + y) * side + x] = s.pre.at(x, y, ci);
          v[(static_cast<size_t>(3 + ci) * side + y) * side + x] = s.post.at(x, y, ci);
        }
    return t;
  };

  auto batch_input = [&](std::span<const DisasterSample> set, std::span<const size_t> which) {
    const int n = static_cast<int>(which.size());
    Tensor t = Tensor::zeros({n, 6, side, side});
    auto& v = t.values();
    std::vector<int> labels;
    for (int bi = 0; bi < n; ++bi) {
      Tensor one = to_input(set[which[bi]]);
      std::copy(one.values().begin(), one.values().end(),
                v.begin() + static_cast<size_t>(bi) * one.values().size());
      labels.push_back(set[which[bi]].label);
    }
    return std::make_pair(std::move(t), std::move(labels));
  };

  auto params_vec = model.parameters();
  auto run_batch = [&](std::span<const size_t> which) {
    Graph g;
    auto [input, labels] = batch_input(train, which);
    Tensor logits = model.forward(g, input);
    int64_t correct = 0;
    for (size_t i = 0; i < labels.size(); ++i)
      if (argmax_row(logits.values(), i * k, k) == labels[i]) ++correct;
    Tensor loss = g.softmax_cross_entropy(logits, labels);
    const double total = loss.values()[0] * static_cast<double>(labels.size());
    g.backward(loss);
    return std::make_pair(total, correct);
  };

  std::function<double()> run_val;
  if (!val.empty())
    run_val = [&]() {
      std::vector<size_t> all(val.size());
      std::iota(all.begin(), all.end(), size_t{0});
      int64_t correct = 0;
      constexpr size_t kEvalBatch = 32;
      for (size_t b = 0; b < all.size(); b += kEvalBatch) {
        const size_t n = std::min(kEvalBatch, all.size() - b);
        Graph g;
        auto [input, labels] = batch_input(val, std::span<const size_t>(all).subspan(b, n));
        Tensor logits = model.forward(g, input);
        for (size_t i = 0; i < labels.size(); ++i)
          if (argmax_row(logits.values(), i * k, k) == labels[i]) ++correct;
      }
      return static_cast<double>(correct) / static_cast<double>(val.size());
    };
  return run_training(train.size(), config, params_vec, run_batch, run_val, 1);
}

// ---------------------------------------------------------------------------
// Crop extraction

std::vector<CropSample> extract_crop_samples(const ImageBuffer& pre, const ImageBuffer& post,
                                             const SceneLabel& label, const CropSpec& crop,
                                             BranchKind branch,
                                             const std::vector<std::string>& disaster_names) {
  std::vector<double> onehot;
  if (branch == BranchKind::disaster_one_hot) {
    const auto it =
        std::find(disaster_names.begin(), disaster_names.end(), label.disaster_name);
    if (it == disaster_names.end())
      throw std::invalid_argument("extract_crop_samples: disaster '" + label.disaster_name +
                                  "' missing from the name list");
    onehot.assign(disaster_names.size(), 0.0);
    onehot[static_cast<size_t>(it - disaster_names.begin())] = 1.0;
  }
  std::vector<CropSample> samples;
  for (const BuildingAnnotation& b : label.buildings) {
    if (!b.damage) continue;  // un-classified and pre-only buildings are skipped
    CropSample s;
    const ImageBuffer pre_raw = crop_building(pre, b.footprint, crop);
    const ImageBuffer post_raw = crop_building(post, b.footprint, crop);
    switch (branch) {
      case BranchKind::none: break;
      case BranchKind::disaster_one_hot: s.extra = onehot; break;
      case BranchKind::ssim_scalar: s.extra = {ssim(pre_raw, post_raw)}; break;
    }
    s.pre = normalize(pre_raw);
    s.post = normalize(post_raw);
    s.label = static_cast<int>(*b.damage);
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Two-step pipeline

Mask run_two_step(const ImageBuffer& pre, const ImageBuffer& post, const SegmentFn& segment,
                  const ClassifyFn& classify, const CropSpec& crop, int min_area) {
  const BinaryMask seg = segment(pre);
  if (seg.width != pre.width || seg.height != pre.height)
    throw std::runtime_error("run_two_step: segmenter output size differs from the image");
  Mask fg(seg.width, seg.height);
  fg.data = seg.data;  // foreground as class 1 for polygonization
  const auto buildings = polygonize(fg, min_area);
  Mask out(pre.width, pre.height);
  for (const auto& [footprint, cls] : buildings) {
    (void)cls;
    const ImageBuffer pre_patch = crop_building(pre, footprint, crop);
    const ImageBuffer post_patch = crop_building(post, footprint, crop);
    const int ordinal = classify(pre_patch, post_patch, footprint);
    if (ordinal < 0 || ordinal > 3)
      throw std::runtime_error("run_two_step: classifier returned an ordinal outside 0..3");
    fill_polygon(out, footprint, mask_class_from_damage(static_cast<DamageClass>(ordinal)));
  }
  return out;
}

SegmentFn model_segment_fn(const SegmenterModel& model) {
  return [model](const ImageBuffer& pre) {
    return binarize(segment_image(model, normalize(pre)));
  };
}

ClassifyFn model_classify_fn(const ClassifierModel& model, std::vector<double> disaster_onehot) {
  if (model.branch.kind == BranchKind::disaster_one_hot &&
      static_cast<int>(disaster_onehot.size()) != model.branch.num_disasters)
    throw std::invalid_argument("model_classify_fn: one-hot length differs from the branch");
  if (model.branch.kind != BranchKind::disaster_one_hot && !disaster_onehot.empty())
    throw std::invalid_argument("model_classify_fn: one-hot given without a disaster branch");
  return [model, onehot = std::move(disaster_onehot)](const ImageBuffer& pre_patch,
                                                      const ImageBuffer& post_patch,
                                                      const Polygon&) {
    std::vector<double> extra;
    switch (model.branch.kind) {
      case BranchKind::none: break;
      case BranchKind::disaster_one_hot: extra = onehot; break;
      case BranchKind::ssim_scalar: extra = {ssim(pre_patch, post_patch)}; break;
    }
    const auto logits =
        classify_building(model, normalize(pre_patch), normalize(post_patch), extra);
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (logits[i] > logits[best]) best = i;
    return best;
  };
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json tower_to_json(const TowerConfig& t) {
  json blocks = json::array();
  for (const ConvBlockSpec& b : t.blocks) blocks.push_back({b.filters, b.kernel, b.stride});
  return {{"input_side", t.input_side}, {"in_channels", t.in_channels}, {"blocks", blocks}};
}

TowerConfig tower_from_json(const json& j) {
  TowerConfig t;
  t.input_side = j.at("input_side").get<int>();
  t.in_channels = j.at("in_channels").get<int>();
  t.blocks.clear();
  for (const json& b : j.at("blocks"))
    t.blocks.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()});
  return t;
}

void write_model_json(const json& j, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "model.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

json read_model_json(const std::filesystem::path& dir, const std::string& expected_type) {
  std::ifstream in(dir / "model.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "model.json").string());
  json j = json::parse(in);
  if (j.at("type").get<std::string>() != expected_type)
    throw std::runtime_error("model.json type is not " + expected_type);
  return j;
}

// Overwrite destination tensors with checkpoint tensors matched by name.
void assign_params(std::vector<Tensor> params, const std::filesystem::path& dir) {
  const auto loaded = ad::load_checkpoint(dir / "model.dmk");
  std::map<std::string, const Tensor*> by_name;
  for (const Tensor& t : loaded) by_name[t.name()] = &t;
  for (Tensor& p : params) {
    const auto it = by_name.find(p.name());
    if (it == by_name.end())
      throw std::runtime_error("checkpoint is missing parameter " + p.name());
    if (it->second->shape() != p.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + p.name());
    p.values() = it->second->values();
  }
}

}  // namespace

void save_classifier(const ClassifierModel& model, const std::filesystem::path& dir,
                     const std::vector<std::string>& disaster_names) {
  json j = {
      {"type", "damage_classifier"},
      {"tower", tower_to_json(model.tower)},
      {"branch",
       {{"kind", std::string(branch_name(model.branch.kind))},
        {"num_disasters", model.branch.num_disasters}}},
      {"shared_towers", model.shared_towers},
      {"hidden_dim", model.hidden_dim},
      {"disasters", disaster_names},
  };
  write_model_json(j, dir);
  const auto params = model.parameters();
  ad::save_checkpoint(dir / "model.dmk", params);
}

ClassifierModel load_classifier(const std::filesystem::path& dir,
                                std::vector<std::string>* disaster_names) {
  const json j = read_model_json(dir, "damage_classifier");
  ExtraBranch branch;
  branch.kind = branch_from_name(j.at("branch").at("kind").get<std::string>());
  branch.num_disasters = j.at("branch").at("num_disasters").get<int>();
  ClassifierModel m =
      ClassifierModel::init(tower_from_json(j.at("tower")), branch,
                            j.at("shared_towers").get<bool>(), j.at("hidden_dim").get<int>(), 0);
  assign_params(m.parameters(), dir);
  if (disaster_names) *disaster_names = j.at("disasters").get<std::vector<std::string>>();
  return m;
}

void save_disaster_model(const DisasterModel& model, const std::filesystem::path& dir,
                         const std::vector<std::string>& disaster_names) {
  if (static_cast<int>(disaster_names.size()) != model.num_disasters)
    throw std::invalid_argument("save_disaster_model: name count differs from the model");
  json j = {
      {"type", "disaster_classifier"},
      {"input_side", model.tower.input_side},
      {"num_disasters", model.num_disasters},
      {"disasters", disaster_names},
  };
  write_model_json(j, dir);
  const auto params = model.parameters();
  ad::save_checkpoint(dir / "model.dmk", params);
}

DisasterModel load_disaster_model(const std::filesystem::path& dir,
                                  std::vector<std::string>* disaster_names) {
  const json j = read_model_json(dir, "disaster_classifier");
  DisasterModel m =
      DisasterModel::init(j.at("input_side").get<int>(), j.at("num_disasters").get<int>(), 0);
  assign_params(m.parameters(), dir);
  if (disaster_names) *disaster_names = j.at("disasters").get<std::vector<std::string>>();
  return m;
}

void save_segmenter(const SegmenterModel& model, const std::filesystem::path& dir) {
  json j = {
      {"type", "segmenter"},
      {"in_channels", model.config.in_channels},
      {"num_classes", model.config.num_classes},
      {"base_filters", model.config.base_filters},
  };
  write_model_json(j, dir);
  const auto params = model.parameters();
  ad::save_checkpoint(dir / "model.dmk", params);
}

SegmenterModel load_segmenter(const std::filesystem::path& dir) {
  const json j = read_model_json(dir, "segmenter");
  SegmenterConfig cfg;
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.base_filters = j.at("base_filters").get<int>();
  SegmenterModel m = SegmenterModel::init(cfg, 0);
  assign_params(m.parameters(), dir);
  return m;
}

}  // namespace dmk
