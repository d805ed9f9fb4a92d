#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmk/prng.hpp"

namespace dmk::ad {

// Dense double-precision tensor with a same-shape gradient buffer.
// Value-semantic handle; copies share storage, which is what the tape
// needs to route gradients back to parameters.
class Tensor {
 public:
  Tensor() = default;
  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int64_t size() const;
  int dim(int i) const { return shape()[i]; }
  int rank() const { return static_cast<int>(shape().size()); }

  std::vector<double>& values();
  const std::vector<double>& values() const;
  std::vector<double>& grad();
  const std::vector<double>& grad() const;

  bool requires_grad() const;
  void set_requires_grad(bool v);
  void zero_grad();

  const std::string& name() const;
  void set_name(std::string name);

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

 private:
  struct Node;
  std::shared_ptr<Node> node_;
  friend class Graph;
};

// Tape of recorded operations. Forward runs eagerly; backward replays the
// tape in exact reverse order, accumulating (+=) into gradients. A graph
// and its intermediate tensors are confined to one worker at a time.
class Graph {
 public:
  // input N x C x H x W, kernels F x C x kh x kw, zero padding.
  Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int pad);
  Tensor maxpool2d(const Tensor& input, int window, int stride);
  Tensor relu(const Tensor& x);
  // x: N x D, w: D x M, b: M.
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
  Tensor flatten(const Tensor& x);
  Tensor concat(const std::vector<Tensor>& xs, int axis);
  // Nearest-neighbor resize of N x C x H x W to out_h x out_w.
  Tensor upsample_nearest(const Tensor& x, int out_h, int out_w);
  // N x K x H x W -> (N*H*W) x K; feeds per-pixel losses.
  Tensor per_pixel_rows(const Tensor& x);
  // Mean cross-entropy of softmax(logits) against integer labels.
  Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);
  // Scalar projection sum_i w[i] * x[i]; grad_check scalarizes with it.
  Tensor weighted_sum(const Tensor& x, std::vector<double> weights);

  void backward(const Tensor& loss);

  size_t op_count() const { return tape_.size(); }

 private:
  Tensor make(std::vector<int> shape, bool requires_grad);
  std::vector<std::function<void()>> tape_;
};

void sgd_step(std::span<Tensor> params, double learning_rate);
void zero_grad(std::span<Tensor> params);

// Uniform in +-sqrt(6/(fan_in+fan_out)).
Tensor xavier_uniform(std::vector<int> shape, int fan_in, int fan_out, Prng& rng,
                      std::string name);

// Compares analytic gradients of op against central finite differences at
// the given point. Error metric per element: |a - n| / max(1, |a|, |n|).
// Returns the max over every element of every input.
double grad_check(const std::function<Tensor(Graph&, const std::vector<Tensor>&)>& op,
                  std::vector<Tensor> inputs, double epsilon = 1e-5, uint64_t seed = 0);

// Flat little-endian container, magic DMK1, per-parameter records of
// (name length, name bytes, rank, dims, float64 payload). Round trips
// bit-exactly.
void save_checkpoint(const std::filesystem::path& path, std::span<const Tensor> params);
std::vector<Tensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace dmk::ad
