#include "dmk/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dmk/kernels.hpp"

namespace dmk::ad {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

struct Tensor::Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::string name;
};

namespace {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor: shape dims must be positive");
    n *= d;
  }
  return n;
}

void check_finite(const std::vector<double>& v, const char* where) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::runtime_error(std::string(where) + ": non-finite value");
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  const int64_t n = shape_size(shape);
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = std::move(shape);
  t.node_->value.assign(static_cast<size_t>(n), 0.0);
  t.node_->grad.assign(static_cast<size_t>(n), 0.0);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  const int64_t n = shape_size(shape);
  if (static_cast<int64_t>(values.size()) != n)
    throw std::invalid_argument("tensor: value count does not match shape");
  Tensor t = zeros(std::move(shape), requires_grad);
  t.node_->value = std::move(values);
  return t;
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(node_->value.size()); }
std::vector<double>& Tensor::values() { return node_->value; }
const std::vector<double>& Tensor::values() const { return node_->value; }
std::vector<double>& Tensor::grad() { return node_->grad; }
const std::vector<double>& Tensor::grad() const { return node_->grad; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool v) { node_->requires_grad = v; }
void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }
const std::string& Tensor::name() const { return node_->name; }
void Tensor::set_name(std::string name) { node_->name = std::move(name); }

Tensor Graph::make(std::vector<int> shape, bool requires_grad) {
  return Tensor::zeros(std::move(shape), requires_grad);
}

// ---------------------------------------------------------------------------

Tensor Graph::conv2d(const Tensor& input, const Tensor& kernels, int stride, int pad) {
  if (input.rank() != 4 || kernels.rank() != 4)
    throw std::invalid_argument("conv2d: expected 4-d input and kernels");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride or padding");
  if (input.dim(1) != kernels.dim(1))
    throw std::invalid_argument("conv2d: channel mismatch");
  check_finite(input.values(), "conv2d input");
  check_finite(kernels.values(), "conv2d kernels");

  kernels::Conv2dDims d;
  d.n = input.dim(0);
  d.c = input.dim(1);
  d.h = input.dim(2);
  d.w = input.dim(3);
  d.f = kernels.dim(0);
  d.kh = kernels.dim(2);
  d.kw = kernels.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw)
    throw std::invalid_argument("conv2d: kernel larger than padded input");

  Tensor out = make({d.n, d.f, d.oh, d.ow}, input.requires_grad() || kernels.requires_grad());
  kernels::conv2d_forward(input.values().data(), kernels.values().data(), out.values().data(), d);

  if (out.requires_grad())
    tape_.push_back([input, kernels, out, d]() mutable {
      if (input.requires_grad())
        kernels::conv2d_backward_input(kernels.values().data(), out.grad().data(),
                                       input.grad().data(), d);
      if (kernels.requires_grad())
        kernels::conv2d_backward_weights(input.values().data(), out.grad().data(),
                                         kernels.grad().data(), d);
    });
  return out;
}

Tensor Graph::maxpool2d(const Tensor& input, int window, int stride) {
  if (input.rank() != 4) throw std::invalid_argument("maxpool2d: expected 4-d input");
  if (window < 1 || stride < 1) throw std::invalid_argument("maxpool2d: bad window or stride");
  check_finite(input.values(), "maxpool2d input");
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < window || w < window)
    throw std::invalid_argument("maxpool2d: window larger than input");
  const int oh = (h - window) / stride + 1;
  const int ow = (w - window) / stride + 1;

  Tensor out = make({n, c, oh, ow}, input.requires_grad());
  std::vector<int64_t> argmax(static_cast<size_t>(out.size()));
  const auto& in = input.values();
  auto& ov = out.values();
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      const size_t in_base = (static_cast<size_t>(ni) * c + ci) * h * w;
      const size_t out_base = (static_cast<size_t>(ni) * c + ci) * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          // Ties break toward the first cell in row-major window order.
          int64_t best_idx = -1;
          double best = 0.0;
          for (int wy = 0; wy < window; ++wy)
            for (int wx = 0; wx < window; ++wx) {
              const int iy = oy * stride + wy, ix = ox * stride + wx;
              const int64_t idx = static_cast<int64_t>(in_base) + iy * w + ix;
              if (best_idx < 0 || in[idx] > best) {
                best = in[idx];
                best_idx = idx;
              }
            }
          ov[out_base + static_cast<size_t>(oy) * ow + ox] = best;
          argmax[out_base + static_cast<size_t>(oy) * ow + ox] = best_idx;
        }
    }

  if (out.requires_grad())
    tape_.push_back([input, out, argmax = std::move(argmax)]() mutable {
      auto& gin = input.grad();
      const auto& gout = out.grad();
      for (size_t i = 0; i < gout.size(); ++i) gin[argmax[i]] += gout[i];
    });
  return out;
}

Tensor Graph::relu(const Tensor& x) {
  check_finite(x.values(), "relu input");
  Tensor out = make(x.shape(), x.requires_grad());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (out.requires_grad())
    tape_.push_back([x, out]() mutable {
      auto& gx = x.grad();
      const auto& gout = out.grad();
      const auto& xv = x.values();
      // relu'(0) = 0.
      for (size_t i = 0; i < xv.size(); ++i)
        if (xv[i] > 0.0) gx[i] += gout[i];
    });
  return out;
}

Tensor Graph::linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
    throw std::invalid_argument("linear: expected x NxD, w DxM, b M");
  const int n = x.dim(0), d = x.dim(1), m = w.dim(1);
  if (w.dim(0) != d || b.dim(0) != m) throw std::invalid_argument("linear: shape mismatch");
  check_finite(x.values(), "linear input");
  check_finite(w.values(), "linear weight");
  check_finite(b.values(), "linear bias");

  Tensor out = make({n, m}, x.requires_grad() || w.requires_grad() || b.requires_grad());
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = bv[j];
      for (int kk = 0; kk < d; ++kk) acc += xv[static_cast<size_t>(i) * d + kk] * wv[static_cast<size_t>(kk) * m + j];
      ov[static_cast<size_t>(i) * m + j] = acc;
    }

  if (out.requires_grad())
    tape_.push_back([x, w, b, out, n, d, m]() mutable {
      const auto& gout = out.grad();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        const auto& wv = w.values();
        for (int i = 0; i < n; ++i)
          for (int kk = 0; kk < d; ++kk) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j)
              acc += gout[static_cast<size_t>(i) * m + j] * wv[static_cast<size_t>(kk) * m + j];
            gx[static_cast<size_t>(i) * d + kk] += acc;
          }
      }
      if (w.requires_grad()) {
        auto& gw = w.grad();
        const auto& xv = x.values();
        for (int kk = 0; kk < d; ++kk)
          for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
              acc += xv[static_cast<size_t>(i) * d + kk] * gout[static_cast<size_t>(i) * m + j];
            gw[static_cast<size_t>(kk) * m + j] += acc;
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (int j = 0; j < m; ++j) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += gout[static_cast<size_t>(i) * m + j];
          gb[j] += acc;
        }
      }
    });
  return out;
}

Tensor Graph::flatten(const Tensor& x) {
  if (x.rank() < 2) throw std::invalid_argument("flatten: expected rank >= 2");
  const int n = x.dim(0);
  const int d = static_cast<int>(x.size() / n);
  Tensor out = make({n, d}, x.requires_grad());
  out.values() = x.values();
  if (out.requires_grad())
    tape_.push_back([x, out]() mutable {
      auto& gx = x.grad();
      const auto& gout = out.grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += gout[i];
    });
  return out;
}

Tensor Graph::concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const int rank = xs[0].rank();
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: bad axis");
  std::vector<int> out_shape = xs[0].shape();
  int axis_total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != rank) throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis && t.dim(i) != out_shape[i])
        throw std::invalid_argument("concat: shape mismatch off the concat axis");
    check_finite(t.values(), "concat input");
    axis_total += t.dim(axis);
  }
  out_shape[axis] = axis_total;

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  for (int i = axis + 1; i < rank; ++i) inner *= out_shape[i];

  bool requires = false;
  for (const Tensor& t : xs) requires = requires || t.requires_grad();
  Tensor out = make(out_shape, requires);
  auto& ov = out.values();
  const int64_t out_row = static_cast<int64_t>(axis_total) * inner;
  int64_t offset = 0;
  for (const Tensor& t : xs) {
    const int64_t chunk = static_cast<int64_t>(t.dim(axis)) * inner;
    const auto& tv = t.values();
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(tv.begin() + o * chunk, chunk, ov.begin() + o * out_row + offset);
    offset += chunk;
  }

  if (requires)
    tape_.push_back([xs, out, axis, outer, inner, out_row]() mutable {
      const auto& gout = out.grad();
      int64_t offset = 0;
      for (Tensor& t : xs) {
        const int64_t chunk = static_cast<int64_t>(t.dim(axis)) * inner;
        if (t.requires_grad()) {
          auto& gt = t.grad();
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < chunk; ++i)
              gt[o * chunk + i] += gout[o * out_row + offset + i];
        }
        offset += chunk;
      }
    });
  return out;
}

Tensor Graph::upsample_nearest(const Tensor& x, int out_h, int out_w) {
  if (x.rank() != 4) throw std::invalid_argument("upsample_nearest: expected 4-d input");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("upsample_nearest: bad output size");
  check_finite(x.values(), "upsample input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = make({n, c, out_h, out_w}, x.requires_grad());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      const size_t ib = (static_cast<size_t>(ni) * c + ci) * h * w;
      const size_t ob = (static_cast<size_t>(ni) * c + ci) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const int iy = static_cast<int>(static_cast<int64_t>(oy) * h / out_h);
        for (int ox = 0; ox < out_w; ++ox) {
          const int ix = static_cast<int>(static_cast<int64_t>(ox) * w / out_w);
          ov[ob + static_cast<size_t>(oy) * out_w + ox] = xv[ib + static_cast<size_t>(iy) * w + ix];
        }
      }
    }
  if (out.requires_grad())
    tape_.push_back([x, out, n, c, h, w, out_h, out_w]() mutable {
      auto& gx = x.grad();
      const auto& gout = out.grad();
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
          const size_t ib = (static_cast<size_t>(ni) * c + ci) * h * w;
          const size_t ob = (static_cast<size_t>(ni) * c + ci) * out_h * out_w;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = static_cast<int>(static_cast<int64_t>(oy) * h / out_h);
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = static_cast<int>(static_cast<int64_t>(ox) * w / out_w);
              gx[ib + static_cast<size_t>(iy) * w + ix] +=
                  gout[ob + static_cast<size_t>(oy) * out_w + ox];
            }
          }
        }
    });
  return out;
}

Tensor Graph::per_pixel_rows(const Tensor& x) {
  if (x.rank() != 4) throw std::invalid_argument("per_pixel_rows: expected 4-d input");
  const int n = x.dim(0), k = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = make({n * h * w, k}, x.requires_grad());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (int ni = 0; ni < n; ++ni)
    for (int ki = 0; ki < k; ++ki)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const size_t src = ((static_cast<size_t>(ni) * k + ki) * h + y) * w + xx;
          const size_t row = (static_cast<size_t>(ni) * h + y) * w + xx;
          ov[row * k + ki] = xv[src];
        }
  if (out.requires_grad())
    tape_.push_back([x, out, n, k, h, w]() mutable {
      auto& gx = x.grad();
      const auto& gout = out.grad();
      for (int ni = 0; ni < n; ++ni)
        for (int ki = 0; ki < k; ++ki)
          for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
              const size_t src = ((static_cast<size_t>(ni) * k + ki) * h + y) * w + xx;
              const size_t row = (static_cast<size_t>(ni) * h + y) * w + xx;
              gx[src] += gout[row * k + ki];
            }
    });
  return out;
}

Tensor Graph::softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw std::invalid_argument("softmax_cross_entropy: expected N x K");
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  for (int l : labels)
    if (l < 0 || l >= k) throw std::invalid_argument("softmax_cross_entropy: label out of range");
  check_finite(logits.values(), "softmax_cross_entropy logits");

  const auto& zv = logits.values();
  std::vector<double> probs(static_cast<size_t>(n) * k);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* z = zv.data() + static_cast<size_t>(i) * k;
    double m = z[0];
    for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(z[j] - m);
    const double log_sum = std::log(sum) + m;
    for (int j = 0; j < k; ++j) probs[static_cast<size_t>(i) * k + j] = std::exp(z[j] - log_sum);
    loss += log_sum - z[labels[i]];
  }
  loss /= n;
  if (!std::isfinite(loss)) throw std::runtime_error("softmax_cross_entropy: non-finite loss");

  Tensor out = make({1}, logits.requires_grad());
  out.values()[0] = loss;
  if (out.requires_grad())
    tape_.push_back([logits, out, labels, probs = std::move(probs), n, k]() mutable {
      auto& gz = logits.grad();
      const double g = out.grad()[0] / n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
          const double onehot = labels[i] == j ? 1.0 : 0.0;
          gz[static_cast<size_t>(i) * k + j] += g * (probs[static_cast<size_t>(i) * k + j] - onehot);
        }
    });
  return out;
}

Tensor Graph::weighted_sum(const Tensor& x, std::vector<double> weights) {
  if (static_cast<int64_t>(weights.size()) != x.size())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  check_finite(x.values(), "weighted_sum input");
  Tensor out = make({1}, x.requires_grad());
  double acc = 0.0;
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) acc += xv[i] * weights[i];
  out.values()[0] = acc;
  if (out.requires_grad())
    tape_.push_back([x, out, weights = std::move(weights)]() mutable {
      auto& gx = x.grad();
      const double g = out.grad()[0];
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g * weights[i];
    });
  return out;
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  if (!loss.requires_grad())
    throw std::invalid_argument("backward: loss does not depend on any differentiable tensor");
  Tensor seed = loss;  // handles share storage
  seed.grad()[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  tape_.clear();
}

// ---------------------------------------------------------------------------

void sgd_step(std::span<Tensor> params, double learning_rate) {
  for (Tensor& p : params) {
    auto& v = p.values();
    const auto& g = p.grad();
    for (size_t i = 0; i < v.size(); ++i) {
      v[i] -= learning_rate * g[i];
      if (!std::isfinite(v[i])) throw std::runtime_error("sgd_step: parameter became non-finite");
    }
  }
}

void zero_grad(std::span<Tensor> params) {
  for (Tensor& p : params) p.zero_grad();
}

Tensor xavier_uniform(std::vector<int> shape, int fan_in, int fan_out, Prng& rng,
                      std::string name) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  t.set_name(std::move(name));
  return t;
}

double grad_check(const std::function<Tensor(Graph&, const std::vector<Tensor>&)>& op,
                  std::vector<Tensor> inputs, double epsilon, uint64_t seed) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Graph g;
  Tensor out = op(g, inputs);
  Prng rng(Prng::mix(seed, 0x67726164));
  std::vector<double> proj(static_cast<size_t>(out.size()));
  for (double& v : proj) v = rng.uniform(-1.0, 1.0);
  Tensor loss = g.weighted_sum(out, proj);
  g.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const Tensor& t : inputs) analytic.push_back(t.grad());

  auto eval = [&]() {
    Graph g2;
    Tensor o = op(g2, inputs);
    const auto& ov = o.values();
    double acc = 0.0;
    for (size_t i = 0; i < ov.size(); ++i) acc += ov[i] * proj[i];
    return acc;
  };

  double max_err = 0.0;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& v = inputs[ti].values();
    for (size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + epsilon;
      const double plus = eval();
      v[i] = orig - epsilon;
      const double minus = eval();
      v[i] = orig;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[ti][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const Tensor> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write("DMK1", 4);
  write_raw<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const Tensor& p : params) {
    const std::string& name = p.name();
    write_raw<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw<uint32_t>(out, static_cast<uint32_t>(p.rank()));
    for (int d : p.shape()) write_raw<uint32_t>(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(p.values().data()),
              static_cast<std::streamsize>(p.values().size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

std::vector<Tensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DMK1", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const uint32_t count = read_raw<uint32_t>(in);
  std::vector<Tensor> params;
  params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_raw<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rank = read_raw<uint32_t>(in);
    std::vector<int> shape(rank);
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(read_raw<uint32_t>(in));
      n *= shape[d];
    }
    std::vector<double> values(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor payload");
    Tensor t = Tensor::from_values(std::move(shape), std::move(values), true);
    t.set_name(std::move(name));
    params.push_back(std::move(t));
  }
  return params;
}

}  // namespace dmk::ad
