#pragma once

#include <vector>

namespace dmk {

// Interleaved row-major float image, nominal range [0,255]. Difference
// images carry signed values in [-255,255].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c)
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, 0.0) {}

  double at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const ImageBuffer&) const = default;
};

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int window = 11;      // Gaussian window side
  double sigma = 1.5;
};

// post - pre, channel-wise, signed and unclipped.
ImageBuffer subtract(const ImageBuffer& pre, const ImageBuffer& post);

// Mean local SSIM over valid window positions. RGB inputs are reduced to
// luma (0.299 R + 0.587 G + 0.114 B) first.
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& params = {});

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);

// Divide by 255.
ImageBuffer normalize(const ImageBuffer& img);

ImageBuffer to_luma(const ImageBuffer& img);

// The normalized window used by ssim; exposed for tests.
std::vector<double> gaussian_window(int side, double sigma);

}  // namespace dmk
