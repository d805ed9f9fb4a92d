#include "dmk/imaging.hpp"

#include <cmath>
#include <stdexcept>

#include "dmk/kernels.hpp"

namespace dmk {

ImageBuffer subtract(const ImageBuffer& pre, const ImageBuffer& post) {
  if (pre.width != post.width || pre.height != post.height || pre.channels != post.channels)
    throw std::invalid_argument("subtract: dimension mismatch");
  ImageBuffer out(pre.width, pre.height, pre.channels);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = post.data[i] - pre.data[i];
  return out;
}

ImageBuffer to_luma(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw std::invalid_argument("to_luma: expected 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return out;
}

std::vector<double> gaussian_window(int side, double sigma) {
  std::vector<double> win(static_cast<size_t>(side) * side);
  const double half = (side - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double dx = x - half, dy = y - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      win[static_cast<size_t>(y) * side + x] = v;
      sum += v;
    }
  for (double& v : win) v /= sum;
  return win;
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& params) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("ssim: dimension mismatch");
  if (a.width < params.window || a.height < params.window)
    throw std::invalid_argument("ssim: image smaller than the window");
  const ImageBuffer la = to_luma(a);
  const ImageBuffer lb = to_luma(b);
  const auto win = gaussian_window(params.window, params.sigma);
  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  const int mw = a.width - params.window + 1;
  const int mh = a.height - params.window + 1;
  std::vector<double> map(static_cast<size_t>(mw) * mh);
  kernels::ssim_map(la.data.data(), lb.data.data(), a.width, a.height, win.data(), params.window,
                    c1, c2, map.data());
  double sum = 0.0;
  for (double v : map) sum += v;
  return sum / static_cast<double>(map.size());
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_bilinear: bad output size");
  if (img.width < 1 || img.height < 1)
    throw std::invalid_argument("resize_bilinear: empty input");
  ImageBuffer out(out_w, out_h, img.channels);
  kernels::resize_bilinear(img.data.data(), img.width, img.height, img.channels, out.data.data(),
                           out_w, out_h);
  return out;
}

ImageBuffer normalize(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (double& v : out.data) v /= 255.0;
  return out;
}

}  // namespace dmk
