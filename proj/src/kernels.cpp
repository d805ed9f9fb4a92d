#include "dmk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "dmk/parallel.hpp"

namespace dmk::kernels {

namespace {

inline double conv_out_cell(const double* in, const double* kern, const Conv2dDims& d, int n,
                            int f, int oy, int ox) {
  double acc = 0.0;
  const int iy0 = oy * d.stride - d.pad;
  const int ix0 = ox * d.stride - d.pad;
  for (int c = 0; c < d.c; ++c) {
    const double* in_c = in + (static_cast<size_t>(n) * d.c + c) * d.h * d.w;
    const double* k_c = kern + (static_cast<size_t>(f) * d.c + c) * d.kh * d.kw;
    for (int ky = 0; ky < d.kh; ++ky) {
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= d.h) continue;
      for (int kx = 0; kx < d.kw; ++kx) {
        const int ix = ix0 + kx;
        if (ix < 0 || ix >= d.w) continue;
        acc += in_c[iy * d.w + ix] * k_c[ky * d.kw + kx];
      }
    }
  }
  return acc;
}

inline double conv_gin_cell(const double* kern, const double* gout, const Conv2dDims& d, int n,
                            int c, int iy, int ix) {
  double acc = 0.0;
  for (int f = 0; f < d.f; ++f) {
    const double* g_f = gout + (static_cast<size_t>(n) * d.f + f) * d.oh * d.ow;
    const double* k_c = kern + (static_cast<size_t>(f) * d.c + c) * d.kh * d.kw;
    for (int ky = 0; ky < d.kh; ++ky) {
      const int oy_num = iy + d.pad - ky;
      if (oy_num < 0 || oy_num % d.stride != 0) continue;
      const int oy = oy_num / d.stride;
      if (oy >= d.oh) continue;
      for (int kx = 0; kx < d.kw; ++kx) {
        const int ox_num = ix + d.pad - kx;
        if (ox_num < 0 || ox_num % d.stride != 0) continue;
        const int ox = ox_num / d.stride;
        if (ox >= d.ow) continue;
        acc += k_c[ky * d.kw + kx] * g_f[oy * d.ow + ox];
      }
    }
  }
  return acc;
}

inline double conv_gkern_cell(const double* in, const double* gout, const Conv2dDims& d, int f,
                              int c, int ky, int kx) {
  double acc = 0.0;
  for (int n = 0; n < d.n; ++n) {
    const double* in_c = in + (static_cast<size_t>(n) * d.c + c) * d.h * d.w;
    const double* g_f = gout + (static_cast<size_t>(n) * d.f + f) * d.oh * d.ow;
    for (int oy = 0; oy < d.oh; ++oy) {
      const int iy = oy * d.stride - d.pad + ky;
      if (iy < 0 || iy >= d.h) continue;
      for (int ox = 0; ox < d.ow; ++ox) {
        const int ix = ox * d.stride - d.pad + kx;
        if (ix < 0 || ix >= d.w) continue;
        acc += in_c[iy * d.w + ix] * g_f[oy * d.ow + ox];
      }
    }
  }
  return acc;
}

}  // namespace

void conv2d_forward_serial(const double* in, const double* kern, double* out,
                           const Conv2dDims& d) {
  for (int n = 0; n < d.n; ++n)
    for (int f = 0; f < d.f; ++f) {
      double* out_f = out + (static_cast<size_t>(n) * d.f + f) * d.oh * d.ow;
      for (int oy = 0; oy < d.oh; ++oy)
        for (int ox = 0; ox < d.ow; ++ox)
          out_f[oy * d.ow + ox] = conv_out_cell(in, kern, d, n, f, oy, ox);
    }
}

void conv2d_forward_omp(const double* in, const double* kern, double* out, const Conv2dDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n)
    for (int f = 0; f < d.f; ++f) {
      double* out_f = out + (static_cast<size_t>(n) * d.f + f) * d.oh * d.ow;
      for (int oy = 0; oy < d.oh; ++oy)
        for (int ox = 0; ox < d.ow; ++ox)
          out_f[oy * d.ow + ox] = conv_out_cell(in, kern, d, n, f, oy, ox);
    }
}

void conv2d_forward(const double* in, const double* kern, double* out, const Conv2dDims& d) {
  if (parallel::use_openmp())
    conv2d_forward_omp(in, kern, out, d);
  else
    conv2d_forward_serial(in, kern, out, d);
}

void conv2d_backward_input_serial(const double* kern, const double* gout, double* gin,
                                  const Conv2dDims& d) {
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.c; ++c) {
      double* gin_c = gin + (static_cast<size_t>(n) * d.c + c) * d.h * d.w;
      for (int iy = 0; iy < d.h; ++iy)
        for (int ix = 0; ix < d.w; ++ix)
          gin_c[iy * d.w + ix] += conv_gin_cell(kern, gout, d, n, c, iy, ix);
    }
}

void conv2d_backward_input_omp(const double* kern, const double* gout, double* gin,
                               const Conv2dDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.c; ++c) {
      double* gin_c = gin + (static_cast<size_t>(n) * d.c + c) * d.h * d.w;
      for (int iy = 0; iy < d.h; ++iy)
        for (int ix = 0; ix < d.w; ++ix)
          gin_c[iy * d.w + ix] += conv_gin_cell(kern, gout, d, n, c, iy, ix);
    }
}

void conv2d_backward_input(const double* kern, const double* gout, double* gin,
                           const Conv2dDims& d) {
  if (parallel::use_openmp())
    conv2d_backward_input_omp(kern, gout, gin, d);
  else
    conv2d_backward_input_serial(kern, gout, gin, d);
}

void conv2d_backward_weights_serial(const double* in, const double* gout, double* gkern,
                                    const Conv2dDims& d) {
  for (int f = 0; f < d.f; ++f)
    for (int c = 0; c < d.c; ++c) {
      double* gk = gkern + (static_cast<size_t>(f) * d.c + c) * d.kh * d.kw;
      for (int ky = 0; ky < d.kh; ++ky)
        for (int kx = 0; kx < d.kw; ++kx)
          gk[ky * d.kw + kx] += conv_gkern_cell(in, gout, d, f, c, ky, kx);
    }
}

void conv2d_backward_weights_omp(const double* in, const double* gout, double* gkern,
                                 const Conv2dDims& d) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int f = 0; f < d.f; ++f)
    for (int c = 0; c < d.c; ++c) {
      double* gk = gkern + (static_cast<size_t>(f) * d.c + c) * d.kh * d.kw;
      for (int ky = 0; ky < d.kh; ++ky)
        for (int kx = 0; kx < d.kw; ++kx)
          gk[ky * d.kw + kx] += conv_gkern_cell(in, gout, d, f, c, ky, kx);
    }
}

void conv2d_backward_weights(const double* in, const double* gout, double* gkern,
                             const Conv2dDims& d) {
  if (parallel::use_openmp())
    conv2d_backward_weights_omp(in, gout, gkern, d);
  else
    conv2d_backward_weights_serial(in, gout, gkern, d);
}

// ---------------------------------------------------------------------------
// SSIM

namespace {

inline double ssim_window(const double* a, const double* b, int w, const double* win, int wsize,
                          double c1, double c2, int oy, int ox) {
  double mu_a = 0.0, mu_b = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int wy = 0; wy < wsize; ++wy) {
    const double* ra = a + (oy + wy) * w + ox;
    const double* rb = b + (oy + wy) * w + ox;
    const double* rw = win + wy * wsize;
    for (int wx = 0; wx < wsize; ++wx) {
      const double va = ra[wx], vb = rb[wx], ww = rw[wx];
      mu_a += ww * va;
      mu_b += ww * vb;
      saa += ww * va * va;
      sbb += ww * vb * vb;
      sab += ww * va * vb;
    }
  }
  const double var_a = saa - mu_a * mu_a;
  const double var_b = sbb - mu_b * mu_b;
  const double cov = sab - mu_a * mu_b;
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

}  // namespace

void ssim_map_serial(const double* a, const double* b, int w, int h, const double* win, int wsize,
                     double c1, double c2, double* map) {
  const int mw = w - wsize + 1, mh = h - wsize + 1;
  for (int oy = 0; oy < mh; ++oy)
    for (int ox = 0; ox < mw; ++ox)
      map[oy * mw + ox] = ssim_window(a, b, w, win, wsize, c1, c2, oy, ox);
}

void ssim_map_omp(const double* a, const double* b, int w, int h, const double* win, int wsize,
                  double c1, double c2, double* map) {
  const int mw = w - wsize + 1, mh = h - wsize + 1;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < mh; ++oy)
    for (int ox = 0; ox < mw; ++ox)
      map[oy * mw + ox] = ssim_window(a, b, w, win, wsize, c1, c2, oy, ox);
}

void ssim_map(const double* a, const double* b, int w, int h, const double* win, int wsize,
              double c1, double c2, double* map) {
  if (parallel::use_openmp())
    ssim_map_omp(a, b, w, h, win, wsize, c1, c2, map);
  else
    ssim_map_serial(a, b, w, h, win, wsize, c1, c2, map);
}

// ---------------------------------------------------------------------------
// Resize

namespace {

inline void resize_row(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh,
                       int oy) {
  const double sy = (oy + 0.5) * static_cast<double>(sh) / dh - 0.5;
  const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, sh - 1);
  const int y1 = std::min(y0 + 1, sh - 1);
  const double ty = std::clamp(sy - std::floor(sy), 0.0, 1.0);
  for (int ox = 0; ox < dw; ++ox) {
    const double sx = (ox + 0.5) * static_cast<double>(sw) / dw - 0.5;
    const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, sw - 1);
    const int x1 = std::min(x0 + 1, sw - 1);
    const double tx = std::clamp(sx - std::floor(sx), 0.0, 1.0);
    for (int c = 0; c < ch; ++c) {
      const double v00 = src[(y0 * sw + x0) * ch + c];
      const double v01 = src[(y0 * sw + x1) * ch + c];
      const double v10 = src[(y1 * sw + x0) * ch + c];
      const double v11 = src[(y1 * sw + x1) * ch + c];
      const double top = v00 + (v01 - v00) * tx;
      const double bot = v10 + (v11 - v10) * tx;
      dst[(oy * dw + ox) * ch + c] = top + (bot - top) * ty;
    }
  }
}

}  // namespace

void resize_bilinear_serial(const double* src, int sw, int sh, int ch, double* dst, int dw,
                            int dh) {
  for (int oy = 0; oy < dh; ++oy) resize_row(src, sw, sh, ch, dst, dw, dh, oy);
}

void resize_bilinear_omp(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh) {
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < dh; ++oy) resize_row(src, sw, sh, ch, dst, dw, dh, oy);
}

void resize_bilinear(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh) {
  if (parallel::use_openmp())
    resize_bilinear_omp(src, sw, sh, ch, dst, dw, dh);
  else
    resize_bilinear_serial(src, sw, sh, ch, dst, dw, dh);
}

// ---------------------------------------------------------------------------
// Confusion counts

void confusion_accumulate_serial(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                                 uint64_t* counts) {
  for (size_t i = 0; i < count; ++i) counts[gt[i] * k + pred[i]] += 1;
}

void confusion_accumulate_omp(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                              uint64_t* counts) {
  const int kk = k * k;
#pragma omp parallel
  {
    std::vector<uint64_t> local(static_cast<size_t>(kk), 0);
#pragma omp for schedule(static)
    for (long long i = 0; i < static_cast<long long>(count); ++i)
      local[gt[i] * k + pred[i]] += 1;
    // Integer sums commute, so the merge order cannot change the result.
#pragma omp critical
    for (int j = 0; j < kk; ++j) counts[j] += local[j];
  }
}

void confusion_accumulate(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                          uint64_t* counts) {
  if (parallel::use_openmp())
    confusion_accumulate_omp(gt, pred, count, k, counts);
  else
    confusion_accumulate_serial(gt, pred, count, k, counts);
}

// ---------------------------------------------------------------------------
// Scanline fill

namespace {

inline void fill_row(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w,
                     int row, std::vector<double>& xs) {
  const double yc = row + 0.5;
  xs.clear();
  for (int i = 0; i < nedges; ++i) {
    const ScanEdge& e = edges[i];
    // Half-open rule in y: horizontal edges never cross, shared vertices
    // count once.
    const bool crosses = (e.y0 <= yc && e.y1 > yc) || (e.y1 <= yc && e.y0 > yc);
    if (!crosses) continue;
    xs.push_back(e.x0 + (yc - e.y0) * (e.x1 - e.x0) / (e.y1 - e.y0));
  }
  std::sort(xs.begin(), xs.end());
  for (size_t i = 0; i + 1 < xs.size(); i += 2) {
    int c0 = static_cast<int>(std::ceil(xs[i] - 0.5));
    int c1 = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
    c0 = std::max(c0, 0);
    c1 = std::min(c1, w - 1);
    for (int c = c0; c <= c1; ++c) grid[row * w + c] = value;
  }
}

}  // namespace

void scanline_fill_serial(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w,
                          int h, int row0, int row1) {
  (void)h;
  std::vector<double> xs;
  for (int row = row0; row <= row1; ++row) fill_row(edges, nedges, value, grid, w, row, xs);
}

void scanline_fill_omp(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w,
                       int h, int row0, int row1) {
  (void)h;
#pragma omp parallel
  {
    std::vector<double> xs;
#pragma omp for schedule(static)
    for (int row = row0; row <= row1; ++row) fill_row(edges, nedges, value, grid, w, row, xs);
  }
}

void scanline_fill(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w, int h,
                   int row0, int row1) {
  if (parallel::use_openmp() && row1 - row0 > 64)
    scanline_fill_omp(edges, nedges, value, grid, w, h, row0, row1);
  else
    scanline_fill_serial(edges, nedges, value, grid, w, h, row0, row1);
}

}  // namespace dmk::kernels
