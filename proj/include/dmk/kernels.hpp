#pragma once

#include <cstddef>
#include <cstdint>

namespace dmk::kernels {

// Hot inner loops, each in two variants: a serial reference and an OpenMP
// version. Every parallel loop partitions output elements and keeps the
// serial summation order inside each element, so the two variants produce
// bit-identical results; the *_serial forms stay as the test oracle and
// the dispatching form picks a variant from dmk::parallel settings.

struct Conv2dDims {
  int n, c, h, w;      // input  N x C x H x W
  int f, kh, kw;       // kernels F x C x kh x kw
  int stride, pad;
  int oh, ow;          // output N x F x oh x ow
};

void conv2d_forward_serial(const double* in, const double* kern, double* out, const Conv2dDims& d);
void conv2d_forward_omp(const double* in, const double* kern, double* out, const Conv2dDims& d);
void conv2d_forward(const double* in, const double* kern, double* out, const Conv2dDims& d);

// Accumulate (+=) input gradients, gather form over input cells.
void conv2d_backward_input_serial(const double* kern, const double* gout, double* gin,
                                  const Conv2dDims& d);
void conv2d_backward_input_omp(const double* kern, const double* gout, double* gin,
                               const Conv2dDims& d);
void conv2d_backward_input(const double* kern, const double* gout, double* gin,
                           const Conv2dDims& d);

// Accumulate (+=) kernel gradients.
void conv2d_backward_weights_serial(const double* in, const double* gout, double* gkern,
                                    const Conv2dDims& d);
void conv2d_backward_weights_omp(const double* in, const double* gout, double* gkern,
                                 const Conv2dDims& d);
void conv2d_backward_weights(const double* in, const double* gout, double* gkern,
                             const Conv2dDims& d);

// Local SSIM map over valid window positions of two single-channel images.
// map is (h-wsize+1) x (w-wsize+1); win is a wsize x wsize weight grid
// summing to 1.
void ssim_map_serial(const double* a, const double* b, int w, int h, const double* win, int wsize,
                     double c1, double c2, double* map);
void ssim_map_omp(const double* a, const double* b, int w, int h, const double* win, int wsize,
                  double c1, double c2, double* map);
void ssim_map(const double* a, const double* b, int w, int h, const double* win, int wsize,
              double c1, double c2, double* map);

// Bilinear resize with half-pixel-center alignment; interleaved channels.
void resize_bilinear_serial(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh);
void resize_bilinear_omp(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh);
void resize_bilinear(const double* src, int sw, int sh, int ch, double* dst, int dw, int dh);

// counts[gt*k + pred] += 1 per element.
void confusion_accumulate_serial(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                                 uint64_t* counts);
void confusion_accumulate_omp(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                              uint64_t* counts);
void confusion_accumulate(const uint8_t* gt, const uint8_t* pred, size_t count, int k,
                          uint64_t* counts);

// Even-odd scanline fill of one polygon (rings flattened into directed
// edges) into a class grid. A pixel is covered iff its center
// (col+0.5,row+0.5) is inside.
struct ScanEdge {
  double x0, y0, x1, y1;
};

void scanline_fill_serial(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w,
                          int h, int row0, int row1);
void scanline_fill_omp(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w,
                       int h, int row0, int row1);
void scanline_fill(const ScanEdge* edges, int nedges, uint8_t value, uint8_t* grid, int w, int h,
                   int row0, int row1);

}  // namespace dmk::kernels
