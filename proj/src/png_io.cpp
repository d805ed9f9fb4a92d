#include "dmk/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

#include <png.h>

namespace dmk {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawImage {
  int width = 0, height = 0, channels = 0;
  std::vector<uint8_t> bytes;
};

RawImage read_png_bytes(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open PNG " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit gray or RGB.
  png_set_strip_16(png);
  png_set_packing(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  RawImage img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG channel count in " + path.string());
  }
  img.bytes.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.bytes.data() + static_cast<size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png_bytes(const RawImage& img, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write PNG " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode PNG " + path.string());
  }
  png_init_io(png, fp.get());
  // Pinned encoder settings keep reruns byte-identical.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.bytes.data() +
                                    static_cast<size_t>(y) * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  const RawImage raw = read_png_bytes(path);
  ImageBuffer img(raw.width, raw.height, raw.channels);
  for (size_t i = 0; i < raw.bytes.size(); ++i) img.data[i] = raw.bytes[i];
  return img;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png: expected 1 or 3 channels");
  RawImage raw{img.width, img.height, img.channels, {}};
  raw.bytes.resize(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) raw.bytes[i] = to_byte(img.data[i]);
  write_png_bytes(raw, path);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const RawImage raw = read_png_bytes(path);
  if (raw.channels != 1)
    throw std::runtime_error("mask PNG must be single-channel: " + path.string());
  Mask mask(raw.width, raw.height);
  for (size_t i = 0; i < raw.bytes.size(); ++i) {
    if (raw.bytes[i] > 4)
      throw std::runtime_error("mask PNG has pixel value > 4: " + path.string());
    mask.data[i] = raw.bytes[i];
  }
  return mask;
}

void write_mask_png(const Mask& mask, const std::filesystem::path& path) {
  RawImage raw{mask.width, mask.height, 1, mask.data};
  write_png_bytes(raw, path);
}

}  // namespace dmk
