#pragma once

#include <filesystem>

#include "dmk/imaging.hpp"
#include "dmk/raster.hpp"

namespace dmk {

// 8-bit gray or RGB PNG. Values land in [0,255] as doubles; writing
// rounds-to-nearest and clamps. Encoder settings are fixed so identical
// pixels give identical bytes.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

// Single-channel mask PNG, pixel value = class id 0..4.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

}  // namespace dmk
