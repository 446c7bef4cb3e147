#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uwsu/imaging/image.hpp"

namespace uwsu::imaging {

// Decoded PNG samples before normalisation.
struct PngRaster {
  int height = 0;
  int width = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB)
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

PngRaster read_png_raster(const std::filesystem::path& path);
void write_png_raster(const std::filesystem::path& path, const PngRaster& raster);

// 8- or 16-bit RGB PNG to [0, 1] values (v / 255 or v / 65535). Gray and
// palette inputs are expanded; alpha is dropped. `bit_depth` receives the
// source depth when non-null.
RgbImage read_rgb_png(const std::filesystem::path& path, int* bit_depth = nullptr);

// Values are clamped to [0, 1] and rounded to the nearest level.
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image, int bit_depth = 8);

// Depth from a 16-bit gray PNG plus a JSON sidecar `<png>.json` holding
// {"scale": units-per-level}, or from the raw "UWDM" float32 format.
// The loader picks the format from the file's leading bytes.
DepthMap read_depth(const std::filesystem::path& path);

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale);

// Layout: "UWDM", u16 height, u16 width (little-endian), then height*width
// little-endian float32 values in row-major order.
void write_depth_raw(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth_raw(const std::filesystem::path& path);

std::filesystem::path depth_sidecar_path(const std::filesystem::path& png_path);

}  // namespace uwsu::imaging
