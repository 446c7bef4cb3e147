#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace uwsu::imaging {

// Linear-intensity RGB raster, row-major, interleaved R,G,B.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, double fill = 0.0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  double& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;
  bool same_shape(const RgbImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Scene distance per pixel. `scale` records units-per-level when the map was
// decoded from an integer raster; it is 1 for maps built in memory.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int height, int width, double fill = 0.0, double scale = 1.0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  double scale() const noexcept { return scale_; }

  double& at(int y, int x) noexcept { return z_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const noexcept { return z_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> values() noexcept { return z_; }
  std::span<const double> values() const noexcept { return z_; }

  // Throws ValidationError on negative or non-finite entries.
  void validate() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  double scale_ = 1.0;
  std::vector<double> z_;
};

using Rgb = std::array<double, 3>;

}  // namespace uwsu::imaging
