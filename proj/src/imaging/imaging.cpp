#include "uwsu/imaging/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uwsu/common/error.hpp"
#include "uwsu/common/rng.hpp"

namespace uwsu::imaging {

RgbImage::RgbImage(int height, int width, double fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(height) +
                         "x" + std::to_string(width));
  }
  data_.assign(pixel_count() * 3, fill);
}

bool RgbImage::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DepthMap::DepthMap(int height, int width, double fill, double scale)
    : height_(height), width_(width), scale_(scale) {
  if (height <= 0 || width <= 0) {
    throw DimensionError("depth dimensions must be positive");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("depth scale must be positive and finite");
  }
  z_.assign(static_cast<std::size_t>(height) * width, fill);
}

void DepthMap::validate() const {
  for (double z : z_) {
    if (!std::isfinite(z) || z < 0.0) {
      throw ValidationError("depth values must be finite and non-negative");
    }
  }
}

AttenuationModel::AttenuationModel(const Rgb& beta) : constant_(true), beta_(beta) {
  for (double b : beta) {
    if (!std::isfinite(b) || b < 0.0) {
      throw ValidationError("attenuation coefficients must be finite and non-negative");
    }
  }
}

AttenuationModel::AttenuationModel(std::array<std::vector<Knot>, 3> knots)
    : constant_(false), knots_(std::move(knots)) {
  for (const auto& channel : knots_) {
    if (channel.empty()) {
      throw ValidationError("piecewise attenuation needs at least one knot per channel");
    }
    for (std::size_t i = 0; i < channel.size(); ++i) {
      if (!std::isfinite(channel[i].z) || !std::isfinite(channel[i].beta) ||
          channel[i].beta < 0.0) {
        throw ValidationError("attenuation knots must be finite with beta >= 0");
      }
      if (i > 0 && !(channel[i].z > channel[i - 1].z)) {
        throw ValidationError("attenuation knot depths must be strictly increasing");
      }
    }
  }
}

double AttenuationModel::beta(int channel, double z) const {
  if (constant_) return beta_[channel];
  const auto& k = knots_[channel];
  if (z <= k.front().z) return k.front().beta;
  if (z >= k.back().z) return k.back().beta;
  auto hi = std::upper_bound(k.begin(), k.end(), z,
                             [](double value, const Knot& knot) { return value < knot.z; });
  auto lo = hi - 1;
  const double t = (z - lo->z) / (hi->z - lo->z);
  return lo->beta + t * (hi->beta - lo->beta);
}

void Backscatter::validate() const {
  for (double v : b) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("backscatter components must lie in [0, 1]");
    }
  }
}

PatchGrid::PatchGrid(int image_height, int image_width, int patch_size)
    : image_height_(image_height), image_width_(image_width), patch_size_(patch_size) {
  if (patch_size <= 0) throw ValidationError("patch size must be positive");
  rows_ = image_height / patch_size;
  cols_ = image_width / patch_size;
  if (rows_ < 1 || cols_ < 1) {
    throw DimensionError("image " + std::to_string(image_height) + "x" +
                         std::to_string(image_width) + " is smaller than patch size " +
                         std::to_string(patch_size));
  }
}

void PatchGrid::check_fits(const RgbImage& image) const {
  if (image.height() != image_height_ || image.width() != image_width_) {
    throw DimensionError("patch grid was built for a different image size");
  }
}

namespace {

void check_pair(const RgbImage& image, const DepthMap& depth, const Backscatter& back) {
  if (image.height() != depth.height() || image.width() != depth.width()) {
    throw DimensionError("image and depth map differ in size");
  }
  if (!image.all_finite()) throw ValidationError("image contains non-finite values");
  depth.validate();
  back.validate();
}

double clamp_unit(double v, ImagingReport* report) {
  if (v < 0.0 || v > 1.0) {
    if (report) ++report->clamped_values;
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

}  // namespace

RgbImage degrade(const RgbImage& clean, const DepthMap& depth, const AttenuationModel& atten,
                 const Backscatter& back, ImagingReport* report) {
  check_pair(clean, depth, back);
  RgbImage out(clean.height(), clean.width());
  for (int y = 0; y < clean.height(); ++y) {
    for (int x = 0; x < clean.width(); ++x) {
      const double z = depth.at(y, x);
      for (int c = 0; c < 3; ++c) {
        const double t = std::exp(-atten.beta(c, z) * z);
        out.at(y, x, c) = clamp_unit(attenuate(clean.at(y, x, c), t, back.b[c]), report);
      }
    }
  }
  return out;
}

RgbImage restore(const RgbImage& degraded, const DepthMap& depth, const AttenuationModel& atten,
                 const Backscatter& back, ImagingReport* report) {
  check_pair(degraded, depth, back);
  RgbImage out(degraded.height(), degraded.width());
  for (int y = 0; y < degraded.height(); ++y) {
    for (int x = 0; x < degraded.width(); ++x) {
      const double z = depth.at(y, x);
      for (int c = 0; c < 3; ++c) {
        double t = std::exp(-atten.beta(c, z) * z);
        if (t < kMinTransmission) {
          t = kMinTransmission;
          if (report) ++report->saturated_values;
        }
        out.at(y, x, c) = clamp_unit(unattenuate(degraded.at(y, x, c), t, back.b[c]), report);
      }
    }
  }
  return out;
}

namespace {

double patch_sum(const RgbImage& image, int row, int col, int p, int channel) {
  double sum = 0.0;
  for (int y = row * p; y < (row + 1) * p; ++y) {
    for (int x = col * p; x < (col + 1) * p; ++x) sum += image.at(y, x, channel);
  }
  return sum;
}

}  // namespace

int select_dark_patch(const RgbImage& image, const PatchGrid& grid) {
  grid.check_fits(image);
  const int p = grid.patch_size();
  int best = 0;
  double best_sum = 0.0;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      // Every patch has the same pixel count, so comparing sums orders means.
      double sum = 0.0;
      for (int y = r * p; y < (r + 1) * p; ++y) {
        for (int x = c * p; x < (c + 1) * p; ++x) {
          sum += image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2);
        }
      }
      const int k = r * grid.cols() + c;
      if (k == 0 || sum < best_sum) {
        best = k;
        best_sum = sum;
      }
    }
  }
  return best;
}

Backscatter estimate_backscatter(const RgbImage& image, const PatchGrid& grid) {
  const int k = select_dark_patch(image, grid);
  const int p = grid.patch_size();
  const double n = static_cast<double>(p) * p;
  Backscatter out;
  for (int c = 0; c < 3; ++c) {
    out.b[c] = std::clamp(patch_sum(image, k / grid.cols(), k % grid.cols(), p, c) / n, 0.0, 1.0);
  }
  return out;
}

void SceneSpec::validate() const {
  if (height <= 0 || width <= 0) throw ValidationError("scene size must be positive");
  if (!(clean_min >= 0.0 && clean_min <= clean_max && clean_max <= 1.0)) {
    throw ValidationError("clean value range must satisfy 0 <= min <= max <= 1");
  }
  if (!(depth_min >= 0.0 && depth_min <= depth_max && std::isfinite(depth_max))) {
    throw ValidationError("depth range must satisfy 0 <= min <= max < inf");
  }
  back.validate();
}

SyntheticPair synthesize_pair(std::uint64_t seed, const SceneSpec& spec) {
  spec.validate();
  Rng rng(seed);
  SyntheticPair pair{RgbImage(spec.height, spec.width), DepthMap(spec.height, spec.width),
                     RgbImage()};

  const double span = spec.clean_max - spec.clean_min;
  for (int c = 0; c < 3; ++c) {
    const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double u = static_cast<double>(x) / spec.width, v = static_cast<double>(y) / spec.height;
        const double wave = 0.5 + 0.35 * std::sin(6.283185307179586 * (fx * u + fy * v) + phase);
        const double noise = 0.15 * (rng.uniform() - 0.5);
        pair.clean.at(y, x, c) = spec.clean_min + span * std::clamp(wave + noise, 0.0, 1.0);
      }
    }
  }

  const double gx = rng.uniform(), gy = rng.uniform();
  const double dz = spec.depth_max - spec.depth_min;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double u = static_cast<double>(x) / spec.width, v = static_cast<double>(y) / spec.height;
      const double plane = (gx * u + gy * v) / std::max(gx + gy, 1e-12);
      const double noise = 0.1 * (rng.uniform() - 0.5);
      pair.depth.at(y, x) = spec.depth_min + dz * std::clamp(plane + noise, 0.0, 1.0);
    }
  }

  pair.degraded = degrade(pair.clean, pair.depth, spec.atten, spec.back);
  return pair;
}

}  // namespace uwsu::imaging
