#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "uwsu/imaging/image.hpp"

namespace uwsu::imaging {

// Floor on exp(-beta(z) z) before dividing in restore().
inline constexpr double kMinTransmission = 1e-6;

// Per-channel attenuation coefficient, either constant or piecewise linear in
// depth. Piecewise curves hold their end values outside the knot range.
class AttenuationModel {
 public:
  struct Knot {
    double z;
    double beta;
  };

  AttenuationModel() : AttenuationModel(Rgb{0.0, 0.0, 0.0}) {}
  explicit AttenuationModel(const Rgb& beta);
  explicit AttenuationModel(std::array<std::vector<Knot>, 3> knots);

  double beta(int channel, double z) const;
  bool is_constant() const noexcept { return constant_; }
  const Rgb& constant_beta() const noexcept { return beta_; }
  const std::array<std::vector<Knot>, 3>& knots() const noexcept { return knots_; }

 private:
  bool constant_ = true;
  Rgb beta_{};
  std::array<std::vector<Knot>, 3> knots_;
};

// Per-channel veiling light, each component in [0, 1].
struct Backscatter {
  Rgb b{};

  void validate() const;
  friend bool operator==(const Backscatter&, const Backscatter&) = default;
};

// Non-overlapping square patches anchored at the top-left corner. Pixels past
// the last full patch in either direction do not belong to any patch.
class PatchGrid {
 public:
  PatchGrid(int image_height, int image_width, int patch_size);

  int patch_size() const noexcept { return patch_size_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int count() const noexcept { return rows_ * cols_; }

  // Throws DimensionError unless the grid was built for an image of this size.
  void check_fits(const RgbImage& image) const;

 private:
  int image_height_;
  int image_width_;
  int patch_size_;
  int rows_;
  int cols_;
};

// Counters filled by degrade/restore when a caller asks for them.
struct ImagingReport {
  std::size_t clamped_values = 0;    // outputs pulled back into [0, 1]
  std::size_t saturated_values = 0;  // transmission below kMinTransmission
};

// Per-value forms of the imaging model, templated so the round-trip property
// can be exercised in both precisions.
template <typename T>
T attenuate(T clean, T transmission, T backscatter) {
  return clean * transmission + backscatter;
}

template <typename T>
T unattenuate(T observed, T transmission, T backscatter) {
  return (observed - backscatter) / transmission;
}

// I = J exp(-beta(z) z) + B, clamped to [0, 1].
RgbImage degrade(const RgbImage& clean, const DepthMap& depth, const AttenuationModel& atten,
                 const Backscatter& back, ImagingReport* report = nullptr);

// J = (I - B) / exp(-beta(z) z), with the transmission floored at
// kMinTransmission and the result clamped to [0, 1].
RgbImage restore(const RgbImage& degraded, const DepthMap& depth, const AttenuationModel& atten,
                 const Backscatter& back, ImagingReport* report = nullptr);

// Row-major index of the patch with the lowest mean over all three channels.
// Ties resolve to the lowest index.
int select_dark_patch(const RgbImage& image, const PatchGrid& grid);

// Channel means of the dark patch.
Backscatter estimate_backscatter(const RgbImage& image, const PatchGrid& grid);

struct SceneSpec {
  int height = 32;
  int width = 32;
  double clean_min = 0.1;
  double clean_max = 0.8;
  double depth_min = 0.0;
  double depth_max = 2.0;
  AttenuationModel atten{Rgb{0.2, 0.3, 0.4}};
  Backscatter back{{0.05, 0.1, 0.15}};

  void validate() const;
};

struct SyntheticPair {
  RgbImage clean;
  DepthMap depth;
  RgbImage degraded;
};

// Deterministic for a fixed seed. The clean image is a smooth colour field
// plus noise; depth is a tilted plane plus noise, both kept inside the spec's
// ranges.
SyntheticPair synthesize_pair(std::uint64_t seed, const SceneSpec& spec);

}  // namespace uwsu::imaging
