#pragma once

#include <string>
#include <vector>

#include "uwsu/imaging/image.hpp"
#include "uwsu/vfe/checkpoint.hpp"
#include "uwsu/vfe/vfe.hpp"

namespace uwsu::pipeline {

using vfe::Matrix;
using vfe::RowVector;
using vfe::TokenGrid;

struct PipelineConfig {
  int patch = 8;        // image encoder patch size
  int depth_patch = 8;  // depth encoder patch size
  int dim = 16;         // vision token width d
  int depth_dim = 8;    // depth token width e
  int hidden = 16;      // absorption MLP width
  int lang_dim = 16;    // projector output width d_l
  double w_max = 10.0;

  void validate() const;
};

// Region kept by a center crop to a multiple of the patch size.
struct CropInfo {
  int offset_y = 0;
  int offset_x = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const CropInfo&, const CropInfo&) = default;
};

// Throws ValidationError if no full patch fits.
CropInfo center_crop_info(int height, int width, int patch);
imaging::RgbImage crop(const imaging::RgbImage& image, const CropInfo& info);
imaging::DepthMap crop(const imaging::DepthMap& depth, const CropInfo& info);

// Fixed sin/cos table, n x d: even columns sin, odd columns cos.
Matrix sinusoidal_positions(int n, int d);

struct ToyEncoderParams {
  int patch = 8;
  Matrix weight;  // 3p^2 x d, rows in (dy, dx, channel) order
  Matrix bias;    // 1 x d
};

struct ToyDepthEncoderParams {
  int patch = 8;
  Matrix weight;  // p^2 x e, rows in (dy, dx) order
  Matrix bias;    // 1 x e
};

// x -> GELU(x W1 + b1) W2 + b2, shared by both token streams.
struct ProjectorParams {
  Matrix w1;  // d x d_l
  Matrix b1;  // 1 x d_l
  Matrix w2;  // d_l x d_l
  Matrix b2;  // 1 x d_l
};

struct PipelineParameters {
  ToyEncoderParams image;
  ToyDepthEncoderParams depth;
  vfe::VfeParameters vfe;
  ProjectorParams projector;

  static PipelineParameters initialize(const PipelineConfig& config, Rng& rng);
  // Like initialize, but every tensor (including biases and the last MLP
  // layer) is non-zero.
  static PipelineParameters random(const PipelineConfig& config, Rng& rng, double vfe_scale = 0.3);
  static PipelineParameters zeros(const PipelineConfig& config);

  PipelineConfig config() const;
  void validate() const;

  std::vector<vfe::NamedTensor> tensors();
  std::vector<vfe::ConstNamedTensor> tensors() const;
};

// Flattened patches of a crop-aligned raster, one row per patch.
Matrix image_patches(const imaging::RgbImage& image, int patch);
Matrix depth_patches(const imaging::DepthMap& depth, int patch);

// Center-crops, then patch-embeds. Token i = flatten(patch_i) W + b + pos_i.
vfe::VisionFeature encode_image(const imaging::RgbImage& image, const ToyEncoderParams& params,
                                CropInfo* crop_out = nullptr);

// Same as encode_image for one channel and without a position term.
vfe::DepthFeature encode_depth(const imaging::DepthMap& depth, const ToyDepthEncoderParams& params,
                               CropInfo* crop_out = nullptr);

double gelu(double x);
double gelu_derivative(double x);

Matrix project(const Matrix& tokens, const ProjectorParams& params);

struct PipelineOutput {
  Matrix original;  // v_hat, n x d_l
  Matrix enhanced;  // v_hat_e, n x d_l
  int dark_patch = 0;
  TokenGrid image_grid;
  TokenGrid depth_grid;
  CropInfo image_crop;
  CropInfo depth_crop;
};

struct ProjectorTrace {
  Matrix input;
  Matrix hidden_pre;
  Matrix hidden;
  Matrix output;
};

struct PipelineTrace {
  Matrix image_patches;
  Matrix depth_patches;
  vfe::VisionFeature v;
  vfe::DepthFeature depth_feature;
  vfe::VfeTrace vfe;
  ProjectorTrace original;
  ProjectorTrace enhanced;
  PipelineOutput output;
};

// The depth map must have the image's dimensions. The dark patch is chosen on
// the cropped image with the encoder's patch grid.
PipelineTrace forward_trace(const imaging::RgbImage& image, const imaging::DepthMap& depth,
                            const PipelineParameters& params);
PipelineOutput forward(const imaging::RgbImage& image, const imaging::DepthMap& depth,
                       const PipelineParameters& params);

// Reverse pass given dL/dv_hat and dL/dv_hat_e. Passing a zero matrix for one
// stream gives the other stream's gradient alone.
PipelineParameters backward(const PipelineTrace& trace, const PipelineParameters& params,
                            const Matrix& d_original, const Matrix& d_enhanced);

// Loss = ||v_hat||^2 + ||v_hat_e||^2 over every trainable tensor.
vfe::GradCheckReport end_to_end_grad_check(PipelineParameters params, const imaging::RgbImage& image,
                                           const imaging::DepthMap& depth, double step = 1e-5);

// Both streams as tensors "stream.original" then "stream.enhanced", with crop
// offsets, k and grid sizes in the metadata.
vfe::TensorManifest emit_streams(const PipelineOutput& output);

vfe::TensorManifest save_pipeline(const PipelineParameters& params);
PipelineParameters load_pipeline(const vfe::TensorManifest& manifest);

}  // namespace uwsu::pipeline
