#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "uwsu/common/rng.hpp"

namespace uwsu::vfe {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// n x d token matrix, one row per image patch.
using VisionFeature = Matrix;

struct TokenGrid {
  int rows = 1;
  int cols = 1;
  int count() const noexcept { return rows * cols; }
  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

// Depth tokens laid out row-major over `grid`.
struct DepthFeature {
  Matrix tokens;  // m x e
  TokenGrid grid;

  void validate() const;
};

struct NamedTensor {
  std::string name;
  Matrix* value;
};

struct ConstNamedTensor {
  std::string name;
  const Matrix* value;
};

// Learnable state of the enhancement module. Row vectors are stored as 1 x k
// matrices so every tensor can be visited uniformly.
struct VfeParameters {
  Matrix query_init;  // 1 x d
  Matrix w_q, w_k, w_v, w_o;  // d x d
  Matrix mlp_w1;  // e x h
  Matrix mlp_b1;  // 1 x h
  Matrix mlp_w2;  // h x d
  Matrix mlp_b2;  // 1 x d
  double w_max = 10.0;

  int dim() const noexcept { return static_cast<int>(w_q.rows()); }
  int depth_dim() const noexcept { return static_cast<int>(mlp_w1.rows()); }
  int hidden_dim() const noexcept { return static_cast<int>(mlp_w1.cols()); }

  // Zero query, scaled-orthogonal attention projections, random first MLP
  // layer and a zero last layer, so that W = 0 at the start.
  static VfeParameters initialize(int d, int e, int h, Rng& rng, double w_max = 10.0);

  // Every tensor drawn i.i.d. normal times `scale`; used by tests and the
  // self-check to exercise non-trivial parameter settings.
  static VfeParameters random(int d, int e, int h, Rng& rng, double scale, double w_max = 10.0);

  static VfeParameters zeros(int d, int e, int h, double w_max = 10.0);

  void validate() const;

  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
};

// softmax((q_in W_Q)(v W_K)^T / sqrt(d)) (v W_V) W_O with q_in = query_init +
// mean over the rows of v.
RowVector aggregate_global(const VisionFeature& v, const VfeParameters& params);

// s = v_k - q.
RowVector backscatter_response(const VisionFeature& v, int k, const RowVector& q);

// v - s, with s broadcast over rows.
Matrix remove_backscatter(const VisionFeature& v, const RowVector& s);

// Bilinear interpolation weights mapping tokens on `from` to tokens on `to`
// (half-pixel centres, edge clamped). Each row sums to 1.
Matrix bilinear_resample_matrix(const TokenGrid& from, const TokenGrid& to);

// clamp(MLP(resample(d_feat, target)), -w_max, w_max), one row per target
// token; hidden activation is max(0, .).
Matrix absorption_weights(const DepthFeature& d_feat, const TokenGrid& target,
                          const VfeParameters& params);

// centered * exp(W), elementwise; the division by exp(-W) written as a product.
Matrix restore_absorption(const Matrix& centered, const Matrix& w);

// v_e = (v - s) / exp(-W) = (v - s) * exp(W), elementwise.
Matrix enhance(const VisionFeature& v, int k, const DepthFeature& d_feat, const TokenGrid& grid,
               const VfeParameters& params);

// Intermediates of one forward pass, kept for the backward pass.
struct VfeTrace {
  RowVector mean;
  RowVector q_in;
  RowVector query;  // q_in W_Q
  Matrix keys;      // v W_K
  Matrix values;    // v W_V
  RowVector attention;
  RowVector context;
  RowVector q;
  RowVector s;
  Matrix resample;  // n x m
  Matrix aligned;   // n x e
  Matrix hidden_pre;
  Matrix hidden;
  Matrix w_raw;
  Matrix w;
  Matrix centered;  // v - s
  Matrix scale;     // exp(W)
  Matrix output;    // v_e
};

VfeTrace forward(const VisionFeature& v, int k, const DepthFeature& d_feat, const TokenGrid& grid,
                 const VfeParameters& params);

struct VfeGradients {
  VfeParameters params;  // same shapes as the forward parameters
  Matrix d_v;
  Matrix d_depth;
};

// Reverse-mode pass given dL/dv_e.
VfeGradients backward(const VfeTrace& trace, const VisionFeature& v, int k,
                      const DepthFeature& d_feat, const VfeParameters& params,
                      const Matrix& d_output);

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true gradient
// is zero from dividing finite-difference noise by ~0.
inline constexpr double kGradFloor = 1e-6;
double relative_error(double analytic, double numeric, double floor = kGradFloor);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
  bool all_finite = true;
  bool passed(double tolerance) const { return all_finite && max_relative_error < tolerance; }
};

// Central differences with step `step` over every parameter entry, compared
// against the analytic gradient of the given scalar loss. The floor passed to
// relative_error is kGradFloor * max(1, |loss|).
GradCheckReport compare_gradients(const std::vector<NamedTensor>& params,
                                  const std::vector<ConstNamedTensor>& analytic,
                                  const std::function<double()>& loss, double step = 1e-5);

// Loss: sum of squares of v_e.
GradCheckReport grad_check(VfeParameters params, const VisionFeature& v, int k,
                           const DepthFeature& d_feat, const TokenGrid& grid, double step = 1e-5);

}  // namespace uwsu::vfe
