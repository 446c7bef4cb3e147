#include "uwsu/vfe/vfe.hpp"

#include <algorithm>
#include <cmath>

#include "uwsu/common/error.hpp"

namespace uwsu::vfe {

namespace {

void require_finite(const Matrix& m, const char* stage) {
  if (!m.allFinite()) throw NumericError(stage, "non-finite values");
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + " has shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

void check_features(const VisionFeature& v, const VfeParameters& params) {
  if (v.rows() < 1 || v.cols() < 1) throw DimensionError("vision feature must be at least 1x1");
  if (v.cols() != params.dim()) {
    throw DimensionError("vision feature dim " + std::to_string(v.cols()) +
                         " does not match parameter dim " + std::to_string(params.dim()));
  }
  if (!v.allFinite()) throw ValidationError("vision feature contains non-finite values");
}

}  // namespace

void DepthFeature::validate() const {
  if (grid.rows < 1 || grid.cols < 1 || tokens.rows() != grid.count()) {
    throw DimensionError("depth grid " + std::to_string(grid.rows) + "x" +
                         std::to_string(grid.cols) + " does not match " +
                         std::to_string(tokens.rows()) + " depth tokens");
  }
  if (!tokens.allFinite()) throw ValidationError("depth feature contains non-finite values");
}

VfeParameters VfeParameters::zeros(int d, int e, int h, double w_max) {
  if (d < 1 || e < 1 || h < 1) throw ValidationError("VFE dimensions must be positive");
  VfeParameters p;
  p.query_init = Matrix::Zero(1, d);
  p.w_q = p.w_k = p.w_v = p.w_o = Matrix::Zero(d, d);
  p.mlp_w1 = Matrix::Zero(e, h);
  p.mlp_b1 = Matrix::Zero(1, h);
  p.mlp_w2 = Matrix::Zero(h, d);
  p.mlp_b2 = Matrix::Zero(1, d);
  p.w_max = w_max;
  return p;
}

VfeParameters VfeParameters::initialize(int d, int e, int h, Rng& rng, double w_max) {
  VfeParameters p = zeros(d, e, h, w_max);
  // Orthogonal factor of a Gaussian matrix; unit gain keeps token norms.
  constexpr double kGain = 1.0;
  for (Matrix* w : {&p.w_q, &p.w_k, &p.w_v, &p.w_o}) {
    Eigen::HouseholderQR<Matrix> qr(normal_matrix(d, d, rng, 1.0));
    *w = kGain * Matrix(qr.householderQ() * Matrix::Identity(d, d));
  }
  p.mlp_w1 = normal_matrix(e, h, rng, std::sqrt(2.0 / e));
  return p;
}

VfeParameters VfeParameters::random(int d, int e, int h, Rng& rng, double scale, double w_max) {
  VfeParameters p = zeros(d, e, h, w_max);
  for (auto& t : p.tensors()) *t.value = normal_matrix(t.value->rows(), t.value->cols(), rng, scale);
  return p;
}

void VfeParameters::validate() const {
  const int d = dim(), e = depth_dim(), h = hidden_dim();
  require_shape(query_init, 1, d, "query_init");
  require_shape(w_q, d, d, "w_q");
  require_shape(w_k, d, d, "w_k");
  require_shape(w_v, d, d, "w_v");
  require_shape(w_o, d, d, "w_o");
  require_shape(mlp_w1, e, h, "mlp_w1");
  require_shape(mlp_b1, 1, h, "mlp_b1");
  require_shape(mlp_w2, h, d, "mlp_w2");
  require_shape(mlp_b2, 1, d, "mlp_b2");
  for (const auto& t : tensors()) {
    if (!t.value->allFinite()) throw ValidationError("parameter " + t.name + " is not finite");
  }
  if (!(w_max >= 0.0) || !std::isfinite(w_max)) throw ValidationError("w_max must be finite and >= 0");
}

std::vector<NamedTensor> VfeParameters::tensors() {
  return {{"query_init", &query_init}, {"w_q", &w_q},       {"w_k", &w_k},
          {"w_v", &w_v},               {"w_o", &w_o},       {"mlp_w1", &mlp_w1},
          {"mlp_b1", &mlp_b1},         {"mlp_w2", &mlp_w2}, {"mlp_b2", &mlp_b2}};
}

std::vector<ConstNamedTensor> VfeParameters::tensors() const {
  return {{"query_init", &query_init}, {"w_q", &w_q},       {"w_k", &w_k},
          {"w_v", &w_v},               {"w_o", &w_o},       {"mlp_w1", &mlp_w1},
          {"mlp_b1", &mlp_b1},         {"mlp_w2", &mlp_w2}, {"mlp_b2", &mlp_b2}};
}

RowVector aggregate_global(const VisionFeature& v, const VfeParameters& params) {
  check_features(v, params);
  const RowVector q_in = params.query_init + v.colwise().mean();
  const RowVector query = q_in * params.w_q;
  const Matrix keys = v * params.w_k;
  RowVector logits = (query * keys.transpose()) / std::sqrt(static_cast<double>(v.cols()));
  require_finite(logits, "attention logits");
  logits.array() -= logits.maxCoeff();
  RowVector weights = logits.array().exp();
  weights /= weights.sum();
  RowVector q = (weights * (v * params.w_v)) * params.w_o;
  require_finite(q, "attention output");
  return q;
}

RowVector backscatter_response(const VisionFeature& v, int k, const RowVector& q) {
  if (k < 0 || k >= v.rows()) {
    throw IndexError("dark token index " + std::to_string(k) + " outside [0, " +
                     std::to_string(v.rows()) + ")");
  }
  if (q.cols() != v.cols()) throw DimensionError("query output dim does not match features");
  return v.row(k) - q;
}

Matrix remove_backscatter(const VisionFeature& v, const RowVector& s) {
  if (s.cols() != v.cols()) throw DimensionError("backscatter response dim does not match features");
  return v.rowwise() - s;
}

Matrix bilinear_resample_matrix(const TokenGrid& from, const TokenGrid& to) {
  if (from.rows < 1 || from.cols < 1 || to.rows < 1 || to.cols < 1) {
    throw DimensionError("token grids must be at least 1x1");
  }
  // 1-D weights along each axis; the 2-D weights are their outer product.
  auto axis = [](int src, int dst) {
    Matrix w = Matrix::Zero(dst, src);
    const double ratio = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      const double pos = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(pos));
      const int hi = std::min(lo + 1, src - 1);
      const double t = pos - lo;
      w(i, lo) += 1.0 - t;
      w(i, hi) += t;
    }
    return w;
  };
  const Matrix wy = axis(from.rows, to.rows);
  const Matrix wx = axis(from.cols, to.cols);
  Matrix r = Matrix::Zero(to.count(), from.count());
  for (int ty = 0; ty < to.rows; ++ty)
    for (int tx = 0; tx < to.cols; ++tx)
      for (int fy = 0; fy < from.rows; ++fy) {
        if (wy(ty, fy) == 0.0) continue;
        for (int fx = 0; fx < from.cols; ++fx) {
          r(ty * to.cols + tx, fy * from.cols + fx) = wy(ty, fy) * wx(tx, fx);
        }
      }
  return r;
}

namespace {

void check_enhance_inputs(const VisionFeature& v, const DepthFeature& d_feat, const TokenGrid& grid,
                          const VfeParameters& params) {
  check_features(v, params);
  d_feat.validate();
  if (grid.count() != v.rows()) {
    throw DimensionError("target grid " + std::to_string(grid.rows) + "x" +
                         std::to_string(grid.cols) + " does not cover " +
                         std::to_string(v.rows()) + " vision tokens");
  }
  if (d_feat.tokens.cols() != params.depth_dim()) {
    throw DimensionError("depth feature dim does not match MLP input dim");
  }
}

struct MlpPass {
  Matrix resample, aligned, hidden_pre, hidden, w_raw, w;
};

MlpPass run_mlp(const DepthFeature& d_feat, const TokenGrid& grid, const VfeParameters& params) {
  MlpPass m;
  m.resample = bilinear_resample_matrix(d_feat.grid, grid);
  m.aligned = m.resample * d_feat.tokens;
  m.hidden_pre = (m.aligned * params.mlp_w1).rowwise() + RowVector(params.mlp_b1.row(0));
  m.hidden = m.hidden_pre.cwiseMax(0.0);
  m.w_raw = (m.hidden * params.mlp_w2).rowwise() + RowVector(params.mlp_b2.row(0));
  // Infinite pre-activations are fine, the clamp bounds them; NaN is not.
  if (m.w_raw.hasNaN()) throw NumericError("absorption MLP", "NaN values");
  m.w = m.w_raw.cwiseMax(-params.w_max).cwiseMin(params.w_max);
  return m;
}

}  // namespace

Matrix absorption_weights(const DepthFeature& d_feat, const TokenGrid& target,
                          const VfeParameters& params) {
  d_feat.validate();
  if (d_feat.tokens.cols() != params.depth_dim()) {
    throw DimensionError("depth feature dim does not match MLP input dim");
  }
  return run_mlp(d_feat, target, params).w;
}

VfeTrace forward(const VisionFeature& v, int k, const DepthFeature& d_feat, const TokenGrid& grid,
                 const VfeParameters& params) {
  check_enhance_inputs(v, d_feat, grid, params);
  if (k < 0 || k >= v.rows()) {
    throw IndexError("dark token index " + std::to_string(k) + " outside [0, " +
                     std::to_string(v.rows()) + ")");
  }
  VfeTrace t;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(v.cols()));
  t.mean = v.colwise().mean();
  t.q_in = params.query_init.row(0) + t.mean;
  t.query = t.q_in * params.w_q;
  t.keys = v * params.w_k;
  t.values = v * params.w_v;
  RowVector logits = (t.query * t.keys.transpose()) * inv_sqrt_d;
  require_finite(logits, "attention logits");
  logits.array() -= logits.maxCoeff();
  t.attention = logits.array().exp();
  t.attention /= t.attention.sum();
  t.context = t.attention * t.values;
  t.q = t.context * params.w_o;
  require_finite(t.q, "attention output");
  t.s = v.row(k) - t.q;

  MlpPass m = run_mlp(d_feat, grid, params);
  t.resample = std::move(m.resample);
  t.aligned = std::move(m.aligned);
  t.hidden_pre = std::move(m.hidden_pre);
  t.hidden = std::move(m.hidden);
  t.w_raw = std::move(m.w_raw);
  t.w = std::move(m.w);

  t.centered = v.rowwise() - t.s;
  t.scale = t.w.array().exp();
  t.output = restore_absorption(t.centered, t.w);
  require_finite(t.output, "enhanced feature");
  return t;
}

Matrix restore_absorption(const Matrix& centered, const Matrix& w) {
  if (centered.rows() != w.rows() || centered.cols() != w.cols()) {
    throw DimensionError("absorption weights do not match feature shape");
  }
  return centered.cwiseProduct(Matrix(w.array().exp()));
}

Matrix enhance(const VisionFeature& v, int k, const DepthFeature& d_feat, const TokenGrid& grid,
               const VfeParameters& params) {
  return forward(v, k, d_feat, grid, params).output;
}

VfeGradients backward(const VfeTrace& t, const VisionFeature& v, int k, const DepthFeature& d_feat,
                      const VfeParameters& params, const Matrix& d_output) {
  require_shape(d_output, v.rows(), v.cols(), "output gradient");
  const double n = static_cast<double>(v.rows());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(v.cols()));
  VfeGradients g{VfeParameters::zeros(params.dim(), params.depth_dim(), params.hidden_dim(),
                                      params.w_max),
                 Matrix::Zero(v.rows(), v.cols()), Matrix::Zero(d_feat.tokens.rows(),
                                                                d_feat.tokens.cols())};

  // v_e = C * exp(W)
  const Matrix d_centered = d_output.cwiseProduct(t.scale);
  const Matrix d_w = d_output.cwiseProduct(t.output);
  const Matrix pass = (t.w_raw.array().abs() <= params.w_max).cast<double>();
  const Matrix d_w_raw = d_w.cwiseProduct(pass);

  // Absorption MLP.
  g.params.mlp_w2 = t.hidden.transpose() * d_w_raw;
  g.params.mlp_b2 = d_w_raw.colwise().sum();
  const Matrix d_hidden = d_w_raw * params.mlp_w2.transpose();
  const Matrix d_hidden_pre = d_hidden.cwiseProduct((t.hidden_pre.array() > 0.0).cast<double>().matrix());
  g.params.mlp_w1 = t.aligned.transpose() * d_hidden_pre;
  g.params.mlp_b1 = d_hidden_pre.colwise().sum();
  g.d_depth = t.resample.transpose() * (d_hidden_pre * params.mlp_w1.transpose());

  // C = v - s, s = v_k - q
  g.d_v += d_centered;
  const RowVector d_s = -d_centered.colwise().sum();
  g.d_v.row(k) += d_s;
  const RowVector d_q = -d_s;

  // q = context W_O, context = a V
  g.params.w_o = t.context.transpose() * d_q;
  const RowVector d_context = d_q * params.w_o.transpose();
  const RowVector d_attention = d_context * t.values.transpose();
  const Matrix d_values = t.attention.transpose() * d_context;
  const double dot = d_attention.dot(t.attention);
  const RowVector d_logits = t.attention.cwiseProduct((d_attention.array() - dot).matrix());

  // logits = query keys^T / sqrt(d)
  const RowVector d_query = (d_logits * t.keys) * inv_sqrt_d;
  const Matrix d_keys = (d_logits.transpose() * t.query) * inv_sqrt_d;
  g.params.w_q = t.q_in.transpose() * d_query;
  g.params.w_k = v.transpose() * d_keys;
  g.params.w_v = v.transpose() * d_values;
  g.d_v += d_keys * params.w_k.transpose() + d_values * params.w_v.transpose();

  // q_in = query_init + mean(v)
  const RowVector d_q_in = d_query * params.w_q.transpose();
  g.params.query_init = d_q_in;
  g.d_v.rowwise() += d_q_in / n;
  return g;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport compare_gradients(const std::vector<NamedTensor>& params,
                                  const std::vector<ConstNamedTensor>& analytic,
                                  const std::function<double()>& loss, double step) {
  if (params.size() != analytic.size()) throw DimensionError("gradient list does not match parameters");
  GradCheckReport report;
  // Scaled with the loss so the check does not depend on its units.
  const double floor = kGradFloor * std::max(1.0, std::abs(loss()));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = *params[p].value;
    const Matrix& grad = *analytic[p].value;
    require_shape(grad, value.rows(), value.cols(), "gradient of " + params[p].name);
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const double up = loss();
      value.data()[i] = saved - step;
      const double down = loss();
      value.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad.data()[i];
      ++report.checked;
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.all_finite = false;
        report.worst_parameter = params[p].name;
        continue;
      }
      const double err = relative_error(a, numeric, floor);
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = params[p].name;
      }
    }
  }
  return report;
}

GradCheckReport grad_check(VfeParameters params, const VisionFeature& v, int k,
                           const DepthFeature& d_feat, const TokenGrid& grid, double step) {
  const VfeTrace trace = forward(v, k, d_feat, grid, params);
  const VfeGradients g = backward(trace, v, k, d_feat, params, 2.0 * trace.output);
  auto loss = [&] { return forward(v, k, d_feat, grid, params).output.squaredNorm(); };
  return compare_gradients(params.tensors(), g.params.tensors(), loss, step);
}

}  // namespace uwsu::vfe
