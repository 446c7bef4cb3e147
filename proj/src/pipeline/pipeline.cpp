#include "uwsu/pipeline/pipeline.hpp"

#include <cmath>

#include "uwsu/common/error.hpp"
#include "uwsu/imaging/imaging.hpp"

namespace uwsu::pipeline {

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + " has shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

template <typename Tensor, typename Self>
std::vector<Tensor> collect(Self& self) {
  std::vector<Tensor> out{{"image.weight", &self.image.weight},
                          {"image.bias", &self.image.bias},
                          {"depth.weight", &self.depth.weight},
                          {"depth.bias", &self.depth.bias}};
  for (const auto& t : self.vfe.tensors()) out.push_back({"vfe." + t.name, t.value});
  out.push_back({"projector.w1", &self.projector.w1});
  out.push_back({"projector.b1", &self.projector.b1});
  out.push_back({"projector.w2", &self.projector.w2});
  out.push_back({"projector.b2", &self.projector.b2});
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (patch < 1 || depth_patch < 1) throw ValidationError("patch sizes must be positive");
  if (dim < 1 || depth_dim < 1 || hidden < 1 || lang_dim < 1) {
    throw ValidationError("pipeline dimensions must be positive");
  }
  if (!(w_max >= 0.0) || !std::isfinite(w_max)) throw ValidationError("w_max must be finite and >= 0");
}

CropInfo center_crop_info(int height, int width, int patch) {
  if (patch < 1) throw ValidationError("patch size must be positive");
  if (height < patch || width < patch) {
    throw ValidationError("image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is smaller than one " + std::to_string(patch) + "px patch");
  }
  CropInfo c;
  c.height = height / patch * patch;
  c.width = width / patch * patch;
  c.offset_y = (height - c.height) / 2;
  c.offset_x = (width - c.width) / 2;
  return c;
}

imaging::RgbImage crop(const imaging::RgbImage& image, const CropInfo& info) {
  if (info.offset_y < 0 || info.offset_x < 0 || info.offset_y + info.height > image.height() ||
      info.offset_x + info.width > image.width()) {
    throw DimensionError("crop window exceeds the image");
  }
  imaging::RgbImage out(info.height, info.width);
  for (int y = 0; y < info.height; ++y)
    for (int x = 0; x < info.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y + info.offset_y, x + info.offset_x, c);
  return out;
}

imaging::DepthMap crop(const imaging::DepthMap& depth, const CropInfo& info) {
  if (info.offset_y < 0 || info.offset_x < 0 || info.offset_y + info.height > depth.height() ||
      info.offset_x + info.width > depth.width()) {
    throw DimensionError("crop window exceeds the depth map");
  }
  imaging::DepthMap out(info.height, info.width, 0.0, depth.scale());
  for (int y = 0; y < info.height; ++y)
    for (int x = 0; x < info.width; ++x) out.at(y, x) = depth.at(y + info.offset_y, x + info.offset_x);
  return out;
}

Matrix sinusoidal_positions(int n, int d) {
  Matrix pe(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j / 2 * 2) / d);
      pe(i, j) = j % 2 == 0 ? std::sin(i * freq) : std::cos(i * freq);
    }
  }
  return pe;
}

PipelineParameters PipelineParameters::zeros(const PipelineConfig& config) {
  config.validate();
  const int p = config.patch, pd = config.depth_patch;
  PipelineParameters out;
  out.image = {p, Matrix::Zero(3 * p * p, config.dim), Matrix::Zero(1, config.dim)};
  out.depth = {pd, Matrix::Zero(pd * pd, config.depth_dim), Matrix::Zero(1, config.depth_dim)};
  out.vfe = vfe::VfeParameters::zeros(config.dim, config.depth_dim, config.hidden, config.w_max);
  out.projector = {Matrix::Zero(config.dim, config.lang_dim), Matrix::Zero(1, config.lang_dim),
                   Matrix::Zero(config.lang_dim, config.lang_dim), Matrix::Zero(1, config.lang_dim)};
  return out;
}

PipelineParameters PipelineParameters::initialize(const PipelineConfig& config, Rng& rng) {
  PipelineParameters out = zeros(config);
  const int p = config.patch, pd = config.depth_patch;
  out.image.weight = normal_matrix(3 * p * p, config.dim, rng, 1.0 / std::sqrt(3.0 * p * p));
  out.depth.weight = normal_matrix(pd * pd, config.depth_dim, rng, 1.0 / pd);
  out.vfe = vfe::VfeParameters::initialize(config.dim, config.depth_dim, config.hidden, rng, config.w_max);
  out.projector.w1 = normal_matrix(config.dim, config.lang_dim, rng, 1.0 / std::sqrt(config.dim));
  out.projector.w2 = normal_matrix(config.lang_dim, config.lang_dim, rng, 1.0 / std::sqrt(config.lang_dim));
  return out;
}

PipelineParameters PipelineParameters::random(const PipelineConfig& config, Rng& rng, double vfe_scale) {
  PipelineParameters out = initialize(config, rng);
  out.image.bias = normal_matrix(1, config.dim, rng, 0.1);
  out.depth.bias = normal_matrix(1, config.depth_dim, rng, 0.1);
  out.vfe = vfe::VfeParameters::random(config.dim, config.depth_dim, config.hidden, rng, vfe_scale,
                                       config.w_max);
  out.projector.b1 = normal_matrix(1, config.lang_dim, rng, 0.1);
  out.projector.b2 = normal_matrix(1, config.lang_dim, rng, 0.1);
  return out;
}

PipelineConfig PipelineParameters::config() const {
  PipelineConfig c;
  c.patch = image.patch;
  c.depth_patch = depth.patch;
  c.dim = vfe.dim();
  c.depth_dim = vfe.depth_dim();
  c.hidden = vfe.hidden_dim();
  c.lang_dim = static_cast<int>(projector.w1.cols());
  c.w_max = vfe.w_max;
  return c;
}

void PipelineParameters::validate() const {
  const PipelineConfig c = config();
  c.validate();
  require_shape(image.weight, 3 * c.patch * c.patch, c.dim, "image.weight");
  require_shape(image.bias, 1, c.dim, "image.bias");
  require_shape(depth.weight, c.depth_patch * c.depth_patch, c.depth_dim, "depth.weight");
  require_shape(depth.bias, 1, c.depth_dim, "depth.bias");
  vfe.validate();
  require_shape(projector.w1, c.dim, c.lang_dim, "projector.w1");
  require_shape(projector.b1, 1, c.lang_dim, "projector.b1");
  require_shape(projector.w2, c.lang_dim, c.lang_dim, "projector.w2");
  require_shape(projector.b2, 1, c.lang_dim, "projector.b2");
  for (const auto& t : tensors()) {
    if (!t.value->allFinite()) throw ValidationError("parameter " + t.name + " is not finite");
  }
}

std::vector<vfe::NamedTensor> PipelineParameters::tensors() { return collect<vfe::NamedTensor>(*this); }

std::vector<vfe::ConstNamedTensor> PipelineParameters::tensors() const {
  return collect<vfe::ConstNamedTensor>(*this);
}

Matrix image_patches(const imaging::RgbImage& image, int patch) {
  if (image.height() % patch != 0 || image.width() % patch != 0) {
    throw ValidationError("image is not a multiple of the patch size");
  }
  const int rows = image.height() / patch, cols = image.width() / patch;
  Matrix out(rows * cols, 3 * patch * patch);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int j = 0;
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < 3; ++ch) out(r * cols + c, j++) = image.at(r * patch + dy, c * patch + dx, ch);
    }
  return out;
}

Matrix depth_patches(const imaging::DepthMap& depth, int patch) {
  if (depth.height() % patch != 0 || depth.width() % patch != 0) {
    throw ValidationError("depth map is not a multiple of the patch size");
  }
  const int rows = depth.height() / patch, cols = depth.width() / patch;
  Matrix out(rows * cols, patch * patch);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int j = 0;
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx) out(r * cols + c, j++) = depth.at(r * patch + dy, c * patch + dx);
    }
  return out;
}

vfe::VisionFeature encode_image(const imaging::RgbImage& image, const ToyEncoderParams& params,
                                CropInfo* crop_out) {
  if (!image.all_finite()) throw ValidationError("image contains non-finite values");
  const CropInfo info = center_crop_info(image.height(), image.width(), params.patch);
  require_shape(params.weight, 3 * params.patch * params.patch, params.weight.cols(), "image.weight");
  require_shape(params.bias, 1, params.weight.cols(), "image.bias");
  if (crop_out) *crop_out = info;
  const Matrix patches = image_patches(crop(image, info), params.patch);
  Matrix tokens = patches * params.weight;
  tokens.rowwise() += params.bias.row(0);
  return tokens + sinusoidal_positions(static_cast<int>(tokens.rows()), static_cast<int>(tokens.cols()));
}

vfe::DepthFeature encode_depth(const imaging::DepthMap& depth, const ToyDepthEncoderParams& params,
                               CropInfo* crop_out) {
  depth.validate();
  const CropInfo info = center_crop_info(depth.height(), depth.width(), params.patch);
  require_shape(params.weight, params.patch * params.patch, params.weight.cols(), "depth.weight");
  require_shape(params.bias, 1, params.weight.cols(), "depth.bias");
  if (crop_out) *crop_out = info;
  Matrix tokens = depth_patches(crop(depth, info), params.patch) * params.weight;
  tokens.rowwise() += params.bias.row(0);
  return {tokens, {info.height / params.patch, info.width / params.patch}};
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_derivative(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace {

ProjectorTrace run_projector(const Matrix& x, const ProjectorParams& p) {
  if (x.cols() != p.w1.rows()) throw DimensionError("projector input width does not match w1");
  ProjectorTrace t;
  t.input = x;
  t.hidden_pre = x * p.w1;
  t.hidden_pre.rowwise() += p.b1.row(0);
  t.hidden = t.hidden_pre.unaryExpr([](double v) { return gelu(v); });
  t.output = t.hidden * p.w2;
  t.output.rowwise() += p.b2.row(0);
  if (!t.output.allFinite()) throw NumericError("projector", "non-finite values");
  return t;
}

// Accumulates parameter gradients into `g` and returns dL/dinput.
Matrix projector_backward(const ProjectorTrace& t, const ProjectorParams& p, const Matrix& d_out,
                          ProjectorParams& g) {
  g.w2 += t.hidden.transpose() * d_out;
  g.b2 += d_out.colwise().sum();
  const Matrix d_pre =
      (d_out * p.w2.transpose()).cwiseProduct(t.hidden_pre.unaryExpr([](double v) { return gelu_derivative(v); }));
  g.w1 += t.input.transpose() * d_pre;
  g.b1 += d_pre.colwise().sum();
  return d_pre * p.w1.transpose();
}

}  // namespace

Matrix project(const Matrix& tokens, const ProjectorParams& params) {
  return run_projector(tokens, params).output;
}

PipelineTrace forward_trace(const imaging::RgbImage& image, const imaging::DepthMap& depth,
                            const PipelineParameters& params) {
  params.validate();
  if (image.height() != depth.height() || image.width() != depth.width()) {
    throw DimensionError("depth map " + std::to_string(depth.height()) + "x" +
                         std::to_string(depth.width()) + " does not match image " +
                         std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  PipelineTrace t;
  PipelineOutput& out = t.output;
  t.v = encode_image(image, params.image, &out.image_crop);
  t.depth_feature = encode_depth(depth, params.depth, &out.depth_crop);
  const auto cropped = crop(image, out.image_crop);
  t.image_patches = image_patches(cropped, params.image.patch);
  t.depth_patches = depth_patches(crop(depth, out.depth_crop), params.depth.patch);
  out.image_grid = {out.image_crop.height / params.image.patch, out.image_crop.width / params.image.patch};
  out.depth_grid = t.depth_feature.grid;
  out.dark_patch = imaging::select_dark_patch(
      cropped, imaging::PatchGrid(cropped.height(), cropped.width(), params.image.patch));

  t.vfe = vfe::forward(t.v, out.dark_patch, t.depth_feature, out.image_grid, params.vfe);
  t.original = run_projector(t.v, params.projector);
  t.enhanced = run_projector(t.vfe.output, params.projector);
  out.original = t.original.output;
  out.enhanced = t.enhanced.output;
  return t;
}

PipelineOutput forward(const imaging::RgbImage& image, const imaging::DepthMap& depth,
                       const PipelineParameters& params) {
  return forward_trace(image, depth, params).output;
}

PipelineParameters backward(const PipelineTrace& t, const PipelineParameters& params,
                            const Matrix& d_original, const Matrix& d_enhanced) {
  require_shape(d_original, t.output.original.rows(), t.output.original.cols(), "original stream gradient");
  require_shape(d_enhanced, t.output.enhanced.rows(), t.output.enhanced.cols(), "enhanced stream gradient");
  PipelineParameters g = PipelineParameters::zeros(params.config());

  // Both streams feed the same projector; its gradient is the sum.
  Matrix d_v = projector_backward(t.original, params.projector, d_original, g.projector);
  const Matrix d_ve = projector_backward(t.enhanced, params.projector, d_enhanced, g.projector);

  const auto vg = vfe::backward(t.vfe, t.v, t.output.dark_patch, t.depth_feature, params.vfe, d_ve);
  g.vfe = vg.params;
  g.vfe.w_max = params.vfe.w_max;
  d_v += vg.d_v;

  g.image.weight = t.image_patches.transpose() * d_v;
  g.image.bias = d_v.colwise().sum();
  g.depth.weight = t.depth_patches.transpose() * vg.d_depth;
  g.depth.bias = vg.d_depth.colwise().sum();
  return g;
}

vfe::GradCheckReport end_to_end_grad_check(PipelineParameters params, const imaging::RgbImage& image,
                                           const imaging::DepthMap& depth, double step) {
  const PipelineTrace t = forward_trace(image, depth, params);
  const PipelineParameters g =
      backward(t, params, 2.0 * t.output.original, 2.0 * t.output.enhanced);
  auto loss = [&] {
    const PipelineOutput o = forward(image, depth, params);
    return o.original.squaredNorm() + o.enhanced.squaredNorm();
  };
  return vfe::compare_gradients(params.tensors(), g.tensors(), loss, step);
}

namespace {

nlohmann::ordered_json crop_json(const CropInfo& c) {
  return {{"offset_y", c.offset_y}, {"offset_x", c.offset_x}, {"height", c.height}, {"width", c.width}};
}

nlohmann::ordered_json grid_json(const TokenGrid& g) { return {{"rows", g.rows}, {"cols", g.cols}}; }

}  // namespace

vfe::TensorManifest emit_streams(const PipelineOutput& output) {
  vfe::TensorManifest m;
  m.metadata["module"] = "toy_pipeline";
  m.metadata["stream_order"] = {"original", "enhanced"};
  m.metadata["dark_patch"] = output.dark_patch;
  m.metadata["image_crop"] = crop_json(output.image_crop);
  m.metadata["depth_crop"] = crop_json(output.depth_crop);
  m.metadata["image_grid"] = grid_json(output.image_grid);
  m.metadata["depth_grid"] = grid_json(output.depth_grid);
  m.metadata["tokens"] = output.original.rows();
  m.metadata["lang_dim"] = output.original.cols();
  m.tensors.push_back({"stream.original", output.original});
  m.tensors.push_back({"stream.enhanced", output.enhanced});
  return m;
}

vfe::TensorManifest save_pipeline(const PipelineParameters& params) {
  const PipelineConfig c = params.config();
  vfe::TensorManifest m;
  m.metadata["module"] = "toy_pipeline";
  m.metadata["vfe_architecture"] = vfe::vfe_architecture();
  m.metadata["config"] = {{"patch", c.patch},         {"depth_patch", c.depth_patch},
                          {"dim", c.dim},             {"depth_dim", c.depth_dim},
                          {"hidden", c.hidden},       {"lang_dim", c.lang_dim},
                          {"w_max", c.w_max},         {"projector_activation", "gelu"},
                          {"position_encoding", "sinusoidal"}};
  vfe::append_parameters(m, params.tensors(), "");
  return m;
}

PipelineParameters load_pipeline(const vfe::TensorManifest& manifest) {
  PipelineConfig c;
  try {
    const auto& j = manifest.metadata.at("config");
    c.patch = j.at("patch").get<int>();
    c.depth_patch = j.at("depth_patch").get<int>();
    c.dim = j.at("dim").get<int>();
    c.depth_dim = j.at("depth_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.lang_dim = j.at("lang_dim").get<int>();
    c.w_max = j.at("w_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint metadata: ") + e.what());
  }
  PipelineParameters p = PipelineParameters::zeros(c);
  vfe::restore_parameters(manifest, p.tensors(), "");
  p.validate();
  return p;
}

}  // namespace uwsu::pipeline
