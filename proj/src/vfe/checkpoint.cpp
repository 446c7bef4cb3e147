#include "uwsu/vfe/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "uwsu/common/error.hpp"

namespace uwsu::vfe {

nlohmann::ordered_json TensorManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kManifestFormat;
  j["metadata"] = metadata;
  auto& list = j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : tensors) {
    nlohmann::ordered_json entry;
    entry["name"] = t.name;
    entry["shape"] = {t.value.rows(), t.value.cols()};
    auto& values = entry["values"] = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) values.push_back(t.value(r, c));
    list.push_back(std::move(entry));
  }
  return j;
}

TensorManifest TensorManifest::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || j.value("format", "") != kManifestFormat) {
    throw ValidationError(std::string("manifest is not in ") + kManifestFormat + " format");
  }
  TensorManifest m;
  if (j.contains("metadata")) m.metadata = j.at("metadata");
  if (!j.contains("tensors") || !j.at("tensors").is_array()) {
    throw ValidationError("manifest has no tensor list");
  }
  for (const auto& entry : j.at("tensors")) {
    const std::string name = entry.value("name", "");
    if (name.empty()) throw ValidationError("manifest tensor without a name");
    try {
      const auto& shape = entry.at("shape");
      const auto& values = entry.at("values");
      if (!shape.is_array() || shape.size() != 2) throw ValidationError("bad shape");
      const auto rows = shape[0].get<Eigen::Index>(), cols = shape[1].get<Eigen::Index>();
      if (rows < 0 || cols < 0 || !values.is_array() ||
          values.size() != static_cast<std::size_t>(rows * cols)) {
        throw ValidationError("value count does not match shape");
      }
      Matrix value(rows, cols);
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!values[i].is_number()) throw ValidationError("non-numeric value");
          value(r, c) = values[i++].get<double>();
        }
      m.tensors.push_back({name, std::move(value)});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("tensor " + name + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("tensor " + name + ": " + e.what());
    }
  }
  return m;
}

void TensorManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(1) << "\n";
}

TensorManifest TensorManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

const TensorEntry* TensorManifest::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

nlohmann::ordered_json vfe_architecture() {
  return {{"attention_heads", 1},
          {"output_projection", true},
          {"residual", false},
          {"dark_token_in_keys", true},
          {"query", "query_init + mean(v)"},
          {"mlp_activation", "relu"},
          {"grid_alignment", "bilinear, half-pixel centres"}};
}

void append_parameters(TensorManifest& manifest, const std::vector<ConstNamedTensor>& tensors,
                       const std::string& prefix) {
  for (const auto& t : tensors) manifest.tensors.push_back({prefix + t.name, *t.value});
}

void restore_parameters(const TensorManifest& manifest, const std::vector<NamedTensor>& targets,
                        const std::string& prefix) {
  for (const auto& t : targets) {
    const std::string name = prefix + t.name;
    const TensorEntry* entry = manifest.find(name);
    if (!entry) throw ValidationError("checkpoint is missing parameter " + name);
    if (entry->value.rows() != t.value->rows() || entry->value.cols() != t.value->cols()) {
      throw ValidationError("parameter " + name + " has shape " +
                            std::to_string(entry->value.rows()) + "x" +
                            std::to_string(entry->value.cols()) + ", expected " +
                            std::to_string(t.value->rows()) + "x" +
                            std::to_string(t.value->cols()));
    }
    if (!entry->value.allFinite()) throw ValidationError("parameter " + name + " is not finite");
    *t.value = entry->value;
  }
}

TensorManifest save_vfe(const VfeParameters& params) {
  TensorManifest m;
  m.metadata["module"] = "vfe";
  m.metadata["architecture"] = vfe_architecture();
  m.metadata["dims"] = {{"d", params.dim()}, {"e", params.depth_dim()}, {"h", params.hidden_dim()}};
  m.metadata["w_max"] = params.w_max;
  append_parameters(m, params.tensors(), "vfe.");
  return m;
}

VfeParameters load_vfe(const TensorManifest& manifest) {
  int d = 0, e = 0, h = 0;
  double w_max = 0.0;
  try {
    const auto& dims = manifest.metadata.at("dims");
    d = dims.at("d").get<int>();
    e = dims.at("e").get<int>();
    h = dims.at("h").get<int>();
    w_max = manifest.metadata.at("w_max").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("checkpoint metadata: ") + ex.what());
  }
  VfeParameters p = VfeParameters::zeros(d, e, h, w_max);
  restore_parameters(manifest, p.tensors(), "vfe.");
  p.validate();
  return p;
}

}  // namespace uwsu::vfe
