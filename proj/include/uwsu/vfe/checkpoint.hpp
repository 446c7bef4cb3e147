#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "uwsu/vfe/vfe.hpp"

namespace uwsu::vfe {

inline constexpr const char* kManifestFormat = "uwsu-tensors-v1";

struct TensorEntry {
  std::string name;
  Matrix value;
};

// A flat list of named row-major tensors plus free-form metadata. Values are
// written with shortest round-trip formatting, so a reload is bit-exact.
struct TensorManifest {
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<TensorEntry> tensors;

  nlohmann::ordered_json to_json() const;
  static TensorManifest from_json(const nlohmann::ordered_json& j);

  void save(const std::filesystem::path& path) const;
  static TensorManifest load(const std::filesystem::path& path);

  const TensorEntry* find(const std::string& name) const;
};

// Architecture choices that are fixed in this implementation; written into
// every VFE checkpoint so readers know what the weights assume.
nlohmann::ordered_json vfe_architecture();

// Parameters are written under "<prefix><tensor name>".
void append_parameters(TensorManifest& manifest, const std::vector<ConstNamedTensor>& tensors,
                       const std::string& prefix);

// Copies tensors into `targets` (shapes must already be set). Throws
// ValidationError naming the parameter on a missing entry, a shape mismatch
// or a non-finite value.
void restore_parameters(const TensorManifest& manifest, const std::vector<NamedTensor>& targets,
                        const std::string& prefix);

TensorManifest save_vfe(const VfeParameters& params);
VfeParameters load_vfe(const TensorManifest& manifest);

}  // namespace uwsu::vfe
