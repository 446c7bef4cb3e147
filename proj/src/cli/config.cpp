#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uwsu/cli/cli.hpp"
#include "uwsu/common/error.hpp"

namespace uwsu::cli {

namespace {

using Json = nlohmann::json;

void reject_unknown(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ValidationError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const Json& obj, const char* key, std::optional<T>& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: " + where + "." + key + " has the wrong type");
  }
}

// Either three numbers or one number used for every channel.
void read_rgb(const Json& obj, const char* key, std::optional<std::array<double, 3>>& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  const Json& v = obj.at(key);
  if (v.is_number()) {
    const double x = v.get<double>();
    dst = std::array<double, 3>{x, x, x};
    return;
  }
  if (v.is_array() && v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number()) {
    dst = std::array<double, 3>{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    return;
  }
  throw ValidationError("config: " + where + "." + key + " must be a number or three numbers");
}

}  // namespace

Config parse_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  reject_unknown(j, "", {"paths", "physics", "vfe", "seed"});
  Config c;
  if (j.contains("paths")) {
    const Json& p = j["paths"];
    reject_unknown(p, "paths",
                   {"images", "depths", "annotations", "outputs", "predictions", "gold", "dataset", "checkpoint",
                    "provider_stub", "taxonomy"});
    read(p, "images", c.paths.images, "paths");
    read(p, "depths", c.paths.depths, "paths");
    read(p, "annotations", c.paths.annotations, "paths");
    read(p, "outputs", c.paths.outputs, "paths");
    read(p, "predictions", c.paths.predictions, "paths");
    read(p, "gold", c.paths.gold, "paths");
    read(p, "dataset", c.paths.dataset, "paths");
    read(p, "checkpoint", c.paths.checkpoint, "paths");
    read(p, "provider_stub", c.paths.provider_stub, "paths");
    read(p, "taxonomy", c.paths.taxonomy, "paths");
  }
  if (j.contains("physics")) {
    const Json& p = j["physics"];
    reject_unknown(p, "physics", {"beta", "backscatter", "patch_size"});
    read_rgb(p, "beta", c.physics.beta, "physics");
    read_rgb(p, "backscatter", c.physics.backscatter, "physics");
    read(p, "patch_size", c.physics.patch_size, "physics");
  }
  if (j.contains("vfe")) {
    const Json& v = j["vfe"];
    reject_unknown(v, "vfe", {"d", "e", "h", "w_max", "instances"});
    read(v, "d", c.vfe.d, "vfe");
    read(v, "e", c.vfe.e, "vfe");
    read(v, "h", c.vfe.h, "vfe");
    read(v, "w_max", c.vfe.w_max, "vfe");
    read(v, "instances", c.vfe.instances, "vfe");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("config: seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace uwsu::cli
