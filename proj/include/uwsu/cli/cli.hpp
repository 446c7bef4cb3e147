#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace uwsu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// Settings shared by every command. A JSON file fills these first; command
// line flags then override individual fields.
struct Config {
  struct Paths {
    std::optional<std::string> images;
    std::optional<std::string> depths;
    std::optional<std::string> annotations;
    std::optional<std::string> outputs;
    std::optional<std::string> predictions;
    std::optional<std::string> gold;
    std::optional<std::string> dataset;
    std::optional<std::string> checkpoint;
    std::optional<std::string> provider_stub;
    std::optional<std::string> taxonomy;
  } paths;
  struct Physics {
    std::optional<std::array<double, 3>> beta;
    std::optional<std::array<double, 3>> backscatter;
    std::optional<int> patch_size;
  } physics;
  struct Vfe {
    std::optional<int> d;
    std::optional<int> e;
    std::optional<int> h;
    std::optional<double> w_max;
    std::optional<int> instances;
  } vfe;
  std::optional<std::uint64_t> seed;
};

// Throws ValidationError on unknown keys or wrongly typed values.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

// Entry point of the uwsu executable. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uwsu::cli
