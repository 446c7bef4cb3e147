#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwsu/common/bbox.hpp"
#include "uwsu/common/error.hpp"

namespace uwsu::eval {

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Pixel dimensions used to normalise boxes written in pixels.
struct ImageSize {
  int width = 0;
  int height = 0;
};

struct DetectionPrediction {
  std::string class_name;
  Bbox bbox;
  double confidence = 1.0;
};

struct ParseDiagnostic {
  std::size_t offset = 0;  // byte offset of the segment in the input
  std::string segment;
  std::string reason;
};

struct ParsedDetections {
  std::vector<DetectionPrediction> entries;
  std::vector<ParseDiagnostic> diagnostics;
};

// Extracts every "name:[a, b, c, d]" segment. The name is the run of
// letters, digits, spaces, '_', '-' and '\'' just before the colon. Values
// above 1 are read as pixels when `size` is given and rejected otherwise;
// boxes are clamped to [0, 1] and dropped if degenerate. Never throws.
ParsedDetections parse_detection_output(std::string_view text, std::optional<ImageSize> size = std::nullopt);

// "name:[x1, y1, x2, y2], ..." with shortest round-trip numbers, so parsing
// the result gives back the same entries.
std::string serialize_detections(const std::vector<DetectionPrediction>& entries);

// First bracketed 4-number group that forms a valid box under the same rules.
std::optional<Bbox> try_parse_bbox(std::string_view text, std::optional<ImageSize> size = std::nullopt);
// Throws ParseError when there is none.
Bbox parse_bbox(std::string_view text, std::optional<ImageSize> size = std::nullopt);

struct CountAnswer {
  enum class Kind { number, letter };
  Kind kind = Kind::number;
  long long value = 0;  // for numbers
  char letter = 'A';    // for letters, upper case

  friend bool operator==(const CountAnswer&, const CountAnswer&) = default;
};

// A leading standalone A-D (optionally in parentheses, followed by end of
// text or one of ".):,") is a choice letter; otherwise the first run of
// digits is the count.
std::optional<CountAnswer> parse_count(std::string_view text);

}  // namespace uwsu::eval
