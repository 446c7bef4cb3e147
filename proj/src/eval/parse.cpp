#include "uwsu/eval/parse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace uwsu::eval {

namespace {

bool is_name_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == ' ' || c == '_' || c == '-' || c == '\'';
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct BoxResult {
  std::optional<Bbox> box;
  std::string reason;
};

// Decimal number with optional sign and exponent, surrounded by whitespace.
std::optional<double> read_number(std::string_view s) {
  const std::string t = trim(s);
  std::size_t i = 0;
  if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++digits;
  if (i < t.size() && t[i] == '.') {
    ++i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++digits;
  }
  if (digits == 0) return std::nullopt;
  if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
    ++i;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != t.size()) return std::nullopt;
  return std::strtod(t.c_str(), nullptr);
}

// Parses the inside of one bracket pair.
BoxResult read_box(std::string_view inner, const std::optional<ImageSize>& size) {
  std::vector<double> v;
  std::size_t start = 0;
  while (true) {
    const auto comma = inner.find(',', start);
    const auto part = inner.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto x = read_number(part);
    if (!x) return {std::nullopt, "non-numeric coordinate '" + trim(part).substr(0, 40) + "'"};
    v.push_back(*x);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (v.size() != 4) return {std::nullopt, "expected 4 numbers, found " + std::to_string(v.size())};
  for (double x : v)
    if (!std::isfinite(x)) return {std::nullopt, "non-finite coordinate"};
  if (std::any_of(v.begin(), v.end(), [](double x) { return x > 1.0; })) {
    if (!size || size->width <= 0 || size->height <= 0) {
      return {std::nullopt, "coordinates above 1 without an image size"};
    }
    v[0] /= size->width;
    v[2] /= size->width;
    v[1] /= size->height;
    v[3] /= size->height;
  }
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  Bbox b{v[0], v[1], v[2], v[3]};
  if (!(b.x1 < b.x2 && b.y1 < b.y2)) return {std::nullopt, "degenerate box"};
  return {b, ""};
}

std::string shortest(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

ParsedDetections parse_detection_output(std::string_view text, std::optional<ImageSize> size) {
  ParsedDetections out;
  std::size_t pos = 0;
  std::size_t consumed = 0;  // end of the previous segment
  while (true) {
    const auto open = text.find('[', pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find_first_of("[]", open + 1);
    if (close == std::string_view::npos || text[close] == '[') {
      const auto end = close == std::string_view::npos ? text.size() : close;
      out.diagnostics.push_back({open, std::string(text.substr(open, end - open)), "unclosed bracket"});
      pos = open + 1;
      continue;
    }
    // Look back for "name:" before the bracket, not past the previous segment.
    std::size_t k = open;
    while (k > consumed && std::isspace(static_cast<unsigned char>(text[k - 1]))) --k;
    std::string name;
    std::size_t seg_start = open;
    if (k > consumed && text[k - 1] == ':') {
      std::size_t n = k - 1;
      while (n > consumed && is_name_char(text[n - 1])) --n;
      name = trim(text.substr(n, k - 1 - n));
      seg_start = n;
    }
    const std::string segment(text.substr(seg_start, close + 1 - seg_start));
    pos = consumed = close + 1;
    if (name.empty()) {
      out.diagnostics.push_back({seg_start, segment, "missing class name"});
      continue;
    }
    const BoxResult r = read_box(text.substr(open + 1, close - open - 1), size);
    if (!r.box) {
      out.diagnostics.push_back({seg_start, segment, r.reason});
      continue;
    }
    out.entries.push_back({name, *r.box, 1.0});
  }
  if (out.entries.empty() && out.diagnostics.empty() && !trim(text).empty()) {
    out.diagnostics.push_back({0, trim(text).substr(0, 80), "no detection segments found"});
  }
  return out;
}

std::string serialize_detections(const std::vector<DetectionPrediction>& entries) {
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += ", ";
    out += e.class_name + ":[" + shortest(e.bbox.x1) + ", " + shortest(e.bbox.y1) + ", " + shortest(e.bbox.x2) +
           ", " + shortest(e.bbox.y2) + "]";
  }
  return out;
}

std::optional<Bbox> try_parse_bbox(std::string_view text, std::optional<ImageSize> size) {
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('[', pos);
    if (open == std::string_view::npos) return std::nullopt;
    const auto close = text.find_first_of("[]", open + 1);
    if (close == std::string_view::npos) return std::nullopt;
    if (text[close] == '[') {
      pos = close;
      continue;
    }
    const BoxResult r = read_box(text.substr(open + 1, close - open - 1), size);
    if (r.box) return r.box;
    pos = close + 1;
  }
}

Bbox parse_bbox(std::string_view text, std::optional<ImageSize> size) {
  if (auto b = try_parse_bbox(text, size)) return *b;
  throw ParseError("no valid bounding box in '" + std::string(text.substr(0, 80)) + "'");
}

std::optional<CountAnswer> parse_count(std::string_view text) {
  std::size_t i = text.find_first_not_of(" \t\r\n");
  if (i == std::string_view::npos) return std::nullopt;
  std::size_t j = i;
  const bool paren = text[j] == '(';
  if (paren) ++j;
  if (j < text.size()) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[j])));
    if (c >= 'A' && c <= 'D') {
      std::size_t k = j + 1;
      if (paren) {
        if (k < text.size() && text[k] == ')') return CountAnswer{CountAnswer::Kind::letter, 0, c};
      } else if (k == text.size() || std::string_view(".):,").find(text[k]) != std::string_view::npos) {
        return CountAnswer{CountAnswer::Kind::letter, 0, c};
      } else if (std::isspace(static_cast<unsigned char>(text[k])) &&
                 text.find_first_not_of(" \t\r\n", k) == std::string_view::npos) {
        return CountAnswer{CountAnswer::Kind::letter, 0, c};
      }
    }
  }
  const auto d = std::find_if(text.begin(), text.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
  if (d == text.end()) return std::nullopt;
  auto e = d;
  while (e != text.end() && std::isdigit(static_cast<unsigned char>(*e))) ++e;
  long long value = 0;
  const auto res = std::from_chars(&*d, &*d + (e - d), value);
  if (res.ec != std::errc()) return std::nullopt;
  return CountAnswer{CountAnswer::Kind::number, value, 'A'};
}

}  // namespace uwsu::eval
