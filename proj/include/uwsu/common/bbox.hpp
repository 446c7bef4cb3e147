#pragma once

#include <cmath>
#include <string>

#include "uwsu/common/error.hpp"

namespace uwsu {

// Axis-aligned box, (x1, y1) top-left and (x2, y2) bottom-right. Normalised
// boxes live in [0, 1]; pixel boxes are only used inside eval.
struct Bbox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  bool is_normalized() const noexcept {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0 && x1 < x2 && y1 < y2;
  }

  void validate() const {
    if (!is_normalized()) {
      throw ValidationError("bbox (" + std::to_string(x1) + ", " + std::to_string(y1) + ", " +
                            std::to_string(x2) + ", " + std::to_string(y2) +
                            ") must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1");
    }
  }

  friend bool operator==(const Bbox&, const Bbox&) = default;
};

}  // namespace uwsu
