#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uwsu/common/bbox.hpp"
#include "uwsu/eval/parse.hpp"

namespace uwsu::eval {

// Intersection over union; 0 when the union is empty. Works for normalised
// and pixel boxes alike.
double iou(const Bbox& a, const Bbox& b);

// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

// 101-point interpolated AP from a ranked list of hit flags and the number
// of gold boxes. Precision at recall r is the best precision at any rank
// whose recall is at least r.
double interpolated_ap(const std::vector<bool>& ranked_hits, std::size_t gold_count);

struct GroundingMetrics {
  double miou = 0.0;
  double pr50 = 0.0;
  double pr75 = 0.0;
  double ap50 = 0.0;
  std::size_t parse_failures = 0;
};

// One prediction per record, nullopt for a parse failure (IoU 0). AP@0.5
// ranks the records in the given order, all at confidence 1.
GroundingMetrics grounding_metrics(const std::vector<std::optional<Bbox>>& preds, const std::vector<Bbox>& golds);

struct GoldBox {
  std::string class_name;
  Bbox bbox;
};

struct DetectionImage {
  std::vector<DetectionPrediction> predictions;  // in emission order
  std::vector<GoldBox> golds;
};

struct DetectionMetrics {
  double map = 0.0;
  double map50 = 0.0;
  double map75 = 0.0;
  double ar100 = 0.0;
  std::size_t classes = 0;
  std::size_t unknown_class_predictions = 0;
  // AP per class (lower-cased name) per threshold, for inspection.
  std::map<std::string, std::array<double, 10>> per_class_ap;
};

inline constexpr std::size_t kMaxDetectionsPerImage = 100;

// Per class and threshold: detections ranked by confidence (ties keep image
// order, then emission order), at most 100 per image and class; each takes
// the unmatched gold of its image with the highest IoU >= threshold, ties to
// the lowest gold index. Classes are those present in the golds; other
// predicted classes are dropped and counted.
DetectionMetrics detection_metrics(const std::vector<DetectionImage>& images);

struct CountingMetrics {
  std::optional<double> mae;
  std::optional<double> rmse;
  std::optional<double> acc;
  std::size_t regress_records = 0;
  std::size_t choice_records = 0;
  std::size_t parse_failures = 0;
};

// Regression pairs (prediction, gold); a missing prediction counts as 0.
// Choice pairs (prediction letter, gold letter); a missing prediction is
// wrong.
CountingMetrics counting_metrics(const std::vector<std::pair<std::optional<long long>, long long>>& regress,
                                 const std::vector<std::pair<std::optional<char>, char>>& choice);

struct ClassificationMetrics {
  double acc = 0.0;
  double precision = 0.0;  // macro over gold classes
  double f1 = 0.0;         // macro over gold classes
};

std::string normalize_label(std::string_view s);

// (prediction, gold) pairs compared after trimming and lower-casing. Per
// class scores with no support in the denominator are 0.
ClassificationMetrics classification_metrics(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace uwsu::eval
