#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uwsu/datagen/records.hpp"
#include "uwsu/eval/parse.hpp"

namespace uwsu::eval {

using Json = nlohmann::ordered_json;

// One line of a prediction run.
struct Prediction {
  std::string id;
  std::string task;
  std::string output_text;
};

Prediction prediction_from_json(const Json& j);
Json to_json(const Prediction& p);
std::vector<Prediction> read_predictions(const std::string& path);
void write_predictions(const std::string& path, const std::vector<Prediction>& preds);

// Report keys, in output order. Both counting tags report under "counting".
inline constexpr const char* kReportTasks[] = {"coarse_cls",    "fine_cls",       "detection", "grounding",
                                               "counting",      "image_caption",  "region_caption", "vqa"};
std::string report_task(datagen::QaTask task);

struct TaskScore {
  std::size_t count = 0;
  std::vector<std::pair<std::string, double>> metrics;  // documented order
};

struct ScoreBlock {
  std::vector<std::pair<std::string, TaskScore>> tasks;  // kReportTasks order

  const TaskScore& at(const std::string& task) const;
  double metric(const std::string& task, const std::string& name) const;
};

struct EvalDiagnostics {
  std::vector<std::string> missing_predictions;     // gold ids scored as empty output
  std::vector<std::string> unexpected_predictions;  // prediction ids absent from gold
  std::vector<std::string> task_mismatches;         // prediction task differs from gold
  std::size_t detection_parse_issues = 0;
  std::size_t unknown_class_predictions = 0;
  std::size_t grounding_parse_failures = 0;
  std::size_t counting_parse_failures = 0;
};

struct MetricReport {
  std::string tokenizer;
  std::optional<std::string> subset_filter;
  ScoreBlock overall;
  std::map<std::string, ScoreBlock> subsets;  // per condition tag
  EvalDiagnostics diagnostics;

  // Fixed key order, values rounded to 6 decimals.
  Json to_json() const;
  // Two-space indented JSON with a trailing newline.
  std::string to_json_string() const;
  // scope,task,metric,value rows; count appears as a metric.
  std::string to_csv() const;
};

struct EvalOptions {
  // Keep only gold records carrying this condition tag.
  std::optional<std::string> subset;
  bool bleu_smoothing = false;
  // Pixel sizes per image id, for predictions written in pixels.
  std::map<std::string, ImageSize> image_sizes;
};

// Scores predictions against gold records. Gold ids and prediction ids must
// each be unique. A gold record with no prediction is scored as empty output
// and listed in the diagnostics. Independent of input order.
MetricReport evaluate(const std::vector<Prediction>& predictions, const std::vector<datagen::QaRecord>& gold,
                      const EvalOptions& options = {});

double round6(double x);

}  // namespace uwsu::eval
