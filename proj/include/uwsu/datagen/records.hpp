#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uwsu/common/bbox.hpp"

namespace uwsu::datagen {

using Json = nlohmann::ordered_json;

enum class QaTask {
  detection,
  coarse_cls,
  fine_cls,
  grounding,
  counting_regress,
  counting_choice,
  image_caption,
  region_caption,
  vqa,
};

inline constexpr QaTask kAllTasks[] = {
    QaTask::detection,        QaTask::coarse_cls,      QaTask::fine_cls,
    QaTask::grounding,        QaTask::counting_regress, QaTask::counting_choice,
    QaTask::image_caption,    QaTask::region_caption,   QaTask::vqa,
};

std::string_view to_string(QaTask task);
// Throws ValidationError for names outside the closed set.
QaTask parse_task(std::string_view name);

struct DetectionEntry {
  std::string class_name;
  Bbox bbox;
};

struct DetectionAnnotation {
  std::string image_id;
  std::vector<DetectionEntry> entries;

  void validate() const;
};

struct CountAnnotation {
  std::string image_id;
  long long count = 0;
};

struct TaxonomyAnnotation {
  std::string image_id;
  std::string taxonomic_class;
};

enum class CaptionScope { image, region };

struct CaptionRecord {
  std::string image_id;
  CaptionScope scope = CaptionScope::image;
  std::optional<Bbox> bbox;  // set iff scope == region
  std::string text;
  std::string provider_id;

  void validate() const;
};

struct QaRecord {
  std::string id;
  std::string image_id;
  std::string source;
  QaTask task = QaTask::detection;
  std::string question;
  std::string answer;
  std::vector<std::string> conditions;

  friend bool operator==(const QaRecord&, const QaRecord&) = default;
};

Json to_json(const QaRecord& r);
QaRecord qa_from_json(const Json& j);

// One line of the input annotation JSONL: everything known about one image.
struct ImageAnnotation {
  std::string image_id;
  std::string source;
  std::vector<std::string> conditions;
  std::vector<DetectionEntry> detections;
  std::optional<long long> count;
  std::optional<std::string> taxon;
  std::vector<CaptionRecord> captions;

  DetectionAnnotation detection_annotation() const { return {image_id, detections}; }
};

ImageAnnotation annotation_from_json(const Json& j);
Json to_json(const ImageAnnotation& a);

// JSONL helpers. Blank lines are skipped; a parse failure names the line.
std::vector<Json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Json>& rows);

std::vector<ImageAnnotation> read_annotations(const std::string& path);
std::vector<QaRecord> read_qa_records(const std::string& path);
void write_qa_records(const std::string& path, const std::vector<QaRecord>& records);
std::string qa_records_to_jsonl(const std::vector<QaRecord>& records);

}  // namespace uwsu::datagen
