#include "uwsu/datagen/records.hpp"

#include <fstream>
#include <sstream>

#include "uwsu/common/error.hpp"

namespace uwsu::datagen {

namespace {

Bbox bbox_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("bbox must be an array of 4 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw ValidationError("bbox must be an array of 4 numbers");
  Bbox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  b.validate();
  return b;
}

Json bbox_to_json(const Bbox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

std::vector<std::string> string_list(const Json& j, const char* field) {
  std::vector<std::string> out;
  if (!j.contains(field)) return out;
  if (!j.at(field).is_array()) throw ValidationError(std::string(field) + " must be an array");
  for (const auto& v : j.at(field)) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

std::string_view to_string(QaTask task) {
  switch (task) {
    case QaTask::detection: return "detection";
    case QaTask::coarse_cls: return "coarse_cls";
    case QaTask::fine_cls: return "fine_cls";
    case QaTask::grounding: return "grounding";
    case QaTask::counting_regress: return "counting_regress";
    case QaTask::counting_choice: return "counting_choice";
    case QaTask::image_caption: return "image_caption";
    case QaTask::region_caption: return "region_caption";
    case QaTask::vqa: return "vqa";
  }
  return "unknown";
}

QaTask parse_task(std::string_view name) {
  for (QaTask t : kAllTasks)
    if (to_string(t) == name) return t;
  throw ValidationError("unknown task tag '" + std::string(name) + "'");
}

void DetectionAnnotation::validate() const {
  for (const auto& e : entries) {
    if (e.class_name.empty()) throw ValidationError("image " + image_id + ": empty class name");
    e.bbox.validate();
  }
}

void CaptionRecord::validate() const {
  if (scope == CaptionScope::region) {
    if (!bbox) throw ValidationError("image " + image_id + ": region caption without a bbox");
    bbox->validate();
  } else if (bbox) {
    throw ValidationError("image " + image_id + ": image caption with a bbox");
  }
}

Json to_json(const QaRecord& r) {
  Json j;
  j["id"] = r.id;
  j["image_id"] = r.image_id;
  j["source"] = r.source;
  j["task"] = std::string(to_string(r.task));
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["conditions"] = r.conditions;
  return j;
}

QaRecord qa_from_json(const Json& j) {
  try {
    QaRecord r;
    r.id = j.at("id").get<std::string>();
    r.image_id = j.value("image_id", "");
    r.source = j.value("source", "");
    r.task = parse_task(j.at("task").get<std::string>());
    r.question = j.value("question", "");
    r.answer = j.at("answer").get<std::string>();
    r.conditions = string_list(j, "conditions");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("QA record: ") + e.what());
  }
}

ImageAnnotation annotation_from_json(const Json& j) {
  ImageAnnotation a;
  try {
    a.image_id = j.at("image_id").get<std::string>();
    if (a.image_id.empty()) throw ValidationError("empty image_id");
    a.source = j.value("source", "");
    a.conditions = string_list(j, "conditions");
    if (j.contains("detections")) {
      for (const auto& d : j.at("detections")) {
        DetectionEntry e{d.at("class").get<std::string>(), bbox_from_json(d.at("bbox"))};
        if (e.class_name.empty()) throw ValidationError("empty class name");
        a.detections.push_back(std::move(e));
      }
    }
    if (j.contains("count") && !j.at("count").is_null()) {
      const auto c = j.at("count").get<long long>();
      if (c < 0) throw ValidationError("count must be >= 0");
      a.count = c;
    }
    if (j.contains("taxon") && !j.at("taxon").is_null()) a.taxon = j.at("taxon").get<std::string>();
    if (j.contains("captions")) {
      for (const auto& c : j.at("captions")) {
        CaptionRecord r;
        r.image_id = a.image_id;
        const std::string scope = c.value("scope", "image");
        if (scope == "image") {
          r.scope = CaptionScope::image;
        } else if (scope == "region") {
          r.scope = CaptionScope::region;
        } else {
          throw ValidationError("caption scope must be 'image' or 'region'");
        }
        if (c.contains("bbox")) r.bbox = bbox_from_json(c.at("bbox"));
        r.text = c.at("text").get<std::string>();
        r.provider_id = c.value("provider", "");
        r.validate();
        a.captions.push_back(std::move(r));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("annotation " + a.image_id + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("annotation " + a.image_id + ": " + e.what());
  }
  return a;
}

Json to_json(const ImageAnnotation& a) {
  Json j;
  j["image_id"] = a.image_id;
  j["source"] = a.source;
  j["conditions"] = a.conditions;
  j["detections"] = Json::array();
  for (const auto& d : a.detections) j["detections"].push_back({{"class", d.class_name}, {"bbox", bbox_to_json(d.bbox)}});
  if (a.count) j["count"] = *a.count;
  if (a.taxon) j["taxon"] = *a.taxon;
  j["captions"] = Json::array();
  for (const auto& c : a.captions) {
    Json cj;
    cj["scope"] = c.scope == CaptionScope::image ? "image" : "region";
    if (c.bbox) cj["bbox"] = bbox_to_json(*c.bbox);
    cj["text"] = c.text;
    cj["provider"] = c.provider_id;
    j["captions"].push_back(std::move(cj));
  }
  return j;
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Json> rows;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& r : rows) out << r.dump() << "\n";
}

std::vector<ImageAnnotation> read_annotations(const std::string& path) {
  std::vector<ImageAnnotation> out;
  for (const auto& j : read_jsonl(path)) out.push_back(annotation_from_json(j));
  return out;
}

std::vector<QaRecord> read_qa_records(const std::string& path) {
  std::vector<QaRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(qa_from_json(j));
  return out;
}

std::string qa_records_to_jsonl(const std::vector<QaRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) os << to_json(r).dump() << "\n";
  return os.str();
}

void write_qa_records(const std::string& path, const std::vector<QaRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << qa_records_to_jsonl(records);
}

}  // namespace uwsu::datagen
