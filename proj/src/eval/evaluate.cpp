#include "uwsu/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "uwsu/eval/metrics.hpp"
#include "uwsu/eval/text_metrics.hpp"

namespace uwsu::eval {

using datagen::QaRecord;
using datagen::QaTask;

Prediction prediction_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("prediction line is not an object");
  Prediction p;
  try {
    p.id = j.at("id").get<std::string>();
    p.task = j.value("task", std::string());
    p.output_text = j.at("output_text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("prediction: ") + e.what());
  }
  return p;
}

Json to_json(const Prediction& p) {
  Json j;
  j["id"] = p.id;
  j["task"] = p.task;
  j["output_text"] = p.output_text;
  return j;
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::vector<Prediction> out;
  for (const auto& j : datagen::read_jsonl(path)) out.push_back(prediction_from_json(j));
  return out;
}

void write_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  std::vector<Json> rows;
  rows.reserve(preds.size());
  for (const auto& p : preds) rows.push_back(to_json(p));
  datagen::write_jsonl(path, rows);
}

std::string report_task(QaTask task) {
  if (task == QaTask::counting_regress || task == QaTask::counting_choice) return "counting";
  return std::string(datagen::to_string(task));
}

const TaskScore& ScoreBlock::at(const std::string& task) const {
  for (const auto& [name, s] : tasks)
    if (name == task) return s;
  throw ValidationError("report has no task " + task);
}

double ScoreBlock::metric(const std::string& task, const std::string& name) const {
  for (const auto& [m, v] : at(task).metrics)
    if (m == name) return v;
  throw ValidationError("report has no metric " + task + "/" + name);
}

double round6(double x) {
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

namespace {

struct Item {
  const QaRecord* gold;
  std::string output;
};

struct Tally {
  std::size_t detection_parse_issues = 0;
  std::size_t unknown_class_predictions = 0;
  std::size_t grounding_parse_failures = 0;
  std::size_t counting_parse_failures = 0;
};

std::optional<ImageSize> size_for(const EvalOptions& opt, const std::string& image_id) {
  const auto it = opt.image_sizes.find(image_id);
  if (it == opt.image_sizes.end()) return std::nullopt;
  return it->second;
}

std::vector<GoldBox> gold_boxes(const QaRecord& r) {
  const ParsedDetections g = parse_detection_output(r.answer);
  if (!g.diagnostics.empty()) throw ValidationError("gold record " + r.id + " has a malformed detection answer");
  std::vector<GoldBox> out;
  for (const auto& e : g.entries) out.push_back({e.class_name, e.bbox});
  return out;
}

long long gold_count(const QaRecord& r) {
  const auto c = parse_count(r.answer);
  if (!c || c->kind != CountAnswer::Kind::number) throw ValidationError("gold record " + r.id + " has no count");
  return c->value;
}

char gold_letter(const QaRecord& r) {
  const auto c = parse_count(r.answer);
  if (!c || c->kind != CountAnswer::Kind::letter) throw ValidationError("gold record " + r.id + " has no letter");
  return c->letter;
}

// Items must already be in id order.
ScoreBlock score(const std::vector<Item>& items, const EvalOptions& opt, Tally* tally) {
  std::map<std::string, std::vector<const Item*>> by_task;
  for (const auto& it : items) by_task[report_task(it.gold->task)].push_back(&it);

  ScoreBlock block;
  for (const char* name : kReportTasks) {
    TaskScore ts;
    const auto found = by_task.find(name);
    const std::vector<const Item*> empty;
    const auto& group = found == by_task.end() ? empty : found->second;
    ts.count = group.size();
    const std::string task(name);
    if (group.empty()) {
      block.tasks.emplace_back(task, std::move(ts));
      continue;
    }
    if (task == "coarse_cls" || task == "fine_cls") {
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto* it : group) pairs.emplace_back(it->output, it->gold->answer);
      const auto m = classification_metrics(pairs);
      ts.metrics = {{"acc", m.acc}, {"precision", m.precision}, {"f1", m.f1}};
    } else if (task == "detection") {
      std::vector<DetectionImage> images;
      for (const auto* it : group) {
        const auto parsed = parse_detection_output(it->output, size_for(opt, it->gold->image_id));
        if (tally) tally->detection_parse_issues += parsed.diagnostics.size();
        images.push_back({parsed.entries, gold_boxes(*it->gold)});
      }
      const auto m = detection_metrics(images);
      if (tally) tally->unknown_class_predictions += m.unknown_class_predictions;
      ts.metrics = {{"map", m.map}, {"map@0.5", m.map50}, {"map@0.75", m.map75}, {"ar@100", m.ar100}};
    } else if (task == "grounding") {
      std::vector<std::optional<Bbox>> preds;
      std::vector<Bbox> golds;
      for (const auto* it : group) {
        preds.push_back(try_parse_bbox(it->output, size_for(opt, it->gold->image_id)));
        golds.push_back(parse_bbox(it->gold->answer));
      }
      const auto m = grounding_metrics(preds, golds);
      if (tally) tally->grounding_parse_failures += m.parse_failures;
      ts.metrics = {{"miou", m.miou}, {"pr@0.5", m.pr50}, {"pr@0.75", m.pr75}, {"ap@0.5", m.ap50}};
    } else if (task == "counting") {
      std::vector<std::pair<std::optional<long long>, long long>> regress;
      std::vector<std::pair<std::optional<char>, char>> choice;
      for (const auto* it : group) {
        const auto c = parse_count(it->output);
        if (it->gold->task == QaTask::counting_regress) {
          std::optional<long long> v;
          if (c && c->kind == CountAnswer::Kind::number) v = c->value;
          regress.emplace_back(v, gold_count(*it->gold));
        } else {
          std::optional<char> v;
          if (c && c->kind == CountAnswer::Kind::letter) v = c->letter;
          choice.emplace_back(v, gold_letter(*it->gold));
        }
      }
      const auto m = counting_metrics(regress, choice);
      if (tally) tally->counting_parse_failures += m.parse_failures;
      if (m.mae) ts.metrics.emplace_back("mae", *m.mae);
      if (m.rmse) ts.metrics.emplace_back("rmse", *m.rmse);
      if (m.acc) ts.metrics.emplace_back("acc", *m.acc);
    } else {
      std::vector<Tokens> cands;
      std::vector<std::vector<Tokens>> refs;
      double meteor_sum = 0.0;
      for (const auto* it : group) {
        cands.push_back(tokenize(it->output));
        refs.push_back({tokenize(it->gold->answer)});
        meteor_sum += meteor_lite(cands.back(), refs.back());
      }
      const double meteor = meteor_sum / static_cast<double>(group.size());
      if (task == "vqa") {
        ts.metrics = {{"meteor_lite", meteor}};
      } else {
        ts.metrics = {{"bleu4", bleu4(cands, refs, opt.bleu_smoothing)}, {"cider", cider(cands, refs)},
                      {"meteor_lite", meteor}};
      }
    }
    for (const auto& [m, v] : ts.metrics)
      if (!std::isfinite(v)) throw NumericError("eval " + task, "metric " + m + " is not finite");
    block.tasks.emplace_back(task, std::move(ts));
  }
  return block;
}

Json block_json(const ScoreBlock& b) {
  Json j = Json::object();
  for (const auto& [task, ts] : b.tasks) {
    Json t;
    t["count"] = ts.count;
    t["metrics"] = Json::object();
    for (const auto& [m, v] : ts.metrics) t["metrics"][m] = round6(v);
    j[task] = std::move(t);
  }
  return j;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << round6(v);
  return os.str();
}

void block_csv(std::ostringstream& os, const std::string& scope, const ScoreBlock& b) {
  for (const auto& [task, ts] : b.tasks) {
    os << scope << "," << task << ",count," << ts.count << "\n";
    for (const auto& [m, v] : ts.metrics) os << scope << "," << task << "," << m << "," << csv_number(v) << "\n";
  }
}

}  // namespace

Json MetricReport::to_json() const {
  Json j;
  j["tokenizer"] = tokenizer;
  j["subset_filter"] = subset_filter ? Json(*subset_filter) : Json(nullptr);
  j["tasks"] = block_json(overall);
  j["subsets"] = Json::object();
  for (const auto& [tag, b] : subsets) j["subsets"][tag] = block_json(b);
  Json d;
  d["missing_predictions"] = diagnostics.missing_predictions;
  d["unexpected_predictions"] = diagnostics.unexpected_predictions;
  d["task_mismatches"] = diagnostics.task_mismatches;
  d["detection_parse_issues"] = diagnostics.detection_parse_issues;
  d["unknown_class_predictions"] = diagnostics.unknown_class_predictions;
  d["grounding_parse_failures"] = diagnostics.grounding_parse_failures;
  d["counting_parse_failures"] = diagnostics.counting_parse_failures;
  j["diagnostics"] = std::move(d);
  return j;
}

std::string MetricReport::to_json_string() const { return to_json().dump(2) + "\n"; }

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "scope,task,metric,value\n";
  block_csv(os, "all", overall);
  for (const auto& [tag, b] : subsets) block_csv(os, "subset:" + tag, b);
  return os.str();
}

MetricReport evaluate(const std::vector<Prediction>& predictions, const std::vector<QaRecord>& gold,
                      const EvalOptions& options) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) throw ValidationError("duplicate prediction id " + p.id);

  std::vector<const QaRecord*> records;
  std::set<std::string> gold_ids;
  for (const auto& r : gold) {
    if (!gold_ids.insert(r.id).second) throw ValidationError("duplicate gold id " + r.id);
    if (options.subset &&
        std::find(r.conditions.begin(), r.conditions.end(), *options.subset) == r.conditions.end())
      continue;
    records.push_back(&r);
  }
  std::sort(records.begin(), records.end(), [](const QaRecord* a, const QaRecord* b) { return a->id < b->id; });

  MetricReport report;
  report.tokenizer = std::string(kTokenizerVersion);
  report.subset_filter = options.subset;

  std::vector<Item> items;
  items.reserve(records.size());
  for (const auto* r : records) {
    const auto it = by_id.find(r->id);
    if (it == by_id.end()) {
      report.diagnostics.missing_predictions.push_back(r->id);
      items.push_back({r, ""});
      continue;
    }
    if (!it->second->task.empty() && it->second->task != datagen::to_string(r->task))
      report.diagnostics.task_mismatches.push_back(r->id);
    items.push_back({r, it->second->output_text});
  }
  for (const auto& p : predictions)
    if (!gold_ids.count(p.id)) report.diagnostics.unexpected_predictions.push_back(p.id);
  std::sort(report.diagnostics.unexpected_predictions.begin(), report.diagnostics.unexpected_predictions.end());

  Tally tally;
  report.overall = score(items, options, &tally);
  report.diagnostics.detection_parse_issues = tally.detection_parse_issues;
  report.diagnostics.unknown_class_predictions = tally.unknown_class_predictions;
  report.diagnostics.grounding_parse_failures = tally.grounding_parse_failures;
  report.diagnostics.counting_parse_failures = tally.counting_parse_failures;

  std::set<std::string> tags;
  for (const auto& it : items)
    for (const auto& c : it.gold->conditions) tags.insert(c);
  for (const auto& tag : tags) {
    std::vector<Item> sub;
    for (const auto& it : items)
      if (std::find(it.gold->conditions.begin(), it.gold->conditions.end(), tag) != it.gold->conditions.end())
        sub.push_back(it);
    report.subsets[tag] = score(sub, options, nullptr);
  }
  return report;
}

}  // namespace uwsu::eval
