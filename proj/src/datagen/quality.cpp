#include "uwsu/datagen/quality.hpp"

#include <algorithm>
#include <map>

#include "uwsu/datagen/templates.hpp"

namespace uwsu::datagen {

Verdict RuleJudge::judge(const QaRecord& r) const {
  if (r.answer.find_first_not_of(" \t\r\n") == std::string::npos) return {false, "empty answer"};
  if (r.answer.size() > max_answer_chars_) {
    return {false, "answer longer than " + std::to_string(max_answer_chars_) + " characters"};
  }
  if (r.task != QaTask::vqa && count_template_matches(r.task, r.question) != 1) {
    return {false, "question does not match a " + std::string(to_string(r.task)) + " template"};
  }
  return {true, ""};
}

std::vector<QaRecord> FilterResult::kept() const {
  std::vector<QaRecord> out = accepted;
  out.insert(out.end(), replaced.begin(), replaced.end());
  std::sort(out.begin(), out.end(), [](const QaRecord& a, const QaRecord& b) { return a.id < b.id; });
  return out;
}

FilterResult quality_filter(const std::vector<QaRecord>& records, const Judge& judge,
                            const Regenerator& regenerate) {
  FilterResult out;
  for (const auto& r : records) {
    const Verdict first = judge.judge(r);
    if (first.accept) {
      out.accepted.push_back(r);
      continue;
    }
    std::optional<QaRecord> retry = regenerate ? regenerate(r) : std::nullopt;
    if (!retry) {
      out.rejected.push_back({r, first.reason + " (no regeneration available)"});
      continue;
    }
    const Verdict second = judge.judge(*retry);
    if (second.accept) {
      out.replaced.push_back(std::move(*retry));
    } else {
      out.rejected.push_back({std::move(*retry), second.reason});
    }
  }
  return out;
}

Regenerator make_regenerator(const std::vector<ImageAnnotation>& annotations,
                             const GenerationConfig& config, CaptionProvider* provider) {
  auto by_id = std::make_shared<std::map<std::string, ImageAnnotation>>();
  for (const auto& a : annotations) by_id->emplace(a.image_id, a);
  return [by_id, config, provider](const QaRecord& r) -> std::optional<QaRecord> {
    const auto it = by_id->find(r.image_id);
    if (it == by_id->end()) return std::nullopt;
    const auto fresh = generate_image(it->second, config, provider, 1);
    for (const auto& f : fresh.records)
      if (f.id == r.id) return f;
    return std::nullopt;
  };
}

}  // namespace uwsu::datagen
