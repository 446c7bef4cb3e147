#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uwsu/datagen/generate.hpp"
#include "uwsu/datagen/records.hpp"

namespace uwsu::datagen {

struct Verdict {
  bool accept = true;
  std::string reason;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual Verdict judge(const QaRecord& record) const = 0;
};

class AcceptAllJudge : public Judge {
 public:
  Verdict judge(const QaRecord&) const override { return {true, ""}; }
};

class RejectAllJudge : public Judge {
 public:
  Verdict judge(const QaRecord&) const override { return {false, "rejected by policy"}; }
};

// Rejects empty answers, answers longer than `max_answer_chars`, and
// questions that do not instantiate exactly one template of their task.
// VQA questions are free-form and skip the template check.
class RuleJudge : public Judge {
 public:
  explicit RuleJudge(std::size_t max_answer_chars = 4096) : max_answer_chars_(max_answer_chars) {}
  Verdict judge(const QaRecord& record) const override;

 private:
  std::size_t max_answer_chars_;
};

// Returns a fresh record with the same id, or nothing if it cannot.
using Regenerator = std::function<std::optional<QaRecord>(const QaRecord&)>;

struct Rejection {
  QaRecord record;
  std::string reason;
};

struct FilterResult {
  std::vector<QaRecord> accepted;  // passed on the first judgement
  std::vector<QaRecord> replaced;  // regenerated once, then passed
  std::vector<Rejection> rejected;

  // accepted and replaced, sorted by id.
  std::vector<QaRecord> kept() const;
};

FilterResult quality_filter(const std::vector<QaRecord>& records, const Judge& judge,
                            const Regenerator& regenerate = nullptr);

// Regenerates a record by re-running its image's generation with a retry
// seed (and a repeated provider request for provider-backed records).
Regenerator make_regenerator(const std::vector<ImageAnnotation>& annotations,
                             const GenerationConfig& config, CaptionProvider* provider = nullptr);

}  // namespace uwsu::datagen
