#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uwsu/common/rng.hpp"
#include "uwsu/datagen/provider.hpp"
#include "uwsu/datagen/records.hpp"

namespace uwsu::datagen {

// "[x1, y1, x2, y2]" with three decimals each.
std::string format_bbox(const Bbox& bbox);

// Text up to and including the first '.', '!' or '?' followed by whitespace
// or end of text, with the terminal punctuation removed.
std::string first_sentence(std::string_view text);

inline constexpr std::array<long long, 3> kChoiceIntervals = {5, 50, 100};

struct CountingChoice {
  long long interval = 5;
  int position = 0;  // index of the true count among the options
  std::array<long long, 4> options{};
  char letter() const { return static_cast<char>('A' + position); }
};

// Interval uniform over kChoiceIntervals, position uniform over 0..3 and
// redrawn until every option is non-negative.
CountingChoice make_counting_choice(long long count, Rng& rng);

// " A. x  B. y  C. z  D. w"
std::string render_choices(const std::array<long long, 4>& options);

// Generators fill task, question, answer and image_id; the dataset driver
// assigns id, source and conditions.
QaRecord gen_detection_qa(const DetectionAnnotation& ann, Rng& rng);
QaRecord gen_coarse_cls_qa(const std::string& image_id, const DetectionEntry& entry, Rng& rng);
QaRecord gen_fine_cls_qa(const TaxonomyAnnotation& ann, Rng& rng);
QaRecord gen_grounding_qa(const CaptionRecord& caption, Rng& rng);
QaRecord gen_counting_regress_qa(const CountAnnotation& ann, Rng& rng);
QaRecord gen_counting_choice_qa(const CountAnnotation& ann, Rng& rng);
QaRecord gen_caption_qa(const CaptionRecord& caption, Rng& rng);

struct GenerationConfig {
  std::uint64_t seed = 0;
  // Closed vocabulary for fine-grained classes. Without one, fine_cls
  // records are skipped.
  std::optional<std::vector<std::string>> taxonomy;
};

struct SkipReport {
  std::string image_id;
  std::string task;
  std::string reason;
};

struct GenerationResult {
  std::vector<QaRecord> records;  // sorted by id
  std::vector<SkipReport> skipped;
};

// Record ids are "<image_id>-<task>-<index>"; each record draws from an Rng
// seeded by record_seed(seed, id), so output does not depend on input order.
// With a provider, captions and VQA pairs are also requested per image.
GenerationResult generate_dataset(const std::vector<ImageAnnotation>& annotations,
                                  const GenerationConfig& config, CaptionProvider* provider = nullptr);

// All records for one image. `attempt` > 0 salts every record seed so a
// retry draws fresh templates.
GenerationResult generate_image(const ImageAnnotation& annotation, const GenerationConfig& config,
                                CaptionProvider* provider = nullptr, int attempt = 0);

}  // namespace uwsu::datagen
