#include "uwsu/datagen/generate.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "uwsu/datagen/templates.hpp"

namespace uwsu::datagen {

namespace {

std::string_view pick_template(QaTask task, Rng& rng) {
  const auto templates = question_templates(task);
  return templates[rng.below(templates.size())];
}

}  // namespace

std::string format_bbox(const Bbox& b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.3f, %.3f, %.3f, %.3f]", b.x1, b.y1, b.x2, b.y2);
  return buf;
}

std::string first_sentence(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  text.remove_prefix(begin);
  std::size_t end = text.size();
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n' || text[i + 1] == '\t' ||
         text[i + 1] == '\r')) {
      end = i;
      break;
    }
  }
  std::string out(text.substr(0, end));
  while (!out.empty() && (out.back() == ' ' || out.back() == '.' || out.back() == '\n' || out.back() == '\r'))
    out.pop_back();
  return out;
}

CountingChoice make_counting_choice(long long count, Rng& rng) {
  if (count < 0) throw ValidationError("count must be >= 0");
  CountingChoice c;
  c.interval = kChoiceIntervals[rng.below(kChoiceIntervals.size())];
  do {
    c.position = static_cast<int>(rng.below(4));
  } while (count - c.position * c.interval < 0);
  for (int i = 0; i < 4; ++i) c.options[i] = count + (i - c.position) * c.interval;
  return c;
}

std::string render_choices(const std::array<long long, 4>& options) {
  std::string out;
  for (int i = 0; i < 4; ++i) {
    out += i == 0 ? " " : "  ";
    out += static_cast<char>('A' + i);
    out += ". " + std::to_string(options[i]);
  }
  return out;
}

QaRecord gen_detection_qa(const DetectionAnnotation& ann, Rng& rng) {
  if (ann.entries.empty()) throw ValidationError("image " + ann.image_id + " has no detections");
  ann.validate();
  std::vector<std::string> classes;
  std::string answer;
  for (const auto& e : ann.entries) {
    if (std::find(classes.begin(), classes.end(), e.class_name) == classes.end()) classes.push_back(e.class_name);
    if (!answer.empty()) answer += ", ";
    answer += e.class_name + ":" + format_bbox(e.bbox);
  }
  std::string joined;
  for (const auto& c : classes) joined += (joined.empty() ? "" : ", ") + c;
  QaRecord r;
  r.image_id = ann.image_id;
  r.task = QaTask::detection;
  r.question = fill_template(pick_template(QaTask::detection, rng), joined);
  r.answer = std::move(answer);
  return r;
}

QaRecord gen_coarse_cls_qa(const std::string& image_id, const DetectionEntry& entry, Rng& rng) {
  if (entry.class_name.empty()) throw ValidationError("image " + image_id + ": empty class name");
  entry.bbox.validate();
  QaRecord r;
  r.image_id = image_id;
  r.task = QaTask::coarse_cls;
  r.question = fill_template(pick_template(QaTask::coarse_cls, rng), format_bbox(entry.bbox));
  r.answer = entry.class_name;
  return r;
}

QaRecord gen_fine_cls_qa(const TaxonomyAnnotation& ann, Rng& rng) {
  if (ann.taxonomic_class.empty()) throw ValidationError("image " + ann.image_id + ": empty taxonomic class");
  QaRecord r;
  r.image_id = ann.image_id;
  r.task = QaTask::fine_cls;
  r.question = std::string(pick_template(QaTask::fine_cls, rng));
  r.answer = ann.taxonomic_class;
  return r;
}

QaRecord gen_grounding_qa(const CaptionRecord& caption, Rng& rng) {
  if (caption.scope != CaptionScope::region) {
    throw ValidationError("image " + caption.image_id + ": grounding needs a region caption");
  }
  caption.validate();
  const std::string phrase = first_sentence(caption.text);
  if (phrase.empty()) throw ValidationError("image " + caption.image_id + ": empty region caption");
  QaRecord r;
  r.image_id = caption.image_id;
  r.task = QaTask::grounding;
  r.question = fill_template(pick_template(QaTask::grounding, rng), phrase);
  r.answer = format_bbox(*caption.bbox);
  return r;
}

QaRecord gen_counting_regress_qa(const CountAnnotation& ann, Rng& rng) {
  if (ann.count < 0) throw ValidationError("image " + ann.image_id + ": negative count");
  QaRecord r;
  r.image_id = ann.image_id;
  r.task = QaTask::counting_regress;
  r.question = std::string(pick_template(QaTask::counting_regress, rng));
  r.answer = std::to_string(ann.count);
  return r;
}

QaRecord gen_counting_choice_qa(const CountAnnotation& ann, Rng& rng) {
  if (ann.count < 0) throw ValidationError("image " + ann.image_id + ": negative count");
  QaRecord r;
  r.image_id = ann.image_id;
  r.task = QaTask::counting_choice;
  const std::string question(pick_template(QaTask::counting_choice, rng));
  const CountingChoice c = make_counting_choice(ann.count, rng);
  r.question = question + render_choices(c.options);
  r.answer = std::string(1, c.letter());
  return r;
}

QaRecord gen_caption_qa(const CaptionRecord& caption, Rng& rng) {
  caption.validate();
  if (caption.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ValidationError("image " + caption.image_id + ": empty caption");
  }
  QaRecord r;
  r.image_id = caption.image_id;
  if (caption.scope == CaptionScope::image) {
    r.task = QaTask::image_caption;
    r.question = std::string(pick_template(QaTask::image_caption, rng));
  } else {
    r.task = QaTask::region_caption;
    r.question = fill_template(pick_template(QaTask::region_caption, rng), format_bbox(*caption.bbox));
  }
  r.answer = caption.text;
  return r;
}

GenerationResult generate_image(const ImageAnnotation& ann, const GenerationConfig& config,
                                CaptionProvider* provider, int attempt) {
  GenerationResult out;
  auto seed_for = [&](const std::string& id) {
    return record_seed(config.seed, attempt == 0 ? id : id + "#retry" + std::to_string(attempt));
  };
  auto emit = [&](QaTask task, int idx, auto&& make) {
    const std::string id = ann.image_id + "-" + std::string(to_string(task)) + "-" + std::to_string(idx);
    try {
      Rng rng(seed_for(id));
      QaRecord r = make(rng);
      r.id = id;
      r.image_id = ann.image_id;
      r.source = ann.source;
      r.conditions = ann.conditions;
      out.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      out.skipped.push_back({ann.image_id, std::string(to_string(task)), e.what()});
    }
  };
  auto skip = [&](QaTask task, const std::string& reason) {
    out.skipped.push_back({ann.image_id, std::string(to_string(task)), reason});
  };

  if (ann.detections.empty()) {
    skip(QaTask::detection, "no detection entries");
  } else {
    const auto det = ann.detection_annotation();
    emit(QaTask::detection, 0, [&](Rng& rng) { return gen_detection_qa(det, rng); });
    for (std::size_t i = 0; i < ann.detections.size(); ++i) {
      emit(QaTask::coarse_cls, static_cast<int>(i),
           [&](Rng& rng) { return gen_coarse_cls_qa(ann.image_id, ann.detections[i], rng); });
    }
  }

  if (ann.taxon) {
    if (!config.taxonomy) {
      skip(QaTask::fine_cls, "no taxonomy vocabulary configured");
    } else if (std::find(config.taxonomy->begin(), config.taxonomy->end(), *ann.taxon) == config.taxonomy->end()) {
      skip(QaTask::fine_cls, "taxon '" + *ann.taxon + "' is not in the configured vocabulary");
    } else {
      emit(QaTask::fine_cls, 0, [&](Rng& rng) { return gen_fine_cls_qa({ann.image_id, *ann.taxon}, rng); });
    }
  }

  if (ann.count) {
    const CountAnnotation count{ann.image_id, *ann.count};
    emit(QaTask::counting_regress, 0, [&](Rng& rng) { return gen_counting_regress_qa(count, rng); });
    emit(QaTask::counting_choice, 0, [&](Rng& rng) { return gen_counting_choice_qa(count, rng); });
  }

  std::vector<CaptionRecord> captions = ann.captions;
  std::vector<QaRecord> vqa;
  if (provider) {
    auto ask = [&](PromptKind kind, const std::optional<Bbox>& bbox, int region) {
      try {
        auto res = request_freeform(*provider, ann.image_id, kind, bbox, region, attempt);
        for (auto& c : res.captions) captions.push_back(std::move(c));
        for (auto& q : res.qa) vqa.push_back(std::move(q));
      } catch (const Error& e) {
        skip(kind == PromptKind::vqa ? QaTask::vqa
             : kind == PromptKind::image_caption ? QaTask::image_caption
                                                 : QaTask::region_caption,
             e.what());
      }
    };
    ask(PromptKind::image_caption, std::nullopt, 0);
    for (std::size_t i = 0; i < ann.detections.size(); ++i) ask(PromptKind::region_caption, ann.detections[i].bbox, static_cast<int>(i));
    ask(PromptKind::vqa, std::nullopt, 0);
  }

  int image_idx = 0, region_idx = 0;
  for (const auto& c : captions) {
    if (c.scope == CaptionScope::image) {
      emit(QaTask::image_caption, image_idx++, [&](Rng& rng) { return gen_caption_qa(c, rng); });
    } else {
      const int idx = region_idx++;
      emit(QaTask::region_caption, idx, [&](Rng& rng) { return gen_caption_qa(c, rng); });
      emit(QaTask::grounding, idx, [&](Rng& rng) { return gen_grounding_qa(c, rng); });
    }
  }
  for (std::size_t i = 0; i < vqa.size(); ++i) {
    emit(QaTask::vqa, static_cast<int>(i), [&](Rng&) { return vqa[i]; });
  }
  return out;
}

GenerationResult generate_dataset(const std::vector<ImageAnnotation>& annotations,
                                  const GenerationConfig& config, CaptionProvider* provider) {
  GenerationResult out;
  std::set<std::string> seen;
  for (const auto& ann : annotations) {
    if (!seen.insert(ann.image_id).second) throw ValidationError("duplicate image_id " + ann.image_id);
    auto part = generate_image(ann, config, provider);
    for (auto& r : part.records) out.records.push_back(std::move(r));
    for (auto& s : part.skipped) out.skipped.push_back(std::move(s));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const QaRecord& a, const QaRecord& b) { return a.id < b.id; });
  std::stable_sort(out.skipped.begin(), out.skipped.end(),
                   [](const SkipReport& a, const SkipReport& b) { return a.image_id < b.image_id; });
  return out;
}

}  // namespace uwsu::datagen
