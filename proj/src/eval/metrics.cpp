#include "uwsu/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace uwsu::eval {

double iou(const Bbox& a, const Bbox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::array<double, 10> coco_thresholds() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[i] = (50 + 5 * i) / 100.0;
  return t;
}

double interpolated_ap(const std::vector<bool>& hits, std::size_t gold_count) {
  if (gold_count == 0) return 0.0;
  const std::size_t n = hits.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gold_count);
  }
  // Running max from the right gives the precision envelope.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

GroundingMetrics grounding_metrics(const std::vector<std::optional<Bbox>>& preds, const std::vector<Bbox>& golds) {
  GroundingMetrics m;
  const std::size_t n = golds.size();
  if (preds.size() != n) throw DimensionError("grounding: prediction and gold counts differ");
  if (n == 0) return m;
  double sum = 0.0;
  std::size_t hit50 = 0, hit75 = 0;
  std::vector<bool> ranked;
  for (std::size_t i = 0; i < n; ++i) {
    if (!preds[i]) {
      ++m.parse_failures;
      continue;
    }
    const double v = iou(*preds[i], golds[i]);
    sum += v;
    if (v >= 0.5) ++hit50;
    if (v >= 0.75) ++hit75;
    ranked.push_back(v >= 0.5);
  }
  m.miou = sum / static_cast<double>(n);
  m.pr50 = static_cast<double>(hit50) / static_cast<double>(n);
  m.pr75 = static_cast<double>(hit75) / static_cast<double>(n);
  m.ap50 = interpolated_ap(ranked, n);
  return m;
}

std::string normalize_label(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

DetectionMetrics detection_metrics(const std::vector<DetectionImage>& images) {
  DetectionMetrics m;
  std::set<std::string> classes;
  for (const auto& img : images)
    for (const auto& g : img.golds) classes.insert(normalize_label(g.class_name));
  for (const auto& img : images)
    for (const auto& p : img.predictions)
      if (!classes.count(normalize_label(p.class_name))) ++m.unknown_class_predictions;
  m.classes = classes.size();
  if (classes.empty()) return m;

  const auto thresholds = coco_thresholds();
  double sum_ap = 0.0, sum_ap50 = 0.0, sum_ap75 = 0.0, sum_recall = 0.0;
  for (const auto& cls : classes) {
    struct Ranked {
      std::size_t image;
      const DetectionPrediction* pred;
    };
    std::vector<Ranked> ranked;
    std::size_t gold_count = 0;
    std::vector<std::vector<const GoldBox*>> golds(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (const auto& g : images[i].golds)
        if (normalize_label(g.class_name) == cls) golds[i].push_back(&g);
      gold_count += golds[i].size();
      std::vector<const DetectionPrediction*> mine;
      for (const auto& p : images[i].predictions)
        if (normalize_label(p.class_name) == cls) mine.push_back(&p);
      std::stable_sort(mine.begin(), mine.end(), [](const auto* a, const auto* b) { return a->confidence > b->confidence; });
      if (mine.size() > kMaxDetectionsPerImage) mine.resize(kMaxDetectionsPerImage);
      for (const auto* p : mine) ranked.push_back({i, p});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.pred->confidence > b.pred->confidence; });

    std::array<double, 10> aps{};
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<std::vector<bool>> taken(images.size());
      for (std::size_t i = 0; i < images.size(); ++i) taken[i].assign(golds[i].size(), false);
      std::vector<bool> hits;
      hits.reserve(ranked.size());
      std::size_t tp = 0;
      for (const auto& r : ranked) {
        int best = -1;
        double best_iou = thresholds[t];
        for (std::size_t g = 0; g < golds[r.image].size(); ++g) {
          if (taken[r.image][g]) continue;
          const double v = iou(r.pred->bbox, golds[r.image][g]->bbox);
          if (v > best_iou || (best < 0 && v >= best_iou)) {
            best = static_cast<int>(g);
            best_iou = v;
          }
        }
        if (best >= 0) {
          taken[r.image][static_cast<std::size_t>(best)] = true;
          ++tp;
        }
        hits.push_back(best >= 0);
      }
      aps[t] = interpolated_ap(hits, gold_count);
      sum_ap += aps[t];
      sum_recall += gold_count ? static_cast<double>(tp) / static_cast<double>(gold_count) : 0.0;
    }
    sum_ap50 += aps[0];
    sum_ap75 += aps[5];
    m.per_class_ap[cls] = aps;
  }
  const double nc = static_cast<double>(classes.size());
  m.map = sum_ap / (nc * thresholds.size());
  m.map50 = sum_ap50 / nc;
  m.map75 = sum_ap75 / nc;
  m.ar100 = sum_recall / (nc * thresholds.size());
  return m;
}

CountingMetrics counting_metrics(const std::vector<std::pair<std::optional<long long>, long long>>& regress,
                                 const std::vector<std::pair<std::optional<char>, char>>& choice) {
  CountingMetrics m;
  m.regress_records = regress.size();
  m.choice_records = choice.size();
  if (!regress.empty()) {
    double abs_sum = 0.0, sq_sum = 0.0;
    for (const auto& [pred, gold] : regress) {
      if (!pred) ++m.parse_failures;
      const double e = static_cast<double>(pred.value_or(0) - gold);
      abs_sum += std::abs(e);
      sq_sum += e * e;
    }
    const double n = static_cast<double>(regress.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
  }
  if (!choice.empty()) {
    std::size_t right = 0;
    for (const auto& [pred, gold] : choice) {
      if (!pred) ++m.parse_failures;
      if (pred && *pred == gold) ++right;
    }
    m.acc = static_cast<double>(right) / static_cast<double>(choice.size());
  }
  return m;
}

ClassificationMetrics classification_metrics(const std::vector<std::pair<std::string, std::string>>& pairs) {
  ClassificationMetrics m;
  if (pairs.empty()) return m;
  std::map<std::string, std::size_t> tp, predicted, support;
  std::size_t right = 0;
  for (const auto& [p_raw, g_raw] : pairs) {
    const std::string p = normalize_label(p_raw), g = normalize_label(g_raw);
    ++support[g];
    ++predicted[p];
    if (p == g) {
      ++right;
      ++tp[g];
    }
  }
  m.acc = static_cast<double>(right) / static_cast<double>(pairs.size());
  double psum = 0.0, fsum = 0.0;
  for (const auto& [cls, sup] : support) {
    const double t = static_cast<double>(tp[cls]);
    const double np = static_cast<double>(predicted[cls]);
    const double precision = np > 0 ? t / np : 0.0;
    const double recall = t / static_cast<double>(sup);
    psum += precision;
    fsum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  m.precision = psum / static_cast<double>(support.size());
  m.f1 = fsum / static_cast<double>(support.size());
  return m;
}

}  // namespace uwsu::eval
