#include "uwsu/eval/text_metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "uwsu/common/error.hpp"

namespace uwsu::eval {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u) || std::ispunct(u)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

bool is_consonant(const std::string& w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return false;
    case 'y':
      return i == 0 || !is_consonant(w, i - 1);
    default:
      return true;
  }
}

int measure(const std::string& stem) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    const bool c = is_consonant(stem, i);
    if (c && prev_vowel) ++m;
    prev_vowel = !c;
  }
  return m;
}

bool contains_vowel(const std::string& stem) {
  for (std::size_t i = 0; i < stem.size(); ++i)
    if (!is_consonant(stem, i)) return true;
  return false;
}

bool ends_with(const std::string& w, std::string_view s) {
  return w.size() >= s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0;
}

bool ends_double_consonant(const std::string& w) {
  const auto n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

bool ends_cvc(const std::string& w) {
  const auto n = w.size();
  return n >= 3 && is_consonant(w, n - 3) && !is_consonant(w, n - 2) && is_consonant(w, n - 1) && w[n - 1] != 'w' &&
         w[n - 1] != 'x' && w[n - 1] != 'y';
}

using Cond = std::function<bool(const std::string&)>;

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  Cond cond;
};

// The first rule whose suffix matches decides; a failed condition stops.
std::string apply_rules(const std::string& w, const std::vector<Rule>& rules) {
  for (const auto& r : rules) {
    if (ends_with(w, r.suffix)) {
      std::string stem = w.substr(0, w.size() - r.suffix.size());
      if (!r.cond || r.cond(stem)) return stem + std::string(r.replacement);
      return w;
    }
  }
  return w;
}

const Cond m_gt0 = [](const std::string& s) { return measure(s) > 0; };
const Cond m_gt1 = [](const std::string& s) { return measure(s) > 1; };

std::string step1a(const std::string& w) {
  return apply_rules(w, {{"sses", "ss", {}}, {"ies", "i", {}}, {"ss", "ss", {}}, {"s", "", {}}});
}

std::string step1b(const std::string& w) {
  if (ends_with(w, "eed")) {
    const std::string stem = w.substr(0, w.size() - 3);
    return measure(stem) > 0 ? stem + "ee" : w;
  }
  std::optional<std::string> mid;
  for (std::string_view suf : {std::string_view("ed"), std::string_view("ing")}) {
    if (ends_with(w, suf)) {
      std::string stem = w.substr(0, w.size() - suf.size());
      if (contains_vowel(stem)) {
        mid = std::move(stem);
        break;
      }
    }
  }
  if (!mid) return w;
  const std::string& s = *mid;
  if (ends_with(s, "at")) return s + "e";
  if (ends_with(s, "bl")) return s + "e";
  if (ends_with(s, "iz")) return s + "e";
  if (ends_double_consonant(s)) {
    const char last = s.back();
    if (last != 'l' && last != 's' && last != 'z') return s.substr(0, s.size() - 1);
    return s;
  }
  if (measure(s) == 1 && ends_cvc(s)) return s + "e";
  return s;
}

std::string step1c(const std::string& w) {
  return apply_rules(w, {{"y", "i", contains_vowel}});
}

std::string step2(const std::string& w) {
  static const std::vector<Rule> rules = {
      {"ational", "ate", m_gt0}, {"tional", "tion", m_gt0}, {"enci", "ence", m_gt0}, {"anci", "ance", m_gt0},
      {"izer", "ize", m_gt0},    {"abli", "able", m_gt0},   {"alli", "al", m_gt0},    {"entli", "ent", m_gt0},
      {"eli", "e", m_gt0},       {"ousli", "ous", m_gt0},   {"ization", "ize", m_gt0}, {"ation", "ate", m_gt0},
      {"ator", "ate", m_gt0},    {"alism", "al", m_gt0},    {"iveness", "ive", m_gt0}, {"fulness", "ful", m_gt0},
      {"ousness", "ous", m_gt0}, {"aliti", "al", m_gt0},    {"iviti", "ive", m_gt0},  {"biliti", "ble", m_gt0},
  };
  return apply_rules(w, rules);
}

std::string step3(const std::string& w) {
  static const std::vector<Rule> rules = {
      {"icate", "ic", m_gt0}, {"ative", "", m_gt0}, {"alize", "al", m_gt0}, {"iciti", "ic", m_gt0},
      {"ical", "ic", m_gt0},  {"ful", "", m_gt0},   {"ness", "", m_gt0},
  };
  return apply_rules(w, rules);
}

std::string step4(const std::string& w) {
  static const std::vector<Rule> rules = {
      {"al", "", m_gt1},   {"ance", "", m_gt1}, {"ence", "", m_gt1}, {"er", "", m_gt1},    {"ic", "", m_gt1},
      {"able", "", m_gt1}, {"ible", "", m_gt1}, {"ant", "", m_gt1},  {"ement", "", m_gt1}, {"ment", "", m_gt1},
      {"ent", "", m_gt1},
      {"ion", "", [](const std::string& s) { return measure(s) > 1 && (s.back() == 's' || s.back() == 't'); }},
      {"ou", "", m_gt1},   {"ism", "", m_gt1},  {"ate", "", m_gt1},  {"iti", "", m_gt1},   {"ous", "", m_gt1},
      {"ive", "", m_gt1},  {"ize", "", m_gt1},
  };
  return apply_rules(w, rules);
}

std::string step5a(const std::string& w) {
  if (!ends_with(w, "e")) return w;
  const std::string stem = w.substr(0, w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return stem;
  return w;
}

std::string step5b(const std::string& w) {
  if (ends_with(w, "ll") && measure(w.substr(0, w.size() - 1)) > 1) return w.substr(0, w.size() - 1);
  return w;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  w = step1a(w);
  w = step1b(w);
  w = step1c(w);
  w = step2(w);
  w = step3(w);
  w = step4(w);
  w = step5a(w);
  w = step5b(w);
  return w;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[std::vector<std::string>(t.begin() + i, t.begin() + i + n)];
  return out;
}

// All 1..4-grams together, as the CIDEr-D term vectors use them.
NgramCounts all_ngrams(const Tokens& t) {
  NgramCounts out;
  for (std::size_t n = 1; n <= 4; ++n)
    for (auto& [g, c] : ngrams(t, n)) out[g] += c;
  return out;
}

}  // namespace

double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
             bool smoothing) {
  if (candidates.size() != references.size()) throw DimensionError("bleu4: candidate and reference counts differ");
  long long num[4] = {0, 0, 0, 0};
  long long den[4] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto& hyp = candidates[s];
    const auto& refs = references[s];
    if (refs.empty()) throw ValidationError("bleu4: candidate " + std::to_string(s) + " has no references");
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts h = ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& r : refs)
        for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
      long long clipped = 0, total = 0;
      for (const auto& [g, c] : h) {
        total += c;
        const auto it = max_ref.find(g);
        if (it != max_ref.end()) clipped += std::min(c, it->second);
      }
      num[n - 1] += clipped;
      den[n - 1] += std::max(1LL, total);
    }
    const long long hl = static_cast<long long>(hyp.size());
    hyp_len += hl;
    long long best = static_cast<long long>(refs.front().size());
    for (const auto& r : refs) {
      const long long rl = static_cast<long long>(r.size());
      if (std::llabs(rl - hl) < std::llabs(best - hl) || (std::llabs(rl - hl) == std::llabs(best - hl) && rl < best))
        best = rl;
    }
    ref_len += best;
  }
  if (num[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    double a = static_cast<double>(num[n]), b = static_cast<double>(den[n]);
    if (smoothing && n > 0) {
      a += 1.0;
      b += 1.0;
    }
    if (a == 0.0) return 0.0;
    log_sum += 0.25 * std::log(a / b);
  }
  double bp = 1.0;
  if (hyp_len < ref_len) bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum);
}

std::vector<double> cider_scores(const std::vector<Tokens>& candidates,
                                 const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) throw DimensionError("cider: candidate and reference counts differ");
  const std::size_t docs = references.size();
  std::vector<double> scores(docs, 0.0);
  if (docs == 0) return scores;

  std::map<std::vector<std::string>, double> df;
  std::vector<std::vector<NgramCounts>> ref_counts(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    if (references[i].empty()) throw ValidationError("cider: candidate " + std::to_string(i) + " has no references");
    std::set<std::vector<std::string>> seen;
    for (const auto& r : references[i]) {
      ref_counts[i].push_back(all_ngrams(r));
      for (const auto& [g, c] : ref_counts[i].back()) seen.insert(g);
    }
    for (const auto& g : seen) df[g] += 1.0;
  }
  const double log_docs = std::log(static_cast<double>(docs));

  struct Vec {
    std::array<std::map<std::vector<std::string>, double>, 4> w;
    std::array<double, 4> norm{};
    long long length = 0;
  };
  const auto to_vec = [&](const NgramCounts& counts) {
    Vec v;
    for (const auto& [g, tf] : counts) {
      const auto it = df.find(g);
      const double d = std::log(std::max(1.0, it == df.end() ? 0.0 : it->second));
      const std::size_t n = g.size() - 1;
      const double x = static_cast<double>(tf) * (log_docs - d);
      v.w[n][g] = x;
      v.norm[n] += x * x;
      if (n == 1) v.length += tf;
    }
    for (double& x : v.norm) x = std::sqrt(x);
    return v;
  };
  constexpr double sigma = 6.0;
  for (std::size_t i = 0; i < docs; ++i) {
    const Vec h = to_vec(all_ngrams(candidates[i]));
    std::array<double, 4> acc{};
    for (const auto& rc : ref_counts[i]) {
      const Vec r = to_vec(rc);
      const double delta = static_cast<double>(h.length - r.length);
      for (std::size_t n = 0; n < 4; ++n) {
        double val = 0.0;
        for (const auto& [g, x] : h.w[n]) {
          const auto it = r.w[n].find(g);
          if (it != r.w[n].end()) val += std::min(x, it->second) * it->second;
        }
        if (h.norm[n] != 0.0 && r.norm[n] != 0.0) val /= h.norm[n] * r.norm[n];
        val *= std::exp(-(delta * delta) / (2.0 * sigma * sigma));
        acc[n] += val;
      }
    }
    const double mean = (acc[0] + acc[1] + acc[2] + acc[3]) / 4.0;
    scores[i] = mean / static_cast<double>(ref_counts[i].size()) * 10.0;
  }
  return scores;
}

double cider(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  const auto s = cider_scores(candidates, references);
  if (s.empty()) return 0.0;
  double sum = 0.0;
  for (double x : s) sum += x;
  return sum / static_cast<double>(s.size());
}

namespace {

double meteor_single(const Tokens& hyp, const Tokens& ref, const std::vector<std::string>& hyp_stems,
                     const std::vector<std::string>& ref_stems, const MeteorParams& p) {
  if (hyp.empty() || ref.empty()) return 0.0;
  std::vector<int> align(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);
  const auto stage = [&](const std::vector<std::string>& hs, const std::vector<std::string>& rs) {
    for (std::size_t i = 0; i < hs.size(); ++i) {
      if (align[i] >= 0) continue;
      int pick = -1;
      if (i > 0 && align[i - 1] >= 0) {
        const auto next = static_cast<std::size_t>(align[i - 1]) + 1;
        if (next < rs.size() && !used[next] && rs[next] == hs[i]) pick = static_cast<int>(next);
      }
      for (std::size_t j = 0; pick < 0 && j < rs.size(); ++j)
        if (!used[j] && rs[j] == hs[i]) pick = static_cast<int>(j);
      if (pick >= 0) {
        align[i] = pick;
        used[static_cast<std::size_t>(pick)] = true;
      }
    }
  };
  stage(hyp, ref);
  stage(hyp_stems, ref_stems);

  std::size_t m = 0, chunks = 0;
  int prev = -2;
  bool prev_aligned = false;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] < 0) {
      prev_aligned = false;
      continue;
    }
    ++m;
    if (!prev_aligned || align[i] != prev + 1) ++chunks;
    prev = align[i];
    prev_aligned = true;
  }
  if (m == 0) return 0.0;
  const double precision = static_cast<double>(m) / static_cast<double>(hyp.size());
  const double recall = static_cast<double>(m) / static_cast<double>(ref.size());
  const double fmean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(chunks) / static_cast<double>(m), p.beta);
  return fmean * (1.0 - penalty);
}

std::vector<std::string> stems(const Tokens& t) {
  std::vector<std::string> out;
  out.reserve(t.size());
  for (const auto& w : t) out.push_back(porter_stem(w));
  return out;
}

}  // namespace

double meteor_lite(const Tokens& candidate, const std::vector<Tokens>& references, const MeteorParams& params) {
  const auto hs = stems(candidate);
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, meteor_single(candidate, r, hs, stems(r), params));
  return best;
}

}  // namespace uwsu::eval
