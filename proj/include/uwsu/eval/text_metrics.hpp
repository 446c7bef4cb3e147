#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace uwsu::eval {

using Tokens = std::vector<std::string>;

// Recorded in every report so caption scores can be compared across runs.
inline constexpr std::string_view kTokenizerVersion = "uwtok-1";

// Lower-cases, turns ASCII punctuation into spaces and splits on whitespace.
Tokens tokenize(std::string_view text);

// Porter's original suffix-stripping algorithm, lower-casing first.
std::string porter_stem(std::string_view word);

// Corpus BLEU-4 with uniform weights. References per candidate; brevity
// penalty uses the reference length closest to each candidate (shorter on
// ties). Without smoothing any zero n-gram precision gives 0; with it, 1 is
// added to numerator and denominator for n >= 2.
double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
             bool smoothing = false);

// Per-candidate CIDEr-D scores (x10 scale, so within [0, 10]). Document
// frequencies are taken over the reference sets of this corpus.
std::vector<double> cider_scores(const std::vector<Tokens>& candidates,
                                 const std::vector<std::vector<Tokens>>& references);
// Mean of cider_scores; 0 for an empty corpus.
double cider(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

// Unigram alignment in two stages, exact then Porter stem. Within a stage
// each candidate token, left to right, takes the free reference token right
// after the previous token's match if it fits, else the leftmost fitting
// one. Best score over the references.
double meteor_lite(const Tokens& candidate, const std::vector<Tokens>& references, const MeteorParams& params = {});

}  // namespace uwsu::eval
