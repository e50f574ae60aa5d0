#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts count_ngrams(const TokenSequence& seq, std::size_t n) {
  NgramCounts counts;
  if (n == 0 || seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<std::string>(seq.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      seq.tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

/// Size of the multiset intersection of two n-gram bags.
inline std::size_t clipped_overlap(const NgramCounts& candidate, const NgramCounts& reference) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : candidate) {
    const auto it = reference.find(gram);
    if (it != reference.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

inline constexpr double kBleuEpsilon = 1e-9;

/// Sentence BLEU against a single reference, on a 0-100 scale.
///
/// Zero clipped counts are replaced by kBleuEpsilon before taking logs. When
/// either sequence is shorter than max_n, the order drops to the shorter
/// length so short texts are not zeroed out by missing higher-order n-grams.
inline double bleu(const TokenSequence& candidate, const TokenSequence& reference, std::size_t max_n = 4) {
  const std::size_t c = candidate.size();
  const std::size_t r = reference.size();
  const std::size_t order = std::min({max_n, c, r});
  if (order == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const std::size_t overlap = clipped_overlap(count_ngrams(candidate, n), count_ngrams(reference, n));
    const double total = static_cast<double>(c - n + 1);
    const double numerator = overlap == 0 ? kBleuEpsilon : static_cast<double>(overlap);
    log_sum += std::log(numerator / total);
  }
  const double brevity = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return 100.0 * brevity * std::exp(log_sum / static_cast<double>(order));
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// ROUGE-N precision, recall and F1 (0-100). Any zero denominator yields 0.
inline RougeScore rouge_n_scores(const TokenSequence& candidate, const TokenSequence& reference, std::size_t n) {
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  RougeScore s;
  if (n == 0 || cand_total == 0 || ref_total == 0) return s;
  const auto overlap = static_cast<double>(clipped_overlap(cand, ref));
  s.precision = overlap / static_cast<double>(cand_total);
  s.recall = overlap / static_cast<double>(ref_total);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.precision *= 100.0;
  s.recall *= 100.0;
  s.f1 *= 100.0;
  return s;
}

inline double rouge_n(const TokenSequence& candidate, const TokenSequence& reference, std::size_t n) {
  return rouge_n_scores(candidate, reference, n).f1;
}

}  // namespace ailp::metrics
