#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ailp/metrics/porter.hpp"
#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

struct MeteorAlignment {
  /// (candidate index, reference index), sorted by candidate index.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::size_t chunks = 0;
};

/// Two-stage unigram alignment: exact surface matches first, then Porter
/// stem matches among the tokens still unaligned. Each stage walks the
/// candidate left to right and takes the leftmost free reference token.
inline MeteorAlignment meteor_align(const TokenSequence& candidate, const TokenSequence& reference) {
  MeteorAlignment out;
  std::vector<bool> cand_used(candidate.size(), false);
  std::vector<bool> ref_used(reference.size(), false);

  auto stage = [&](auto&& key_of_cand, auto&& key_of_ref) {
    std::vector<std::string> ref_keys(reference.size());
    for (std::size_t j = 0; j < reference.size(); ++j) ref_keys[j] = key_of_ref(reference[j]);
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_used[i]) continue;
      const std::string key = key_of_cand(candidate[i]);
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (!ref_used[j] && ref_keys[j] == key) {
          cand_used[i] = true;
          ref_used[j] = true;
          out.matches.emplace_back(i, j);
          break;
        }
      }
    }
  };
  auto identity = [](const std::string& s) { return s; };
  PorterStemmer stemmer;
  auto stem = [&](const std::string& s) { return stemmer.stem(s); };
  stage(identity, identity);
  stage(stem, stem);

  std::sort(out.matches.begin(), out.matches.end());
  for (std::size_t k = 0; k < out.matches.size(); ++k) {
    const bool continues = k > 0 && out.matches[k].first == out.matches[k - 1].first + 1 &&
                           out.matches[k].second == out.matches[k - 1].second + 1;
    if (!continues) ++out.chunks;
  }
  return out;
}

/// Single-reference METEOR (exact + stem stages, no synonyms), 0-100.
/// Fmean = 10PR / (R + 9P); penalty = 0.5 (chunks / matches)^3.
inline double meteor(const TokenSequence& candidate, const TokenSequence& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto alignment = meteor_align(candidate, reference);
  const auto m = static_cast<double>(alignment.matches.size());
  if (m == 0.0) return 0.0;
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(alignment.chunks) / m, 3.0);
  return 100.0 * fmean * (1.0 - penalty);
}

}  // namespace ailp::metrics
