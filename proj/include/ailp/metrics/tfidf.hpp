#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

/// TF-IDF cosine similarity (0-100) with the vectorizer fit on just the two
/// documents: raw counts, smooth idf ln((1+N)/(1+df)) + 1 with N = 2, L2
/// normalization. Either document without tokens scores 0.
inline double tfidf_cosine(std::string_view candidate_text, std::string_view reference_text) {
  const auto a = tokenize(candidate_text);
  const auto b = tokenize(reference_text);
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string, double> tf_a, tf_b;
  for (const auto& t : a.tokens) tf_a[t] += 1.0;
  for (const auto& t : b.tokens) tf_b[t] += 1.0;

  auto idf = [&](const std::string& term) {
    const double df = (tf_a.count(term) ? 1.0 : 0.0) + (tf_b.count(term) ? 1.0 : 0.0);
    return std::log((1.0 + 2.0) / (1.0 + df)) + 1.0;
  };
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (const auto& [term, count] : tf_a) {
    const double w = count * idf(term);
    norm_a += w * w;
    if (const auto it = tf_b.find(term); it != tf_b.end()) dot += w * it->second * idf(term);
  }
  for (const auto& [term, count] : tf_b) {
    const double w = count * idf(term);
    norm_b += w * w;
  }
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return std::clamp(100.0 * dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), 0.0, 100.0);
}

}  // namespace ailp::metrics
