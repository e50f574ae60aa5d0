#pragma once

#include <algorithm>
#include <vector>

#include "ailp/error.hpp"
#include "ailp/metrics/embedding.hpp"

namespace ailp::metrics {

struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy-matching score over token vectors (0-100), without idf weighting
/// or baseline rescaling. Each token's best cosine is clamped to [0, 1] so
/// the scores stay on the 0-100 scale.
inline BertScore bertscore_vectors(const std::vector<Vector>& candidate, const std::vector<Vector>& reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorKind::Metric, "bertscore needs at least one token on each side");
  }
  std::vector<double> best_for_ref(reference.size(), 0.0);
  double precision_sum = 0.0;
  for (const auto& c : candidate) {
    double best = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double sim = std::clamp(cosine(c, reference[j]), 0.0, 1.0);
      best = std::max(best, sim);
      best_for_ref[j] = std::max(best_for_ref[j], sim);
    }
    precision_sum += best;
  }
  double recall_sum = 0.0;
  for (double b : best_for_ref) recall_sum += b;
  BertScore s;
  s.precision = precision_sum / static_cast<double>(candidate.size());
  s.recall = recall_sum / static_cast<double>(reference.size());
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.precision *= 100.0;
  s.recall *= 100.0;
  s.f1 *= 100.0;
  return s;
}

inline BertScore bertscore(std::string_view candidate_text, std::string_view reference_text,
                           const EmbeddingProvider& provider) {
  return bertscore_vectors(provider.embed_tokens(candidate_text), provider.embed_tokens(reference_text));
}

/// Cosine of the two text-level vectors, clamped below at 0, on 0-100.
inline double text_relevance(std::string_view summary_text, std::string_view body_text,
                             const EmbeddingProvider& provider) {
  const Vector s = provider.embed_text(summary_text);
  const Vector b = provider.embed_text(body_text);
  return 100.0 * std::clamp(cosine(s, b), 0.0, 1.0);
}

}  // namespace ailp::metrics
