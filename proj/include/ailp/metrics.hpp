#pragma once

#include <nlohmann/json.hpp>

#include "ailp/error.hpp"
#include "ailp/metrics/bertscore.hpp"
#include "ailp/metrics/embedding.hpp"
#include "ailp/metrics/meteor.hpp"
#include "ailp/metrics/ngram.hpp"
#include "ailp/metrics/porter.hpp"
#include "ailp/metrics/readability.hpp"
#include "ailp/metrics/tfidf.hpp"
#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

/// All evaluation scores for one summary. Everything except flesch and the
/// two ratios is on a 0-100 scale. label_ratio (summary words / reference
/// words) is an auxiliary column next to compression_ratio.
struct MetricRow {
  double bleu = 0.0;
  double meteor = 0.0;
  double rouge1_f1 = 0.0;
  double rouge2_f1 = 0.0;
  double sentence_similarity = 0.0;
  double flesch = 0.0;
  double bert_precision = 0.0;
  double bert_recall = 0.0;
  double bert_f1 = 0.0;
  double compression_ratio = 0.0;
  double text_relevance = 0.0;
  double label_ratio = 0.0;

  bool operator==(const MetricRow&) const = default;
};

/// Scores `summary` against `reference` (the link label) and `body` (the
/// linked page's text). Throws Metric when a score is undefined, e.g. an
/// empty body or a side with no tokens to embed.
inline MetricRow compute_metric_row(std::string_view summary, std::string_view reference, std::string_view body,
                                    const EmbeddingProvider& provider) {
  const auto cand = tokenize(summary);
  const auto ref = tokenize(reference);
  if (ref.empty()) throw Error(ErrorKind::Metric, "reference has no tokens");
  MetricRow row;
  row.bleu = bleu(cand, ref);
  row.meteor = meteor(cand, ref);
  row.rouge1_f1 = rouge_n(cand, ref, 1);
  row.rouge2_f1 = rouge_n(cand, ref, 2);
  row.sentence_similarity = tfidf_cosine(summary, reference);
  row.flesch = flesch_reading_ease(summary);
  const auto bert = bertscore(summary, reference, provider);
  row.bert_precision = bert.precision;
  row.bert_recall = bert.recall;
  row.bert_f1 = bert.f1;
  row.compression_ratio = compression_ratio(summary, body);
  row.text_relevance = text_relevance(summary, body, provider);
  row.label_ratio = static_cast<double>(cand.size()) / static_cast<double>(ref.size());
  return row;
}

/// Column names of the evaluation JSON-lines format.
inline void to_json(nlohmann::json& j, const MetricRow& r) {
  j = nlohmann::json{{"bleu", r.bleu},
                     {"meteor", r.meteor},
                     {"rouge1", r.rouge1_f1},
                     {"rouge2", r.rouge2_f1},
                     {"sent_sim", r.sentence_similarity},
                     {"flesch", r.flesch},
                     {"bert_p", r.bert_precision},
                     {"bert_r", r.bert_recall},
                     {"bert_f1", r.bert_f1},
                     {"compression", r.compression_ratio},
                     {"relevance", r.text_relevance},
                     {"label_ratio", r.label_ratio}};
}

inline void from_json(const nlohmann::json& j, MetricRow& r) {
  r.bleu = j.at("bleu").get<double>();
  r.meteor = j.at("meteor").get<double>();
  r.rouge1_f1 = j.at("rouge1").get<double>();
  r.rouge2_f1 = j.at("rouge2").get<double>();
  r.sentence_similarity = j.at("sent_sim").get<double>();
  r.flesch = j.at("flesch").get<double>();
  r.bert_precision = j.at("bert_p").get<double>();
  r.bert_recall = j.at("bert_r").get<double>();
  r.bert_f1 = j.at("bert_f1").get<double>();
  r.compression_ratio = j.at("compression").get<double>();
  r.text_relevance = j.at("relevance").get<double>();
  r.label_ratio = j.value("label_ratio", 0.0);
}

}  // namespace ailp::metrics
