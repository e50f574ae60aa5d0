#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ailp/error.hpp"
#include "ailp/linkext.hpp"
#include "ailp/metrics.hpp"
#include "ailp/pagefetch.hpp"
#include "ailp/summarize.hpp"

namespace ailp {

using metrics::MetricRow;

/// Scores of every strategy that produced a summary for one link.
struct LinkEvaluation {
  std::string repo_full_name;
  int pr_number = 0;
  std::string link_url;
  std::string reference_label;
  std::map<Strategy, MetricRow> rows;

  bool operator==(const LinkEvaluation&) const = default;
};

struct MetricField {
  std::string_view label;  // report row name
  double MetricRow::*member;
};

/// Report rows, in presentation order. The last row is the auxiliary
/// summary/label ratio.
inline constexpr std::array<MetricField, 12> kMetricFields{{
    {"BLEU", &MetricRow::bleu},
    {"METEOR", &MetricRow::meteor},
    {"ROUGE 1", &MetricRow::rouge1_f1},
    {"ROUGE 2", &MetricRow::rouge2_f1},
    {"Sentence Similarity", &MetricRow::sentence_similarity},
    {"Flesch Reading Ease", &MetricRow::flesch},
    {"BERT precision", &MetricRow::bert_precision},
    {"BERT Recall", &MetricRow::bert_recall},
    {"BERT F1 score", &MetricRow::bert_f1},
    {"Compression ratio", &MetricRow::compression_ratio},
    {"Text relevance", &MetricRow::text_relevance},
    {"Summary/label ratio", &MetricRow::label_ratio},
}};

/// Scores each present summary with the link label as the reference and the
/// page body as the source text. A strategy whose metrics are undefined is
/// logged and left out.
inline LinkEvaluation evaluate_link(const std::string& repo_full_name, int pr_number, const LinkOccurrence& occ,
                                    const std::map<Strategy, Summary>& summaries, const PageContent& page,
                                    const metrics::EmbeddingProvider& provider, std::size_t min_words = 8) {
  if (occ.label_word_count < min_words) {
    throw Error(ErrorKind::Contract, "link label below the evaluation length threshold: " + occ.label);
  }
  LinkEvaluation ev{repo_full_name, pr_number, occ.url, occ.label, {}};
  for (const auto& [strategy, summary] : summaries) {
    try {
      ev.rows[strategy] = metrics::compute_metric_row(summary.text, occ.label, page.body_text, provider);
    } catch (const Error& e) {
      spdlog::warn("{} {}: metrics undefined for {}: {}", repo_full_name, occ.url, to_string(strategy), e.what());
    }
  }
  return ev;
}

struct ProjectAggregate {
  std::string repo_full_name;
  std::size_t link_count = 0;
  std::map<Strategy, MetricRow> means;
  std::map<Strategy, std::size_t> counts;  // links contributing to each mean

  bool operator==(const ProjectAggregate&) const = default;
};

/// Per-project means plus the macro (unweighted across projects) grand means.
struct AggregateReport {
  std::vector<ProjectAggregate> projects;
  std::map<Strategy, MetricRow> grand;
  std::map<Strategy, std::size_t> grand_counts;  // projects contributing to each grand mean

  bool operator==(const AggregateReport&) const = default;
};

namespace eval_detail {

inline MetricRow mean_of(const std::vector<const MetricRow*>& rows) {
  MetricRow out;
  for (const auto& f : kMetricFields) {
    double sum = 0.0;
    for (const auto* r : rows) sum += r->*f.member;
    out.*f.member = sum / static_cast<double>(rows.size());
  }
  return out;
}

}  // namespace eval_detail

/// Groups by repository, averages each strategy within a project over the
/// links that have it, then averages projects with equal weight. Links are
/// put in a canonical order before summing, so the result does not depend on
/// input order down to the last bit.
inline AggregateReport aggregate(std::vector<LinkEvaluation> evals) {
  std::sort(evals.begin(), evals.end(), [](const LinkEvaluation& a, const LinkEvaluation& b) {
    return std::tie(a.repo_full_name, a.pr_number, a.link_url, a.reference_label) <
           std::tie(b.repo_full_name, b.pr_number, b.link_url, b.reference_label);
  });
  AggregateReport report;
  std::size_t i = 0;
  while (i < evals.size()) {
    std::size_t j = i;
    while (j < evals.size() && evals[j].repo_full_name == evals[i].repo_full_name) ++j;
    ProjectAggregate project;
    project.repo_full_name = evals[i].repo_full_name;
    project.link_count = j - i;
    for (auto s : kAllStrategies) {
      std::vector<const MetricRow*> rows;
      for (std::size_t k = i; k < j; ++k) {
        if (const auto it = evals[k].rows.find(s); it != evals[k].rows.end()) rows.push_back(&it->second);
      }
      if (rows.empty()) continue;
      project.means[s] = eval_detail::mean_of(rows);
      project.counts[s] = rows.size();
    }
    report.projects.push_back(std::move(project));
    i = j;
  }
  for (auto s : kAllStrategies) {
    std::vector<const MetricRow*> rows;
    for (const auto& p : report.projects) {
      if (const auto it = p.means.find(s); it != p.means.end()) rows.push_back(&it->second);
    }
    if (rows.empty()) continue;
    report.grand[s] = eval_detail::mean_of(rows);
    report.grand_counts[s] = rows.size();
  }
  return report;
}

enum class ReportFormat { Markdown, Csv, Json };

inline std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

constexpr std::string_view file_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Markdown: return "md";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
  }
  return "md";
}

/// Two decimals; never "-0.00".
inline std::string format_cell(double v) {
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string grand_cell(const AggregateReport& report, Strategy s, const MetricField& f) {
  const auto it = report.grand.find(s);
  return it == report.grand.end() ? std::string("n/a") : format_cell(it->second.*f.member);
}

inline void to_json(nlohmann::json& j, const LinkEvaluation& e) {
  j = nlohmann::json{{"repo", e.repo_full_name},
                     {"pr", e.pr_number},
                     {"url", e.link_url},
                     {"reference", e.reference_label},
                     {"rows", nlohmann::json::object()}};
  for (const auto& [s, row] : e.rows) j["rows"][std::string(to_string(s))] = row;
}

inline void from_json(const nlohmann::json& j, LinkEvaluation& e) {
  e.repo_full_name = j.at("repo").get<std::string>();
  e.pr_number = j.at("pr").get<int>();
  e.link_url = j.at("url").get<std::string>();
  e.reference_label = j.at("reference").get<std::string>();
  e.rows.clear();
  for (const auto& [name, row] : j.at("rows").items()) {
    const auto s = strategy_from_string(name);
    if (!s) throw Error(ErrorKind::Parse, "unknown strategy in rows: " + name);
    e.rows[*s] = row.get<MetricRow>();
  }
}

inline void to_json(nlohmann::json& j, const ProjectAggregate& p) {
  j = nlohmann::json{{"repo", p.repo_full_name}, {"link_count", p.link_count}, {"strategies", nlohmann::json::object()}};
  for (const auto& [s, row] : p.means) {
    j["strategies"][std::string(to_string(s))] = {{"links", p.counts.at(s)}, {"mean", row}};
  }
}

inline void from_json(const nlohmann::json& j, ProjectAggregate& p) {
  p.repo_full_name = j.at("repo").get<std::string>();
  p.link_count = j.at("link_count").get<std::size_t>();
  p.means.clear();
  p.counts.clear();
  for (const auto& [name, entry] : j.at("strategies").items()) {
    const auto s = strategy_from_string(name);
    if (!s) throw Error(ErrorKind::Parse, "unknown strategy: " + name);
    p.means[*s] = entry.at("mean").get<MetricRow>();
    p.counts[*s] = entry.at("links").get<std::size_t>();
  }
}

inline nlohmann::json report_to_json(const AggregateReport& report) {
  nlohmann::json j{{"averaging", "macro"},
                   {"projects", report.projects},
                   {"grand", nlohmann::json::object()},
                   {"table", nlohmann::json::array()}};
  for (const auto& [s, row] : report.grand) {
    j["grand"][std::string(to_string(s))] = {{"projects", report.grand_counts.at(s)}, {"mean", row}};
  }
  if (!report.projects.empty()) {
    for (const auto& f : kMetricFields) {
      nlohmann::json line{{"metric", f.label}};
      for (auto s : kAllStrategies) line[std::string(short_label(s))] = grand_cell(report, s, f);
      j["table"].push_back(std::move(line));
    }
  }
  return j;
}

inline AggregateReport report_from_json(const nlohmann::json& j) {
  AggregateReport report;
  report.projects = j.at("projects").get<std::vector<ProjectAggregate>>();
  for (const auto& [name, entry] : j.at("grand").items()) {
    const auto s = strategy_from_string(name);
    if (!s) throw Error(ErrorKind::Parse, "unknown strategy: " + name);
    report.grand[*s] = entry.at("mean").get<MetricRow>();
    report.grand_counts[*s] = entry.at("projects").get<std::size_t>();
  }
  return report;
}

/// Renders the strategy-by-metric matrix of grand means. Output is a pure
/// function of the report, so equal inputs give byte-identical documents.
/// Without projects only the headers are emitted.
inline std::string render_report(const AggregateReport& report, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::Markdown: {
      out += "# Link preview evaluation\n\n";
      out += fmt::format("Averaging: macro (per-project means, then the unweighted mean over {} projects).\n\n",
                         report.projects.size());
      out += "| Metric | CLS | NCLS | MBS |\n";
      out += "|---|---:|---:|---:|\n";
      if (report.projects.empty()) break;
      for (const auto& f : kMetricFields) {
        out += fmt::format("| {} | {} | {} | {} |\n", f.label, grand_cell(report, Strategy::Contextual, f),
                           grand_cell(report, Strategy::NonContextual, f), grand_cell(report, Strategy::Metadata, f));
      }
      break;
    }
    case ReportFormat::Csv: {
      out += "metric,CLS,NCLS,MBS\n";
      if (report.projects.empty()) break;
      for (const auto& f : kMetricFields) {
        out += fmt::format("{},{},{},{}\n", f.label, grand_cell(report, Strategy::Contextual, f),
                           grand_cell(report, Strategy::NonContextual, f), grand_cell(report, Strategy::Metadata, f));
      }
      break;
    }
    case ReportFormat::Json:
      out = report_to_json(report).dump(2) + "\n";
      break;
  }
  return out;
}

/// One ProjectAggregate per line.
inline std::string render_project_lines(const AggregateReport& report) {
  std::string out;
  for (const auto& p : report.projects) out += nlohmann::json(p).dump() + "\n";
  return out;
}

}  // namespace ailp
