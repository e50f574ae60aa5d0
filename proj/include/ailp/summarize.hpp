#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ailp/cache.hpp"
#include "ailp/error.hpp"
#include "ailp/ghclient.hpp"
#include "ailp/hash.hpp"
#include "ailp/linkext.hpp"
#include "ailp/llm.hpp"
#include "ailp/pagefetch.hpp"
#include "ailp/text.hpp"
#include "ailp/time.hpp"

namespace ailp {

enum class Strategy { Contextual, NonContextual, Metadata };

inline constexpr Strategy kAllStrategies[] = {Strategy::Contextual, Strategy::NonContextual, Strategy::Metadata};

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Contextual: return "contextual";
    case Strategy::NonContextual: return "noncontextual";
    case Strategy::Metadata: return "metadata";
  }
  return "contextual";
}

/// Report column label.
constexpr std::string_view short_label(Strategy s) {
  switch (s) {
    case Strategy::Contextual: return "CLS";
    case Strategy::NonContextual: return "NCLS";
    case Strategy::Metadata: return "MBS";
  }
  return "CLS";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto st : kAllStrategies) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

constexpr bool uses_llm(Strategy s) { return s != Strategy::Metadata; }

inline constexpr std::size_t kDefaultPageBudgetWords = 2000;

/// Everything one strategy is allowed to see about a link.
struct ContextBundle {
  Strategy strategy = Strategy::Contextual;
  std::string pr_title;
  std::string pr_description;
  std::string repo_name;
  std::string repo_description;
  std::string located_body;
  std::string link_label;
  std::string link_url;
  std::string page_body;
  std::string page_title;
  std::string page_meta_description;
  bool truncated = false;

  bool operator==(const ContextBundle&) const = default;
};

struct Summary {
  Strategy strategy = Strategy::Contextual;
  std::string text;
  std::string model_id;
  std::string prompt_fingerprint;
  Timestamp created_at{};

  bool operator==(const Summary&) const = default;
};

inline void to_json(nlohmann::json& j, const Summary& s) {
  j = nlohmann::json{{"strategy", to_string(s.strategy)},
                     {"text", s.text},
                     {"model_id", s.model_id},
                     {"prompt_fingerprint", s.prompt_fingerprint},
                     {"created_at", format_timestamp(s.created_at)}};
}

inline void from_json(const nlohmann::json& j, Summary& s) {
  const auto st = strategy_from_string(j.at("strategy").get<std::string>());
  if (!st) throw Error(ErrorKind::Parse, "unknown strategy " + j.at("strategy").dump());
  s.strategy = *st;
  s.text = j.at("text").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.prompt_fingerprint = j.value("prompt_fingerprint", std::string{});
  s.created_at = parse_timestamp(j.at("created_at").get<std::string>());
}

/// Builds the context bundle for one link and strategy.
///
/// Contextual bundles carry the PR and repository fields plus the body of
/// the container the link sits in (description, discussion comment or
/// review comment). NonContextual bundles carry only the page body and the
/// link itself. Metadata bundles carry only the page title and description.
/// The page body is cut to `budget_words` words at a word boundary.
inline ContextBundle assemble_context(const PrRecord& pr, const LinkOccurrence& occ, const PageContent& page,
                                      Strategy strategy, std::size_t budget_words = kDefaultPageBudgetWords) {
  const std::string* located = pr.container_body(occ.location, occ.container_id);
  if (!located) {
    throw Error(ErrorKind::Context, "container " + occ.container_id + " (" + std::string(to_string(occ.location)) +
                                        ") not found in " + pr.repo_full_name + "#" + std::to_string(pr.pr_number));
  }
  ContextBundle b;
  b.strategy = strategy;
  if (strategy == Strategy::Metadata) {
    b.page_title = page.title.empty() ? page.og_title : page.title;
    b.page_meta_description = page.meta_description.empty() ? page.og_description : page.meta_description;
    return b;
  }
  b.link_label = occ.label;
  b.link_url = occ.url;
  b.truncated = text::word_count(page.body_text) > budget_words;
  b.page_body = b.truncated ? std::string(text::first_words(page.body_text, budget_words)) : page.body_text;
  if (strategy == Strategy::Contextual) {
    b.pr_title = pr.title;
    b.pr_description = pr.description_body;
    b.repo_name = pr.repo_full_name;
    b.repo_description = pr.repo_description;
    b.located_body = *located;
  }
  return b;
}

inline constexpr std::string_view kSummaryInstruction =
    "Summarize the linked page for a code reviewer in at most 3 sentences.";

/// Renders the fixed prompt template for an LLM strategy. Empty fields in
/// the contextual template render as "(none)".
inline std::string build_prompt(const ContextBundle& b) {
  auto field = [](const std::string& v) -> std::string { return text::trim(v).empty() ? "(none)" : v; };
  std::string p;
  switch (b.strategy) {
    case Strategy::Contextual:
      p += "Repository: " + field(b.repo_name) + "\n";
      p += "Repository description: " + field(b.repo_description) + "\n";
      p += "Pull request title: " + field(b.pr_title) + "\n";
      p += "Pull request description:\n" + field(b.pr_description) + "\n\n";
      p += "Text around the link:\n" + field(b.located_body) + "\n\n";
      p += "Link label: " + field(b.link_label) + "\n\n";
      p += "Linked page content:\n" + field(b.page_body) + "\n\n";
      p += "The link appears in this pull request. ";
      p += kSummaryInstruction;
      p += " Focus on what matters for reviewing the change.\n";
      return p;
    case Strategy::NonContextual:
      p += "Linked page content:\n" + field(b.page_body) + "\n\n";
      p += kSummaryInstruction;
      p += "\n";
      return p;
    case Strategy::Metadata:
      break;
  }
  throw Error(ErrorKind::Contract, "the metadata strategy has no prompt");
}

inline std::string prompt_fingerprint(std::string_view prompt) { return sha256_hex(prompt); }

/// One chat completion at temperature 0. An empty (or whitespace-only)
/// completion is an EmptyCompletion error; there is no fallback to another
/// strategy.
inline Summary summarize_llm(const ContextBundle& bundle, ChatClient& client, const Clock& clock) {
  if (!uses_llm(bundle.strategy)) throw Error(ErrorKind::Contract, "summarize_llm called with the metadata strategy");
  const std::string prompt = build_prompt(bundle);
  ChatRequest request{client.model_id(), {{"user", prompt}}, 0.0};
  const std::string text(text::trim(client.complete(request)));
  if (text.empty()) throw Error(ErrorKind::EmptyCompletion, "the model returned an empty completion");
  return Summary{bundle.strategy, text, client.model_id(), prompt_fingerprint(prompt), clock()};
}

/// Search-snippet style preview: title and description joined by a spaced
/// U+2014 dash, standard tags preferred over Open Graph ones. No network or model call.
inline Summary snippet_metadata(const PageContent& page, const Clock& clock) {
  const std::string title(text::trim(page.title.empty() ? page.og_title : page.title));
  const std::string desc(text::trim(page.meta_description.empty() ? page.og_description : page.meta_description));
  std::string out;
  if (!title.empty() && !desc.empty()) {
    out = title + " — " + desc;
  } else if (!title.empty()) {
    out = title;
  } else if (!desc.empty()) {
    out = desc;
  } else {
    throw Error(ErrorKind::NoMetadata, "page has no title or description metadata").with_url(page.requested_url);
  }
  return Summary{Strategy::Metadata, out, "snippet", "", clock()};
}

struct SummaryOutcome {
  Summary summary;
  bool cache_hit = false;
};

/// Runs a strategy with summary caching keyed by (strategy, model, prompt
/// fingerprint), or by a hash of the metadata fields for snippets.
class Summarizer {
 public:
  Summarizer(std::shared_ptr<ChatClient> client, std::shared_ptr<JsonStore> cache, Clock clock)
      : client_(std::move(client)), cache_(std::move(cache)), clock_(std::move(clock)) {}

  bool llm_configured() const { return client_ != nullptr; }

  SummaryOutcome summarize(const ContextBundle& bundle, const PageContent& page) {
    if (bundle.strategy == Strategy::Metadata) return {snippet_metadata(page, clock_), false};
    if (!client_) throw Error(ErrorKind::Auth, "no LLM API key configured");
    const std::string key = std::string(to_string(bundle.strategy)) + "|" + client_->model_id() + "|" +
                            prompt_fingerprint(build_prompt(bundle));
    if (cache_) {
      try {
        if (auto hit = cache_->get(key)) return {hit->get<Summary>(), true};
      } catch (const std::exception& e) {
        spdlog::warn("summary cache read failed: {}", e.what());
      }
    }
    Summary s = summarize_llm(bundle, *client_, clock_);
    if (cache_) {
      try {
        cache_->put(key, nlohmann::json(s));
      } catch (const std::exception& e) {
        spdlog::warn("summary cache write failed: {}", e.what());
      }
    }
    return {std::move(s), false};
  }

 private:
  std::shared_ptr<ChatClient> client_;
  std::shared_ptr<JsonStore> cache_;
  Clock clock_;
};

}  // namespace ailp
