#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ailp/cache.hpp"
#include "ailp/concurrency.hpp"
#include "ailp/error.hpp"
#include "ailp/evalharness.hpp"
#include "ailp/ghclient.hpp"
#include "ailp/linkext.hpp"
#include "ailp/llm.hpp"
#include "ailp/metrics.hpp"
#include "ailp/pagefetch.hpp"
#include "ailp/summarize.hpp"
#include "ailp/time.hpp"

namespace ailp {

/// Time used for every timestamp when running from fixtures, so stage
/// outputs are byte-reproducible.
inline Timestamp fixture_epoch() { return parse_timestamp("2025-01-01T00:00:00Z"); }

inline Timestamp default_cutoff() { return parse_timestamp("2024-05-27"); }

struct RunConfig {
  std::optional<std::filesystem::path> fixture_dir;
  std::filesystem::path cache_dir;  // empty: in-memory caches only
  std::size_t min_label_words = 8;
  std::size_t page_budget_words = kDefaultPageBudgetWords;
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::filesystem::path output_dir = ".";
  Timestamp cutoff_date = default_cutoff();

  std::size_t github_concurrency = 4;
  std::size_t page_concurrency = 8;
  std::size_t per_host_concurrency = 2;
  std::size_t llm_concurrency = 2;
  std::size_t link_concurrency = 4;

  FetchPolicy fetch_policy;
  CacheTtl cache_ttl;

  bool mock_llm = false;
  OpenAiChatConfig llm;
  std::string github_token;
  std::string github_base_url = "https://api.github.com";

  std::string bind_host = "127.0.0.1";
  int port = 8377;
  std::uint64_t embedding_seed = 0x5eedULL;

  void validate() const {
    if (min_label_words < 1) throw Error(ErrorKind::InvalidArgument, "min_label_words must be >= 1");
    if (page_budget_words < 1) throw Error(ErrorKind::InvalidArgument, "page_budget_words must be >= 1");
    if (strategies.empty()) throw Error(ErrorKind::InvalidArgument, "at least one strategy is required");
    if (port < 0 || port > 65535) throw Error(ErrorKind::InvalidArgument, "port out of range");
  }
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

inline std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) {
    const auto s = strategy_from_string(n);
    if (!s) throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + n + "'");
    if (std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
  }
  return out;
}

/// Applies a JSON config document. Unknown keys are rejected.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  for (const auto& [key, v] : j.items()) {
    if (key == "fixture_dir") c.fixture_dir = v.get<std::string>();
    else if (key == "cache_dir") c.cache_dir = v.get<std::string>();
    else if (key == "min_label_words") c.min_label_words = v.get<std::size_t>();
    else if (key == "page_budget_words") c.page_budget_words = v.get<std::size_t>();
    else if (key == "strategies") c.strategies = parse_strategies(v.get<std::vector<std::string>>());
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else if (key == "cutoff_date") c.cutoff_date = parse_timestamp(v.get<std::string>());
    else if (key == "github_concurrency") c.github_concurrency = v.get<std::size_t>();
    else if (key == "page_concurrency") c.page_concurrency = v.get<std::size_t>();
    else if (key == "per_host_concurrency") c.per_host_concurrency = v.get<std::size_t>();
    else if (key == "llm_concurrency") c.llm_concurrency = v.get<std::size_t>();
    else if (key == "link_concurrency") c.link_concurrency = v.get<std::size_t>();
    else if (key == "fetch_timeout_ms") c.fetch_policy.timeout = std::chrono::milliseconds(v.get<long long>());
    else if (key == "fetch_max_bytes") c.fetch_policy.max_bytes = v.get<std::size_t>();
    else if (key == "fetch_max_redirects") c.fetch_policy.max_redirects = v.get<int>();
    else if (key == "user_agent") c.fetch_policy.user_agent = v.get<std::string>();
    else if (key == "cache_ttl_seconds") c.cache_ttl.positive = std::chrono::seconds(v.get<long long>());
    else if (key == "negative_cache_ttl_seconds") c.cache_ttl.negative = std::chrono::seconds(v.get<long long>());
    else if (key == "llm_base_url") c.llm.base_url = v.get<std::string>();
    else if (key == "llm_model") c.llm.model = v.get<std::string>();
    else if (key == "github_base_url") c.github_base_url = v.get<std::string>();
    else if (key == "bind_host") c.bind_host = v.get<std::string>();
    else if (key == "port") c.port = v.get<int>();
    else if (key == "embedding_seed") c.embedding_seed = v.get<std::uint64_t>();
    else throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  }
}

inline void load_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open config " + path.string());
  try {
    apply_config_json(c, nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

/// AILP_LLM_API_KEY, AILP_LLM_BASE_URL, AILP_LLM_MODEL, AILP_GITHUB_TOKEN,
/// AILP_CACHE_DIR, AILP_PORT.
inline void apply_env(RunConfig& c, const EnvLookup& env = process_env) {
  if (auto v = env("AILP_LLM_API_KEY")) c.llm.api_key = *v;
  if (auto v = env("AILP_LLM_BASE_URL")) c.llm.base_url = *v;
  if (auto v = env("AILP_LLM_MODEL")) c.llm.model = *v;
  if (auto v = env("AILP_GITHUB_TOKEN")) c.github_token = *v;
  if (auto v = env("AILP_CACHE_DIR")) c.cache_dir = *v;
  if (auto v = env("AILP_PORT")) {
    try {
      c.port = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "AILP_PORT is not a number: " + *v);
    }
  }
}

/// Live collaborators assembled from a RunConfig.
struct Runtime {
  Clock clock;
  std::shared_ptr<PrSource> prs;
  std::shared_ptr<PageFetcher> pages;
  std::shared_ptr<Summarizer> summarizer;
  std::shared_ptr<metrics::EmbeddingProvider> embedder;
};

inline std::shared_ptr<ChatClient> make_chat_client(const RunConfig& c) {
  std::shared_ptr<ChatClient> client;
  if (c.mock_llm) {
    client = std::make_shared<MockChatClient>();
  } else if (!c.llm.api_key.empty()) {
    client = std::make_shared<OpenAiChatClient>(c.llm);
  } else {
    return nullptr;
  }
  return std::make_shared<LimitedChatClient>(std::move(client), c.llm_concurrency);
}

inline Runtime make_runtime(const RunConfig& c) {
  c.validate();
  Runtime rt;
  rt.clock = c.fixture_dir ? fixed_clock(fixture_epoch()) : system_clock();
  std::shared_ptr<PageTransport> transport;
  if (c.fixture_dir) {
    rt.prs = std::make_shared<FixturePrSource>(*c.fixture_dir, rt.clock);
    transport = std::make_shared<FixtureTransport>(*c.fixture_dir);
  } else {
    GithubOptions gh;
    gh.base_url = c.github_base_url;
    gh.token = c.github_token;
    gh.max_in_flight = c.github_concurrency;
    rt.prs = std::make_shared<GithubPrSource>(gh, rt.clock);
    transport = std::make_shared<HttpTransport>();
  }
  std::shared_ptr<JsonStore> page_store = make_store(c.cache_dir.empty() ? c.cache_dir : c.cache_dir / "pages");
  std::shared_ptr<JsonStore> summary_store =
      make_store(c.cache_dir.empty() ? c.cache_dir : c.cache_dir / "summaries");
  auto cache = std::make_shared<PageCache>(page_store, rt.clock, c.cache_ttl);
  rt.pages = std::make_shared<PageFetcher>(transport, cache, rt.clock, c.fetch_policy, c.page_concurrency,
                                           c.per_host_concurrency);
  rt.summarizer = std::make_shared<Summarizer>(make_chat_client(c), summary_store, rt.clock);
  rt.embedder = std::make_shared<metrics::HashEmbeddingProvider>(c.embedding_seed);
  return rt;
}

// ---------------------------------------------------------------------------
// JSON lines

/// Parses one JSON document per non-blank line. Errors name the line.
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Writes through a temporary file so a failed run never leaves a partial output.
inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorKind::InvalidArgument, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <class T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) out += nlohmann::json(item).dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// curate

struct CurateResult {
  std::vector<RepoCandidate> retained;
  std::size_t total = 0;
};

inline CurateResult curate_file(const std::filesystem::path& candidates_file, Timestamp cutoff) {
  CurateResult result;
  std::vector<RepoCandidate> candidates;
  std::ifstream in(candidates_file, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + candidates_file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      candidates.push_back(nlohmann::json::parse(line).get<RepoCandidate>());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, candidates_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  result.total = candidates.size();
  result.retained = curate_repositories(std::move(candidates), cutoff);
  return result;
}

// ---------------------------------------------------------------------------
// harvest

struct HarvestedLink {
  std::string repo;
  int pr = 0;
  LinkOccurrence occurrence;

  bool operator==(const HarvestedLink&) const = default;
};

inline void to_json(nlohmann::json& j, const HarvestedLink& h) {
  j = nlohmann::json{{"repo", h.repo}, {"pr", h.pr}};
  j.update(nlohmann::json(h.occurrence));
}

inline void from_json(const nlohmann::json& j, HarvestedLink& h) {
  h.repo = j.at("repo").get<std::string>();
  h.pr = j.at("pr").get<int>();
  h.occurrence = j.get<LinkOccurrence>();
}

/// Harvests qualifying links from the given PRs (all PRs of each repo when
/// `pr_numbers` is empty). PRs are visited in ascending number order.
inline std::vector<HarvestedLink> harvest(Runtime& rt, const std::vector<std::string>& repos,
                                          const std::vector<int>& pr_numbers, std::size_t min_words) {
  std::vector<HarvestedLink> out;
  for (const auto& repo : repos) {
    std::vector<int> numbers = pr_numbers.empty() ? rt.prs->list_prs(repo) : pr_numbers;
    std::sort(numbers.begin(), numbers.end());
    numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
    for (int n : numbers) {
      const PrRecord pr = rt.prs->fetch_pr(repo, n);
      for (auto& occ : harvest_links(pr, min_words)) out.push_back({repo, n, std::move(occ)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// summarize

struct StrategyError {
  ErrorKind kind = ErrorKind::Transport;
  std::string message;
  bool operator==(const StrategyError&) const = default;
};

/// One link with its fetched page and the outcome of every requested strategy.
struct SummaryRecord {
  HarvestedLink link;
  std::optional<PageContent> page;
  std::map<Strategy, Summary> summaries;
  std::map<Strategy, StrategyError> errors;

  bool operator==(const SummaryRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const SummaryRecord& r) {
  j = nlohmann::json(r.link);
  j["page"] = r.page ? nlohmann::json(*r.page) : nlohmann::json();
  j["summaries"] = nlohmann::json::object();
  for (const auto& [s, summary] : r.summaries) j["summaries"][std::string(to_string(s))] = summary;
  j["errors"] = nlohmann::json::object();
  for (const auto& [s, err] : r.errors) {
    j["errors"][std::string(to_string(s))] = {{"error_kind", to_string(err.kind)}, {"message", err.message}};
  }
}

inline void from_json(const nlohmann::json& j, SummaryRecord& r) {
  r.link = j.get<HarvestedLink>();
  r.page.reset();
  if (j.contains("page") && !j.at("page").is_null()) r.page = j.at("page").get<PageContent>();
  r.summaries.clear();
  r.errors.clear();
  const auto summaries = j.value("summaries", nlohmann::json::object());
  const auto errors = j.value("errors", nlohmann::json::object());
  for (const auto& [name, s] : summaries.items()) {
    const auto st = strategy_from_string(name);
    if (!st) throw Error(ErrorKind::Parse, "unknown strategy " + name);
    r.summaries[*st] = s.get<Summary>();
  }
  for (const auto& [name, e] : errors.items()) {
    const auto st = strategy_from_string(name);
    if (!st) throw Error(ErrorKind::Parse, "unknown strategy " + name);
    r.errors[*st] = {error_kind_from_string(e.at("error_kind").get<std::string>()).value_or(ErrorKind::Transport),
                     e.at("message").get<std::string>()};
  }
}

/// Runs each strategy for each link. Per-strategy failures are recorded
/// in the record, never thrown; a PR or page that cannot be fetched fails
/// every strategy of the affected links.
inline std::vector<SummaryRecord> summarize_links(Runtime& rt, const std::vector<HarvestedLink>& links,
                                                  const std::vector<Strategy>& strategies, std::size_t budget_words,
                                                  std::size_t concurrency) {
  // Fetch each PR once, up front and in order.
  std::map<std::pair<std::string, int>, std::variant<PrRecord, StrategyError>> prs;
  for (const auto& l : links) {
    const auto key = std::pair{l.repo, l.pr};
    if (prs.count(key)) continue;
    try {
      prs.emplace(key, rt.prs->fetch_pr(l.repo, l.pr));
    } catch (const Error& e) {
      prs.emplace(key, StrategyError{e.kind(), e.what()});
    }
  }

  return parallel_map(links, concurrency, [&](const HarvestedLink& link) {
    SummaryRecord rec;
    rec.link = link;
    auto fail_all = [&](ErrorKind kind, const std::string& message) {
      for (auto s : strategies) rec.errors[s] = {kind, message};
    };
    const auto& pr_or_error = prs.at({link.repo, link.pr});
    if (const auto* err = std::get_if<StrategyError>(&pr_or_error)) {
      fail_all(err->kind, err->message);
      return rec;
    }
    const auto& pr = std::get<PrRecord>(pr_or_error);
    try {
      rec.page = rt.pages->fetch_page(link.occurrence.url);
    } catch (const Error& e) {
      fail_all(e.kind(), e.what());
      return rec;
    }
    for (auto s : strategies) {
      try {
        const auto bundle = assemble_context(pr, link.occurrence, *rec.page, s, budget_words);
        rec.summaries[s] = rt.summarizer->summarize(bundle, *rec.page).summary;
      } catch (const Error& e) {
        rec.errors[s] = {e.kind(), e.what()};
      }
    }
    return rec;
  });
}

// ---------------------------------------------------------------------------
// evaluate

inline std::vector<LinkEvaluation> evaluate_records(const std::vector<SummaryRecord>& records,
                                                    const metrics::EmbeddingProvider& provider, std::size_t min_words,
                                                    std::size_t concurrency) {
  const std::size_t threads = provider.concurrent_safe() ? concurrency : 1;
  std::vector<SummaryRecord> eligible;
  for (const auto& r : records) {
    if (r.link.occurrence.label_word_count < min_words) {
      spdlog::warn("skipping {}: label has {} words, below {}", r.link.occurrence.url,
                   r.link.occurrence.label_word_count, min_words);
      continue;
    }
    eligible.push_back(r);
  }
  return parallel_map(eligible, threads, [&](const SummaryRecord& r) {
    if (!r.page) {
      return LinkEvaluation{r.link.repo, r.link.pr, r.link.occurrence.url, r.link.occurrence.label, {}};
    }
    return evaluate_link(r.link.repo, r.link.pr, r.link.occurrence, r.summaries, *r.page, provider, min_words);
  });
}

}  // namespace ailp
