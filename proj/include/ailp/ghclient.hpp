#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ailp/concurrency.hpp"
#include "ailp/error.hpp"
#include "ailp/linkext.hpp"
#include "ailp/time.hpp"
#include "ailp/url.hpp"

namespace ailp {

struct PrComment {
  std::string container_id;
  std::string author;
  std::string body;
  bool operator==(const PrComment&) const = default;
};

struct PrReviewComment {
  std::string container_id;
  std::string author;
  std::string body;
  std::string file_path;
  bool operator==(const PrReviewComment&) const = default;
};

/// A pull request's text and the repository metadata the previews need.
/// Immutable after construction; safe to share between threads.
struct PrRecord {
  std::string repo_full_name;
  std::string repo_description;
  int pr_number = 0;
  std::string title;
  std::string description_body;
  std::vector<PrComment> comments;
  std::vector<PrReviewComment> review_comments;
  Timestamp fetched_at{};

  bool operator==(const PrRecord&) const = default;

  /// Body of the container a link was found in, or nullptr when the id is unknown.
  const std::string* container_body(Location location, std::string_view container_id) const {
    switch (location) {
      case Location::Description:
        return &description_body;
      case Location::Comment:
        for (const auto& c : comments) {
          if (c.container_id == container_id) return &c.body;
        }
        return nullptr;
      case Location::ReviewComment:
        for (const auto& c : review_comments) {
          if (c.container_id == container_id) return &c.body;
        }
        return nullptr;
    }
    return nullptr;
  }
};

struct RepoCandidate {
  std::string full_name;
  long long stars = 0;
  long long commit_count = 0;
  long long issue_count = 0;
  long long contributor_count = 0;
  long long pr_count = 0;
  long long release_count = 0;
  Timestamp last_commit_at{};
  bool is_fork = false;

  bool operator==(const RepoCandidate&) const = default;
};

/// Repository-selection thresholds used to weed out toy projects.
struct CurationThresholds {
  long long min_commits = 100;
  long long min_issues = 1;
  long long min_contributors = 3;
  long long min_prs = 100;
  long long min_releases = 1;
};

inline bool passes_curation(const RepoCandidate& c, Timestamp cutoff, const CurationThresholds& t = {}) {
  return c.commit_count >= t.min_commits && c.issue_count >= t.min_issues &&
         c.contributor_count >= t.min_contributors && c.pr_count >= t.min_prs &&
         c.release_count >= t.min_releases && c.last_commit_at >= cutoff && !c.is_fork;
}

/// Keeps active, non-fork candidates and orders them by stars (descending),
/// breaking ties by name.
inline std::vector<RepoCandidate> curate_repositories(std::vector<RepoCandidate> candidates, Timestamp cutoff,
                                                      const CurationThresholds& thresholds = {}) {
  std::erase_if(candidates, [&](const RepoCandidate& c) { return !passes_curation(c, cutoff, thresholds); });
  std::stable_sort(candidates.begin(), candidates.end(), [](const RepoCandidate& a, const RepoCandidate& b) {
    if (a.stars != b.stars) return a.stars > b.stars;
    return a.full_name < b.full_name;
  });
  return candidates;
}

/// Description links first, then discussion comments, then review comments,
/// each in source order; labels shorter than `min_words` are dropped.
inline std::vector<LinkOccurrence> harvest_links(const PrRecord& pr, std::size_t min_words = 8) {
  std::vector<LinkOccurrence> all = extract_links(pr.description_body, Location::Description, "");
  for (const auto& c : pr.comments) {
    auto found = extract_links(c.body, Location::Comment, c.container_id);
    all.insert(all.end(), found.begin(), found.end());
  }
  for (const auto& c : pr.review_comments) {
    auto found = extract_links(c.body, Location::ReviewComment, c.container_id);
    all.insert(all.end(), found.begin(), found.end());
  }
  all = filter_by_label_length(std::move(all), min_words);
  std::vector<LinkOccurrence> out;
  out.reserve(all.size());
  for (auto& occ : all) {
    try {
      occ.link_kind = classify_link(occ.url, pr.repo_full_name);
    } catch (const Error& e) {
      spdlog::debug("dropping link {}: {}", occ.url, e.what());
      continue;
    }
    out.push_back(std::move(occ));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Payload decoding. Fixture files and live responses share one shape: the
// subset of the REST API fields the pipeline consumes.

namespace gh_detail {

inline std::string string_or_empty(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<std::string>();
}

inline std::string id_string(const nlohmann::json& j) {
  const auto& id = j.at("id");
  return id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
}

inline std::string author_of(const nlohmann::json& j) {
  if (j.contains("user") && j.at("user").is_object()) return string_or_empty(j.at("user"), "login");
  return {};
}

}  // namespace gh_detail

/// Builds a PrRecord from a payload of the form
/// `{number, title, body, repo:{full_name, description}, comments[], review_comments[]}`.
/// Discussion comments get container ids `issuecomment-<id>` and review
/// comments `discussion_r<id>`, matching the anchors GitHub renders.
inline PrRecord pr_from_payload(const nlohmann::json& payload, Timestamp fetched_at) {
  using namespace gh_detail;
  PrRecord pr;
  try {
    pr.pr_number = payload.at("number").get<int>();
    pr.title = string_or_empty(payload, "title");
    pr.description_body = string_or_empty(payload, "body");
    const auto& repo = payload.at("repo");
    pr.repo_full_name = repo.at("full_name").get<std::string>();
    pr.repo_description = string_or_empty(repo, "description");
    if (payload.contains("comments")) {
      for (const auto& c : payload.at("comments")) {
        pr.comments.push_back({"issuecomment-" + id_string(c), author_of(c), string_or_empty(c, "body")});
      }
    }
    if (payload.contains("review_comments")) {
      for (const auto& c : payload.at("review_comments")) {
        pr.review_comments.push_back(
            {"discussion_r" + id_string(c), author_of(c), string_or_empty(c, "body"), string_or_empty(c, "path")});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed PR payload: ") + e.what());
  }
  if (pr.pr_number < 1) throw Error(ErrorKind::Parse, "PR number must be >= 1");
  std::set<std::string> ids;
  for (const auto& c : pr.comments) {
    if (!ids.insert(c.container_id).second) throw Error(ErrorKind::Parse, "duplicate container id " + c.container_id);
  }
  for (const auto& c : pr.review_comments) {
    if (!ids.insert(c.container_id).second) throw Error(ErrorKind::Parse, "duplicate container id " + c.container_id);
  }
  pr.fetched_at = fetched_at;
  return pr;
}

/// Where PR records come from: stored payloads or the live API.
class PrSource {
 public:
  virtual ~PrSource() = default;
  virtual PrRecord fetch_pr(const std::string& repo_full_name, int pr_number) = 0;
  /// PR numbers available for a repository, ascending.
  virtual std::vector<int> list_prs(const std::string& repo_full_name) = 0;
};

/// Reads `<dir>/prs/<owner>-<name>-<number>.json`.
class FixturePrSource final : public PrSource {
 public:
  FixturePrSource(std::filesystem::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {}

  PrRecord fetch_pr(const std::string& repo_full_name, int pr_number) override {
    const auto path = dir_ / "prs" / (file_stem(repo_full_name) + "-" + std::to_string(pr_number) + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::NotFound, "no fixture for " + repo_full_name + "#" + std::to_string(pr_number));
    nlohmann::json payload;
    try {
      payload = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return pr_from_payload(payload, clock_());
  }

  std::vector<int> list_prs(const std::string& repo_full_name) override {
    std::vector<int> out;
    const std::string prefix = file_stem(repo_full_name) + "-";
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_ / "prs", ec)) {
      if (entry.path().extension() != ".json") continue;
      const std::string stem = entry.path().stem().string();
      if (!stem.starts_with(prefix)) continue;
      const std::string digits = stem.substr(prefix.size());
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        continue;
      }
      out.push_back(std::stoi(digits));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static std::string file_stem(const std::string& repo_full_name) {
    std::string s = repo_full_name;
    std::replace(s.begin(), s.end(), '/', '-');
    return s;
  }

  std::filesystem::path dir_;
  Clock clock_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

struct GithubOptions {
  std::string base_url = "https://api.github.com";
  std::string token;
  int per_page = 100;
  std::size_t max_in_flight = 4;
  std::chrono::seconds timeout{30};
  RetryPolicy retry;
};

/// Live REST client. Comment lists are paginated to exhaustion via the
/// `Link: rel="next"` header. Rate-limit responses are surfaced, not retried;
/// transport failures and 5xx are retried with exponential backoff.
class GithubPrSource final : public PrSource {
 public:
  GithubPrSource(GithubOptions options, Clock clock)
      : options_(std::move(options)),
        clock_(std::move(clock)),
        base_(parse_url_or_throw(options_.base_url)),
        in_flight_(options_.max_in_flight) {}

  PrRecord fetch_pr(const std::string& repo_full_name, int pr_number) override {
    const std::string repo_path = "/repos/" + repo_full_name;
    const std::string n = std::to_string(pr_number);
    const auto repo = get_json(repo_path);
    const auto pull = get_json(repo_path + "/pulls/" + n);
    nlohmann::json payload{{"number", pull.at("number")},
                           {"title", pull.value("title", nlohmann::json())},
                           {"body", pull.value("body", nlohmann::json())},
                           {"repo",
                            {{"full_name", repo.at("full_name")},
                             {"description", repo.value("description", nlohmann::json())}}},
                           {"comments", get_all_pages(repo_path + "/issues/" + n + "/comments")},
                           {"review_comments", get_all_pages(repo_path + "/pulls/" + n + "/comments")}};
    return pr_from_payload(payload, clock_());
  }

  std::vector<int> list_prs(const std::string& repo_full_name) override {
    std::vector<int> out;
    for (const auto& p : get_all_pages("/repos/" + repo_full_name + "/pulls", "state=all")) {
      out.push_back(p.at("number").get<int>());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Page {
    nlohmann::json body;
    std::optional<std::string> next_target;
  };

  nlohmann::json get_json(const std::string& path) { return request(path).body; }

  nlohmann::json get_all_pages(const std::string& path, const std::string& extra_query = "") {
    nlohmann::json all = nlohmann::json::array();
    std::string query = "per_page=" + std::to_string(options_.per_page);
    if (!extra_query.empty()) query = extra_query + "&" + query;
    std::optional<std::string> target = path + "?" + query;
    while (target) {
      Page page = request(*target);
      if (!page.body.is_array()) throw Error(ErrorKind::Parse, "expected a JSON array from " + *target);
      for (auto& item : page.body) all.push_back(std::move(item));
      target = page.next_target;
    }
    return all;
  }

  /// Extracts the rel="next" target, following it only on the API origin so
  /// the token never leaves that host.
  std::optional<std::string> next_link(const std::string& header) const {
    std::size_t pos = 0;
    while (pos < header.size()) {
      const auto lt = header.find('<', pos);
      if (lt == std::string::npos) break;
      const auto gt = header.find('>', lt);
      if (gt == std::string::npos) break;
      const auto comma = header.find(',', gt);
      const std::string params = header.substr(gt + 1, comma == std::string::npos ? std::string::npos : comma - gt - 1);
      if (params.find("rel=\"next\"") != std::string::npos) {
        const auto next = parse_url(header.substr(lt + 1, gt - lt - 1));
        if (!next || next->origin() != base_.origin()) return std::nullopt;
        std::string t = next->target();
        if (base_.path.size() > 1 && t.starts_with(base_.path)) t.erase(0, base_.path.size());
        return t;
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return std::nullopt;
  }

  Page request(const std::string& target) {
    SemaphoreGuard guard(in_flight_);
    const std::string full_target = base_.path.size() > 1 ? base_.path + target : target;
    for (int attempt = 1;; ++attempt) {
      httplib::Client client(base_.origin());
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      httplib::Headers headers{{"Accept", "application/vnd.github+json"}, {"User-Agent", "ailp"}};
      if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);
      auto res = client.Get(full_target, headers);

      bool retryable = false;
      std::string failure;
      if (!res) {
        retryable = true;
        failure = "transport failure: " + httplib::to_string(res.error());
      } else if (res->status == 404) {
        throw Error(ErrorKind::NotFound, "not found: " + target);
      } else if (res->status == 401) {
        throw Error(ErrorKind::Auth, "GitHub rejected the token");
      } else if (res->status == 403 || res->status == 429) {
        const bool limited = res->get_header_value("X-RateLimit-Remaining") == "0" ||
                             res->has_header("Retry-After") || res->status == 429;
        if (limited) throw rate_limited(*res);
        throw Error(ErrorKind::Auth, "forbidden: " + target);
      } else if (res->status >= 500) {
        retryable = true;
        failure = "server error " + std::to_string(res->status);
      } else if (res->status >= 200 && res->status < 300) {
        Page page;
        try {
          page.body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorKind::Parse, std::string("bad JSON from GitHub: ") + e.what());
        }
        page.next_target = next_link(res->get_header_value("Link"));
        return page;
      } else {
        throw Error(ErrorKind::Transport, "unexpected status " + std::to_string(res->status) + " for " + target);
      }

      if (!retryable || attempt >= options_.retry.attempts) {
        throw Error(ErrorKind::Transport, failure + " (" + target + ")");
      }
      const auto delay = options_.retry.base_delay * (1LL << (attempt - 1));
      spdlog::warn("GitHub request {} failed ({}), retrying in {} ms", target, failure, delay.count());
      options_.retry.sleep(delay);
    }
  }

  Error rate_limited(const httplib::Response& res) const {
    Error err(ErrorKind::RateLimited, "GitHub rate limit exceeded");
    const long long now = clock_().time_since_epoch().count();
    long long retry_after = 60;
    if (res.has_header("Retry-After")) {
      retry_after = std::atoll(res.get_header_value("Retry-After").c_str());
    }
    if (res.has_header("X-RateLimit-Reset")) {
      const long long reset = std::atoll(res.get_header_value("X-RateLimit-Reset").c_str());
      err.with_reset_at(reset);
      if (!res.has_header("Retry-After")) retry_after = std::max(0LL, reset - now);
    }
    err.with_retry_after(retry_after);
    return err;
  }

  GithubOptions options_;
  Clock clock_;
  Url base_;
  Semaphore in_flight_;
};

inline void to_json(nlohmann::json& j, const RepoCandidate& c) {
  j = nlohmann::json{{"full_name", c.full_name},
                     {"stars", c.stars},
                     {"commit_count", c.commit_count},
                     {"issue_count", c.issue_count},
                     {"contributor_count", c.contributor_count},
                     {"pr_count", c.pr_count},
                     {"release_count", c.release_count},
                     {"last_commit_at", format_timestamp(c.last_commit_at)},
                     {"is_fork", c.is_fork}};
}

inline void from_json(const nlohmann::json& j, RepoCandidate& c) {
  c.full_name = j.at("full_name").get<std::string>();
  auto count = [&](const char* key) {
    const auto v = j.at(key).get<long long>();
    if (v < 0) throw Error(ErrorKind::Parse, std::string(key) + " must be non-negative");
    return v;
  };
  c.stars = count("stars");
  c.commit_count = count("commit_count");
  c.issue_count = count("issue_count");
  c.contributor_count = count("contributor_count");
  c.pr_count = count("pr_count");
  c.release_count = count("release_count");
  c.last_commit_at = parse_timestamp(j.at("last_commit_at").get<std::string>());
  c.is_fork = j.at("is_fork").get<bool>();
}

}  // namespace ailp
