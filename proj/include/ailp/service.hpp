#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ailp/error.hpp"
#include "ailp/ghclient.hpp"
#include "ailp/linkext.hpp"
#include "ailp/pagefetch.hpp"
#include "ailp/pipeline.hpp"
#include "ailp/summarize.hpp"

#ifndef AILP_VERSION
#define AILP_VERSION "0.0.0"
#endif

namespace ailp {

inline constexpr std::string_view kVersion = AILP_VERSION;

struct PrCoordinates {
  std::string repo_full_name;  // owner/name
  int number = 0;
};

/// Accepts `https://github.com/{owner}/{repo}/pull/{n}`, optionally followed
/// by a sub-page (`/files`, `/commits`), a query or a fragment.
inline std::optional<PrCoordinates> parse_pr_url(std::string_view url) {
  static const std::regex re(
      R"(^https://(?:www\.)?github\.com/([A-Za-z0-9_.-]+)/([A-Za-z0-9_.-]+)/pull/([1-9][0-9]{0,8})(?:/[A-Za-z0-9_./-]*)?(?:[?#].*)?$)",
      std::regex::icase);
  std::cmatch m;
  if (!std::regex_match(url.data(), url.data() + url.size(), m, re)) return std::nullopt;
  return PrCoordinates{m[1].str() + "/" + m[2].str(), std::stoi(m[3].str())};
}

struct SummarizeRequest {
  std::string link_url;
  std::string pr_url;
  Location location = Location::Description;
  std::optional<std::string> container_id;
  std::vector<Strategy> strategies;
};

/// Validates and decodes a request document; throws InvalidArgument.
inline SummarizeRequest parse_summarize_request(const nlohmann::json& j) {
  auto bad = [](const std::string& m) { return Error(ErrorKind::InvalidArgument, m); };
  if (!j.is_object()) throw bad("request body must be a JSON object");
  auto str_field = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw bad(std::string("missing string field '") + key + "'");
    return j.at(key).get<std::string>();
  };
  SummarizeRequest r;
  r.link_url = str_field("link_url");
  if (!is_http_url(r.link_url)) throw bad("link_url must be an absolute http(s) URL");
  r.pr_url = str_field("pr_url");
  if (!parse_pr_url(r.pr_url)) throw bad("pr_url must look like https://github.com/{owner}/{repo}/pull/{n}");
  const auto loc = location_from_string(str_field("location"));
  if (!loc) throw bad("location must be description, comment or review_comment");
  r.location = *loc;
  if (j.contains("container_id") && !j.at("container_id").is_null()) {
    if (!j.at("container_id").is_string()) throw bad("container_id must be a string");
    r.container_id = j.at("container_id").get<std::string>();
  }
  if (!j.contains("strategies") || !j.at("strategies").is_array() || j.at("strategies").empty()) {
    throw bad("strategies must be a non-empty array");
  }
  for (const auto& s : j.at("strategies")) {
    if (!s.is_string()) throw bad("strategies must be strings");
    const auto st = strategy_from_string(s.get<std::string>());
    if (!st) throw bad("unknown strategy '" + s.get<std::string>() + "'");
    if (std::find(r.strategies.begin(), r.strategies.end(), *st) != r.strategies.end()) {
      throw bad("duplicate strategy '" + s.get<std::string>() + "'");
    }
    r.strategies.push_back(*st);
  }
  return r;
}

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

inline nlohmann::json error_body(ErrorKind kind, const std::string& message) {
  return {{"error_kind", to_string(kind)}, {"message", message}};
}

/// Request handling behind the local HTTP endpoints. Safe to call from
/// several server threads at once.
class PreviewService {
 public:
  PreviewService(Runtime runtime, std::size_t budget_words = kDefaultPageBudgetWords,
                 std::chrono::seconds pr_ttl = std::chrono::minutes(10))
      : rt_(std::move(runtime)), budget_words_(budget_words), pr_ttl_(pr_ttl) {}

  HttpReply handle_health() const {
    return {200, {{"status", "ok"}, {"version", std::string(kVersion)}, {"llm_configured", rt_.summarizer->llm_configured()}}};
  }

  HttpReply handle_summarize(const std::string& body) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return {400, error_body(ErrorKind::Parse, std::string("request body is not JSON: ") + e.what())};
    }
    SummarizeRequest req;
    try {
      req = parse_summarize_request(doc);
    } catch (const Error& e) {
      return {400, error_body(e.kind(), e.what())};
    }
    return handle_summarize(req);
  }

  HttpReply handle_summarize(const SummarizeRequest& req) {
    const bool wants_llm = std::any_of(req.strategies.begin(), req.strategies.end(), uses_llm);
    if (wants_llm && !rt_.summarizer->llm_configured()) {
      return {401, error_body(ErrorKind::Auth, "no LLM API key configured; set AILP_LLM_API_KEY or request only the "
                                               "metadata strategy")};
    }
    const auto coords = *parse_pr_url(req.pr_url);

    bool pr_hit = false;
    PrRecord pr;
    try {
      std::tie(pr, pr_hit) = get_pr(coords);
    } catch (const Error& e) {
      return {502, error_body(e.kind(), "pull request fetch failed: " + std::string(e.what()))};
    }

    LinkOccurrence occ;
    try {
      occ = locate_link(pr, req);
    } catch (const Error& e) {
      return {400, error_body(e.kind(), e.what())};
    }

    FetchOutcome page;
    try {
      page = rt_.pages->fetch(req.link_url);
    } catch (const Error& e) {
      return {502, error_body(e.kind(), "page fetch failed: " + std::string(e.what()))};
    }

    std::vector<std::future<nlohmann::json>> jobs;
    for (auto s : req.strategies) {
      jobs.push_back(std::async(std::launch::async, [this, s, &pr, &occ, &page] {
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto bundle = assemble_context(pr, occ, page.page, s, budget_words_);
          auto out = rt_.summarizer->summarize(bundle, page.page);
          const auto ms =
              std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
          return nlohmann::json{{"text", out.summary.text},
                                {"model_id", out.summary.model_id},
                                {"elapsed_ms", ms},
                                {"cache_hit", out.cache_hit}};
        } catch (const Error& e) {
          return error_body(e.kind(), e.what());
        } catch (const std::exception& e) {
          return error_body(ErrorKind::Transport, e.what());
        }
      }));
    }

    nlohmann::json results = nlohmann::json::object();
    std::size_t failures = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      auto r = jobs[i].get();
      if (r.contains("error_kind")) ++failures;
      results[std::string(to_string(req.strategies[i]))] = std::move(r);
    }
    const std::string title = page.page.title.empty() ? page.page.og_title : page.page.title;
    nlohmann::json body{{"results", std::move(results)},
                        {"page_title", title},
                        {"cache_hit", {{"pr", pr_hit}, {"page", page.cache_hit}}}};
    return {failures == req.strategies.size() ? 502 : 200, std::move(body)};
  }

 private:
  std::pair<PrRecord, bool> get_pr(const PrCoordinates& c) {
    const auto key = c.repo_full_name + "#" + std::to_string(c.number);
    const auto now = rt_.clock();
    {
      std::lock_guard lock(pr_mutex_);
      const auto it = prs_.find(key);
      if (it != prs_.end() && now - it->second.fetched_at < pr_ttl_) return {it->second, true};
    }
    PrRecord pr = rt_.prs->fetch_pr(c.repo_full_name, c.number);
    std::lock_guard lock(pr_mutex_);
    prs_[key] = pr;
    return {std::move(pr), false};
  }

  /// Finds the link inside the named container. Without a container id the
  /// first container at that location holding the link is used. A link that
  /// is present but whose exact Markdown form cannot be recovered keeps an
  /// empty label.
  static LinkOccurrence locate_link(const PrRecord& pr, const SummarizeRequest& req) {
    std::vector<std::pair<std::string, const std::string*>> containers;
    switch (req.location) {
      case Location::Description:
        containers.emplace_back("", &pr.description_body);
        break;
      case Location::Comment:
        for (const auto& c : pr.comments) containers.emplace_back(c.container_id, &c.body);
        break;
      case Location::ReviewComment:
        for (const auto& c : pr.review_comments) containers.emplace_back(c.container_id, &c.body);
        break;
    }
    const auto wanted = normalize_url(req.link_url);
    for (const auto& [id, body] : containers) {
      if (req.location != Location::Description && req.container_id && *req.container_id != id) continue;
      for (auto& occ : extract_links(*body, req.location, id)) {
        if (normalize_url(occ.url) == wanted) return occ;
      }
      if (req.container_id || req.location == Location::Description) {
        LinkOccurrence occ;
        occ.url = req.link_url;
        occ.location = req.location;
        occ.container_id = id;
        occ.link_kind = classify_link(req.link_url, pr.repo_full_name);
        return occ;
      }
    }
    throw Error(ErrorKind::Context, "no " + std::string(to_string(req.location)) + " container" +
                                        (req.container_id ? " '" + *req.container_id + "'" : std::string()) +
                                        " in " + pr.repo_full_name + "#" + std::to_string(pr.pr_number) +
                                        " holds the link");
  }

  Runtime rt_;
  std::size_t budget_words_;
  std::chrono::seconds pr_ttl_;
  std::mutex pr_mutex_;
  std::map<std::string, PrRecord> prs_;
};

/// Extension pages and loopback origins may call the service.
inline bool origin_allowed(std::string_view origin) {
  for (std::string_view scheme : {"chrome-extension://", "moz-extension://", "safari-web-extension://"}) {
    if (origin.starts_with(scheme) && origin.size() > scheme.size()) return true;
  }
  const auto u = parse_url(origin);
  if (!u || (u->scheme != "http" && u->scheme != "https")) return false;
  const auto host = text::to_lower_ascii(u->host);
  return host == "localhost" || host == "127.0.0.1" || host == "[::1]";
}

/// Registers the endpoints and CORS handling on an httplib server.
inline void mount_service(httplib::Server& server, PreviewService& service) {
  server.set_pre_routing_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_header("Origin")) return httplib::Server::HandlerResponse::Unhandled;
    const auto origin = req.get_header_value("Origin");
    if (!origin_allowed(origin)) {
      res.status = 403;
      res.set_content(error_body(ErrorKind::Auth, "origin not allowed").dump(), "application/json");
      return httplib::Server::HandlerResponse::Handled;
    }
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Vary", "Origin");
    if (req.method == "OPTIONS") {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Max-Age", "600");
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  server.Get("/api/v1/health", [&service](const httplib::Request&, httplib::Response& res) {
    const auto r = service.handle_health();
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
  server.Post("/api/v1/summarize", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle_summarize(req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
}

}  // namespace ailp
