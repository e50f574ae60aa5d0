#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ailp/cache.hpp"
#include "ailp/concurrency.hpp"
#include "ailp/error.hpp"
#include "ailp/html.hpp"
#include "ailp/text.hpp"
#include "ailp/time.hpp"
#include "ailp/url.hpp"

namespace ailp {

/// A fetched link target. Text fields are empty unless the response was a
/// 2xx HTML document.
struct PageContent {
  std::string requested_url;
  std::string final_url;
  int http_status = 0;
  std::string content_type;
  std::string title;
  std::string meta_description;
  std::string og_title;
  std::string og_description;
  std::string body_text;
  Timestamp fetched_at{};

  bool operator==(const PageContent&) const = default;
};

inline void to_json(nlohmann::json& j, const PageContent& p) {
  j = nlohmann::json{{"requested_url", p.requested_url},
                     {"final_url", p.final_url},
                     {"http_status", p.http_status},
                     {"content_type", p.content_type},
                     {"title", p.title},
                     {"meta_description", p.meta_description},
                     {"og_title", p.og_title},
                     {"og_description", p.og_description},
                     {"body_text", p.body_text},
                     {"fetched_at", format_timestamp(p.fetched_at)}};
}

inline void from_json(const nlohmann::json& j, PageContent& p) {
  p.requested_url = j.at("requested_url").get<std::string>();
  p.final_url = j.at("final_url").get<std::string>();
  p.http_status = j.at("http_status").get<int>();
  p.content_type = j.at("content_type").get<std::string>();
  p.title = j.at("title").get<std::string>();
  p.meta_description = j.at("meta_description").get<std::string>();
  p.og_title = j.at("og_title").get<std::string>();
  p.og_description = j.at("og_description").get<std::string>();
  p.body_text = j.at("body_text").get<std::string>();
  p.fetched_at = parse_timestamp(j.at("fetched_at").get<std::string>());
}

struct FetchPolicy {
  std::chrono::milliseconds timeout{10'000};
  std::size_t max_bytes = 2 * 1024 * 1024;
  int max_redirects = 5;
  std::string user_agent = "ailp-link-preview/1.0";
};

/// What came back over the wire, before any HTML processing.
struct RawResponse {
  std::string final_url;
  int status = 0;
  std::string content_type;
  std::string body;
};

inline bool is_html_content_type(std::string_view content_type, std::string_view body) {
  const std::string ct = text::to_lower_ascii(content_type);
  if (ct.starts_with("text/html") || ct.starts_with("application/xhtml+xml")) return true;
  if (!ct.empty()) return false;
  const std::string head = text::to_lower_ascii(text::trim(body.substr(0, 64)));
  return head.starts_with("<!doctype html") || head.starts_with("<html");
}

/// Turns a raw response into a PageContent.
inline PageContent build_page_content(std::string requested_url, const RawResponse& raw, Timestamp now) {
  PageContent page;
  page.requested_url = std::move(requested_url);
  page.final_url = raw.final_url;
  page.http_status = raw.status;
  page.content_type = raw.content_type;
  page.fetched_at = now;
  if (raw.status < 100 || raw.status > 599) {
    throw Error(ErrorKind::Transport, "invalid HTTP status " + std::to_string(raw.status)).with_url(page.requested_url);
  }
  if (raw.status >= 200 && raw.status < 300 && is_html_content_type(raw.content_type, raw.body)) {
    const auto meta = html::extract_metadata(raw.body);
    page.title = meta.title;
    page.meta_description = meta.meta_description;
    page.og_title = meta.og_title;
    page.og_description = meta.og_description;
    page.body_text = html::extract_body_text(raw.body);
  }
  return page;
}

class PageTransport {
 public:
  virtual ~PageTransport() = default;
  /// Performs the GET, following redirects. Throws Error with the requested
  /// URL attached on timeout, redirect overflow or transport failure.
  virtual RawResponse get(const std::string& url, const FetchPolicy& policy) = 0;
};

class HttpTransport final : public PageTransport {
 public:
  RawResponse get(const std::string& url, const FetchPolicy& policy) override {
    std::string current = url;
    for (int hop = 0;; ++hop) {
      const auto u = parse_url(current);
      if (!u || (u->scheme != "http" && u->scheme != "https")) {
        throw Error(ErrorKind::Transport, "unsupported URL " + current).with_url(url);
      }
      httplib::Client client(u->origin());
      client.set_follow_location(false);
      client.set_connection_timeout(policy.timeout);
      client.set_read_timeout(policy.timeout);
      client.set_write_timeout(policy.timeout);
      const httplib::Headers headers{{"User-Agent", policy.user_agent},
                                     {"Accept", "text/html,application/xhtml+xml;q=0.9,*/*;q=0.5"}};

      RawResponse raw;
      std::string location;
      bool truncated = false;
      const auto started = std::chrono::steady_clock::now();
      auto res = client.Get(
          u->target(), headers,
          [&](const httplib::Response& r) {
            raw.status = r.status;
            raw.content_type = r.get_header_value("Content-Type");
            location = r.get_header_value("Location");
            return true;
          },
          [&](const char* data, std::size_t len) {
            const std::size_t room = policy.max_bytes - raw.body.size();
            raw.body.append(data, std::min(len, room));
            if (raw.body.size() >= policy.max_bytes) {
              truncated = true;
              return false;
            }
            return true;
          });
      if (!res && !(truncated && res.error() == httplib::Error::Canceled)) {
        const auto elapsed = std::chrono::steady_clock::now() - started;
        const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                               ((res.error() == httplib::Error::Read || res.error() == httplib::Error::Connection) &&
                                elapsed >= policy.timeout * 9 / 10);
        if (timed_out) throw Error(ErrorKind::Timeout, "timed out fetching " + current).with_url(url);
        throw Error(ErrorKind::Transport, "fetching " + current + ": " + httplib::to_string(res.error()))
            .with_url(url);
      }
      if (raw.status >= 300 && raw.status < 400 && !location.empty()) {
        if (hop >= policy.max_redirects) {
          throw Error(ErrorKind::TooManyRedirects, "more than " + std::to_string(policy.max_redirects) +
                                                       " redirects from " + url)
              .with_url(url);
        }
        current = resolve_url(*u, location);
        continue;
      }
      raw.final_url = current;
      return raw;
    }
  }
};

/// Serves pages from `<dir>/pages/index.json`, a map from URL to
/// `{file, status?, content_type?, final_url?, error?}`. `error` may be
/// "timeout", "too_many_redirects" or "transport" to simulate failures.
class FixtureTransport final : public PageTransport {
 public:
  explicit FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::ifstream in(dir_ / "pages" / "index.json", std::ios::binary);
    if (!in) return;
    try {
      const auto doc = nlohmann::json::parse(in);
      for (const auto& [url, entry] : doc.items()) index_[normalize_url(url)] = entry;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("bad pages/index.json: ") + e.what());
    }
  }

  RawResponse get(const std::string& url, const FetchPolicy& policy) override {
    const auto it = index_.find(normalize_url(url));
    if (it == index_.end()) throw Error(ErrorKind::Transport, "no fixture page for " + url).with_url(url);
    const auto& entry = it->second;
    if (entry.contains("error")) {
      const auto kind = error_kind_from_string(entry.at("error").get<std::string>()).value_or(ErrorKind::Transport);
      throw Error(kind, "simulated failure for " + url).with_url(url);
    }
    RawResponse raw;
    raw.final_url = entry.value("final_url", url);
    raw.status = entry.value("status", 200);
    raw.content_type = entry.value("content_type", std::string{"text/html; charset=utf-8"});
    if (entry.contains("file")) {
      std::ifstream in(dir_ / "pages" / entry.at("file").get<std::string>(), std::ios::binary);
      if (!in) throw Error(ErrorKind::Transport, "missing fixture file for " + url).with_url(url);
      std::ostringstream ss;
      ss << in.rdbuf();
      raw.body = ss.str().substr(0, policy.max_bytes);
    }
    return raw;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, nlohmann::json> index_;
};

struct CacheTtl {
  std::chrono::seconds positive = std::chrono::hours(24 * 7);
  std::chrono::seconds negative = std::chrono::hours(1);
};

/// Page cache keyed by normalized URL. Failures are stored as negative
/// entries with their own, shorter TTL.
class PageCache {
 public:
  struct Failure {
    ErrorKind kind;
    std::string message;
  };
  struct Lookup {
    std::optional<PageContent> page;
    std::optional<Failure> failure;
    bool hit() const { return page.has_value() || failure.has_value(); }
  };

  PageCache(std::shared_ptr<JsonStore> store, Clock clock, CacheTtl ttl = {})
      : store_(std::move(store)), clock_(std::move(clock)), ttl_(ttl) {}

  std::optional<PageContent> cache_get(const std::string& url) { return lookup(url).page; }

  void cache_put(const PageContent& page) {
    store_->put(normalize_url(page.requested_url),
                {{"stored_at", format_timestamp(clock_())}, {"page", nlohmann::json(page)}});
  }

  void put_failure(const std::string& url, const Error& error) {
    store_->put(normalize_url(url), {{"stored_at", format_timestamp(clock_())},
                                     {"failure", {{"kind", to_string(error.kind())}, {"message", error.what()}}}});
  }

  Lookup lookup(const std::string& url) {
    Lookup out;
    const auto entry = store_->get(normalize_url(url));
    if (!entry) return out;
    try {
      const auto stored_at = parse_timestamp(entry->at("stored_at").get<std::string>());
      const auto age = clock_() - stored_at;
      if (entry->contains("page")) {
        if (age < ttl_.positive) out.page = entry->at("page").get<PageContent>();
      } else if (entry->contains("failure")) {
        if (age < ttl_.negative) {
          const auto& f = entry->at("failure");
          out.failure = Failure{error_kind_from_string(f.at("kind").get<std::string>()).value_or(ErrorKind::Transport),
                                f.at("message").get<std::string>()};
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Cache, std::string("malformed page cache entry: ") + e.what());
    }
    return out;
  }

 private:
  std::shared_ptr<JsonStore> store_;
  Clock clock_;
  CacheTtl ttl_;
};

struct FetchOutcome {
  PageContent page;
  bool cache_hit = false;
};

/// Cache-through page fetcher with a global in-flight bound and a per-host
/// limit. Cache I/O failures are logged and the live fetch proceeds.
class PageFetcher {
 public:
  PageFetcher(std::shared_ptr<PageTransport> transport, std::shared_ptr<PageCache> cache, Clock clock,
              FetchPolicy policy = {}, std::size_t max_in_flight = 8, std::size_t per_host = 2)
      : transport_(std::move(transport)),
        cache_(std::move(cache)),
        clock_(std::move(clock)),
        policy_(std::move(policy)),
        global_(max_in_flight),
        per_host_(per_host) {}

  const FetchPolicy& policy() const { return policy_; }

  PageContent fetch_page(const std::string& url) { return fetch(url).page; }

  FetchOutcome fetch(const std::string& url) {
    if (!is_http_url(url)) throw Error(ErrorKind::InvalidUrl, "not an http(s) URL: " + url).with_url(url);
    if (cache_) {
      try {
        auto hit = cache_->lookup(url);
        if (hit.page) return {std::move(*hit.page), true};
        if (hit.failure) throw Error(hit.failure->kind, hit.failure->message).with_url(url);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Cache) throw;
        spdlog::warn("page cache read failed for {}: {}", url, e.what());
      }
    }

    const std::string host = text::to_lower_ascii(parse_url_or_throw(url).host);
    RawResponse raw;
    try {
      SemaphoreGuard global(global_);
      SemaphoreGuard host_guard(per_host_.for_key(host));
      raw = transport_->get(url, policy_);
    } catch (const Error& e) {
      remember_failure(url, e);
      throw;
    }
    PageContent page = build_page_content(url, raw, clock_());
    if (cache_) {
      try {
        cache_->cache_put(page);
      } catch (const Error& e) {
        spdlog::warn("page cache write failed for {}: {}", url, e.what());
      }
    }
    return {std::move(page), false};
  }

 private:
  void remember_failure(const std::string& url, const Error& e) {
    if (!cache_) return;
    try {
      cache_->put_failure(url, e);
    } catch (const Error& ce) {
      spdlog::warn("page cache write failed for {}: {}", url, ce.what());
    }
  }

  std::shared_ptr<PageTransport> transport_;
  std::shared_ptr<PageCache> cache_;
  Clock clock_;
  FetchPolicy policy_;
  Semaphore global_;
  KeyedLimiter per_host_;
};

}  // namespace ailp
