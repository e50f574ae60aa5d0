#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ailp {

enum class ErrorKind {
  InvalidUrl,
  InvalidArgument,
  NotFound,
  RateLimited,
  Transport,
  Timeout,
  TooManyRedirects,
  Auth,
  EmptyCompletion,
  NoMetadata,
  Context,
  Contract,
  Metric,
  Cache,
  Parse,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidUrl: return "invalid_url";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::RateLimited: return "rate_limited";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::TooManyRedirects: return "too_many_redirects";
    case ErrorKind::Auth: return "auth";
    case ErrorKind::EmptyCompletion: return "empty_completion";
    case ErrorKind::NoMetadata: return "no_metadata";
    case ErrorKind::Context: return "context";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Metric: return "metric";
    case ErrorKind::Cache: return "cache";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

inline std::optional<ErrorKind> error_kind_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorKind::Parse); ++i) {
    auto k = static_cast<ErrorKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Single exception type for the library; callers branch on kind().
///
/// Rate-limit errors carry the number of seconds to wait (retry_after) and,
/// when the upstream reports one, the absolute reset time in epoch seconds.
/// Fetch errors carry the URL that was requested.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  std::optional<long long> retry_after() const { return retry_after_; }
  std::optional<long long> reset_at() const { return reset_at_; }
  const std::string& url() const { return url_; }

  Error& with_retry_after(long long seconds) {
    retry_after_ = seconds;
    return *this;
  }
  Error& with_reset_at(long long epoch_seconds) {
    reset_at_ = epoch_seconds;
    return *this;
  }
  Error& with_url(std::string url) {
    url_ = std::move(url);
    return *this;
  }

 private:
  ErrorKind kind_;
  std::optional<long long> retry_after_;
  std::optional<long long> reset_at_;
  std::string url_;
};

}  // namespace ailp
