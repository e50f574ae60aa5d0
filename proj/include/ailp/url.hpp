#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ailp/error.hpp"
#include "ailp/text.hpp"

namespace ailp {

/// A parsed hierarchical URL (`scheme://[userinfo@]host[:port][path][?query][#fragment]`).
/// Components are kept verbatim; no percent-decoding is performed.
struct Url {
  std::string scheme;
  std::string userinfo;
  std::string host;
  std::string port;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  std::string origin() const {
    std::string out = scheme + "://" + host;
    if (!port.empty()) out += ":" + port;
    return out;
  }

  /// Path plus query, as sent in an HTTP request line.
  std::string target() const {
    std::string out = path.empty() ? "/" : path;
    if (query) out += "?" + *query;
    return out;
  }

  std::string str() const {
    std::string out = scheme + "://";
    if (!userinfo.empty()) out += userinfo + "@";
    out += host;
    if (!port.empty()) out += ":" + port;
    out += path;
    if (query) out += "?" + *query;
    if (fragment) out += "#" + *fragment;
    return out;
  }

  bool operator==(const Url&) const = default;
};

namespace detail {

constexpr bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
constexpr bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr bool is_forbidden_url_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u <= 0x20 || u == 0x7F || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' ||
         c == '|' || c == '\\' || c == '^' || c == '`';
}

}  // namespace detail

inline std::optional<Url> parse_url(std::string_view s) {
  using detail::is_alpha;
  using detail::is_digit;
  if (s.empty() || !is_alpha(s[0])) return std::nullopt;
  for (char c : s) {
    if (detail::is_forbidden_url_char(c)) return std::nullopt;
  }
  std::size_t i = 1;
  while (i < s.size() && (is_alpha(s[i]) || is_digit(s[i]) || s[i] == '+' || s[i] == '-' || s[i] == '.')) ++i;
  if (s.substr(i, 3) != "://") return std::nullopt;

  Url url;
  url.scheme = text::to_lower_ascii(s.substr(0, i));
  std::size_t pos = i + 3;
  const std::size_t auth_end = std::min(s.find_first_of("/?#", pos), s.size());
  std::string_view authority = s.substr(pos, auth_end - pos);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    url.userinfo = std::string(authority.substr(0, at));
    authority.remove_prefix(at + 1);
  }
  std::string_view host = authority;
  if (!authority.empty() && authority[0] == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(0, close + 1);
    const auto rest = authority.substr(close + 1);
    if (!rest.empty()) {
      if (rest[0] != ':') return std::nullopt;
      url.port = std::string(rest.substr(1));
    }
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    url.port = std::string(authority.substr(colon + 1));
  }
  if (host.empty()) return std::nullopt;
  if (host[0] != '[') {
    for (char c : host) {
      if (!(is_alpha(c) || is_digit(c) || c == '-' || c == '.' || c == '_' || c == '%' ||
            static_cast<unsigned char>(c) >= 0x80)) {
        return std::nullopt;
      }
    }
  }
  for (char c : url.port) {
    if (!is_digit(c)) return std::nullopt;
  }
  url.host = std::string(host);

  pos = auth_end;
  const std::size_t path_end = std::min(s.find_first_of("?#", pos), s.size());
  url.path = std::string(s.substr(pos, path_end - pos));
  pos = path_end;
  if (pos < s.size() && s[pos] == '?') {
    const std::size_t q_end = std::min(s.find('#', pos), s.size());
    url.query = std::string(s.substr(pos + 1, q_end - pos - 1));
    pos = q_end;
  }
  if (pos < s.size() && s[pos] == '#') url.fragment = std::string(s.substr(pos + 1));
  return url;
}

inline bool is_absolute_url(std::string_view s) { return parse_url(s).has_value(); }

inline bool is_http_url(std::string_view s) {
  const auto u = parse_url(s);
  return u && (u->scheme == "http" || u->scheme == "https");
}

inline Url parse_url_or_throw(std::string_view s) {
  auto u = parse_url(s);
  if (!u) throw Error(ErrorKind::InvalidUrl, "not an absolute URL: " + std::string(s));
  return *u;
}

/// Cache key form: lowercase scheme and host, fragment dropped, query
/// parameters sorted by key (stable, so repeated keys keep their order).
inline std::string normalize_url(std::string_view s) {
  Url u = parse_url_or_throw(s);
  u.host = text::to_lower_ascii(u.host);
  u.fragment.reset();
  if (u.query) {
    std::vector<std::string_view> params;
    std::string_view q = *u.query;
    while (!q.empty()) {
      const auto amp = q.find('&');
      const auto part = q.substr(0, amp);
      if (!part.empty()) params.push_back(part);
      if (amp == std::string_view::npos) break;
      q.remove_prefix(amp + 1);
    }
    auto key_of = [](std::string_view p) { return p.substr(0, p.find('=')); };
    std::stable_sort(params.begin(), params.end(),
                     [&](std::string_view a, std::string_view b) { return key_of(a) < key_of(b); });
    std::string joined;
    for (auto p : params) {
      if (!joined.empty()) joined += '&';
      joined.append(p);
    }
    u.query = joined;
  }
  return u.str();
}

/// Resolves a redirect target against the URL that produced it.
inline std::string resolve_url(const Url& base, std::string_view ref) {
  if (parse_url(ref)) return std::string(ref);
  if (ref.starts_with("//")) return base.scheme + ":" + std::string(ref);
  if (ref.starts_with("/")) return base.origin() + std::string(ref);
  if (ref.starts_with("?")) return base.origin() + (base.path.empty() ? "/" : base.path) + std::string(ref);
  std::string dir = base.path;
  const auto slash = dir.rfind('/');
  dir = slash == std::string::npos ? "/" : dir.substr(0, slash + 1);
  return base.origin() + dir + std::string(ref);
}

}  // namespace ailp
