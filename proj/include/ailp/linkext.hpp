#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ailp/error.hpp"
#include "ailp/text.hpp"
#include "ailp/url.hpp"

namespace ailp {

enum class Location { Description, Comment, ReviewComment };
enum class LinkKind { Internal, External };

constexpr std::string_view to_string(Location l) {
  switch (l) {
    case Location::Description: return "description";
    case Location::Comment: return "comment";
    case Location::ReviewComment: return "review_comment";
  }
  return "description";
}

inline std::optional<Location> location_from_string(std::string_view s) {
  if (s == "description") return Location::Description;
  if (s == "comment") return Location::Comment;
  if (s == "review_comment") return Location::ReviewComment;
  return std::nullopt;
}

constexpr std::string_view to_string(LinkKind k) { return k == LinkKind::Internal ? "internal" : "external"; }

/// Half-open byte range [start, end) into the source text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// One inline Markdown hyperlink `[label](url)` found in a PR body.
struct LinkOccurrence {
  std::string url;
  std::string label;
  Location location = Location::Description;
  std::string container_id;  // empty for Description
  Span char_span;
  LinkKind link_kind = LinkKind::External;
  std::size_t label_word_count = 0;

  bool operator==(const LinkOccurrence&) const = default;
};

namespace linkext_detail {

using Ranges = std::vector<Span>;

inline bool is_escaped(std::string_view s, std::size_t pos) {
  std::size_t backslashes = 0;
  while (pos > 0 && s[pos - 1] == '\\') {
    ++backslashes;
    --pos;
  }
  return backslashes % 2 == 1;
}

inline std::size_t line_end(std::string_view s, std::size_t pos) {
  const auto nl = s.find('\n', pos);
  return nl == std::string_view::npos ? s.size() : nl + 1;
}

/// If the line starting at `pos` opens or closes a fence, returns the fence
/// character and run length.
inline std::optional<std::pair<char, std::size_t>> fence_at(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  std::size_t indent = 0;
  while (i < s.size() && s[i] == ' ' && indent < 4) {
    ++i;
    ++indent;
  }
  if (indent > 3 || i >= s.size() || (s[i] != '`' && s[i] != '~')) return std::nullopt;
  const char ch = s[i];
  std::size_t run = 0;
  while (i < s.size() && s[i] == ch) {
    ++i;
    ++run;
  }
  if (run < 3) return std::nullopt;
  if (ch == '`') {
    const auto end = line_end(s, i);
    if (s.substr(i, end - i).find('`') != std::string_view::npos) return std::nullopt;
  }
  return std::pair{ch, run};
}

inline bool is_blank_line(std::string_view s, std::size_t pos) {
  const auto end = line_end(s, pos);
  for (std::size_t i = pos; i < end; ++i) {
    if (s[i] != ' ' && s[i] != '\t' && s[i] != '\r' && s[i] != '\n') return false;
  }
  return true;
}

/// A closing fence carries no info string: only the fence run and whitespace.
inline bool closes_fence(std::string_view s, std::size_t pos, std::size_t next, char ch) {
  std::size_t j = pos;
  while (j < next && s[j] == ' ') ++j;
  while (j < next && s[j] == ch) ++j;
  return text::trim(s.substr(j, next - j)).empty();
}

inline Ranges fenced_blocks(std::string_view s) {
  Ranges out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto open = fence_at(s, pos);
    if (!open) {
      pos = line_end(s, pos);
      continue;
    }
    const std::size_t start = pos;
    pos = line_end(s, pos);
    std::size_t end = s.size();
    while (pos < s.size()) {
      const auto close = fence_at(s, pos);
      const auto next = line_end(s, pos);
      if (close && close->first == open->first && close->second >= open->second &&
          closes_fence(s, pos, next, open->first)) {
        end = next;
        pos = next;
        break;
      }
      pos = next;
    }
    out.push_back({start, end});
    if (end == s.size()) break;
  }
  return out;
}

inline const Span* containing(const Ranges& ranges, std::size_t pos) {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), pos,
                             [](std::size_t p, const Span& r) { return p < r.start; });
  if (it == ranges.begin()) return nullptr;
  --it;
  return pos < it->end ? &*it : nullptr;
}

/// Fenced blocks plus inline code spans, sorted and non-overlapping.
inline Ranges code_ranges(std::string_view s) {
  const Ranges fences = fenced_blocks(s);
  Ranges spans;
  std::size_t i = 0;
  while (i < s.size()) {
    if (const Span* f = containing(fences, i)) {
      i = f->end;
      continue;
    }
    if (s[i] != '`' || is_escaped(s, i)) {
      ++i;
      continue;
    }
    std::size_t run = 0;
    const std::size_t open = i;
    while (i < s.size() && s[i] == '`') {
      ++i;
      ++run;
    }
    // Search for a closing run of identical length within the paragraph.
    std::size_t j = i;
    std::optional<std::size_t> close_end;
    while (j < s.size()) {
      if (containing(fences, j)) break;
      if (s[j] == '\n' && j + 1 < s.size() && is_blank_line(s, j + 1)) break;
      if (s[j] == '`') {
        std::size_t k = j;
        while (k < s.size() && s[k] == '`') ++k;
        if (k - j == run) {
          close_end = k;
          break;
        }
        j = k;
        continue;
      }
      ++j;
    }
    if (close_end) {
      spans.push_back({open, *close_end});
      i = *close_end;
    }
  }
  Ranges all;
  std::merge(fences.begin(), fences.end(), spans.begin(), spans.end(), std::back_inserter(all),
             [](const Span& a, const Span& b) { return a.start < b.start; });
  return all;
}

constexpr bool is_ascii_punct(char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

inline std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && is_ascii_punct(s[i + 1])) ++i;
    out += s[i];
  }
  return out;
}

struct Parsed {
  std::string label;
  std::string url;
  std::size_t end = 0;
};

inline void skip_inline_space(std::string_view s, std::size_t& i) {
  bool newline_seen = false;
  while (i < s.size()) {
    if (s[i] == ' ' || s[i] == '\t' || s[i] == '\r') {
      ++i;
    } else if (s[i] == '\n' && !newline_seen) {
      newline_seen = true;
      ++i;
    } else {
      break;
    }
  }
}

/// Parses `[label](destination "title")` with `open` at the '['.
inline std::optional<Parsed> parse_inline_link(std::string_view s, std::size_t open, const Ranges& code) {
  std::size_t i = open + 1;
  int depth = 1;
  std::size_t label_end = std::string_view::npos;
  while (i < s.size()) {
    if (const Span* c = containing(code, i)) {
      i = c->end;
      continue;
    }
    const char c = s[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (c == '\n' && i + 1 < s.size() && is_blank_line(s, i + 1)) return std::nullopt;
    if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) {
        label_end = i;
        break;
      }
    }
    ++i;
  }
  if (label_end == std::string_view::npos) return std::nullopt;
  i = label_end + 1;
  if (i >= s.size() || s[i] != '(') return std::nullopt;
  ++i;
  skip_inline_space(s, i);

  std::string_view dest;
  if (i < s.size() && s[i] == '<') {
    const std::size_t start = ++i;
    while (i < s.size() && s[i] != '>' && s[i] != '\n' && s[i] != '<') {
      if (s[i] == '\\') ++i;
      ++i;
    }
    if (i >= s.size() || s[i] != '>') return std::nullopt;
    dest = s.substr(start, i - start);
    ++i;
  } else {
    const std::size_t start = i;
    int parens = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7F) break;
      if (c == '\\' && i + 1 < s.size() && is_ascii_punct(s[i + 1])) {
        i += 2;
        continue;
      }
      if (c == '(') {
        ++parens;
      } else if (c == ')') {
        if (parens == 0) break;
        --parens;
      }
      ++i;
    }
    if (parens != 0) return std::nullopt;
    dest = s.substr(start, i - start);
  }

  const std::size_t before_title = i;
  skip_inline_space(s, i);
  if (i < s.size() && i > before_title && (s[i] == '"' || s[i] == '\'' || s[i] == '(')) {
    const char close = s[i] == '(' ? ')' : s[i];
    ++i;
    while (i < s.size() && s[i] != close) {
      if (s[i] == '\\') ++i;
      ++i;
    }
    if (i >= s.size()) return std::nullopt;
    ++i;
    skip_inline_space(s, i);
  }
  if (i >= s.size() || s[i] != ')') return std::nullopt;

  std::string url = unescape(dest);
  if (!is_absolute_url(url)) return std::nullopt;
  return Parsed{std::string(text::trim(s.substr(open + 1, label_end - open - 1))), std::move(url), i + 1};
}

}  // namespace linkext_detail

/// Every non-overlapping inline Markdown link in document order.
///
/// Links inside fenced code blocks and inline code spans are skipped, as are
/// images, reference-style links, autolinks, and links whose destination is
/// not an absolute URL. Malformed candidates are skipped silently.
inline std::vector<LinkOccurrence> extract_links(std::string_view source, Location location,
                                                 std::string_view container_id) {
  using namespace linkext_detail;
  std::vector<LinkOccurrence> out;
  if (source.empty()) return out;
  const Ranges code = code_ranges(source);
  std::size_t i = 0;
  while (i < source.size()) {
    if (const Span* c = containing(code, i)) {
      i = c->end;
      continue;
    }
    if (source[i] != '[' || is_escaped(source, i)) {
      ++i;
      continue;
    }
    const auto parsed = parse_inline_link(source, i, code);
    if (!parsed) {
      ++i;
      continue;
    }
    const bool image = i > 0 && source[i - 1] == '!' && !is_escaped(source, i - 1);
    if (!image) {
      LinkOccurrence occ;
      occ.url = parsed->url;
      occ.label = parsed->label;
      occ.location = location;
      occ.container_id = std::string(container_id);
      occ.char_span = {i, parsed->end};
      occ.label_word_count = text::word_count(occ.label);
      out.push_back(std::move(occ));
    }
    i = parsed->end;
  }
  return out;
}

inline std::vector<LinkOccurrence> filter_by_label_length(std::vector<LinkOccurrence> links,
                                                          std::size_t min_words = 8) {
  if (min_words < 1) throw Error(ErrorKind::InvalidArgument, "min_words must be >= 1");
  std::erase_if(links, [&](const LinkOccurrence& l) { return l.label_word_count < min_words; });
  return links;
}

/// Internal iff the link points at github.com under /owner/name (the
/// repository itself or anything below it). Throws InvalidUrl for
/// unparsable input so the caller can drop the occurrence.
inline LinkKind classify_link(std::string_view url, std::string_view repo_full_name) {
  const Url u = parse_url_or_throw(url);
  const auto host = text::to_lower_ascii(u.host);
  if (host != "github.com" && host != "www.github.com") return LinkKind::External;
  const std::string prefix = "/" + std::string(repo_full_name);
  if (text::iequals_ascii(u.path, prefix) ||
      text::starts_with_icase(u.path, prefix + "/")) {
    return LinkKind::Internal;
  }
  return LinkKind::External;
}

inline void to_json(nlohmann::json& j, const LinkOccurrence& o) {
  j = nlohmann::json{{"url", o.url},
                     {"label", o.label},
                     {"location", to_string(o.location)},
                     {"container_id", o.container_id},
                     {"span", {o.char_span.start, o.char_span.end}},
                     {"kind", to_string(o.link_kind)},
                     {"label_words", o.label_word_count}};
}

inline void from_json(const nlohmann::json& j, LinkOccurrence& o) {
  o.url = j.at("url").get<std::string>();
  o.label = j.at("label").get<std::string>();
  const auto loc = location_from_string(j.at("location").get<std::string>());
  if (!loc) throw Error(ErrorKind::Parse, "unknown location: " + j.at("location").dump());
  o.location = *loc;
  o.container_id = j.value("container_id", std::string{});
  if (j.contains("span")) {
    o.char_span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
  }
  o.link_kind = j.value("kind", std::string{"external"}) == "internal" ? LinkKind::Internal : LinkKind::External;
  o.label_word_count = j.contains("label_words") ? j.at("label_words").get<std::size_t>() : text::word_count(o.label);
}

}  // namespace ailp
