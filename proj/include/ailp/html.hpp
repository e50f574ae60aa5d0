#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ailp/text.hpp"

namespace ailp::html {

struct Attribute {
  std::string name;  // lowercased
  std::string value;  // entity-decoded
};

struct Token {
  enum class Type { Text, StartTag, EndTag };
  Type type = Type::Text;
  std::string name;  // lowercased tag name
  std::string data;  // raw text for Text tokens
  std::vector<Attribute> attributes;
  bool self_closing = false;

  std::string_view attr(std::string_view key) const {
    for (const auto& a : attributes) {
      if (a.name == key) return a.value;
    }
    return {};
  }
  bool has_attr(std::string_view key) const {
    return std::any_of(attributes.begin(), attributes.end(), [&](const Attribute& a) { return a.name == key; });
  }
};

namespace detail {

struct NamedEntity {
  std::string_view name;
  char32_t cp;
};

inline constexpr std::array<NamedEntity, 32> kEntities{{
    {"amp", '&'},     {"lt", '<'},       {"gt", '>'},       {"quot", '"'},      {"apos", '\''},
    {"nbsp", 0xA0},   {"copy", 0xA9},    {"reg", 0xAE},     {"trade", 0x2122},  {"hellip", 0x2026},
    {"mdash", 0x2014}, {"ndash", 0x2013}, {"lsquo", 0x2018}, {"rsquo", 0x2019},  {"ldquo", 0x201C},
    {"rdquo", 0x201D}, {"middot", 0xB7},  {"bull", 0x2022},  {"laquo", 0xAB},    {"raquo", 0xBB},
    {"times", 0xD7},  {"deg", 0xB0},     {"euro", 0x20AC},  {"pound", 0xA3},    {"yen", 0xA5},
    {"cent", 0xA2},   {"sect", 0xA7},    {"para", 0xB6},    {"rarr", 0x2192},   {"larr", 0x2190},
    {"shy", 0xAD},    {"zwj", 0x200D},
}};

constexpr bool is_tag_start_char(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

constexpr bool is_name_char(char c) {
  return is_tag_start_char(c) || (c >= '0' && c <= '9') || c == '-' || c == ':' || c == '_' || c == '.';
}

constexpr bool is_html_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

inline bool is_raw_text_element(std::string_view name) {
  return name == "script" || name == "style" || name == "textarea" || name == "title" || name == "xmp";
}

}  // namespace detail

/// Decodes named and numeric character references terminated by ';'.
/// Anything that does not form a known reference is kept literally.
inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += s[i++];
      continue;
    }
    const std::string_view ref = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    if (ref.size() > 1 && ref[0] == '#') {
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const std::string_view digits = ref.substr(hex ? 2 : 1);
      bool ok = !digits.empty();
      std::uint32_t value = 0;
      for (char c : digits) {
        int d = -1;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        if (d < 0 || value > 0x10FFFF) {
          ok = false;
          break;
        }
        value = value * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      }
      if (ok && value > 0 && value <= 0x10FFFF && !(value >= 0xD800 && value <= 0xDFFF)) cp = value;
    } else {
      for (const auto& e : detail::kEntities) {
        if (e.name == ref) {
          cp = e.cp;
          break;
        }
      }
    }
    if (cp == 0) {
      out += s[i++];
      continue;
    }
    text::append_utf8(out, cp);
    i = semi + 1;
  }
  return out;
}

/// Lenient tokenizer: never fails; unterminated constructs consume the rest
/// of the input. Comments, doctypes and processing instructions are dropped.
inline std::vector<Token> tokenize(std::string_view s) {
  using namespace detail;
  std::vector<Token> out;
  std::size_t i = 0;
  std::string pending_text;
  auto flush_text = [&] {
    if (!pending_text.empty()) {
      out.push_back(Token{Token::Type::Text, {}, std::move(pending_text), {}, false});
      pending_text.clear();
    }
  };

  while (i < s.size()) {
    if (s[i] != '<') {
      pending_text += s[i++];
      continue;
    }
    if (s.substr(i, 4) == "<!--") {
      const auto end = s.find("-->", i + 4);
      i = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
      const auto end = s.find('>', i);
      i = end == std::string_view::npos ? s.size() : end + 1;
      continue;
    }
    const bool closing = i + 1 < s.size() && s[i + 1] == '/';
    const std::size_t name_start = i + (closing ? 2 : 1);
    if (name_start >= s.size() || !is_tag_start_char(s[name_start])) {
      if (closing) {
        // "</" followed by garbage is a bogus comment.
        const auto end = s.find('>', i);
        i = end == std::string_view::npos ? s.size() : end + 1;
      } else {
        pending_text += s[i++];
      }
      continue;
    }
    flush_text();
    std::size_t j = name_start;
    while (j < s.size() && is_name_char(s[j])) ++j;
    Token tag;
    tag.type = closing ? Token::Type::EndTag : Token::Type::StartTag;
    tag.name = text::to_lower_ascii(s.substr(name_start, j - name_start));

    // Attributes.
    while (j < s.size() && s[j] != '>') {
      if (is_html_space(s[j])) {
        ++j;
        continue;
      }
      if (s[j] == '/') {
        if (j + 1 < s.size() && s[j + 1] == '>') tag.self_closing = true;
        ++j;
        continue;
      }
      const std::size_t an_start = j;
      while (j < s.size() && !is_html_space(s[j]) && s[j] != '=' && s[j] != '>' &&
             !(s[j] == '/' && j + 1 < s.size() && s[j + 1] == '>')) {
        ++j;
      }
      Attribute attr{text::to_lower_ascii(s.substr(an_start, j - an_start)), {}};
      while (j < s.size() && is_html_space(s[j])) ++j;
      if (j < s.size() && s[j] == '=') {
        ++j;
        while (j < s.size() && is_html_space(s[j])) ++j;
        if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
          const char q = s[j];
          const auto end = s.find(q, j + 1);
          const std::size_t stop = end == std::string_view::npos ? s.size() : end;
          attr.value = decode_entities(s.substr(j + 1, stop - j - 1));
          j = stop == s.size() ? stop : stop + 1;
        } else {
          const std::size_t v_start = j;
          while (j < s.size() && !is_html_space(s[j]) && s[j] != '>') ++j;
          attr.value = decode_entities(s.substr(v_start, j - v_start));
        }
      }
      if (!attr.name.empty() && !closing) tag.attributes.push_back(std::move(attr));
    }
    i = j < s.size() ? j + 1 : s.size();
    const bool raw = !closing && !tag.self_closing && is_raw_text_element(tag.name);
    const std::string name = tag.name;
    out.push_back(std::move(tag));

    if (raw) {
      // Raw text runs to the matching end tag, case-insensitively.
      std::size_t k = i;
      std::size_t end = s.size();
      while ((k = s.find("</", k)) != std::string_view::npos) {
        if (text::starts_with_icase(s.substr(k + 2), name) &&
            (k + 2 + name.size() >= s.size() || !is_name_char(s[k + 2 + name.size()]))) {
          end = k;
          break;
        }
        k += 2;
      }
      if (end > i) out.push_back(Token{Token::Type::Text, {}, std::string(s.substr(i, end - i)), {}, false});
      if (end == s.size()) {
        i = end;
      } else {
        const auto gt = s.find('>', end);
        out.push_back(Token{Token::Type::EndTag, name, {}, {}, false});
        i = gt == std::string_view::npos ? s.size() : gt + 1;
      }
    }
  }
  flush_text();
  return out;
}

struct Metadata {
  std::string title;
  std::string meta_description;
  std::string og_title;
  std::string og_description;
};

/// First `<title>`, `<meta name="description">`, and Open Graph title and
/// description. Values are entity-decoded with whitespace collapsed.
inline Metadata extract_metadata(std::string_view html) {
  Metadata m;
  bool have_title = false;
  const auto tokens = tokenize(html);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.type != Token::Type::StartTag) continue;
    if (t.name == "title" && !have_title) {
      have_title = true;
      if (i + 1 < tokens.size() && tokens[i + 1].type == Token::Type::Text) {
        m.title = text::collapse_whitespace(decode_entities(tokens[i + 1].data));
      }
    } else if (t.name == "meta") {
      const std::string name = text::to_lower_ascii(t.attr("name"));
      const std::string property = text::to_lower_ascii(t.attr("property"));
      const std::string content = text::collapse_whitespace(t.attr("content"));
      auto set_once = [&](std::string& field) {
        if (field.empty()) field = content;
      };
      if (name == "description") set_once(m.meta_description);
      if (property == "og:title" || name == "og:title") set_once(m.og_title);
      if (property == "og:description" || name == "og:description") set_once(m.og_description);
    }
  }
  return m;
}

namespace detail {

inline bool is_removed_subtree(std::string_view name) {
  static constexpr std::array<std::string_view, 10> kRemoved{"script", "style",    "nav",  "header", "footer",
                                                              "aside",  "noscript", "template", "head", "title"};
  return std::find(kRemoved.begin(), kRemoved.end(), name) != kRemoved.end();
}

inline bool is_block(std::string_view name) {
  static constexpr std::array<std::string_view, 41> kBlocks{
      "address", "article", "blockquote", "body",     "br",     "caption", "dd",      "details", "dialog",
      "div",     "dl",      "dt",         "fieldset", "figcaption", "figure", "form",  "h1",      "h2",
      "h3",      "h4",      "h5",         "h6",       "hr",     "html",    "li",      "main",    "ol",
      "p",       "pre",     "section",    "summary",  "table",  "tbody",   "td",      "tfoot",   "th",
      "thead",   "tr",      "ul",         "option",   "legend"};
  return std::find(kBlocks.begin(), kBlocks.end(), name) != kBlocks.end();
}

inline bool is_void(std::string_view name) {
  static constexpr std::array<std::string_view, 14> kVoid{"area", "base", "br",   "col",   "embed", "hr",    "img",
                                                           "input", "link", "meta", "param", "source", "track", "wbr"};
  return std::find(kVoid.begin(), kVoid.end(), name) != kVoid.end();
}

}  // namespace detail

/// Visible text of a document.
///
/// Subtrees of script, style, nav, header, footer, aside, noscript, template,
/// head and title are dropped. Block elements and source line breaks end a
/// line; whitespace inside a line collapses to one space; blank lines are
/// dropped. A '<' that would read as markup is followed by a space, so the
/// result never contains a tag and re-extracting it is a no-op.
inline std::string extract_body_text(std::string_view html) {
  const auto tokens = tokenize(html);
  std::vector<std::string> skip_stack;
  std::string raw;
  for (const auto& t : tokens) {
    switch (t.type) {
      case Token::Type::StartTag:
        if (!skip_stack.empty()) {
          if (t.name == skip_stack.back() && !t.self_closing) skip_stack.push_back(t.name);
          break;
        }
        if (detail::is_removed_subtree(t.name) && !t.self_closing && !detail::is_void(t.name)) {
          skip_stack.push_back(t.name);
        } else if (detail::is_block(t.name)) {
          raw += '\n';
        }
        break;
      case Token::Type::EndTag:
        if (!skip_stack.empty()) {
          if (t.name == skip_stack.back()) skip_stack.pop_back();
          break;
        }
        if (detail::is_block(t.name)) raw += '\n';
        break;
      case Token::Type::Text:
        if (skip_stack.empty()) raw += decode_entities(t.data);
        break;
    }
  }

  std::string out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string::npos) nl = raw.size();
    const std::string line = text::collapse_whitespace(std::string_view(raw).substr(pos, nl - pos));
    if (!line.empty()) {
      if (!out.empty()) out += '\n';
      out += line;
    }
    pos = nl + 1;
  }

  std::string safe;
  safe.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    safe += out[i];
    if (out[i] == '<' && i + 1 < out.size()) {
      const char n = out[i + 1];
      if (detail::is_tag_start_char(n) || n == '/' || n == '!' || n == '?') safe += ' ';
    }
  }
  return safe;
}

}  // namespace ailp::html
