#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "ailp/text.hpp"

namespace ailp::metrics {

/// Lowercased word tokens; never empty, never containing whitespace.
struct TokenSequence {
  std::vector<std::string> tokens;

  static TokenSequence of(std::initializer_list<std::string_view> words) {
    TokenSequence s;
    for (auto w : words) s.tokens.emplace_back(w);
    return s;
  }

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }
  bool operator==(const TokenSequence&) const = default;
};

/// Strips leading and trailing punctuation code points; inner punctuation stays.
inline std::string_view strip_punct(std::string_view word) {
  std::size_t begin = 0;
  while (begin < word.size()) {
    std::size_t p = begin;
    if (!text::is_punct(text::next_code_point(word, p))) break;
    begin = p;
  }
  std::size_t end = word.size();
  while (end > begin) {
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(word[start]) & 0xC0) == 0x80) --start;
    std::size_t p = start;
    if (!text::is_punct(text::next_code_point(word, p))) break;
    end = start;
  }
  return word.substr(begin, end - begin);
}

inline TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  for (auto w : text::split_whitespace(text)) {
    const auto core = strip_punct(w);
    if (!core.empty()) out.tokens.push_back(text::to_lower_ascii(core));
  }
  return out;
}

}  // namespace ailp::metrics
