#pragma once

#include <random>
#include <string>
#include <utility>

namespace ailp_test {

/// Lowercase pseudo-words from `letters`, joined by single spaces.
inline std::string random_words(std::mt19937_64& rng, std::size_t count, const std::string& letters,
                                std::size_t min_len = 2, std::size_t max_len = 8) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    const auto n = len(rng);
    for (std::size_t k = 0; k < n; ++k) out += letters[pick(rng)];
  }
  return out;
}

/// A random text of between min_words and max_words words, with some
/// capitalization and sentence punctuation mixed in.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_words, std::size_t min_words = 0) {
  std::uniform_int_distribution<std::size_t> count(min_words, max_words);
  std::string words = random_words(rng, count(rng), "abcdefghijklmnopqrstuvwxyz");
  std::bernoulli_distribution coin(0.2);
  std::string out;
  bool start = true;
  for (char c : words) {
    if (start && c != ' ' && coin(rng)) c = static_cast<char>(c - 'a' + 'A');
    if (c == ' ' && coin(rng)) out += coin(rng) ? '.' : ',';
    out += c;
    start = c == ' ';
  }
  return out;
}

/// Two non-empty texts with no token in common: one drawn from the first
/// half of the alphabet, the other from the second.
inline std::pair<std::string, std::string> disjoint_pair(std::mt19937_64& rng, std::size_t max_words) {
  std::uniform_int_distribution<std::size_t> count(1, max_words);
  return {random_words(rng, count(rng), "abcdefghijklm"), random_words(rng, count(rng), "nopqrstuvwxyz")};
}

}  // namespace ailp_test
