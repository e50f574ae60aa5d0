#pragma once

#include <algorithm>
#include <string>
#include <string_view>

#include "ailp/error.hpp"
#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

constexpr bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

/// Vowel-group syllable estimate over the word's ASCII letters. A trailing
/// 'e' is silent unless the word ends in consonant + "le". At least 1.
inline std::size_t count_syllables(std::string_view word) {
  std::string letters;
  for (char c : word) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') letters += c;
  }
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : letters) {
    const bool v = is_vowel_letter(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = letters.size();
  if (n > 0 && letters[n - 1] == 'e') {
    const bool consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel_letter(letters[n - 3]);
    if (!consonant_le && groups > 0) --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

/// Sentences = runs of '.', '!' or '?', at least one.
inline std::size_t count_sentences(std::string_view text) {
  std::size_t runs = 0;
  bool in_run = false;
  for (char c : text) {
    const bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && !in_run) ++runs;
    in_run = terminal;
  }
  return std::max<std::size_t>(runs, 1);
}

/// 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words); 0 for text
/// without words.
inline double flesch_reading_ease(std::string_view text) {
  const auto words = tokenize(text);
  if (words.empty()) return 0.0;
  std::size_t syllables = 0;
  for (const auto& w : words.tokens) syllables += count_syllables(w);
  const auto n_words = static_cast<double>(words.size());
  const auto n_sentences = static_cast<double>(count_sentences(text));
  return 206.835 - 1.015 * (n_words / n_sentences) - 84.6 * (static_cast<double>(syllables) / n_words);
}

/// Summary length over body length, in words.
inline double compression_ratio(std::string_view summary_text, std::string_view body_text) {
  const auto body_words = tokenize(body_text).size();
  if (body_words == 0) throw Error(ErrorKind::Metric, "compression ratio undefined for an empty body");
  return static_cast<double>(tokenize(summary_text).size()) / static_cast<double>(body_words);
}

}  // namespace ailp::metrics
