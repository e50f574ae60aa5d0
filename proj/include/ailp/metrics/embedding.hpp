#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ailp/hash.hpp"
#include "ailp/metrics/tokenize.hpp"

namespace ailp::metrics {

using Vector = std::vector<double>;

/// Source of token-level and text-level vectors for the embedding metrics.
/// The same text must always map to the same vectors.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<Vector> embed_tokens(std::string_view text) const = 0;
  virtual Vector embed_text(std::string_view text) const = 0;
  /// Whether concurrent calls on one instance are allowed.
  virtual bool concurrent_safe() const = 0;
};

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Offline provider: each token maps to a pseudo-random vector derived from
/// a seeded hash of the token; a text's vector is the mean of its token
/// vectors. Stateless, so safe for concurrent use.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::uint64_t seed = 0x5eedULL, std::size_t dimension = 16)
      : seed_(seed), dimension_(dimension == 0 ? 1 : dimension) {}

  std::size_t dimension() const override { return dimension_; }

  Vector token_vector(std::string_view token) const {
    Vector v(dimension_);
    const std::uint64_t base = fnv1a64(token) ^ splitmix64(seed_);
    for (std::size_t i = 0; i < dimension_; ++i) {
      const std::uint64_t bits = splitmix64(base + i);
      // Uniform in [-1, 1).
      v[i] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    }
    return v;
  }

  std::vector<Vector> embed_tokens(std::string_view text) const override {
    std::vector<Vector> out;
    for (const auto& t : tokenize(text).tokens) out.push_back(token_vector(t));
    return out;
  }

  Vector embed_text(std::string_view text) const override {
    Vector mean(dimension_, 0.0);
    const auto tokens = embed_tokens(text);
    if (tokens.empty()) return mean;
    for (const auto& v : tokens) {
      for (std::size_t i = 0; i < dimension_; ++i) mean[i] += v[i];
    }
    for (auto& x : mean) x /= static_cast<double>(tokens.size());
    return mean;
  }

  bool concurrent_safe() const override { return true; }

 private:
  std::uint64_t seed_;
  std::size_t dimension_;
};

}  // namespace ailp::metrics
