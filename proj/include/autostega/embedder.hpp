#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "autostega/error.hpp"
#include "autostega/hash.hpp"
#include "autostega/lm.hpp"

namespace autostega {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual size_t dim() const = 0;
  virtual std::string provider_tag() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Deterministic hashed term-frequency embedding, L2-normalized. Desk-scale
// stand-in for a sentence-embedding service with the same interface.
class HashedTfEmbedder : public Embedder {
 public:
  explicit HashedTfEmbedder(size_t dim = 256) : dim_(dim) {
    if (dim_ == 0) throw config_error("embedding dimension must be > 0");
  }

  size_t dim() const override { return dim_; }
  std::string provider_tag() const override {
    return "hashed-tf-" + std::to_string(dim_);
  }

  std::vector<double> embed(std::string_view text) const override {
    std::vector<double> v(dim_, 0.0);
    for (const auto& word : Vocabulary::split_words(text)) {
      v[fnv1a64(word) % dim_] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    return v;
  }

 private:
  size_t dim_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw data_error("embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace autostega
