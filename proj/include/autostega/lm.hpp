#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "autostega/error.hpp"
#include "autostega/hash.hpp"

namespace autostega {

using TokenId = uint32_t;

// Sentinel returned by tokenize() for words outside the vocabulary. Not a
// member of the distribution support; feeding it to a model is an input error.
inline constexpr TokenId kUnknownToken = 0xFFFFFFFFu;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (size_t i = 0; i < tokens_.size(); ++i) {
      auto [it, fresh] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
      if (!fresh) throw config_error("duplicate token in vocabulary: " + tokens_[i]);
    }
  }

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenId id_of(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    return it == index_.end() ? kUnknownToken : it->second;
  }

  // Whitespace-delimited tokenizer; out-of-vocabulary words map to the
  // unknown sentinel.
  std::vector<TokenId> tokenize(std::string_view text) const {
    std::vector<TokenId> out;
    for (const auto& w : split_words(text)) out.push_back(id_of(w));
    return out;
  }

  std::string detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += ids[i] == kUnknownToken ? std::string("<unk>") : token(ids[i]);
    }
    return out;
  }

  static std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenDistribution {
  uint64_t context_hash = context_hash_init();
  std::vector<double> probs;  // dense over the vocabulary, sums to 1
  double entropy_bits = 0.0;

  void recompute_entropy() {
    double h = 0.0;
    for (double p : probs) {
      if (p > 0.0) h -= p * std::log2(p);
    }
    entropy_bits = h;
  }
};

// Pluggable source of conditional next-token distributions. Implementations
// must be pure functions of (model state, context).
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual TokenDistribution next_token_distribution(std::span<const TokenId> context) const = 0;
};

// Additive-smoothed n-gram model. "order" is the context length; contexts of
// every length 0..order are counted so short prefixes stay well-defined.
class NgramModel : public LanguageModel {
 public:
  static NgramModel train(std::string_view corpus, int order, double alpha) {
    if (order < 1 || order > 4) throw config_error("n-gram order must be in [1,4]");
    if (!(alpha > 0.0)) throw config_error("smoothing alpha must be > 0");
    auto words = Vocabulary::split_words(corpus);
    if (words.empty()) throw config_error("empty training corpus");

    std::vector<std::string> uniq = words;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    NgramModel m;
    m.vocab_ = Vocabulary(std::move(uniq));
    m.order_ = order;
    m.alpha_ = alpha;

    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(m.vocab_.id_of(w));

    for (size_t i = 0; i < ids.size(); ++i) {
      for (int len = 0; len <= order && static_cast<size_t>(len) <= i; ++len) {
        std::string key = pack_context({ids.data() + i - len, static_cast<size_t>(len)});
        auto& bucket = m.counts_[key];
        bucket.per_token[ids[i]] += 1;
        bucket.total += 1;
      }
    }
    return m;
  }

  // Zero-count model: every context yields the uniform distribution.
  static NgramModel uniform(std::vector<std::string> tokens, int order = 1) {
    if (tokens.empty()) throw config_error("uniform model needs a nonempty vocabulary");
    NgramModel m;
    m.vocab_ = Vocabulary(std::move(tokens));
    m.order_ = order;
    m.alpha_ = 1.0;
    return m;
  }

  const Vocabulary& vocab() const override { return vocab_; }
  int order() const { return order_; }
  double alpha() const { return alpha_; }

  TokenDistribution next_token_distribution(std::span<const TokenId> context) const override {
    for (TokenId id : context) {
      if (id >= vocab_.size()) throw data_error("unknown token id in context");
    }
    size_t len = std::min<size_t>(context.size(), static_cast<size_t>(order_));
    std::string key = pack_context(context.subspan(context.size() - len, len));

    const size_t v = vocab_.size();
    TokenDistribution dist;
    dist.probs.assign(v, 0.0);

    auto it = counts_.find(key);
    uint64_t total = it == counts_.end() ? 0 : it->second.total;
    double denom = static_cast<double>(total) + alpha_ * static_cast<double>(v);
    for (size_t i = 0; i < v; ++i) dist.probs[i] = alpha_ / denom;
    if (it != counts_.end()) {
      for (const auto& [tok, cnt] : it->second.per_token) {
        dist.probs[tok] = (static_cast<double>(cnt) + alpha_) / denom;
      }
    }
    dist.recompute_entropy();
    return dist;
  }

  void save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["format"] = "autostega-ngram";
    j["version"] = 1;
    j["order"] = order_;
    j["alpha"] = alpha_;
    j["vocab"] = vocab_.tokens();
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    std::vector<std::string> keys;
    keys.reserve(counts_.size());
    for (const auto& [k, _] : counts_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) {
      const auto& bucket = counts_.at(k);
      nlohmann::ordered_json per = nlohmann::ordered_json::object();
      for (const auto& [tok, cnt] : std::map<TokenId, uint64_t>(
               bucket.per_token.begin(), bucket.per_token.end())) {
        per[std::to_string(tok)] = cnt;
      }
      counts[context_key_to_text(k)] = per;
    }
    j["counts"] = std::move(counts);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write model artifact: " + path);
    out << j.dump() << '\n';
  }

  static NgramModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read model artifact: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("corrupt model artifact: ") + e.what());
    }
    if (j.value("format", "") != "autostega-ngram" || j.value("version", 0) != 1) {
      throw config_error("unsupported model artifact format");
    }
    NgramModel m;
    m.vocab_ = Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    m.order_ = j.at("order").get<int>();
    m.alpha_ = j.at("alpha").get<double>();
    for (const auto& [ctx_text, per] : j.at("counts").items()) {
      Bucket bucket;
      for (const auto& [tok, cnt] : per.items()) {
        uint64_t c = cnt.get<uint64_t>();
        bucket.per_token[static_cast<TokenId>(std::stoul(tok))] = c;
        bucket.total += c;
      }
      m.counts_[context_key_from_text(ctx_text)] = std::move(bucket);
    }
    return m;
  }

 private:
  struct Bucket {
    std::unordered_map<TokenId, uint64_t> per_token;
    uint64_t total = 0;
  };

  static std::string pack_context(std::span<const TokenId> ctx) {
    std::string key(ctx.size() * 4, '\0');
    for (size_t i = 0; i < ctx.size(); ++i) {
      for (int b = 0; b < 4; ++b) key[i * 4 + b] = static_cast<char>(ctx[i] >> (8 * b));
    }
    return key;
  }

  static std::string context_key_to_text(const std::string& key) {
    std::string out;
    for (size_t i = 0; i < key.size(); i += 4) {
      uint32_t id = 0;
      for (int b = 3; b >= 0; --b) id = id << 8 | static_cast<uint8_t>(key[i + b]);
      if (!out.empty()) out += ',';
      out += std::to_string(id);
    }
    return out;
  }

  static std::string context_key_from_text(const std::string& text) {
    if (text.empty()) return {};
    std::vector<TokenId> ids;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) ids.push_back(static_cast<TokenId>(std::stoul(part)));
    return pack_context(ids);
  }

  Vocabulary vocab_;
  int order_ = 1;
  double alpha_ = 1.0;
  std::unordered_map<std::string, Bucket> counts_;
};

inline uint64_t hash_context_ids(std::span<const TokenId> ids) {
  uint64_t h = context_hash_init();
  for (TokenId id : ids) h = context_hash_push(h, id);
  return h;
}

}  // namespace autostega
