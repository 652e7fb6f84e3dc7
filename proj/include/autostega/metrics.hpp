#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autostega/embedder.hpp"
#include "autostega/error.hpp"
#include "autostega/lm.hpp"

namespace autostega {

struct EvaluationReport {
  double er = 0.0;        // bits per word
  double ppl = 0.0;
  double ppl_star = 0.0;  // normalized perplexity deviation
  double ss = 0.0;        // cosine similarity in [-1, 1]
  double kld = 0.0;
  double detector = 0.5;  // detector probability in [0, 1]
  std::string response;   // free-text rationale R
  std::optional<double> overall;  // S in [0, 10], present after aggregation

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["er"] = er;
    j["ppl"] = ppl;
    j["ppl_star"] = ppl_star;
    j["ss"] = ss;
    j["kld"] = kld;
    j["detector"] = detector;
    j["response"] = response;
    if (overall) j["overall"] = *overall;
    return j;
  }
};

// Secret bits per whitespace word of stego text. Payload bits exclude the
// length-framing header.
inline double embedding_rate(uint64_t payload_bits, std::string_view stego_text) {
  size_t words = Vocabulary::split_words(stego_text).size();
  if (words == 0) throw data_error("embedding rate undefined for empty text");
  return static_cast<double>(payload_bits) / static_cast<double>(words);
}

// exp(-(1/N) sum ln p(w_i | prefix)). Unknown-probability tokens (cannot
// occur on smoothed builtin models) yield the infinity sentinel.
inline double perplexity(std::string_view text, const LanguageModel& model) {
  auto ids = model.vocab().tokenize(text);
  if (ids.empty()) throw data_error("perplexity undefined for empty text");
  double log_sum = 0.0;
  std::vector<TokenId> prefix;
  for (TokenId id : ids) {
    if (id == kUnknownToken) throw data_error("text contains out-of-vocabulary token");
    TokenDistribution dist = model.next_token_distribution(prefix);
    double p = dist.probs[id];
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    log_sum += std::log(p);
    prefix.push_back(id);
  }
  return std::exp(-log_sum / static_cast<double>(ids.size()));
}

inline double ppl_star(double stego_ppl, double cover_ppl) {
  if (!(cover_ppl > 0.0)) throw data_error("cover perplexity must be > 0");
  return std::abs(stego_ppl - cover_ppl) / cover_ppl;
}

inline double semantic_similarity(std::string_view a, std::string_view b,
                                  const Embedder& embedder) {
  if (a.empty() || b.empty()) throw data_error("semantic similarity needs nonempty texts");
  return cosine(embedder.embed(a), embedder.embed(b));
}

// One summand of the Gaussian KLD: x is the cover side, y the stego side.
inline double kld_gaussian(double mu_x, double sigma_x, double mu_y, double sigma_y) {
  constexpr double kSigmaFloor = 1e-6;
  sigma_x = std::max(sigma_x, kSigmaFloor);
  sigma_y = std::max(sigma_y, kSigmaFloor);
  return std::log(sigma_y / sigma_x) +
         (sigma_x * sigma_x + (mu_x - mu_y) * (mu_x - mu_y)) / (2.0 * sigma_y * sigma_y) -
         0.5;
}

// Per-dimension sample mean/std (N-1 denominator) of each embedding set, then
// the Gaussian KLD summed over dimensions.
inline double kld(const std::vector<std::vector<double>>& cover,
                  const std::vector<std::vector<double>>& stego) {
  if (cover.size() < 2 || stego.size() < 2) {
    throw data_error("kld needs at least 2 vectors per set");
  }
  size_t dim = cover.front().size();
  for (const auto& v : cover)
    if (v.size() != dim) throw data_error("embedding dimension mismatch");
  for (const auto& v : stego)
    if (v.size() != dim) throw data_error("embedding dimension mismatch");

  auto moments = [dim](const std::vector<std::vector<double>>& set, size_t d) {
    double mean = 0.0;
    for (const auto& v : set) mean += v[d];
    mean /= static_cast<double>(set.size());
    double var = 0.0;
    for (const auto& v : set) var += (v[d] - mean) * (v[d] - mean);
    var /= static_cast<double>(set.size() - 1);
    return std::pair{mean, std::sqrt(var)};
  };
  double sum = 0.0;
  for (size_t d = 0; d < dim; ++d) {
    auto [mx, sx] = moments(cover, d);
    auto [my, sy] = moments(stego, d);
    sum += kld_gaussian(mx, sx, my, sy);
  }
  return sum;
}

// Linear target band mapping a raw metric value onto [0, 10].
struct DimensionBand {
  double best;
  double worst;
  double weight = 1.0;

  double score(double value) const {
    double t = (value - worst) / (best - worst);
    return 10.0 * std::clamp(t, 0.0, 1.0);
  }
};

struct ScoreCriteria {
  std::map<std::string, DimensionBand> dims;

  // Defaults; the detector band realizes the (10 - 10*p) normalization.
  static ScoreCriteria defaults() {
    ScoreCriteria c;
    c.dims["er"] = DimensionBand{8.0, 0.0};
    c.dims["ppl_star"] = DimensionBand{0.0, 1.0};
    c.dims["ss"] = DimensionBand{1.0, 0.0};
    c.dims["kld"] = DimensionBand{0.0, 5.0};
    c.dims["detector"] = DimensionBand{0.0, 1.0};
    return c;
  }
};

inline std::map<std::string, double> map_dimension_scores(const EvaluationReport& report,
                                                          const ScoreCriteria& criteria) {
  std::map<std::string, double> raw{{"er", report.er},
                                    {"ppl_star", report.ppl_star},
                                    {"ss", report.ss},
                                    {"kld", report.kld},
                                    {"detector", report.detector}};
  std::map<std::string, double> scores;
  for (const auto& [name, band] : criteria.dims) {
    auto it = raw.find(name);
    if (it == raw.end()) throw config_error("unknown score dimension: " + name);
    scores[name] = band.score(it->second);
  }
  return scores;
}

// Weighted mean of per-dimension scores. When an external scorer supplies
// scores, those replace the band-mapped values.
inline double aggregate_score(const EvaluationReport& report, const ScoreCriteria& criteria,
                              const std::map<std::string, double>* scorer_scores = nullptr) {
  if (criteria.dims.empty()) throw config_error("no score dimensions configured");
  std::map<std::string, double> scores =
      scorer_scores ? *scorer_scores : map_dimension_scores(report, criteria);
  double weighted = 0.0, weight_sum = 0.0;
  for (const auto& [name, band] : criteria.dims) {
    auto it = scores.find(name);
    if (it == scores.end()) throw data_error("incomplete report: missing dimension " + name);
    weighted += band.weight * it->second;
    weight_sum += band.weight;
  }
  return weighted / weight_sum;
}

struct TextStats {
  double type_token_ratio = 0.0;
  double mean_word_length = 0.0;
  double punctuation_rate = 0.0;

  static TextStats of(std::string_view text) {
    auto words = Vocabulary::split_words(text);
    if (words.empty()) return {};
    std::vector<std::string> uniq(words.begin(), words.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    size_t chars = 0, punct = 0;
    for (const auto& w : words) {
      chars += w.size();
      for (char c : w) {
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') ++punct;
      }
    }
    TextStats s;
    s.type_token_ratio = static_cast<double>(uniq.size()) / static_cast<double>(words.size());
    s.mean_word_length = static_cast<double>(chars) / static_cast<double>(words.size());
    s.punctuation_rate = static_cast<double>(punct) / static_cast<double>(chars);
    return s;
  }
};

// Frequency-statistics detector stub: logistic score over the RMS z-distance
// of (type-token ratio, mean word length, punctuation rate) from the cover
// calibration set. Deterministic given the calibration set.
class BaselineDetector {
 public:
  static BaselineDetector calibrate(const std::vector<std::string>& covers) {
    if (covers.size() < 10) {
      throw config_error("detector calibration needs at least 10 cover samples");
    }
    std::vector<TextStats> stats;
    stats.reserve(covers.size());
    for (const auto& c : covers) stats.push_back(TextStats::of(c));
    BaselineDetector d;
    auto fit = [&](auto getter, size_t i) {
      double mean = 0.0;
      for (const auto& s : stats) mean += getter(s);
      mean /= static_cast<double>(stats.size());
      double var = 0.0;
      for (const auto& s : stats) var += (getter(s) - mean) * (getter(s) - mean);
      var /= static_cast<double>(stats.size() - 1);
      d.mean_[i] = mean;
      d.std_[i] = std::max(std::sqrt(var), 1e-6);
    };
    fit([](const TextStats& s) { return s.type_token_ratio; }, 0);
    fit([](const TextStats& s) { return s.mean_word_length; }, 1);
    fit([](const TextStats& s) { return s.punctuation_rate; }, 2);
    return d;
  }

  double score(std::string_view text) const {
    TextStats s = TextStats::of(text);
    double f[3] = {s.type_token_ratio, s.mean_word_length, s.punctuation_rate};
    double sq = 0.0;
    for (int i = 0; i < 3; ++i) {
      double z = (f[i] - mean_[i]) / std_[i];
      sq += z * z;
    }
    double d = std::sqrt(sq / 3.0);
    return 1.0 / (1.0 + std::exp(-2.0 * (d - 2.0)));
  }

 private:
  double mean_[3] = {0, 0, 0};
  double std_[3] = {1, 1, 1};
};

}  // namespace autostega
