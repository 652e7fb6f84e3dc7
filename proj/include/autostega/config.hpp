#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "autostega/codec.hpp"
#include "autostega/error.hpp"
#include "autostega/metrics.hpp"

namespace autostega {

struct RoleConfig {
  std::string endpoint_host;
  int endpoint_port = 0;
  std::string model;
  double temperature = 0.0;
  std::string api_key_env;           // credential comes from the environment
  std::string mock_transcript_path;  // when set, the role replays a transcript
};

// Single declarative run configuration. Unknown keys are rejected so a run is
// reproducible from (config, inputs, seed, transcripts).
struct Config {
  CodecParams codec;
  std::vector<std::string> punctuation_tokens = {".", "!", "?"};
  ScoreCriteria criteria = ScoreCriteria::defaults();
  double threshold = 8.5;
  std::string library_path;
  double dedup_threshold = 0.95;
  std::map<std::string, RoleConfig> roles;
  int warmup_iterations = 150;
  int runtime_iterations = 5;
  size_t k = 3;
  double gamma = 0.5;

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read config: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
  }

  static Config from_json(const nlohmann::json& j) {
    Config cfg;
    reject_unknown(j, {"codec", "metrics", "library", "roles", "budgets"}, "top level");
    if (j.contains("codec")) {
      const auto& c = j.at("codec");
      reject_unknown(c,
                     {"p_min", "p_max", "bin_count", "typicality_tau", "min_candidates",
                      "seed", "boost_delta", "sentence_target", "closure_budget",
                      "punctuation", "grid_step"},
                     "codec");
      cfg.codec.p_min = c.value("p_min", cfg.codec.p_min);
      cfg.codec.p_max = c.value("p_max", cfg.codec.p_max);
      cfg.codec.bin_count = c.value("bin_count", cfg.codec.bin_count);
      cfg.codec.typicality_tau = c.value("typicality_tau", cfg.codec.typicality_tau);
      cfg.codec.min_candidates = c.value("min_candidates", cfg.codec.min_candidates);
      cfg.codec.seed = c.value("seed", cfg.codec.seed);
      cfg.codec.boost_delta = c.value("boost_delta", cfg.codec.boost_delta);
      cfg.codec.sentence_target = c.value("sentence_target", cfg.codec.sentence_target);
      cfg.codec.closure_budget = c.value("closure_budget", cfg.codec.closure_budget);
      cfg.codec.grid_step = c.value("grid_step", cfg.codec.grid_step);
      if (c.contains("punctuation")) {
        cfg.punctuation_tokens = c.at("punctuation").get<std::vector<std::string>>();
      }
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      reject_unknown(m, {"threshold", "dims"}, "metrics");
      cfg.threshold = m.value("threshold", cfg.threshold);
      if (m.contains("dims")) {
        for (const auto& [name, band] : m.at("dims").items()) {
          reject_unknown(band, {"best", "worst", "weight"}, "metrics.dims." + name);
          DimensionBand b{band.at("best").get<double>(), band.at("worst").get<double>(),
                          band.value("weight", 1.0)};
          cfg.criteria.dims[name] = b;
        }
      }
    }
    if (j.contains("library")) {
      const auto& l = j.at("library");
      reject_unknown(l, {"path", "dedup_threshold"}, "library");
      cfg.library_path = l.value("path", std::string());
      cfg.dedup_threshold = l.value("dedup_threshold", cfg.dedup_threshold);
    }
    if (j.contains("roles")) {
      for (const auto& [name, r] : j.at("roles").items()) {
        static const std::set<std::string> kRoles = {"steganography", "scorer", "summarizer",
                                                     "decoder"};
        if (!kRoles.count(name)) throw config_error("unknown role: " + name);
        reject_unknown(r,
                       {"endpoint_host", "endpoint_port", "model", "temperature",
                        "api_key_env", "mock_transcript"},
                       "roles." + name);
        RoleConfig rc;
        rc.endpoint_host = r.value("endpoint_host", std::string());
        rc.endpoint_port = r.value("endpoint_port", 0);
        rc.model = r.value("model", std::string());
        rc.temperature = r.value("temperature", 0.0);
        rc.api_key_env = r.value("api_key_env", std::string());
        rc.mock_transcript_path = r.value("mock_transcript", std::string());
        cfg.roles[name] = rc;
      }
    }
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      reject_unknown(b, {"warmup_iterations", "runtime_iterations", "k", "gamma"}, "budgets");
      cfg.warmup_iterations = b.value("warmup_iterations", cfg.warmup_iterations);
      cfg.runtime_iterations = b.value("runtime_iterations", cfg.runtime_iterations);
      cfg.k = b.value("k", cfg.k);
      cfg.gamma = b.value("gamma", cfg.gamma);
    }
    return cfg;
  }

  // Resolves punctuation token strings against a model vocabulary; tokens not
  // in the vocabulary are skipped (the boost is then simply inactive for them).
  CodecParams codec_for(const Vocabulary& vocab) const {
    CodecParams p = codec;
    p.punctuation.clear();
    for (const auto& tok : punctuation_tokens) {
      TokenId id = vocab.id_of(tok);
      if (id != kUnknownToken) p.punctuation.push_back(id);
    }
    return p;
  }

 private:
  static void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                             const std::string& where) {
    if (!j.is_object()) throw config_error("config section must be an object: " + where);
    for (const auto& [key, _] : j.items()) {
      if (!allowed.count(key)) {
        throw config_error("unknown config key '" + key + "' in " + where);
      }
    }
  }
};

}  // namespace autostega
