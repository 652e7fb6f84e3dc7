#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autostega/error.hpp"
#include "autostega/llm_client.hpp"
#include "autostega/metrics.hpp"
#include "autostega/prompts.hpp"
#include "autostega/strategy_library.hpp"

namespace autostega {

struct Request {
  std::string cover_text;
  std::vector<uint8_t> secret;
  std::string requirements;
  int budget = 5;
  double threshold = 8.5;

  std::string secret_bits_string() const {
    std::string bits;
    bits.reserve(secret.size() * 8);
    for (uint8_t b : secret) {
      for (int i = 7; i >= 0; --i) bits += static_cast<char>('0' + ((b >> i) & 1));
    }
    return bits;
  }
};

struct StegoRecord {
  int iteration = 0;
  std::string stego_text;
  EvaluationReport report;
  std::map<std::string, double> dim_scores;
  std::vector<int64_t> strategies_used;
  std::string mode = "none";  // none | single_best | compose | alternative

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["iteration"] = iteration;
    j["stego_text"] = stego_text;
    j["report"] = report.to_json();
    j["dim_scores"] = dim_scores;
    j["strategies_used"] = strategies_used;
    j["mode"] = mode;
    return j;
  }
};

struct AgentRoles {
  LlmClient* steganography = nullptr;
  LlmClient* scorer = nullptr;      // optional
  LlmClient* summarizer = nullptr;  // optional
  LlmClient* decoder = nullptr;     // optional
};

struct EvalContext {
  const LanguageModel* model = nullptr;      // optional; enables ppl / ppl_star
  const Embedder* embedder = nullptr;        // required
  const BaselineDetector* detector = nullptr;  // optional
  ScoreCriteria criteria = ScoreCriteria::defaults();
};

struct LoopParams {
  size_t k = 3;          // shortlist size; retrieval fetches 2k
  double gamma = 0.5;    // dominance margin between single-best and compose
};

inline constexpr std::string_view kStartMarker = "[START STEGO TEXT]";
inline constexpr std::string_view kEndMarker = "[END STEGO TEXT]";

// Extracts the text between the start/end markers, which must appear exactly
// once each.
inline std::string extract_stego(std::string_view response) {
  size_t start = response.find(kStartMarker);
  if (start == std::string_view::npos ||
      response.find(kStartMarker, start + 1) != std::string_view::npos) {
    throw data_error("stego extraction failed: start marker absent or duplicated; raw: " +
                     std::string(response));
  }
  size_t end = response.find(kEndMarker);
  if (end == std::string_view::npos ||
      response.find(kEndMarker, end + 1) != std::string_view::npos) {
    throw data_error("stego extraction failed: end marker absent or duplicated; raw: " +
                     std::string(response));
  }
  size_t body = start + kStartMarker.size();
  if (end < body) throw data_error("stego extraction failed: markers out of order");
  std::string_view inner = response.substr(body, end - body);
  while (!inner.empty() && (inner.front() == '\n' || inner.front() == ' ')) inner.remove_prefix(1);
  while (!inner.empty() && (inner.back() == '\n' || inner.back() == ' ')) inner.remove_suffix(1);
  return std::string(inner);
}

// Iteration 1 uses the plain warm-up prompt; later iterations condition on the
// shortlisted strategies (single or composed header).
inline std::string generate_stego(const Request& req,
                                  const std::vector<const StrategyEntry*>& strategies,
                                  LlmClient& steg_client) {
  std::string prompt;
  if (strategies.empty()) {
    prompt = prompts::warmup_prompt(req.secret_bits_string(), req.cover_text, req.requirements);
  } else {
    std::string desc = strategies.size() == 1
                           ? prompts::strategy_header_single(*strategies.front())
                           : prompts::strategy_header_multi(strategies);
    prompt = prompts::with_strategy_prompt(req.secret_bits_string(), req.cover_text, desc,
                                           req.requirements);
  }
  return extract_stego(steg_client.complete("steganography", prompt));
}

namespace detail {

// Evaluation-side perplexity: scores in-vocabulary tokens only so arbitrary
// LLM output does not abort the loop. Returns nullopt when nothing scores.
inline std::optional<double> lenient_perplexity(std::string_view text,
                                                const LanguageModel& model) {
  auto ids = model.vocab().tokenize(text);
  double log_sum = 0.0;
  size_t n = 0;
  std::vector<TokenId> prefix;
  for (TokenId id : ids) {
    if (id != kUnknownToken) {
      TokenDistribution dist = model.next_token_distribution(prefix);
      log_sum += std::log(dist.probs[id]);
      prefix.push_back(id);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return std::exp(-log_sum / static_cast<double>(n));
}

inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur += c;
    if (c == '.' || c == '!' || c == '?') {
      if (!Vocabulary::split_words(cur).empty()) out.push_back(cur);
      cur.clear();
    }
  }
  if (!Vocabulary::split_words(cur).empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

inline EvaluationReport evaluate(const std::string& stego_text, const Request& req,
                                 const EvalContext& ctx, LlmClient* scorer,
                                 std::map<std::string, double>* dim_scores_out = nullptr) {
  if (!ctx.embedder) throw config_error("evaluation requires an embedding provider");
  EvaluationReport report;
  report.er = embedding_rate(req.secret.size() * 8ull, stego_text);
  report.ss = semantic_similarity(stego_text, req.cover_text, *ctx.embedder);

  if (ctx.model) {
    auto stego_ppl = detail::lenient_perplexity(stego_text, *ctx.model);
    auto cover_ppl = detail::lenient_perplexity(req.cover_text, *ctx.model);
    if (stego_ppl && cover_ppl) {
      report.ppl = *stego_ppl;
      report.ppl_star = ppl_star(*stego_ppl, *cover_ppl);
    }
  }

  auto cover_sents = detail::split_sentences(req.cover_text);
  auto stego_sents = detail::split_sentences(stego_text);
  if (cover_sents.size() >= 2 && stego_sents.size() >= 2) {
    std::vector<std::vector<double>> cov, stg;
    for (const auto& s : cover_sents) cov.push_back(ctx.embedder->embed(s));
    for (const auto& s : stego_sents) stg.push_back(ctx.embedder->embed(s));
    report.kld = kld(cov, stg);
  }
  if (ctx.detector) report.detector = ctx.detector->score(stego_text);

  std::map<std::string, double> dim_scores;
  if (scorer) {
    std::string metrics_json = report.to_json().dump();
    std::string raw = scorer->complete(
        "scorer", prompts::scorer_prompt(metrics_json, req.cover_text, stego_text));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("scorer returned malformed JSON: ") + e.what() +
                       "; raw: " + raw);
    }
    report.response = j.at("response").get<std::string>();
    dim_scores = j.at("scores").get<std::map<std::string, double>>();
  } else {
    report.response = "metrics: " + report.to_json().dump();
    dim_scores = map_dimension_scores(report, ctx.criteria);
  }
  report.overall = aggregate_score(report, ctx.criteria, &dim_scores);
  if (dim_scores_out) *dim_scores_out = dim_scores;
  return report;
}

// Parses the summarizer's strict six-key JSON contract into a StrategyEntry.
// The empty object means "no entry". Prose around the JSON, missing keys,
// extra keys, or out-of-order keys are all rejected.
inline std::optional<StrategyEntry> parse_summarizer_output(const std::string& raw) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("summarizer output is not pure JSON: ") + e.what() +
                     "; raw: " + raw);
  }
  if (!j.is_object()) throw data_error("summarizer output is not a JSON object");
  if (j.empty()) return std::nullopt;

  static const std::vector<std::string> kKeys = {
      "name", "definition", "technique", "applicable_scenarios", "characteristics", "examples"};
  std::vector<std::string> got;
  for (const auto& [key, _] : j.items()) got.push_back(key);
  if (got != kKeys) {
    throw data_error("summarizer output violates the six-key contract");
  }
  StrategyEntry e;
  e.name = j.at("name").get<std::string>();
  e.definition = j.at("definition").get<std::string>();
  e.technique = j.at("technique").get<std::vector<std::string>>();
  e.applicable_scenarios = j.at("applicable_scenarios").get<std::vector<std::string>>();
  e.characteristics = j.at("characteristics").get<std::vector<std::string>>();
  for (const auto& je : j.at("examples")) {
    StrategyExample ex;
    ex.stego_excerpt = je.at("stego_excerpt").get<std::string>();
    ex.overall_score = je.at("overall_score").get<double>();
    ex.scores = je.value("scores", std::map<std::string, double>{});
    e.examples.push_back(std::move(ex));
  }
  e.validate();
  return e;
}

// Renders the summarizer prompt over a record batch and parses the reply.
// The entry's retrieval key is the embedding of the best record's response.
inline std::optional<StrategyEntry> summarize(const std::vector<StegoRecord>& records,
                                              const Request& req, const Embedder& embedder,
                                              LlmClient& summarizer_client) {
  if (records.size() < 2) throw data_error("summarize needs at least 2 records");
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& r : records) inputs.push_back(r.to_json());
  std::string prompt = std::string(prompts::kSummarizer) + "\n=== Inputs ===\ncover_text: " +
                       req.cover_text + "\nrecords: " + inputs.dump();
  auto entry = parse_summarizer_output(summarizer_client.complete("summarizer", prompt));
  if (!entry) return std::nullopt;

  const StegoRecord* best = &records.front();
  for (const auto& r : records) {
    if (r.report.overall.value_or(0) > best->report.overall.value_or(0)) best = &r;
  }
  entry->key = embedder.embed(best->report.response);
  entry->recorded_metrics = best->dim_scores;
  return entry;
}

enum class StrategyMode { SingleBest, Compose, AlternativeDiscovery };

// Mode trichotomy over a shortlist: alternative discovery when no candidate's
// recorded best score reaches the threshold; single-best when the top
// discrepancy clearly dominates; compose over all near-matching candidates.
inline StrategyMode select_mode(const std::vector<ShortlistItem>& shortlist,
                                const StrategyLibrary& lib, double threshold, double gamma,
                                std::vector<int64_t>& chosen) {
  chosen.clear();
  bool any_qualifies = false;
  for (const auto& item : shortlist) {
    const StrategyEntry* e = lib.find(item.id);
    if (e && e->best_example_score() >= threshold) any_qualifies = true;
  }
  if (shortlist.empty() || !any_qualifies) return StrategyMode::AlternativeDiscovery;
  if (shortlist.size() == 1 ||
      shortlist[0].discrepancy >= shortlist[1].discrepancy + gamma) {
    chosen.push_back(shortlist[0].id);
    return StrategyMode::SingleBest;
  }
  for (const auto& item : shortlist) {
    if (item.discrepancy >= shortlist[0].discrepancy - gamma) chosen.push_back(item.id);
  }
  return StrategyMode::Compose;
}

enum class OutcomeKind { Accepted, Exhausted };

struct LoopResult {
  OutcomeKind kind = OutcomeKind::Exhausted;
  std::vector<StegoRecord> records;
  std::vector<int64_t> admitted;  // entry ids admitted or merged during the run
};

namespace detail {

inline void maybe_summarize_improvement(const std::vector<StegoRecord>& records,
                                        const Request& req, StrategyLibrary& lib,
                                        const EvalContext& ctx, AgentRoles& roles,
                                        std::vector<int64_t>& admitted) {
  if (!roles.summarizer || records.size() < 2) return;
  const auto& prev = records[records.size() - 2];
  const auto& last = records.back();
  if (last.report.overall.value_or(0) <= prev.report.overall.value_or(0)) return;
  auto entry = summarize({prev, last}, req, *ctx.embedder, *roles.summarizer);
  if (!entry) return;
  AdmitResult res = lib.admit(std::move(*entry), req.threshold);
  if (res.outcome != AdmitOutcome::Rejected) admitted.push_back(res.id);
}

}  // namespace detail

// One full lifelong-learning request: iteration 1 generates without a
// strategy; later iterations retrieve 2k by response-embedding similarity,
// shortlist k by metric discrepancy, pick a mode, regenerate, and admit
// improved entries. Stops at acceptance or budget exhaustion.
inline LoopResult run_request(const Request& req, StrategyLibrary& lib, AgentRoles roles,
                              const EvalContext& ctx, const LoopParams& lp = {}) {
  if (!roles.steganography) throw config_error("steganography role not configured");
  if (req.budget < 1) throw config_error("iteration budget must be >= 1");
  LoopResult result;

  for (int iter = 1; iter <= req.budget; ++iter) {
    std::vector<const StrategyEntry*> strategies;
    StrategyEntry evolved;  // alternative-discovery entry not (yet) in the library
    std::string mode_name = "none";
    std::vector<int64_t> used_ids;

    if (iter > 1) {
      const StegoRecord& prev = result.records.back();
      auto query = ctx.embedder->embed(prev.report.response);
      auto candidates = lib.retrieve(query, 2 * lp.k);
      auto gamma_list = lib.shortlist(candidates, prev.dim_scores, lp.k);
      std::vector<int64_t> chosen;
      StrategyMode mode = select_mode(gamma_list, lib, req.threshold, lp.gamma, chosen);
      switch (mode) {
        case StrategyMode::SingleBest:
          mode_name = "single_best";
          break;
        case StrategyMode::Compose:
          mode_name = "compose";
          break;
        case StrategyMode::AlternativeDiscovery:
          mode_name = "alternative";
          break;
      }
      if (mode == StrategyMode::AlternativeDiscovery) {
        if (roles.summarizer && result.records.size() >= 2) {
          auto entry = summarize(result.records, req, *ctx.embedder, *roles.summarizer);
          if (entry) {
            evolved = *entry;
            AdmitResult res = lib.admit(*entry, req.threshold);
            if (res.outcome != AdmitOutcome::Rejected) {
              result.admitted.push_back(res.id);
              used_ids.push_back(res.id);
            }
            strategies.push_back(&evolved);
          }
        }
      } else {
        for (int64_t id : chosen) {
          strategies.push_back(lib.find(id));
          used_ids.push_back(id);
        }
      }
    }

    StegoRecord record;
    record.iteration = iter;
    record.mode = mode_name;
    record.strategies_used = used_ids;
    record.stego_text = generate_stego(req, strategies, *roles.steganography);
    record.report = evaluate(record.stego_text, req, ctx, roles.scorer, &record.dim_scores);
    result.records.push_back(std::move(record));

    detail::maybe_summarize_improvement(result.records, req, lib, ctx, roles, result.admitted);

    if (result.records.back().report.overall.value_or(0) >= req.threshold) {
      result.kind = OutcomeKind::Accepted;
      return result;
    }
  }
  result.kind = OutcomeKind::Exhausted;
  return result;
}

// Warm-up stage: a plain generate-evaluate loop per request (never
// strategy-conditioned), summarizing improvement pairs into the library.
inline LoopResult warmup(const std::vector<Request>& requests, int iteration_budget,
                         StrategyLibrary& lib, AgentRoles roles, const EvalContext& ctx) {
  if (!roles.steganography && iteration_budget > 0) {
    throw config_error("steganography role not configured");
  }
  LoopResult result;
  for (const auto& req : requests) {
    std::vector<StegoRecord> records;
    for (int iter = 1; iter <= iteration_budget; ++iter) {
      StegoRecord record;
      record.iteration = iter;
      record.stego_text = generate_stego(req, {}, *roles.steganography);
      record.report = evaluate(record.stego_text, req, ctx, roles.scorer, &record.dim_scores);
      records.push_back(std::move(record));
      detail::maybe_summarize_improvement(records, req, lib, ctx, roles, result.admitted);
    }
    for (auto& r : records) result.records.push_back(std::move(r));
  }
  result.kind = OutcomeKind::Exhausted;  // budget exhaustion is normal termination
  return result;
}

// LLM-strategy decode path (PC-DNTE stego decodes algorithmically instead).
// Returns the recovered bitstring with whitespace stripped.
inline std::string decode_secret(const std::string& stego_text, const StrategyEntry& strategy,
                                 LlmClient& decoder_client) {
  if (stego_text.empty()) throw data_error("empty stego text");
  std::string raw = decoder_client.complete("decoder",
                                            prompts::decode_prompt(strategy, stego_text));
  std::string bits;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c != '0' && c != '1') {
      throw data_error("decoder returned a non-bitstring response: " + raw);
    }
    bits += c;
  }
  return bits;
}

}  // namespace autostega
