#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autostega/bitstream.hpp"
#include "autostega/error.hpp"
#include "autostega/hash.hpp"
#include "autostega/lm.hpp"

namespace autostega {

struct CodecParams {
  double p_min = 0.88;
  double p_max = 0.95;
  int bin_count = 32;
  double typicality_tau = 4.0;  // max |surprisal - entropy| in bits
  int min_candidates = 64;
  uint64_t seed = 0;
  double boost_delta = std::log(2.0);  // natural-log boost for sentence-final tokens
  int sentence_target = 25;            // tokens since boundary that trigger the boost
  int closure_budget = 10;
  std::vector<TokenId> punctuation;
  double grid_step = 0.01;

  int bin_bits() const {
    int b = 0;
    while ((1 << b) < bin_count) ++b;
    return b;
  }

  void validate() const {
    if (!(p_min > 0.0 && p_min <= p_max && p_max <= 1.0)) {
      throw config_error("nucleus bounds must satisfy 0 < p_min <= p_max <= 1");
    }
    if (bin_count < 2 || (bin_count & (bin_count - 1)) != 0) {
      throw config_error("bin count must be a power of two >= 2");
    }
    if (min_candidates < 2 * bin_count) {
      throw config_error("min_candidates must be at least 2 * bin_count");
    }
    if (!(grid_step > 0.0)) throw config_error("grid_step must be > 0");
    if (closure_budget < 1) throw config_error("closure budget must be >= 1");
  }
};

struct Candidate {
  TokenId id;
  double prob;      // renormalized over the current candidate set
  double raw_prob;  // probability under the (boundary-adjusted) model distribution
};

struct Bin {
  size_t begin;  // index range into the candidate list
  size_t end;
  double mass;
};

struct BinLayout {
  double p_used = 0.0;
  std::vector<Candidate> candidates;
  std::vector<Bin> bins;
  bool degenerate = false;
};

enum class StepKind { FullEmbed, IndexOnly, NoEmbed };

struct StepRecord {
  size_t step_index = 0;
  StepKind kind = StepKind::NoEmbed;
  int bin_index = -1;
  int parity_bit = -1;
  TokenId token = 0;
  int bits_consumed = 0;
  // layout diagnostics for audit and acceptance checks
  double p_used = 0.0;
  size_t candidate_count = 0;
  double max_candidate_prob = 0.0;
  double max_bin_mass_dev = 0.0;  // max over bins of |mass - 1/B|
};

// Canonical candidate order: probability descending, token id ascending.
// Float-equal ties would otherwise desynchronize the two sides.
inline std::vector<TokenId> sorted_token_order(const std::vector<double>& probs) {
  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  return order;
}

// Smallest grid p in {p_min, p_min+step, ..., p_max} whose nucleus holds at
// least min_candidates tokens; p_max if none does.
inline double adapt_p(const TokenDistribution& dist, const CodecParams& params) {
  auto order = sorted_token_order(dist.probs);
  std::vector<double> cum(order.size());
  double acc = 0.0;
  for (size_t i = 0; i < order.size(); ++i) {
    acc += dist.probs[order[i]];
    cum[i] = acc;
  }
  auto nucleus_size = [&](double p) {
    for (size_t i = 0; i < cum.size(); ++i) {
      if (cum[i] >= p - 1e-12) return i + 1;
    }
    return cum.size();
  };
  for (double p = params.p_min; p < params.p_max - 1e-12; p += params.grid_step) {
    if (nucleus_size(p) >= static_cast<size_t>(params.min_candidates)) return p;
  }
  return params.p_max;
}

// Shortest canonical-order prefix with cumulative probability >= p,
// renormalized over the prefix.
inline std::vector<Candidate> dynamic_nucleus(const TokenDistribution& dist, double p) {
  auto order = sorted_token_order(dist.probs);
  std::vector<Candidate> out;
  double acc = 0.0;
  for (TokenId id : order) {
    out.push_back(Candidate{id, 0.0, dist.probs[id]});
    acc += dist.probs[id];
    if (acc >= p - 1e-12) break;
  }
  for (auto& c : out) c.prob = c.raw_prob / acc;
  return out;
}

// Drops tokens whose surprisal under the original distribution deviates from
// the entropy by more than tau bits. Backstop: never filter below
// min_candidates — the unfiltered input is returned instead.
inline std::vector<Candidate> typicality_filter(const std::vector<Candidate>& candidates,
                                                double entropy_bits,
                                                const CodecParams& params) {
  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    double surprisal = -std::log2(c.raw_prob);
    if (std::abs(surprisal - entropy_bits) <= params.typicality_tau + 1e-12) {
      kept.push_back(c);
    }
  }
  if (kept.size() < static_cast<size_t>(params.min_candidates)) return candidates;
  double total = 0.0;
  for (const auto& c : kept) total += c.raw_prob;
  for (auto& c : kept) c.prob = c.raw_prob / total;
  return kept;
}

// Greedy contiguous equal-mass partition. Bin j closes at the first token
// where cumulative mass reaches (j+1)/B of the total, subject to leaving one
// token per remaining bin. Degenerate when fewer candidates than bins.
inline BinLayout equal_mass_bins(std::vector<Candidate> candidates, int bin_count) {
  BinLayout layout;
  layout.candidates = std::move(candidates);
  const size_t n = layout.candidates.size();
  if (n < static_cast<size_t>(bin_count)) {
    layout.degenerate = true;
    return layout;
  }
  double total = 0.0;
  for (const auto& c : layout.candidates) total += c.prob;

  size_t idx = 0;
  double cum = 0.0;
  for (int j = 0; j < bin_count; ++j) {
    size_t begin = idx;
    double target = total * static_cast<double>(j + 1) / bin_count;
    double mass = 0.0;
    size_t bins_left_after = static_cast<size_t>(bin_count - 1 - j);
    do {
      mass += layout.candidates[idx].prob;
      cum += layout.candidates[idx].prob;
      ++idx;
    } while (cum < target - 1e-12 && n - idx > bins_left_after);
    if (j == bin_count - 1) {
      while (idx < n) {
        mass += layout.candidates[idx].prob;
        cum += layout.candidates[idx].prob;
        ++idx;
      }
    }
    layout.bins.push_back(Bin{begin, idx, mass});
  }
  return layout;
}

// Seed-conditioned parity: LSB of FNV-1a-64 over the 24-byte little-endian
// concatenation (seed, context_hash, token id). Identical on both sides.
inline int parity(TokenId token, uint64_t context_hash, uint64_t seed) {
  std::array<uint8_t, 24> buf{};
  put_le64(buf.data(), seed);
  put_le64(buf.data() + 8, context_hash);
  put_le64(buf.data() + 16, token);
  return static_cast<int>(fnv1a64(buf) & 1);
}

struct BoundaryState {
  int tokens_since_boundary = 0;
  bool prev_no_embed = false;
};

// Adds boost_delta to the log-probability of every sentence-final token and
// renormalizes, when the boundary trigger is active. Applied identically on
// both sides before adapt_p; it only reshapes the next step's derivation.
inline TokenDistribution boundary_adjust(const TokenDistribution& dist,
                                         const BoundaryState& state,
                                         const CodecParams& params,
                                         bool force = false) {
  bool active = force || state.tokens_since_boundary >= params.sentence_target ||
                state.prev_no_embed;
  if (!active || params.boost_delta == 0.0 || params.punctuation.empty()) return dist;
  TokenDistribution out = dist;
  double factor = std::exp(params.boost_delta);
  for (TokenId id : params.punctuation) {
    if (id < out.probs.size()) out.probs[id] *= factor;
  }
  double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  for (auto& p : out.probs) p /= total;
  out.recompute_entropy();
  return out;
}

// Shared derivation: pure function of (distribution, params). Both sides must
// feed it the identical boundary-adjusted distribution.
inline BinLayout derive_layout(const TokenDistribution& dist, const CodecParams& params) {
  double p = adapt_p(dist, params);
  auto nucleus = dynamic_nucleus(dist, p);
  auto filtered = typicality_filter(nucleus, dist.entropy_bits, params);
  BinLayout layout = equal_mass_bins(std::move(filtered), params.bin_count);
  layout.p_used = p;
  return layout;
}

namespace detail {

inline void fill_layout_stats(const BinLayout& layout, StepRecord& rec) {
  rec.p_used = layout.p_used;
  rec.candidate_count = layout.candidates.size();
  for (const auto& c : layout.candidates) {
    rec.max_candidate_prob = std::max(rec.max_candidate_prob, c.prob);
  }
  if (!layout.degenerate) {
    double share = 1.0 / static_cast<double>(layout.bins.size());
    for (const auto& b : layout.bins) {
      rec.max_bin_mass_dev = std::max(rec.max_bin_mass_dev, std::abs(b.mass - share));
    }
  }
}

// Whether the bin holds tokens of both parity classes under the given hash inputs.
inline bool parity_diverse(const BinLayout& layout, const Bin& bin, uint64_t ctx_hash,
                           uint64_t seed) {
  int first = parity(layout.candidates[bin.begin].id, ctx_hash, seed);
  for (size_t i = bin.begin + 1; i < bin.end; ++i) {
    if (parity(layout.candidates[i].id, ctx_hash, seed) != first) return true;
  }
  return false;
}

}  // namespace detail

// One encoding step. Degenerate layouts carry 0 bits (greedy emit);
// parity-degenerate bins carry the 5 index bits only; otherwise 5 index bits
// plus one parity bit select the token.
inline StepRecord encode_step(const BinLayout& layout, uint64_t ctx_hash, BitBuffer& bits,
                              const CodecParams& params) {
  StepRecord rec;
  detail::fill_layout_stats(layout, rec);
  if (layout.degenerate) {
    if (layout.candidates.empty()) throw data_error("empty candidate set");
    rec.kind = StepKind::NoEmbed;
    rec.token = layout.candidates.front().id;
    return rec;
  }
  auto group = bits.read_bits(static_cast<size_t>(params.bin_bits()));
  if (!group) throw data_error("encode_step called on exhausted bit buffer");
  int m = static_cast<int>(bits_to_uint(*group));
  rec.bin_index = m;
  rec.bits_consumed = params.bin_bits();
  const Bin& bin = layout.bins[static_cast<size_t>(m)];

  if (detail::parity_diverse(layout, bin, ctx_hash, params.seed)) {
    auto pb = bits.read_bits(1);
    int target = pb ? static_cast<int>((*pb)[0]) : 0;  // pad parity past end
    rec.kind = StepKind::FullEmbed;
    rec.parity_bit = target;
    rec.bits_consumed += 1;
    for (size_t i = bin.begin; i < bin.end; ++i) {
      if (parity(layout.candidates[i].id, ctx_hash, params.seed) == target) {
        rec.token = layout.candidates[i].id;
        return rec;
      }
    }
    throw data_error("parity class vanished mid-step");  // unreachable
  }
  rec.kind = StepKind::IndexOnly;
  rec.token = layout.candidates[bin.begin].id;
  return rec;
}

// Mirror of encode_step: recovers exactly the bits the encoder consumed.
inline BitGroup decode_step(const BinLayout& layout, uint64_t ctx_hash, TokenId observed,
                            const CodecParams& params) {
  if (layout.degenerate) return {};
  for (size_t m = 0; m < layout.bins.size(); ++m) {
    const Bin& bin = layout.bins[m];
    for (size_t i = bin.begin; i < bin.end; ++i) {
      if (layout.candidates[i].id != observed) continue;
      BitGroup out = uint_to_bits(m, static_cast<size_t>(params.bin_bits()));
      if (detail::parity_diverse(layout, bin, ctx_hash, params.seed)) {
        out.push_back(static_cast<uint8_t>(parity(observed, ctx_hash, params.seed)));
      }
      return out;
    }
  }
  throw data_error("desynchronization: observed token outside candidate set");
}

struct EncodeResult {
  std::vector<TokenId> tokens;
  std::vector<StepRecord> steps;
  size_t closure_tokens = 0;
  bool closure_capped = false;  // closure hit the budget without a sentence-final token
};

namespace detail {

inline bool is_punct(TokenId id, const CodecParams& params) {
  return std::find(params.punctuation.begin(), params.punctuation.end(), id) !=
         params.punctuation.end();
}

struct SessionState {
  std::vector<TokenId> context;
  uint64_t ctx_hash;
  BoundaryState boundary;

  explicit SessionState(std::span<const TokenId> prompt)
      : context(prompt.begin(), prompt.end()), ctx_hash(hash_context_ids(prompt)) {}

  void push(TokenId tok, bool no_embed, const CodecParams& params) {
    context.push_back(tok);
    ctx_hash = context_hash_push(ctx_hash, tok);
    boundary.tokens_since_boundary =
        is_punct(tok, params) ? 0 : boundary.tokens_since_boundary + 1;
    boundary.prev_no_embed = no_embed;
  }
};

}  // namespace detail

// Full PC-DNTE encode: frames the secret, appends a CRC-32 integrity trailer,
// iterates shared derivation + encode_step, then runs the bounded closure.
inline EncodeResult encode(std::span<const uint8_t> secret, std::span<const TokenId> prompt,
                           const LanguageModel& model, const CodecParams& params) {
  params.validate();
  BitBuffer buf = BitBuffer::frame(secret);
  buf.append_bits(uint_to_bits(crc32(secret), 32));

  detail::SessionState st(prompt);
  EncodeResult result;
  size_t step_index = 0;
  int stalled = 0;
  while (!buf.exhausted()) {
    TokenDistribution dist = model.next_token_distribution(st.context);
    dist = boundary_adjust(dist, st.boundary, params);
    BinLayout layout = derive_layout(dist, params);
    // degenerate steps emit a token but carry no bits; a long unbroken run
    // means the model is too peaked to ever make progress
    if (layout.degenerate && ++stalled > 1024) {
      throw data_error("encoder stalled: 1024 consecutive steps without capacity");
    }
    if (!layout.degenerate) stalled = 0;
    StepRecord rec = encode_step(layout, st.ctx_hash, buf, params);
    rec.step_index = step_index++;
    result.tokens.push_back(rec.token);
    st.push(rec.token, rec.kind == StepKind::NoEmbed, params);
    result.steps.push_back(std::move(rec));
  }

  // Closure: greedy argmax of the boosted distribution until a sentence-final
  // token lands or the budget is spent.
  for (int k = 0; k < params.closure_budget; ++k) {
    TokenDistribution dist = model.next_token_distribution(st.context);
    dist = boundary_adjust(dist, st.boundary, params, /*force=*/true);
    TokenId best = 0;
    double best_p = -1.0;
    for (size_t i = 0; i < dist.probs.size(); ++i) {
      if (dist.probs[i] > best_p) best_p = dist.probs[i], best = static_cast<TokenId>(i);
    }
    result.tokens.push_back(best);
    ++result.closure_tokens;
    st.push(best, false, params);
    if (detail::is_punct(best, params)) return result;
  }
  result.closure_capped = true;
  return result;
}

// Mirror decode. Replays the shared derivation per step, reads the 32-bit
// header, stops after header + payload + trailer, verifies the CRC, and
// checks the leftover tail fits the closure budget.
inline std::vector<uint8_t> decode(std::span<const TokenId> stego,
                                   std::span<const TokenId> prompt,
                                   const LanguageModel& model, const CodecParams& params) {
  params.validate();
  detail::SessionState st(prompt);
  BitGroup bits;
  std::optional<uint64_t> payload_len;
  const uint64_t header_bits = 32, trailer_bits = 32;

  size_t consumed = 0;
  for (; consumed < stego.size(); ++consumed) {
    TokenDistribution dist = model.next_token_distribution(st.context);
    dist = boundary_adjust(dist, st.boundary, params);
    BinLayout layout = derive_layout(dist, params);
    BitGroup g = decode_step(layout, st.ctx_hash, stego[consumed], params);
    bits.insert(bits.end(), g.begin(), g.end());
    st.push(stego[consumed], layout.degenerate, params);

    if (!payload_len && bits.size() >= header_bits) {
      payload_len = bits_to_uint(std::span(bits).first(header_bits));
      if (*payload_len % 8 != 0) {
        throw data_error("desynchronization: header declares a non-byte payload length");
      }
      uint64_t capacity = 6ull * stego.size();
      if (header_bits + *payload_len + trailer_bits > capacity + 6) {
        throw data_error("desynchronization: declared payload exceeds stego capacity");
      }
    }
    if (payload_len && bits.size() >= header_bits + *payload_len + trailer_bits) {
      ++consumed;
      break;
    }
  }
  if (!payload_len || bits.size() < header_bits + *payload_len + trailer_bits) {
    uint64_t have = bits.size();
    uint64_t need = payload_len ? header_bits + *payload_len + trailer_bits : header_bits;
    throw data_error("incomplete payload: stego truncated, " +
                     std::to_string(need - std::min(need, have)) + " bits missing");
  }
  if (stego.size() - consumed > static_cast<size_t>(params.closure_budget)) {
    throw data_error("desynchronization: trailing tokens exceed closure budget");
  }

  auto payload_span = std::span(bits).subspan(header_bits, *payload_len);
  std::vector<uint8_t> secret = bits_to_bytes(payload_span);
  uint32_t declared = static_cast<uint32_t>(
      bits_to_uint(std::span(bits).subspan(header_bits + *payload_len, trailer_bits)));
  if (declared != crc32(secret)) {
    throw data_error("desynchronization: payload integrity check failed");
  }
  return secret;
}

}  // namespace autostega
