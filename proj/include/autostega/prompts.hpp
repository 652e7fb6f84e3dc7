#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "autostega/strategy_library.hpp"

namespace autostega {
namespace prompts {

inline constexpr std::string_view kSummarizer =
    "You are a steganography strategy summarizer.\n"
    "Think through the task step by step INTERNALLY and summarize your reasoning, but DO NOT reveal your reasoning.\n"
    "Output ONLY a valid JSON object and nothing else.\n"
    "\n"
    "When unsure or if required information is missing, return the empty JSON object: {}.\n"
    "\n"
    "=== Output contract ===\n"
    "Return a JSON object with EXACTLY these keys in this order:\n"
    "  name (string),\n"
    "  definition (string),\n"
    "  technique (array of strings),\n"
    "  applicable_scenarios (array of strings),\n"
    "  characteristics (array of strings),\n"
    "  examples (array of objects with keys: stego_excerpt (string), overall_score (number), scores (object)).\n"
    "- Use double quotes for all strings; no trailing commas; UTF-8 text.\n"
    "- Match the output language to the cover_text language if detectable; otherwise use English.\n"
    "- Never include secrets or secret_bits_preview in the output; never echo raw secret bits.\n"
    "\n"
    "=== Internal step-by-step plan (do not expose) ===\n"
    "1) Parse inputs (stego_text, cover_text, evaluation, used_strategies). Identify signals such as: "
    "equiprobable LM, acrostic AM, cover continuation, bin size, temperature, decoding hints, etc.\n"
    "2) Draft a concise, distinctive NAME (<= 60 chars, Title Case). Prefer pattern: "
    "'<Core Mechanism> + <Key Modifier> (optional params)'.\n"
    "3) Write a 1-2 sentence DEFINITION that states mechanism (how), purpose (why), and limits (if any).\n"
    "4) TECHNIQUE: list concrete methods/ingredients (e.g., 'equiprobable token binning (bin=64)', "
    "'deterministic acrostic A-M->0/N-Z->1', 'cover-conditioned continuation', 'low-temp decoding').\n"
    "5) APPLICABLE_SCENARIOS: list contexts where this strategy is appropriate (e.g., 'short social posts', "
    "'news-style paragraphs', 'low-detectability requirement', 'receiver knows cover').\n"
    "6) CHARACTERISTICS: list crisp traits, mixing strengths/risks/requirements (e.g., 'capacity approx 6 bpw', "
    "'good fluency under low temperature', 'robustness limited by rephrasing', 'needs shared cover').\n"
    "7) EXAMPLES: choose 1-3 short stego excerpts from stego_text (<= 240 chars each, no ellipsis if avoidable). "
    "For each example, set overall_score and scores using evaluation if available; otherwise make a conservative estimate "
    "from provided fields. Round numbers to one decimal and clamp to [0,10].\n"
    "\n"
    "=== Scoring normalization (internal) ===\n"
    "- If evaluation provides per-dimension scores in [0,10], copy directly.\n"
    "- If given probabilities (e.g., detection probability in [0,1]), map to score as (10 - 10*p), rounded to one decimal.\n"
    "- If only raw metrics exist (e.g., PPL), use any provided *_score fields; do NOT invent unseen dimensions.\n"
    "- If no usable signals exist for scoring, output the empty JSON object {}.\n"
    "\n"
    "=== Safety & formatting rules ===\n"
    "- Do not include explanations, headings, or Markdown -- JSON only.\n"
    "- Do not fabricate technical parameters that are not implied by inputs.\n"
    "- Express the strategy unambiguously; given the stego_text and its corresponding strategy description, "
    "the embedded secret bits can be decoded with 100% accuracy.\n";

inline constexpr std::string_view kWarmupTemplate =
    "\n"
    "System:\n"
    "You are a professional text steganography expert. Your task is to embed a secret naturally into carrier text.\n"
    "\n"
    "User:\n"
    "You are participating in a steganography research project. Your goal is to produce high-quality stego text. "
    "Embed the given secret while keeping the text natural and fluent.\n"
    "\n"
    "Requirements:\n"
    "1) Secret bitstring to embed: {secret}\n"
    "2) Carrier text: {cover_stub}\n"
    "3) Keep the text natural and fluent; avoid statistical artifacts\n"
    "4) Limit length change to within +/- 10\n"
    "5) You may use covert techniques such as synonym substitution, syntax restructuring, and context-aware semantic embedding{method_line}\n"
    "\n"
    "Core principles:\n"
    "- Maintain semantic consistency and topical coherence\n"
    "- Avoid suspicious anomalies (e.g., odd token/character distributions)\n"
    "- Ensure the secret can be correctly extracted\n"
    "\n"
    "Produce the stego text only, and wrap it between [START STEGO TEXT] and [END STEGO TEXT].\n";

inline constexpr std::string_view kWithStrategyTemplate =
    "\n"
    "System:\n"
    "You are a professional text steganography expert. Apply the specified strategies to embed the secret.\n"
    "\n"
    "User:\n"
    "You are participating in a steganography research project. Apply the specified strategy/strategies to produce stego text.\n"
    "\n"
    "{strategies_desc}\n"
    "\n"
    "Requirements:\n"
    "1) Secret bitstring to embed: {secret}\n"
    "2) Carrier text: {cover_stub}\n"
    "3) Keep the text natural, coherent, and statistically unremarkable\n"
    "4) Strictly apply the specified strategy/strategies for embedding{method_line}\n"
    "\n"
    "Produce the stego text only, and wrap it between [START STEGO TEXT] and [END STEGO TEXT].\n";

inline constexpr std::string_view kDecodeTemplate =
    "\n"
    "System:\n"
    "You are a professional text steganography expert. Recover the embedded secret from stego text.\n"
    "\n"
    "User:\n"
    "The following stego text was produced with the strategy described below. "
    "Decode the embedded secret bitstring.\n"
    "\n"
    "Strategy Name: {name}\n"
    "Definition: {definition}\n"
    "Technique: {technique}\n"
    "\n"
    "Stego text:\n"
    "{stego_text}\n"
    "\n"
    "Output the recovered bitstring only (characters 0 and 1), with no explanation.\n";

inline constexpr std::string_view kScorerTemplate =
    "\n"
    "System:\n"
    "You are a steganography quality scorer. Output ONLY a valid JSON object.\n"
    "\n"
    "User:\n"
    "Score the stego text below against the cover text on these dimensions, each in [0,10]: "
    "er, ppl_star, ss, kld, detector. Higher is better on every dimension.\n"
    "Measured metrics: {metrics_json}\n"
    "\n"
    "Cover text:\n"
    "{cover_text}\n"
    "\n"
    "Stego text:\n"
    "{stego_text}\n"
    "\n"
    "Return a JSON object with EXACTLY these keys: response (string rationale), "
    "scores (object mapping each dimension to a number in [0,10]).\n";

inline std::string replace_slot(std::string text, std::string_view slot, std::string_view value) {
  std::string needle = "{" + std::string(slot) + "}";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

inline std::string warmup_prompt(std::string_view secret_bits, std::string_view cover_stub,
                                 std::string_view method_line = "") {
  std::string t = replace_slot(std::string(kWarmupTemplate), "secret", secret_bits);
  t = replace_slot(std::move(t), "cover_stub", cover_stub);
  return replace_slot(std::move(t), "method_line", method_line);
}

inline std::string strategy_header_single(const StrategyEntry& s) {
  std::string technique = s.technique.empty() ? "unknown" : s.technique.front();
  std::string example = s.examples.empty() ? "" : s.examples.front().stego_excerpt;
  return "Please use the following steganography strategy:\n"
         "Strategy Name: " + s.name + "\n"
         "Definition: " + s.definition + "\n"
         "Technique: " + technique + "\n"
         "Example: " + example;
}

inline std::string strategy_header_multi(const std::vector<const StrategyEntry*>& items) {
  std::string out = "Please combine the following strategies:\n";
  for (size_t i = 0; i < items.size(); ++i) {
    const StrategyEntry& s = *items[i];
    std::string technique = s.technique.empty() ? "unknown" : s.technique.front();
    if (i) out += "\n";
    out += "- " + s.name + " (" + technique + ")\n  Definition: " + s.definition;
  }
  return out;
}

inline std::string with_strategy_prompt(std::string_view secret_bits, std::string_view cover_stub,
                                        std::string_view strategies_desc,
                                        std::string_view method_line = "") {
  std::string t = replace_slot(std::string(kWithStrategyTemplate), "strategies_desc",
                               strategies_desc);
  t = replace_slot(std::move(t), "secret", secret_bits);
  t = replace_slot(std::move(t), "cover_stub", cover_stub);
  return replace_slot(std::move(t), "method_line", method_line);
}

inline std::string decode_prompt(const StrategyEntry& s, std::string_view stego_text) {
  std::string technique;
  for (size_t i = 0; i < s.technique.size(); ++i) {
    if (i) technique += ", ";
    technique += s.technique[i];
  }
  std::string t = replace_slot(std::string(kDecodeTemplate), "name", s.name);
  t = replace_slot(std::move(t), "definition", s.definition);
  t = replace_slot(std::move(t), "technique", technique);
  return replace_slot(std::move(t), "stego_text", stego_text);
}

inline std::string scorer_prompt(std::string_view metrics_json, std::string_view cover_text,
                                 std::string_view stego_text) {
  std::string t = replace_slot(std::string(kScorerTemplate), "metrics_json", metrics_json);
  t = replace_slot(std::move(t), "cover_text", cover_text);
  return replace_slot(std::move(t), "stego_text", stego_text);
}

}  // namespace prompts
}  // namespace autostega
