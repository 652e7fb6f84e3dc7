#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autostega/embedder.hpp"
#include "autostega/error.hpp"

namespace autostega {

struct StrategyExample {
  std::string stego_excerpt;
  double overall_score = 0.0;
  std::map<std::string, double> scores;
};

// Schema mirrors the summarizer output contract: name, definition, technique,
// applicable_scenarios, characteristics, examples.
struct StrategyEntry {
  int64_t id = 0;
  std::string name;
  std::string definition;
  std::vector<std::string> technique;
  std::vector<std::string> applicable_scenarios;
  std::vector<std::string> characteristics;
  std::vector<StrategyExample> examples;
  std::vector<double> key;  // retrieval key: embedding of the evaluation response
  std::map<std::string, double> recorded_metrics;
  int64_t admitted_at = 0;

  double best_example_score() const {
    double best = 0.0;
    for (const auto& ex : examples) best = std::max(best, ex.overall_score);
    return best;
  }

  void validate() const {
    std::vector<std::string> missing;
    if (name.empty()) missing.push_back("name");
    if (definition.empty()) missing.push_back("definition");
    if (examples.empty()) missing.push_back("examples");
    if (!missing.empty()) {
      std::string msg = "invalid strategy entry, missing:";
      for (const auto& f : missing) msg += " " + f;
      throw data_error(msg);
    }
  }
};

inline std::string normalize_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ', pending_space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

enum class AdmitOutcome { Admitted, Rejected, Merged };

struct AdmitResult {
  AdmitOutcome outcome;
  int64_t id = -1;  // final entry id for Admitted/Merged
};

struct ShortlistItem {
  int64_t id;
  double discrepancy;
};

class StrategyLibrary {
 public:
  explicit StrategyLibrary(size_t embed_dim = 256, std::string provider_tag = "hashed-tf-256")
      : embed_dim_(embed_dim), provider_tag_(std::move(provider_tag)) {}

  size_t size() const { return entries_.size(); }
  size_t embed_dim() const { return embed_dim_; }
  const std::vector<StrategyEntry>& entries() const { return entries_; }

  const StrategyEntry* find(int64_t id) const {
    for (const auto& e : entries_)
      if (e.id == id) return &e;
    return nullptr;
  }

  // Duplicate iff normalized names match or key cosine >= dedup threshold.
  std::optional<int64_t> dedupe(const StrategyEntry& entry) const {
    std::string norm = normalize_name(entry.name);
    for (const auto& e : entries_) {
      if (normalize_name(e.name) == norm) return e.id;
      if (!entry.key.empty() && e.key.size() == entry.key.size() &&
          cosine(entry.key, e.key) >= dedup_threshold_) {
        return e.id;
      }
    }
    return std::nullopt;
  }

  AdmitResult admit(StrategyEntry entry, double threshold) {
    entry.validate();
    if (!entry.key.empty() && entry.key.size() != embed_dim_) {
      throw data_error("strategy key dimension mismatch");
    }
    if (entry.best_example_score() < threshold) {
      return AdmitResult{AdmitOutcome::Rejected, -1};
    }
    if (auto dup = dedupe(entry)) {
      StrategyEntry& incumbent = *mutable_find(*dup);
      // keep the higher-scored entry's content, merge example lists
      if (entry.best_example_score() > incumbent.best_example_score()) {
        entry.id = incumbent.id;
        entry.admitted_at = incumbent.admitted_at;
        merge_examples(entry.examples, incumbent.examples);
        incumbent = std::move(entry);
      } else {
        merge_examples(incumbent.examples, entry.examples);
      }
      return AdmitResult{AdmitOutcome::Merged, *dup};
    }
    entry.id = next_id_++;
    entry.admitted_at = clock_++;
    if (entry.recorded_metrics.empty()) entry.recorded_metrics = best_scores(entry);
    int64_t id = entry.id;
    entries_.push_back(std::move(entry));
    return AdmitResult{AdmitOutcome::Admitted, id};
  }

  // Direct insertion for curated imports; bypasses the score gate but still
  // schema-validates and deduplicates.
  AdmitResult import_entry(StrategyEntry entry) {
    entry.validate();
    if (!entry.key.empty() && entry.key.size() != embed_dim_) {
      throw data_error("strategy key dimension mismatch");
    }
    if (auto dup = dedupe(entry)) {
      merge_examples(mutable_find(*dup)->examples, entry.examples);
      return AdmitResult{AdmitOutcome::Merged, *dup};
    }
    entry.id = next_id_++;
    entry.admitted_at = clock_++;
    if (entry.recorded_metrics.empty()) entry.recorded_metrics = best_scores(entry);
    int64_t id = entry.id;
    entries_.push_back(std::move(entry));
    return AdmitResult{AdmitOutcome::Admitted, id};
  }

  // Exhaustive-scan similarity retrieval: cosine descending, ties by id
  // ascending, top `count` entries.
  std::vector<int64_t> retrieve(const std::vector<double>& query, size_t count) const {
    std::vector<std::pair<double, int64_t>> ranked;
    ranked.reserve(entries_.size());
    for (const auto& e : entries_) ranked.emplace_back(cosine(query, e.key), e.id);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<int64_t> out;
    for (size_t i = 0; i < ranked.size() && i < count; ++i) out.push_back(ranked[i].second);
    return out;
  }

  // Metric-discrepancy rerank: d_j = sum over dimensions of
  // max(0, recorded_j - current), ranked descending, ties by id ascending.
  std::vector<ShortlistItem> shortlist(const std::vector<int64_t>& candidates,
                                       const std::map<std::string, double>& current,
                                       size_t k) const {
    std::vector<ShortlistItem> items;
    for (int64_t id : candidates) {
      const StrategyEntry* e = find(id);
      if (!e) throw data_error("shortlist candidate not in library");
      double d = 0.0;
      for (const auto& [dim, recorded] : e->recorded_metrics) {
        auto it = current.find(dim);
        if (it != current.end()) d += std::max(0.0, recorded - it->second);
      }
      items.push_back(ShortlistItem{id, d});
    }
    std::sort(items.begin(), items.end(), [](const ShortlistItem& a, const ShortlistItem& b) {
      if (a.discrepancy != b.discrepancy) return a.discrepancy > b.discrepancy;
      return a.id < b.id;
    });
    if (items.size() > k) items.resize(k);
    return items;
  }

  // JSON Lines: header line {version, embed_dim, provider_tag, next_id},
  // then one entry per line.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write library: " + path);
    nlohmann::ordered_json header;
    header["version"] = 1;
    header["embed_dim"] = embed_dim_;
    header["provider_tag"] = provider_tag_;
    header["next_id"] = next_id_;
    header["clock"] = clock_;
    out << header.dump() << '\n';
    for (const auto& e : entries_) out << entry_to_json(e).dump() << '\n';
  }

  static StrategyLibrary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read library: " + path);
    std::string line;
    size_t line_no = 0;
    auto parse = [&](const std::string& text) {
      try {
        return nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw data_error("library parse error at line " + std::to_string(line_no) + ": " +
                         e.what());
      }
    };
    if (!std::getline(in, line)) throw data_error("library file empty, missing header");
    ++line_no;
    nlohmann::json header = parse(line);
    if (header.value("version", 0) != 1) {
      throw data_error("library version mismatch, migration required");
    }
    StrategyLibrary lib(header.at("embed_dim").get<size_t>(),
                        header.at("provider_tag").get<std::string>());
    lib.next_id_ = header.value("next_id", int64_t{1});
    lib.clock_ = header.value("clock", int64_t{0});
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      StrategyEntry e = entry_from_json(parse(line));
      if (!e.key.empty() && e.key.size() != lib.embed_dim_) {
        throw data_error("library entry key dimension mismatch at line " +
                         std::to_string(line_no));
      }
      lib.entries_.push_back(std::move(e));
    }
    return lib;
  }

  static nlohmann::ordered_json entry_to_json(const StrategyEntry& e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["name"] = e.name;
    j["definition"] = e.definition;
    j["technique"] = e.technique;
    j["applicable_scenarios"] = e.applicable_scenarios;
    j["characteristics"] = e.characteristics;
    nlohmann::ordered_json exs = nlohmann::ordered_json::array();
    for (const auto& ex : e.examples) {
      nlohmann::ordered_json je;
      je["stego_excerpt"] = ex.stego_excerpt;
      je["overall_score"] = ex.overall_score;
      je["scores"] = ex.scores;
      exs.push_back(std::move(je));
    }
    j["examples"] = std::move(exs);
    j["key"] = e.key;
    j["recorded_metrics"] = e.recorded_metrics;
    j["admitted_at"] = e.admitted_at;
    return j;
  }

  static StrategyEntry entry_from_json(const nlohmann::json& j) {
    StrategyEntry e;
    e.id = j.value("id", int64_t{0});
    e.name = j.at("name").get<std::string>();
    e.definition = j.at("definition").get<std::string>();
    e.technique = j.value("technique", std::vector<std::string>{});
    e.applicable_scenarios = j.value("applicable_scenarios", std::vector<std::string>{});
    e.characteristics = j.value("characteristics", std::vector<std::string>{});
    for (const auto& je : j.value("examples", nlohmann::json::array())) {
      StrategyExample ex;
      ex.stego_excerpt = je.at("stego_excerpt").get<std::string>();
      ex.overall_score = je.at("overall_score").get<double>();
      ex.scores = je.value("scores", std::map<std::string, double>{});
      e.examples.push_back(std::move(ex));
    }
    e.key = j.value("key", std::vector<double>{});
    e.recorded_metrics = j.value("recorded_metrics", std::map<std::string, double>{});
    e.admitted_at = j.value("admitted_at", int64_t{0});
    return e;
  }

  void set_dedup_threshold(double t) { dedup_threshold_ = t; }

 private:
  StrategyEntry* mutable_find(int64_t id) {
    for (auto& e : entries_)
      if (e.id == id) return &e;
    return nullptr;
  }

  static std::map<std::string, double> best_scores(const StrategyEntry& e) {
    const StrategyExample* best = nullptr;
    for (const auto& ex : e.examples) {
      if (!best || ex.overall_score > best->overall_score) best = &ex;
    }
    return best ? best->scores : std::map<std::string, double>{};
  }

  static void merge_examples(std::vector<StrategyExample>& into,
                             const std::vector<StrategyExample>& from) {
    for (const auto& ex : from) {
      bool present = std::any_of(into.begin(), into.end(), [&](const StrategyExample& e) {
        return e.stego_excerpt == ex.stego_excerpt;
      });
      if (!present) into.push_back(ex);
    }
  }

  size_t embed_dim_;
  std::string provider_tag_;
  double dedup_threshold_ = 0.95;
  int64_t next_id_ = 1;
  int64_t clock_ = 0;
  std::vector<StrategyEntry> entries_;
};

}  // namespace autostega
