// Operator entry point: codec runs, evaluation, library management, and agent
// loops driven by a single JSON config. Exit codes: 0 ok, 2 config error,
// 3 data/desynchronization error, 4 transport error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "autostega/agent.hpp"
#include "autostega/codec.hpp"
#include "autostega/config.hpp"
#include "autostega/embedder.hpp"
#include "autostega/error.hpp"
#include "autostega/llm_client.hpp"
#include "autostega/metrics.hpp"
#include "autostega/remote.hpp"
#include "autostega/strategy_library.hpp"

using namespace autostega;

namespace {

std::vector<uint8_t> read_bytes(const std::string& path) {
  if (path == "-") {
    std::vector<uint8_t> data;
    char buf[4096];
    while (std::cin.read(buf, sizeof(buf)) || std::cin.gcount() > 0) {
      data.insert(data.end(), buf, buf + std::cin.gcount());
    }
    return data;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string read_text(const std::string& path) {
  auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

// write-temp-rename so an interrupted run never leaves a half-written file
void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw config_error("cannot write file: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    atomic_write(path, content);
  }
}

std::vector<TokenId> tokenize_prompt(const Vocabulary& vocab, const std::string& prompt) {
  auto ids = vocab.tokenize(prompt);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == kUnknownToken) {
      throw data_error("prompt word not in model vocabulary: " +
                       Vocabulary::split_words(prompt)[i]);
    }
  }
  return ids;
}

struct CommonOpts {
  std::string config_path;
  std::string model_path;
  std::optional<uint64_t> seed;

  Config load_config() const {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    if (seed) cfg.codec.seed = *seed;
    return cfg;
  }
};

std::unique_ptr<LlmClient> make_role_client(const RoleConfig& rc,
                                            const std::string& mock_override,
                                            std::shared_ptr<MockLlmClient>& shared_mock) {
  std::string mock_path = !mock_override.empty() ? mock_override : rc.mock_transcript_path;
  if (!mock_path.empty()) {
    // one shared transcript across roles keeps the global exchange order strict
    if (!shared_mock) {
      shared_mock = std::make_shared<MockLlmClient>(MockLlmClient::from_file(mock_path));
    }
    struct Shared : LlmClient {
      std::shared_ptr<MockLlmClient> inner;
      explicit Shared(std::shared_ptr<MockLlmClient> c) : inner(std::move(c)) {}
      std::string complete(const std::string& role, const std::string& prompt) override {
        return inner->complete(role, prompt);
      }
    };
    return std::make_unique<Shared>(shared_mock);
  }
  if (rc.endpoint_host.empty()) throw config_error("role has neither endpoint nor transcript");
  return std::make_unique<HttpLlmClient>(rc.endpoint_host, rc.endpoint_port, rc.model,
                                         rc.temperature, rc.api_key_env);
}

nlohmann::ordered_json step_log_json(const EncodeResult& result) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : result.steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step_index;
    j["kind"] = s.kind == StepKind::FullEmbed  ? "full_embed"
                : s.kind == StepKind::IndexOnly ? "index_only"
                                                : "no_embed";
    j["bin"] = s.bin_index;
    j["parity"] = s.parity_bit;
    j["token"] = s.token;
    j["bits"] = s.bits_consumed;
    j["p"] = s.p_used;
    j["candidates"] = s.candidate_count;
    steps.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["steps"] = std::move(steps);
  out["closure_tokens"] = result.closure_tokens;
  out["closure_capped"] = result.closure_capped;
  return out;
}

int cmd_train(const std::string& corpus_path, int order, double alpha,
              const std::string& out_path) {
  auto model = NgramModel::train(read_text(corpus_path), order, alpha);
  model.save(out_path);
  std::cerr << "trained order-" << order << " model, vocabulary " << model.vocab().size()
            << " tokens\n";
  return 0;
}

int cmd_encode(const CommonOpts& common, const std::string& secret_path,
               const std::string& prompt, const std::string& out_path,
               const std::string& step_log_path) {
  Config cfg = common.load_config();
  cfg.codec.validate();  // before any model load
  if (common.model_path.empty()) throw config_error("encode requires --model");
  auto model = NgramModel::load(common.model_path);
  CodecParams params = cfg.codec_for(model.vocab());
  auto secret = read_bytes(secret_path);
  auto prompt_ids = tokenize_prompt(model.vocab(), prompt);

  EncodeResult result = encode(secret, prompt_ids, model, params);

  nlohmann::ordered_json out;
  out["tokens"] = result.tokens;
  out["text"] = model.vocab().detokenize(result.tokens);
  write_output(out_path, out.dump() + "\n");
  if (!step_log_path.empty()) atomic_write(step_log_path, step_log_json(result).dump() + "\n");
  return 0;
}

int cmd_decode(const CommonOpts& common, const std::string& stego_path,
               const std::string& prompt, const std::string& out_path) {
  Config cfg = common.load_config();
  cfg.codec.validate();
  if (common.model_path.empty()) throw config_error("decode requires --model");
  auto model = NgramModel::load(common.model_path);
  CodecParams params = cfg.codec_for(model.vocab());
  auto prompt_ids = tokenize_prompt(model.vocab(), prompt);

  nlohmann::json stego_json;
  try {
    stego_json = nlohmann::json::parse(read_text(stego_path));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("corrupt stego file: ") + e.what());
  }
  auto tokens = stego_json.at("tokens").get<std::vector<TokenId>>();
  auto secret = decode(tokens, prompt_ids, model, params);
  write_output(out_path, std::string(secret.begin(), secret.end()));
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& cover_path,
             const std::string& stego_path, uint64_t payload_bits,
             const std::string& out_path) {
  Config cfg = common.load_config();
  std::string cover = read_text(cover_path);
  std::string stego = read_text(stego_path);
  HashedTfEmbedder embedder;

  EvaluationReport report;
  report.er = payload_bits == 0 && Vocabulary::split_words(stego).empty()
                  ? 0.0
                  : embedding_rate(payload_bits, stego);
  report.ss = semantic_similarity(stego, cover, embedder);
  if (!common.model_path.empty()) {
    auto model = NgramModel::load(common.model_path);
    report.ppl = perplexity(stego, model);
    report.ppl_star = ppl_star(report.ppl, perplexity(cover, model));
  }
  auto split = [](const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      cur += c;
      if (c == '.' || c == '!' || c == '?') out.push_back(cur), cur.clear();
    }
    if (!Vocabulary::split_words(cur).empty()) out.push_back(cur);
    return out;
  };
  auto cover_sents = split(cover);
  auto stego_sents = split(stego);
  if (cover_sents.size() >= 2 && stego_sents.size() >= 2) {
    std::vector<std::vector<double>> cov, stg;
    for (const auto& s : cover_sents) cov.push_back(embedder.embed(s));
    for (const auto& s : stego_sents) stg.push_back(embedder.embed(s));
    report.kld = kld(cov, stg);
  }
  report.overall = aggregate_score(report, cfg.criteria);
  write_output(out_path, report.to_json().dump() + "\n");
  return 0;
}

StrategyLibrary open_library(const std::string& path, const Config& cfg) {
  StrategyLibrary lib = std::filesystem::exists(path)
                            ? StrategyLibrary::load(path)
                            : StrategyLibrary(HashedTfEmbedder().dim(),
                                              HashedTfEmbedder().provider_tag());
  lib.set_dedup_threshold(cfg.dedup_threshold);
  return lib;
}

int cmd_library(const std::string& action, const std::string& lib_path,
                const std::string& arg, const Config& cfg) {
  if (lib_path.empty()) throw config_error("library commands require --library");
  if (action == "list") {
    StrategyLibrary lib = StrategyLibrary::load(lib_path);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& e : lib.entries()) {
      nlohmann::ordered_json row;
      row["id"] = e.id;
      row["name"] = e.name;
      row["best_score"] = e.best_example_score();
      rows.push_back(std::move(row));
    }
    std::cout << rows.dump() << "\n";
    return 0;
  }
  if (action == "show") {
    StrategyLibrary lib = StrategyLibrary::load(lib_path);
    const StrategyEntry* e = lib.find(std::stoll(arg));
    if (!e) throw data_error("no entry with id " + arg);
    std::cout << StrategyLibrary::entry_to_json(*e).dump() << "\n";
    return 0;
  }
  if (action == "import") {
    StrategyLibrary lib = open_library(lib_path, cfg);
    HashedTfEmbedder embedder;
    nlohmann::json entries;
    try {
      entries = nlohmann::json::parse(read_text(arg));
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("corrupt import file: ") + e.what());
    }
    size_t imported = 0;
    for (const auto& je : entries) {
      StrategyEntry entry = StrategyLibrary::entry_from_json(je);
      if (entry.key.empty()) entry.key = embedder.embed(entry.definition);
      lib.import_entry(std::move(entry));
      ++imported;
    }
    lib.save(lib_path + ".tmp");
    std::filesystem::rename(lib_path + ".tmp", lib_path);
    std::cerr << "imported " << imported << " entries\n";
    return 0;
  }
  if (action == "export") {
    StrategyLibrary lib = StrategyLibrary::load(lib_path);
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& e : lib.entries()) out.push_back(StrategyLibrary::entry_to_json(e));
    write_output(arg, out.dump() + "\n");
    return 0;
  }
  throw config_error("unknown library action: " + action);
}

struct AgentClients {
  std::shared_ptr<MockLlmClient> shared_mock;
  std::unique_ptr<LlmClient> steg, scorer, summarizer, decoder;
  AgentRoles roles;
};

AgentClients make_clients(const Config& cfg, const std::string& mock_override) {
  AgentClients c;
  auto get = [&](const char* name) -> std::unique_ptr<LlmClient> {
    auto it = cfg.roles.find(name);
    if (it == cfg.roles.end() && mock_override.empty()) return nullptr;
    RoleConfig rc = it == cfg.roles.end() ? RoleConfig{} : it->second;
    return make_role_client(rc, mock_override, c.shared_mock);
  };
  c.steg = get("steganography");
  c.scorer = get("scorer");
  c.summarizer = get("summarizer");
  c.decoder = get("decoder");
  c.roles = AgentRoles{c.steg.get(), c.scorer.get(), c.summarizer.get(), c.decoder.get()};
  return c;
}

std::string ledger_text(const std::vector<StegoRecord>& records) {
  std::string out;
  for (const auto& r : records) out += r.to_json().dump() + "\n";
  return out;
}

Request request_from_json(const nlohmann::json& j, const Config& cfg) {
  Request req;
  req.cover_text = j.at("cover_text").get<std::string>();
  std::string hex = j.value("secret_hex", std::string());
  for (size_t i = 0; i + 1 < hex.size(); i += 2) {
    req.secret.push_back(static_cast<uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  }
  req.requirements = j.value("requirements", std::string());
  req.budget = j.value("budget", cfg.runtime_iterations);
  req.threshold = j.value("threshold", cfg.threshold);
  return req;
}

int cmd_agent(const std::string& action, const CommonOpts& common,
              const std::string& lib_path, const std::string& requests_path,
              const std::string& mock_path, const std::string& ledger_path,
              std::optional<int> budget, std::optional<size_t> k) {
  Config cfg = common.load_config();
  if (budget) cfg.runtime_iterations = *budget;
  if (k) cfg.k = *k;
  std::string library_path = !lib_path.empty() ? lib_path : cfg.library_path;
  if (library_path.empty()) throw config_error("agent commands require a library path");

  StrategyLibrary lib = open_library(library_path, cfg);
  AgentClients clients = make_clients(cfg, mock_path);

  HashedTfEmbedder embedder;
  std::optional<NgramModel> model;
  if (!common.model_path.empty()) model = NgramModel::load(common.model_path);
  EvalContext ctx;
  ctx.model = model ? &*model : nullptr;
  ctx.embedder = &embedder;
  ctx.criteria = cfg.criteria;

  nlohmann::json requests_json;
  try {
    requests_json = nlohmann::json::parse(read_text(requests_path));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("corrupt requests file: ") + e.what());
  }

  std::vector<StegoRecord> all_records;
  if (action == "warmup") {
    std::vector<Request> requests;
    for (const auto& jr : requests_json) requests.push_back(request_from_json(jr, cfg));
    LoopResult res = warmup(requests, cfg.warmup_iterations, lib, clients.roles, ctx);
    all_records = std::move(res.records);
    std::cerr << "warmup complete: " << res.admitted.size() << " entries admitted\n";
  } else if (action == "run") {
    LoopParams lp{cfg.k, cfg.gamma};
    for (const auto& jr : requests_json.is_array() ? requests_json
                                                   : nlohmann::json::array({requests_json})) {
      Request req = request_from_json(jr, cfg);
      LoopResult res = run_request(req, lib, clients.roles, ctx, lp);
      for (auto& r : res.records) all_records.push_back(std::move(r));
      std::cerr << (res.kind == OutcomeKind::Accepted ? "accepted" : "exhausted") << " after "
                << res.records.size() << " iterations\n";
    }
  } else {
    throw config_error("unknown agent action: " + action);
  }

  lib.save(library_path + ".tmp");
  std::filesystem::rename(library_path + ".tmp", library_path);
  if (!ledger_path.empty()) atomic_write(ledger_path, ledger_text(all_records));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auto-Stega text steganography toolkit"};
  app.require_subcommand(1);

  CommonOpts common;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "JSON config file");
    cmd->add_option("--model", common.model_path, "model artifact path");
    cmd->add_option("--seed", common.seed, "shared codec seed");
  };

  // train
  std::string corpus_path, train_out;
  int order = 2;
  double alpha = 0.5;
  auto* train = app.add_subcommand("train", "train the builtin n-gram model");
  train->add_option("--corpus", corpus_path, "training corpus")->required();
  train->add_option("--order", order, "context length (1-4)");
  train->add_option("--alpha", alpha, "additive smoothing constant");
  train->add_option("--out", train_out, "output artifact path")->required();

  // encode / decode
  std::string secret_path = "-", prompt, out_path, step_log_path, stego_path;
  auto* enc = app.add_subcommand("encode", "embed a secret into stego tokens");
  add_common(enc);
  enc->add_option("--secret", secret_path, "secret bytes file, - for stdin");
  enc->add_option("--prompt", prompt, "prompt text (model vocabulary words)")->required();
  enc->add_option("--out", out_path, "stego JSON output path");
  enc->add_option("--step-log", step_log_path, "step log JSON path");

  auto* dec = app.add_subcommand("decode", "recover the secret from stego tokens");
  add_common(dec);
  dec->add_option("--stego", stego_path, "stego JSON file")->required();
  dec->add_option("--prompt", prompt, "prompt text used by the encoder")->required();
  dec->add_option("--out", out_path, "secret output path");

  // eval
  std::string cover_path;
  uint64_t payload_bits = 0;
  auto* ev = app.add_subcommand("eval", "evaluate stego text against a cover");
  add_common(ev);
  ev->add_option("--cover", cover_path, "cover text file")->required();
  ev->add_option("--stego-text", stego_path, "stego text file")->required();
  ev->add_option("--payload-bits", payload_bits, "embedded payload bit count");
  ev->add_option("--out", out_path, "report output path");

  // library
  std::string lib_path, lib_action, lib_arg;
  auto* libcmd = app.add_subcommand("library", "manage the strategy library");
  add_common(libcmd);
  libcmd->add_option("action", lib_action, "list | show | import | export")->required();
  libcmd->add_option("arg", lib_arg, "id (show), file (import/export)");
  libcmd->add_option("--library", lib_path, "library JSONL path")->required();

  // agent
  std::string agent_action, requests_path, mock_path, ledger_path;
  std::optional<int> budget_opt;
  std::optional<size_t> k_opt;
  auto* agent = app.add_subcommand("agent", "run the closed-loop agent");
  add_common(agent);
  agent->add_option("action", agent_action, "warmup | run")->required();
  agent->add_option("--requests", requests_path, "requests JSON file")->required();
  agent->add_option("--library", lib_path, "library JSONL path");
  agent->add_option("--mock-transcript", mock_path, "mock transcript for all roles");
  agent->add_option("--ledger", ledger_path, "run ledger JSONL output");
  agent->add_option("--budget", budget_opt, "iteration budget");
  agent->add_option("--k", k_opt, "shortlist size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(corpus_path, order, alpha, train_out);
    if (enc->parsed()) return cmd_encode(common, secret_path, prompt, out_path, step_log_path);
    if (dec->parsed()) return cmd_decode(common, stego_path, prompt, out_path);
    if (ev->parsed()) return cmd_eval(common, cover_path, stego_path, payload_bits, out_path);
    if (libcmd->parsed()) {
      return cmd_library(lib_action, lib_path, lib_arg, common.load_config());
    }
    if (agent->parsed()) {
      return cmd_agent(agent_action, common, lib_path, requests_path, mock_path, ledger_path,
                       budget_opt, k_opt);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
