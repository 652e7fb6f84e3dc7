#pragma once

// HTTP adapters for external model servers. Wire contracts:
//   POST /v1/distribution  {context_ids, model_name} -> {probs: [V floats]}
//   POST /v1/embed         {texts: [strings]}        -> {vectors: [[floats]]}
//   POST /v1/complete      {role, messages: [{role, content}], model, temperature}
//                                                    -> {text}

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "autostega/embedder.hpp"
#include "autostega/error.hpp"
#include "autostega/llm_client.hpp"
#include "autostega/lm.hpp"

namespace autostega {

namespace detail {

inline nlohmann::json post_json(httplib::Client& client, const std::string& path,
                                const nlohmann::json& body) {
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw transport_error("no response from remote endpoint " + path + " (retriable)");
  }
  if (res->status != 200) {
    throw transport_error("remote endpoint " + path + " returned status " +
                          std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw transport_error(std::string("malformed remote response: ") + e.what());
  }
}

}  // namespace detail

// Remote conditional-distribution source. Requires full-vocabulary
// probabilities: a top-K response cannot guarantee decodability, so short or
// zero-mass vectors are refused.
class RemoteModel : public LanguageModel {
 public:
  RemoteModel(std::string host, int port, std::string model_name,
              std::vector<std::string> vocab_tokens)
      : client_(std::make_unique<httplib::Client>(host, port)),
        model_name_(std::move(model_name)),
        vocab_(std::move(vocab_tokens)) {}

  const Vocabulary& vocab() const override { return vocab_; }

  TokenDistribution next_token_distribution(std::span<const TokenId> context) const override {
    for (TokenId id : context) {
      if (id >= vocab_.size()) throw data_error("unknown token id in context");
    }
    nlohmann::json body;
    body["context_ids"] = std::vector<TokenId>(context.begin(), context.end());
    body["model_name"] = model_name_;
    nlohmann::json res = detail::post_json(*client_, "/v1/distribution", body);

    auto probs = res.at("probs").get<std::vector<double>>();
    if (probs.size() != vocab_.size()) {
      throw config_error("remote model returned " + std::to_string(probs.size()) +
                         " probabilities for a vocabulary of " +
                         std::to_string(vocab_.size()) +
                         "; full-vocabulary output is required for decodability");
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!(p > 0.0)) {
        throw config_error("remote model returned a zero or negative probability; "
                           "full support is required for decodability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw config_error("remote model probabilities do not sum to 1");
    }
    TokenDistribution dist;
    dist.probs = std::move(probs);
    dist.recompute_entropy();
    return dist;
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string model_name_;
  Vocabulary vocab_;
};

class RemoteEmbedder : public Embedder {
 public:
  RemoteEmbedder(std::string host, int port, size_t dim, std::string tag)
      : client_(std::make_unique<httplib::Client>(host, port)),
        dim_(dim),
        tag_(std::move(tag)) {}

  size_t dim() const override { return dim_; }
  std::string provider_tag() const override { return tag_; }

  std::vector<double> embed(std::string_view text) const override {
    nlohmann::json body;
    body["texts"] = std::vector<std::string>{std::string(text)};
    nlohmann::json res = detail::post_json(*client_, "/v1/embed", body);
    auto vectors = res.at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != 1 || vectors[0].size() != dim_) {
      throw transport_error("remote embedder returned unexpected vector shape");
    }
    return vectors[0];
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  size_t dim_;
  std::string tag_;
};

// Chat-completions-style client; credentials come from an environment
// variable, never from the config file itself.
class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient(std::string host, int port, std::string model, double temperature,
                std::string api_key_env = "")
      : client_(std::make_unique<httplib::Client>(host, port)),
        model_(std::move(model)),
        temperature_(temperature) {
    if (!api_key_env.empty()) {
      const char* key = std::getenv(api_key_env.c_str());
      if (!key) throw config_error("credential environment variable not set: " + api_key_env);
      api_key_ = key;
    }
  }

  std::string complete(const std::string& role, const std::string& prompt) override {
    nlohmann::json body;
    body["role"] = role;
    body["model"] = model_;
    body["temperature"] = temperature_;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    if (!api_key_.empty()) {
      client_->set_default_headers({{"Authorization", "Bearer " + api_key_}});
    }
    nlohmann::json res = detail::post_json(*client_, "/v1/complete", body);
    return res.at("text").get<std::string>();
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string model_;
  double temperature_;
  std::string api_key_;
};

}  // namespace autostega
