#pragma once

#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "autostega/error.hpp"

namespace autostega {

// Role-tagged completion client. Roles: steganography, scorer, summarizer, decoder.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& role, const std::string& prompt) = 0;
};

// Deterministic transcript replay: {"exchanges": [{"role": ..., "response": ...}]},
// consumed strictly in order. A role mismatch or an exhausted script is a
// scenario error, which makes agent runs hermetic and golden-testable.
class MockLlmClient : public LlmClient {
 public:
  explicit MockLlmClient(const nlohmann::json& transcript) {
    for (const auto& ex : transcript.at("exchanges")) {
      exchanges_.push_back({ex.at("role").get<std::string>(),
                            ex.at("response").get<std::string>()});
    }
  }

  static MockLlmClient from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read mock transcript: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw data_error(std::string("corrupt mock transcript: ") + e.what());
    }
    return MockLlmClient(j);
  }

  std::string complete(const std::string& role, const std::string& prompt) override {
    if (exchanges_.empty()) {
      throw data_error("mock transcript exhausted at role '" + role + "'");
    }
    Exchange ex = exchanges_.front();
    if (ex.role != role) {
      throw data_error("mock transcript expected role '" + ex.role + "', got '" + role + "'");
    }
    exchanges_.pop_front();
    requests_.push_back({role, prompt});
    return ex.response;
  }

  size_t remaining() const { return exchanges_.size(); }

  struct Request {
    std::string role;
    std::string prompt;
  };
  const std::vector<Request>& requests() const { return requests_; }

 private:
  struct Exchange {
    std::string role;
    std::string response;
  };
  std::deque<Exchange> exchanges_;
  std::vector<Request> requests_;
};

}  // namespace autostega
