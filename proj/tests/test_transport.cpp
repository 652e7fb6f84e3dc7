#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "autostega/codec.hpp"
#include "autostega/remote.hpp"

using namespace autostega;
using nlohmann::json;

namespace {

// In-process model server backing the remote adapters. Serves a real n-gram
// model so the codec can run over the wire end to end.
class TestServer {
 public:
  explicit TestServer(const NgramModel& model) : model_(model) {
    server_.Post("/v1/distribution", [this](const httplib::Request& req,
                                            httplib::Response& res) {
      json body = json::parse(req.body);
      last_model_name = body.value("model_name", "");
      auto ctx = body.at("context_ids").get<std::vector<TokenId>>();
      json out;
      if (truncate_probs) {
        out["probs"] = std::vector<double>{0.5, 0.5};
      } else if (zero_prob) {
        std::vector<double> p(model_.vocab().size(), 0.0);
        p[0] = 1.0;
        out["probs"] = p;
      } else {
        out["probs"] = model_.next_token_distribution(ctx).probs;
      }
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      auto texts = body.at("texts").get<std::vector<std::string>>();
      json out;
      std::vector<std::vector<double>> vectors;
      for (const auto& t : texts) {
        vectors.push_back({static_cast<double>(t.size()), 1.0, 0.0});
      }
      out["vectors"] = vectors;
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      last_role = body.value("role", "");
      if (fail_with_500) {
        res.status = 500;
        return;
      }
      json out;
      out["text"] = "echo: " + body.at("messages")[0].at("content").get<std::string>();
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }

  std::atomic<bool> truncate_probs{false};
  std::atomic<bool> zero_prob{false};
  std::atomic<bool> fail_with_500{false};
  std::string last_model_name;
  std::string last_role;
  std::string last_auth;

 private:
  const NgramModel& model_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

NgramModel& backing_model() {
  static NgramModel model = [] {
    std::string corpus;
    for (int i = 0; i < 200; ++i) {
      corpus += "the quick brown fox jumps over the lazy dog again . ";
      corpus += "a quiet gray cat naps under the warm porch light . ";
    }
    // heavy smoothing keeps per-step candidate sets wide enough for binning
    return NgramModel::train(corpus, 2, 50.0);
  }();
  return model;
}

}  // namespace

TEST_CASE("remote model serves distributions identical to the local model") {
  NgramModel& model = backing_model();
  TestServer server(model);
  RemoteModel remote("127.0.0.1", server.port(), "test-model", model.vocab().tokens());

  std::vector<TokenId> ctx = model.vocab().tokenize("the quick");
  auto local = model.next_token_distribution(ctx);
  auto wire = remote.next_token_distribution(ctx);
  REQUIRE(wire.probs.size() == local.probs.size());
  for (size_t i = 0; i < local.probs.size(); ++i) {
    CHECK(wire.probs[i] == doctest::Approx(local.probs[i]).epsilon(1e-12));
  }
  CHECK(server.last_model_name == "test-model");
  CHECK_THROWS_AS(remote.next_token_distribution(std::vector<TokenId>{kUnknownToken}), Error);
}

TEST_CASE("remote model refuses partial-vocabulary responses") {
  NgramModel& model = backing_model();
  TestServer server(model);
  RemoteModel remote("127.0.0.1", server.port(), "m", model.vocab().tokens());
  server.truncate_probs = true;
  try {
    remote.next_token_distribution(std::vector<TokenId>{});
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("decodability") != std::string::npos);
  }
}

TEST_CASE("remote model refuses zero-mass tokens") {
  NgramModel& model = backing_model();
  TestServer server(model);
  RemoteModel remote("127.0.0.1", server.port(), "m", model.vocab().tokens());
  server.zero_prob = true;
  CHECK_THROWS_AS(remote.next_token_distribution(std::vector<TokenId>{}), Error);
}

TEST_CASE("codec round trip through the wire") {
  NgramModel& model = backing_model();
  TestServer server(model);
  RemoteModel remote("127.0.0.1", server.port(), "m", model.vocab().tokens());

  CodecParams params;
  params.bin_count = 4;
  params.min_candidates = 8;
  params.p_min = 0.5;
  params.p_max = 0.95;
  params.seed = 99;
  params.punctuation = {model.vocab().id_of(".")};

  std::vector<uint8_t> secret{0xC0, 0xFF, 0xEE};
  std::vector<TokenId> prompt = model.vocab().tokenize("the quick");
  EncodeResult enc = encode(secret, prompt, remote, params);
  // decode against the local model: same distributions, same result
  CHECK(decode(enc.tokens, prompt, model, params) == secret);
}

TEST_CASE("remote embedder validates the response shape") {
  NgramModel& model = backing_model();
  TestServer server(model);
  RemoteEmbedder good("127.0.0.1", server.port(), 3, "test-embed");
  auto v = good.embed("abcd");
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 4.0);

  RemoteEmbedder wrong_dim("127.0.0.1", server.port(), 7, "test-embed");
  CHECK_THROWS_AS(wrong_dim.embed("abcd"), Error);
}

TEST_CASE("http llm client: role, echo, bearer credentials") {
  NgramModel& model = backing_model();
  TestServer server(model);

  HttpLlmClient plain("127.0.0.1", server.port(), "chat-model", 0.7);
  CHECK(plain.complete("scorer", "hello") == "echo: hello");
  CHECK(server.last_role == "scorer");
  CHECK(server.last_auth.empty());

  setenv("AUTOSTEGA_TEST_KEY", "sk-fake-123", 1);
  HttpLlmClient authed("127.0.0.1", server.port(), "chat-model", 0.7, "AUTOSTEGA_TEST_KEY");
  CHECK(authed.complete("decoder", "hi") == "echo: hi");
  CHECK(server.last_auth == "Bearer sk-fake-123");
  unsetenv("AUTOSTEGA_TEST_KEY");

  CHECK_THROWS_AS(HttpLlmClient("127.0.0.1", server.port(), "m", 0.7, "AUTOSTEGA_NO_SUCH_VAR"),
                  Error);
}

TEST_CASE("transport failures map to the transport error kind") {
  NgramModel& model = backing_model();
  TestServer server(model);
  server.fail_with_500 = true;
  HttpLlmClient client("127.0.0.1", server.port(), "m", 0.0);
  try {
    client.complete("scorer", "x");
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
    CHECK(e.exit_code() == 4);
  }

  // nothing listening on this port
  HttpLlmClient dead("127.0.0.1", 1, "m", 0.0);
  try {
    dead.complete("scorer", "x");
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
  }
}
