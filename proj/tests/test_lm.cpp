#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "autostega/lm.hpp"

using namespace autostega;

TEST_CASE("tokenize round trip") {
  Vocabulary vocab({"cat", "sat", "the"});
  CHECK(vocab.tokenize("").empty());
  CHECK(vocab.detokenize(std::vector<TokenId>{}) == "");

  auto ids = vocab.tokenize("the cat");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == vocab.id_of("the"));
  CHECK(ids[1] == vocab.id_of("cat"));
  CHECK(vocab.detokenize(ids) == "the cat");

  // double space normalizes to single-space ids and rendering
  CHECK(vocab.tokenize("the  cat") == ids);

  CHECK(vocab.tokenize("dog")[0] == kUnknownToken);
}

TEST_CASE("train_ngram rejects alpha = 0 and empty corpus") {
  CHECK_THROWS_AS(NgramModel::train("a b a b", 1, 0.0), Error);
  CHECK_THROWS_AS(NgramModel::train("", 1, 1.0), Error);
  CHECK_THROWS_AS(NgramModel::train("a b", 0, 1.0), Error);
  CHECK_THROWS_AS(NgramModel::train("a b", 5, 1.0), Error);
}

TEST_CASE("order-1 hand-count oracle: p(b|a) = 0.75") {
  // corpus "a b a b a": "a" is followed by "b" twice, V = 2
  auto model = NgramModel::train("a b a b a", 1, 1.0);
  REQUIRE(model.vocab().size() == 2);
  std::vector<TokenId> ctx{model.vocab().id_of("a")};
  auto dist = model.next_token_distribution(ctx);
  CHECK(dist.probs[model.vocab().id_of("b")] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(dist.probs[model.vocab().id_of("a")] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("unseen context falls back to uniform") {
  auto model = NgramModel::train("a b a b a c", 2, 1.0);
  // context "c c" never occurs with length-2 counts; length is capped to the
  // query, so query an order-2 context absent from the corpus
  std::vector<TokenId> ctx{model.vocab().id_of("c"), model.vocab().id_of("c")};
  auto dist = model.next_token_distribution(ctx);
  for (double p : dist.probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("uniform model has entropy log2 V") {
  auto model = NgramModel::uniform({"a", "b", "c", "d"});
  auto dist = model.next_token_distribution(std::vector<TokenId>{});
  for (double p : dist.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(dist.entropy_bits == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("distributions sum to 1, full support, deterministic") {
  auto model = NgramModel::train("the cat sat on the mat the cat ran", 2, 0.5);
  std::vector<TokenId> ctx = model.vocab().tokenize("the cat");
  auto d1 = model.next_token_distribution(ctx);
  auto d2 = model.next_token_distribution(ctx);
  CHECK(d1.probs == d2.probs);
  double sum = 0.0;
  for (double p : d1.probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  double h = 0.0;
  for (double p : d1.probs) h -= p * std::log2(p);
  CHECK(d1.entropy_bits == doctest::Approx(h).epsilon(1e-9));
}

TEST_CASE("unknown token id in context is an input error") {
  auto model = NgramModel::train("a b a", 1, 1.0);
  std::vector<TokenId> ctx{kUnknownToken};
  CHECK_THROWS_AS(model.next_token_distribution(ctx), Error);
}

TEST_CASE("model artifact round trip is bit-exact") {
  auto model = NgramModel::train("the cat sat on the mat and the cat ran away", 2, 0.25);
  std::string path = (std::filesystem::temp_directory_path() / "autostega_model.json").string();
  model.save(path);
  auto loaded = NgramModel::load(path);
  std::remove(path.c_str());

  CHECK(loaded.order() == model.order());
  CHECK(loaded.alpha() == model.alpha());
  CHECK(loaded.vocab().tokens() == model.vocab().tokens());
  // every context the original can produce yields bit-identical distributions
  std::vector<std::vector<TokenId>> contexts = {
      {},
      model.vocab().tokenize("the"),
      model.vocab().tokenize("the cat"),
      model.vocab().tokenize("ran away"),
  };
  for (const auto& ctx : contexts) {
    CHECK(model.next_token_distribution(ctx).probs ==
          loaded.next_token_distribution(ctx).probs);
  }
}
