#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "autostega/embedder.hpp"
#include "autostega/metrics.hpp"

using namespace autostega;

TEST_CASE("embedding rate: bits over whitespace words") {
  CHECK(embedding_rate(57, "one two three four five six seven") ==
        doctest::Approx(57.0 / 7.0).epsilon(1e-12));
  CHECK(embedding_rate(0, "a b") == 0.0);
  CHECK_THROWS_AS(embedding_rate(5, "   "), Error);
}

TEST_CASE("perplexity of a uniform model equals V") {
  auto model = NgramModel::uniform({"a", "b", "c", "d"});
  CHECK(perplexity("a", model) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(perplexity("a b a c d", model) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(perplexity("", model), Error);
  CHECK_THROWS_AS(perplexity("zzz", model), Error);
}

TEST_CASE("perplexity hand oracle on a trained model") {
  // corpus "a b a b a", order 1, alpha 1: p(a|start)=3+1 / 5+2, p(b|a)=0.75,
  // p(a|b)=(2+1)/(2+2)=0.75
  auto model = NgramModel::train("a b a b a", 1, 1.0);
  double p1 = 4.0 / 7.0, p2 = 0.75, p3 = 0.75;
  double expect = std::exp(-(std::log(p1) + std::log(p2) + std::log(p3)) / 3.0);
  CHECK(perplexity("a b a", model) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ppl_star: relative deviation") {
  CHECK(ppl_star(115.03, 113.89) ==
        doctest::Approx(std::abs(115.03 - 113.89) / 113.89).epsilon(1e-12));
  CHECK(ppl_star(100.0, 100.0) == 0.0);
  CHECK(ppl_star(50.0, 100.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(ppl_star(1.0, 0.0), Error);
}

TEST_CASE("semantic similarity: identity and scale invariance") {
  HashedTfEmbedder e;
  CHECK(semantic_similarity("the cat sat", "the cat sat", e) ==
        doctest::Approx(1.0).epsilon(1e-9));
  // repeating the text scales term frequencies uniformly; cosine is unchanged
  CHECK(semantic_similarity("the cat sat", "the cat sat the cat sat", e) ==
        doctest::Approx(1.0).epsilon(1e-9));
  double d = semantic_similarity("alpha beta gamma", "delta epsilon zeta", e);
  CHECK(d < 0.99);
  CHECK_THROWS_AS(semantic_similarity("", "x", e), Error);
}

TEST_CASE("gaussian kld: zero at identity, 0.5 at unit mean shift") {
  CHECK(kld_gaussian(0.0, 1.0, 0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kld_gaussian(0.0, 1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kld_gaussian(2.0, 3.0, 2.0, 3.0) == doctest::Approx(0.0).epsilon(1e-12));
  // asymmetric in its arguments
  CHECK(kld_gaussian(0.0, 1.0, 0.0, 2.0) != doctest::Approx(kld_gaussian(0.0, 2.0, 0.0, 1.0)));
}

TEST_CASE("kld over embedding sets: identical sets score zero") {
  std::vector<std::vector<double>> a = {{0.1, 0.2}, {0.3, 0.1}, {0.2, 0.4}};
  CHECK(kld(a, a) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(kld({{0.1}}, a), Error);
  std::vector<std::vector<double>> bad = {{0.1, 0.2}, {0.3}};
  CHECK_THROWS_AS(kld(a, bad), Error);
}

TEST_CASE("kld grows with mean separation") {
  std::vector<std::vector<double>> cover = {{0.0}, {0.1}, {-0.1}, {0.05}};
  std::vector<std::vector<double>> near = {{0.2}, {0.3}, {0.1}, {0.25}};
  std::vector<std::vector<double>> far = {{2.0}, {2.1}, {1.9}, {2.05}};
  CHECK(kld(cover, near) < kld(cover, far));
}

TEST_CASE("dimension band: linear map with clamping") {
  DimensionBand er{8.0, 0.0};
  CHECK(er.score(8.0) == doctest::Approx(10.0));
  CHECK(er.score(4.0) == doctest::Approx(5.0));
  CHECK(er.score(0.0) == doctest::Approx(0.0));
  CHECK(er.score(12.0) == doctest::Approx(10.0));  // clamp past best
  CHECK(er.score(-1.0) == doctest::Approx(0.0));

  DimensionBand det{0.0, 1.0};  // inverted: low raw value is good
  CHECK(det.score(0.0) == doctest::Approx(10.0));
  CHECK(det.score(0.3) == doctest::Approx(7.0));  // realizes 10 - 10p
  CHECK(det.score(1.0) == doctest::Approx(0.0));
}

TEST_CASE("aggregate: equal-weight mean of 10, 9, 8, 7 is 8.5") {
  ScoreCriteria c;
  c.dims["er"] = DimensionBand{8, 0};
  c.dims["ss"] = DimensionBand{1, 0};
  c.dims["kld"] = DimensionBand{0, 5};
  c.dims["detector"] = DimensionBand{0, 1};
  std::map<std::string, double> scores{
      {"er", 10.0}, {"ss", 9.0}, {"kld", 8.0}, {"detector", 7.0}};
  EvaluationReport report;
  CHECK(aggregate_score(report, c, &scores) == doctest::Approx(8.5).epsilon(1e-12));
}

TEST_CASE("aggregate: weights and missing dimensions") {
  ScoreCriteria c;
  c.dims["er"] = DimensionBand{8, 0, 3.0};
  c.dims["ss"] = DimensionBand{1, 0, 1.0};
  std::map<std::string, double> scores{{"er", 10.0}, {"ss", 2.0}};
  EvaluationReport report;
  CHECK(aggregate_score(report, c, &scores) == doctest::Approx(8.0).epsilon(1e-12));

  std::map<std::string, double> incomplete{{"er", 10.0}};
  CHECK_THROWS_AS(aggregate_score(report, c, &incomplete), Error);
  ScoreCriteria empty;
  CHECK_THROWS_AS(aggregate_score(report, empty), Error);
}

TEST_CASE("aggregate from a raw report uses the band mapping") {
  EvaluationReport report;
  report.er = 4.0;       // band {8, 0} -> 5
  report.ppl_star = 0.5; // band {0, 1} -> 5
  report.ss = 0.5;       // band {1, 0} -> 5
  report.kld = 2.5;      // band {0, 5} -> 5
  report.detector = 0.5; // band {0, 1} -> 5
  CHECK(aggregate_score(report, ScoreCriteria::defaults()) ==
        doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("report json carries every dimension") {
  EvaluationReport report;
  report.er = 1.5;
  report.response = "fine";
  report.overall = 6.0;
  auto j = report.to_json();
  CHECK(j.at("er") == 1.5);
  CHECK(j.at("response") == "fine");
  CHECK(j.at("overall") == 6.0);
  for (const char* k : {"ppl", "ppl_star", "ss", "kld", "detector"}) CHECK(j.contains(k));
}

TEST_CASE("text stats hand oracle") {
  // "the cat the." -> 3 words, 2 unique forms... "the" repeats, "the." differs
  TextStats s = TextStats::of("aa bb aa c.");
  CHECK(s.type_token_ratio == doctest::Approx(3.0 / 4.0));
  CHECK(s.mean_word_length == doctest::Approx(8.0 / 4.0));
  CHECK(s.punctuation_rate == doctest::Approx(1.0 / 8.0));
}

namespace {

std::vector<std::string> cover_corpus() {
  return {
      "The market opened quietly this morning with traders watching the overnight report.",
      "A gentle rain settled over the valley while the farmers checked their fences.",
      "She finished the letter, sealed the envelope, and walked down to the post office.",
      "The committee reviewed the proposal and asked for two small revisions before voting.",
      "Every autumn the river runs lower and the gravel bars appear along the bend.",
      "He tuned the old radio until a faint station emerged through the static.",
      "The bakery sells out of rye bread most Saturdays, so arrive before nine.",
      "Our neighbors planted a row of maples along the property line last spring.",
      "The museum extended its hours for the exhibit, drawing visitors from nearby towns.",
      "After the storm passed, the crew cleared branches from the road by noon.",
      "The lecture covered the early history of navigation and the use of star charts.",
      "A small dog trotted across the square, pausing to inspect every bench.",
  };
}

}  // namespace

TEST_CASE("detector: plausible cover scores low, repeated-word text scores high") {
  auto covers = cover_corpus();
  BaselineDetector det = BaselineDetector::calibrate(covers);
  // in-distribution text stays under the decision band
  CHECK(det.score("The grocer stacked the crates near the door before the morning rush.") <=
        0.6);
  // pathological repetition collapses the type-token ratio far from calibration
  std::string degenerate;
  for (int i = 0; i < 40; ++i) degenerate += "word word word word ";
  CHECK(det.score(degenerate) > 0.9);

  CHECK_THROWS_AS(BaselineDetector::calibrate({"one", "two"}), Error);
}

TEST_CASE("detector is deterministic") {
  auto covers = cover_corpus();
  BaselineDetector a = BaselineDetector::calibrate(covers);
  BaselineDetector b = BaselineDetector::calibrate(covers);
  CHECK(a.score("The crew cleared the road.") == b.score("The crew cleared the road."));
}

TEST_CASE("embedder: unit norm, determinism, empty text") {
  HashedTfEmbedder e;
  auto v = e.embed("some plain sentence");
  CHECK(v.size() == e.dim());
  double norm = 0.0;
  for (double x : v) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.embed("some plain sentence") == v);
  auto z = e.embed("");
  for (double x : z) CHECK(x == 0.0);
}
