#include <cmath>
#include <limits>
#include <random>

#include "cursor_hmm/classifier.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cursor_hmm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HmmModel deterministic_on(std::size_t symbol) {
  HmmModel m;
  m.pi = {1.0};
  m.a = Matrix(1, 1, 1.0);
  m.b = Matrix(1, 2, 0.0);
  m.b(0, symbol) = 1.0;
  m.symbol_names = {"s0", "s1"};
  return m;
}

// Two states, seven symbols; each state puts 0.85 on its own dominant symbol.
HmmModel dominant(std::size_t first, std::size_t second) {
  HmmModel m;
  m.pi = {0.5, 0.5};
  m.a = Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}});
  m.b = Matrix(2, 7, 0.15 / 6);
  m.b(0, first) = 0.85;
  m.b(1, second) = 0.85;
  m.symbol_names = {"A", "B", "C", "D", "E", "F", "R"};
  return m;
}

}  // namespace

TEST_CASE("decide reproduces the Table II decisions") {
  SUBCASE("T1") {
    const Decision d = decide({{"REP", -6908.1}, {"INT", -3110.8}});
    CHECK(d.winner == "INT");
    CHECK_FALSE(d.tie);
  }
  SUBCASE("T4") { CHECK(decide({{"REP", -1884.5}, {"INT", -2443.5}}).winner == "REP"); }
  SUBCASE("T3 margin") {
    const Decision d = decide({{"REP", -8203.4}, {"INT", -1195.5}});
    CHECK(d.winner == "INT");
    CHECK(d.margin == doctest::Approx(7007.9).epsilon(1e-9));
  }
}

TEST_CASE("decide edge cases") {
  SUBCASE("exact tie picks the smallest name") {
    const Decision d = decide({{"Y", -5.0}, {"X", -5.0}});
    CHECK(d.tie);
    CHECK(d.winner == "X");
    CHECK(d.margin == 0.0);
  }
  SUBCASE("single entry") {
    const Decision d = decide({{"only", -12.0}});
    CHECK(d.winner == "only");
    CHECK(d.margin == 0.0);
  }
  SUBCASE("loser at -inf gives an infinite margin") {
    const Decision d = decide({{"a", -3.0}, {"b", -kInf}});
    CHECK(d.winner == "a");
    CHECK(d.margin == kInf);
  }
  SUBCASE("all -inf") {
    CHECK_THROWS_AS(decide({{"a", -kInf}, {"b", -kInf}}), NoDecision);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(decide({}), std::invalid_argument); }
}

TEST_CASE("property: shifting all scores keeps winner and margin") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> score(-5000, -1);
  // Shifts are multiples of 1/8 on scores held to 1/8 so arithmetic is exact.
  std::uniform_int_distribution<int> shift(-8000, 8000);
  for (int trial = 0; trial < 200; ++trial) {
    TaskScores s;
    for (int k = 0; k < 4; ++k) s["t" + std::to_string(k)] = std::round(score(rng) * 8) / 8;
    const double c = shift(rng) / 8.0;
    TaskScores shifted;
    for (const auto& [name, v] : s) shifted[name] = v + c;
    const Decision a = decide(s);
    const Decision b = decide(shifted);
    CHECK(a.winner == b.winner);
    CHECK(a.margin == b.margin);
    CHECK(s.at(a.winner) == std::max({s["t0"], s["t1"], s["t2"], s["t3"]}));
  }
}

TEST_CASE("registry") {
  TaskModelRegistry reg;
  reg.add("a", deterministic_on(0));
  CHECK_THROWS_AS(reg.add("a", deterministic_on(1)), std::invalid_argument);
  HmmModel other = deterministic_on(1);
  other.symbol_names = {"s1", "s0"};
  CHECK_THROWS_AS(reg.add("b", other), AlphabetMismatch);
  CHECK(reg.size() == 1);
}

TEST_CASE("score_all delegates to log_likelihood") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    TaskModelRegistry reg;
    const HmmModel m1 = oracle::random_model(2, 3, rng);
    const HmmModel m2 = oracle::random_model(2, 3, rng);
    reg.add("one", m1);
    reg.add("two", m2);
    const auto seq = oracle::random_sequence(3, 6, rng);
    const TaskScores s = score_all(reg, seq);
    CHECK(oracle::rel_err(s.at("one"), std::log(oracle::enumerate_likelihood(m1, seq))) <= 1e-9);
    CHECK(oracle::rel_err(s.at("two"), std::log(oracle::enumerate_likelihood(m2, seq))) <= 1e-9);
  }
  SUBCASE("identical models score identically") {
    TaskModelRegistry reg;
    const HmmModel m = oracle::random_model(2, 3, rng);
    reg.add("x", m);
    reg.add("y", m);
    const TaskScores s = score_all(reg, oracle::random_sequence(3, 20, rng));
    CHECK(s.at("x") == s.at("y"));
  }
}

TEST_CASE("classify") {
  SUBCASE("loser that cannot produce the sequence") {
    TaskModelRegistry reg;
    reg.add("A", deterministic_on(0));
    reg.add("B", deterministic_on(1));
    const TaskScoreReport r = classify(reg, SymbolSequence{{0, 0, 0}, {}});
    CHECK(r.winner == "A");
    CHECK(r.margin == kInf);
    CHECK(r.scores.at("B") == -kInf);
  }
  SUBCASE("single model") {
    TaskModelRegistry reg;
    reg.add("solo", dominant(0, 1));
    const TaskScoreReport r = classify(reg, SymbolSequence{{0, 1, 2}, {}});
    CHECK(r.winner == "solo");
    CHECK(r.margin == 0.0);
  }
  SUBCASE("threshold flag") {
    TaskModelRegistry reg;
    reg.add("p", dominant(0, 1));
    reg.add("q", dominant(4, 5));
    const SymbolSequence seq{{0, 1, 0, 1, 0}, {}};
    CHECK(*classify(reg, seq, 1.0).above_threshold);
    CHECK_FALSE(*classify(reg, seq, 1e9).above_threshold);
    CHECK_FALSE(classify(reg, seq).threshold.has_value());
  }
  SUBCASE("scores are reproduced bit-for-bit by log_likelihood") {
    TaskModelRegistry reg;
    reg.add("p", dominant(0, 1));
    reg.add("q", dominant(4, 5));
    const Sample s = sample(reg.entries().at("p"), 300, 4);
    const TaskScoreReport r = classify(reg, s.sequence);
    for (const auto& [task, model] : reg.entries()) CHECK(r.scores.at(task) == log_likelihood(model, s.sequence));
    CHECK(r.winner == "p");
  }
}

TEST_CASE("win rate grows with sequence length") {
  // Overlapping models so short sequences are genuinely ambiguous.
  HmmModel p = dominant(0, 1);
  HmmModel q = dominant(0, 2);
  for (std::size_t k = 0; k < 7; ++k) {
    p.b(1, k) = q.b(1, k) = 1.0 / 7;
  }
  p.b(1, 0) += 0.05;
  p.b(1, 3) -= 0.05;
  q.b(1, 3) += 0.05;
  q.b(1, 0) -= 0.05;
  REQUIRE(validate(p).empty());
  REQUIRE(validate(q).empty());
  TaskModelRegistry reg;
  reg.add("p", p);
  reg.add("q", q);

  std::vector<double> rates;
  for (std::size_t len : {50, 200, 500}) {
    int wins = 0;
    constexpr int kTrials = 300;
    for (int i = 0; i < kTrials; ++i) {
      if (classify(reg, sample(p, len, 100000 + i).sequence).winner == "p") ++wins;
    }
    rates.push_back(static_cast<double>(wins) / kTrials);
  }
  MESSAGE("win rates at T=50/200/500: " << rates[0] << " " << rates[1] << " " << rates[2]);
  CHECK(rates[1] >= rates[0] - 0.02);
  CHECK(rates[2] >= rates[1] - 0.02);
  CHECK(rates[2] > rates[0]);
}
