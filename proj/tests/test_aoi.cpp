#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "cursor_hmm/aoi.hpp"
#include "doctest.h"

using namespace cursor_hmm;

namespace {

// E is large, A sits to its left; no overlap.
AoiLayout two_regions() {
  return AoiLayout({{"A", 0, 0, 100, 100}, {"E", 200, 0, 300, 200}});
}

AoiLayout seven_symbol_layout() {
  return AoiLayout({{"A", 0, 0, 10, 10},
                    {"B", 10, 0, 10, 10},
                    {"C", 20, 0, 10, 10},
                    {"D", 30, 0, 10, 10},
                    {"E", 40, 0, 10, 10},
                    {"F", 50, 0, 10, 10}});
}

std::vector<std::string> decode(const SymbolSequence& seq, const AoiLayout& layout) {
  const auto names = layout.alphabet();
  std::vector<std::string> out;
  for (std::size_t s : seq.symbols) out.push_back(names[s]);
  return out;
}

}  // namespace

TEST_CASE("layout validation") {
  CHECK_THROWS_AS(AoiLayout({{"A", 0, 0, 1, 1}, {"A", 5, 5, 1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(AoiLayout({{"R", 0, 0, 1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(AoiLayout({{"A", 0, 0, 0, 1}}), std::invalid_argument);
  const AoiLayout l = seven_symbol_layout();
  CHECK(l.alphabet_size() == 7);
  CHECK(l.alphabet() == std::vector<std::string>{"A", "B", "C", "D", "E", "F", "R"});
}

TEST_CASE("locate") {
  const AoiLayout l = two_regions();
  CHECK(locate(l, 350, 100) == 1);   // inside E
  CHECK(locate(l, 150, 50) == 2);    // nowhere -> R
  CHECK(locate(l, 100, 50) == 2);    // right edge of A is excluded
  CHECK(locate(l, 0, 0) == 0);       // top-left corner is included
  CHECK(locate(l, -1, -1) == 2);

  SUBCASE("overlap: first declared region wins, including on shared edges") {
    const AoiLayout overlap({{"P", 0, 0, 50, 50}, {"Q", 50, 0, 50, 50}, {"S", 25, 0, 50, 50}});
    CHECK(locate(overlap, 50, 10) == 1);  // edge between P and Q belongs to Q only
    CHECK(locate(overlap, 30, 10) == 0);  // P and S overlap, P declared first
    CHECK(locate(overlap, 60, 10) == 1);
  }
}

TEST_CASE("vectorize: golden traces") {
  const AoiLayout l = two_regions();
  SUBCASE("regular samples") {
    const CursorTrace trace({{0, 300, 50}, {10, 310, 60}, {20, 50, 50}, {30, 150, 150}});
    const SymbolSequence seq = vectorize(trace, l, 10);
    CHECK(decode(seq, l) == std::vector<std::string>{"E", "E", "A", "R"});
    CHECK(seq.meta.ds_ms == 10.0);
  }
  SUBCASE("single sample") {
    const SymbolSequence seq = vectorize(CursorTrace({{123, 250, 10}}), l, 10);
    CHECK(decode(seq, l) == std::vector<std::string>{"E"});
  }
  SUBCASE("jittered samples are carried forward") {
    // Ticks at 0, 10, 20 use samples at 0, 9, 9.
    const CursorTrace trace({{0, 50, 50}, {9, 300, 50}, {21, 150, 150}});
    const SymbolSequence seq = vectorize(trace, l, 10);
    CHECK(decode(seq, l) == std::vector<std::string>{"A", "E", "E"});
  }
  SUBCASE("non-positive ds") {
    const CursorTrace trace({{0, 0, 0}});
    CHECK_THROWS_AS(vectorize(trace, l, 0), std::invalid_argument);
    CHECK_THROWS_AS(vectorize(trace, l, -5), std::invalid_argument);
  }
}

TEST_CASE("trace validation") {
  CHECK_THROWS_AS(CursorTrace({}), std::invalid_argument);
  CHECK_THROWS_AS(CursorTrace({{0, 0, 0}, {0, 1, 1}}), std::invalid_argument);
}

TEST_CASE("fixation_report") {
  const AoiLayout l = seven_symbol_layout();
  SUBCASE("E E E R") {
    const auto pct = fixation_report(SymbolSequence{{4, 4, 4, 6}, {}}, l);
    CHECK(pct == std::vector<double>{0, 0, 0, 0, 75.0, 0, 25.0});
  }
  SUBCASE("uniform cycle") {
    SymbolSequence seq;
    for (int i = 0; i < 70; ++i) seq.symbols.push_back(static_cast<std::size_t>(i % 7));
    for (double p : fixation_report(seq, l)) CHECK(p == doctest::Approx(100.0 / 7.0));
  }
  SUBCASE("alphabet mismatch") {
    CHECK_THROWS_AS(fixation_report(SymbolSequence{{7}, {}}, l), AlphabetMismatch);
  }
}

TEST_CASE("property: vectorize length and report sums") {
  std::mt19937_64 rng(1234);
  const AoiLayout l = seven_symbol_layout();
  std::uniform_real_distribution<double> pos(-10, 70);
  std::uniform_real_distribution<double> gap(0.5, 25);
  std::uniform_real_distribution<double> ds_dist(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CursorSample> samples;
    double t = 0;
    const int count = 1 + trial % 40;
    for (int i = 0; i < count; ++i) {
      samples.push_back({t, pos(rng), pos(rng) / 7});
      t += gap(rng);
    }
    const CursorTrace trace(samples);
    const double ds = ds_dist(rng);
    const SymbolSequence seq = vectorize(trace, l, ds);
    const auto expected_len =
        static_cast<std::size_t>(std::floor((samples.back().t_ms - samples.front().t_ms) / ds)) + 1;
    CHECK(seq.size() == expected_len);
    const auto pct = fixation_report(seq, l);
    const double sum = std::accumulate(pct.begin(), pct.end(), 0.0);
    CHECK(std::abs(sum - 100.0) <= 1e-9);
    for (double p : pct) CHECK(p >= 0.0);
  }
}

TEST_CASE("property: translating layout and trace together changes nothing") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pos(-10, 70);
  std::uniform_int_distribution<int> shift(-500, 500);
  const AoiLayout base = seven_symbol_layout();
  for (int trial = 0; trial < 50; ++trial) {
    const double dx = shift(rng);
    const double dy = shift(rng);
    std::vector<Region> moved_regions;
    for (auto r : base.regions()) {
      r.x += dx;
      r.y += dy;
      moved_regions.push_back(r);
    }
    const AoiLayout moved(moved_regions);
    std::vector<CursorSample> a, b;
    for (int i = 0; i < 30; ++i) {
      const double x = pos(rng), y = pos(rng) / 7;
      a.push_back({i * 10.0, x, y});
      b.push_back({i * 10.0, x + dx, y + dy});
    }
    CHECK(vectorize(CursorTrace(a), base, 10).symbols == vectorize(CursorTrace(b), moved, 10).symbols);
  }
}

TEST_CASE("property: finer sampling only reuses symbols seen at samples") {
  std::mt19937_64 rng(2);
  const AoiLayout l = seven_symbol_layout();
  std::uniform_int_distribution<int> region(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CursorSample> samples;
    std::set<std::size_t> at_samples;
    for (int i = 0; i < 12; ++i) {
      const int r = region(rng);
      samples.push_back({i * 17.0, r * 10.0 + 5, 5});
      at_samples.insert(static_cast<std::size_t>(r));
    }
    const CursorTrace trace(samples);
    for (double ds : {40.0, 10.0, 1.0}) {
      for (std::size_t s : vectorize(trace, l, ds).symbols) CHECK(at_samples.contains(s));
    }
  }
}
