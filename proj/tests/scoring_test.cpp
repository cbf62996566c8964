#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "qac/scoring.hpp"
#include "support.hpp"

namespace qac {
namespace {

TEST(Score, LinearFormula) {
  EXPECT_EQ(score({"q", 10, 100, 1000}, {1.0, 0.1, 0.01}), 30.0);
  EXPECT_EQ(score({"q", 0, 0, 0}, {1.0, 0.1, 0.01}), 0.0);
  EXPECT_EQ(score({"q", 7, 8, 9}, {0.0, 0.0, 0.0}), 0.0);
}

TEST(Score, LinearInWeightsAndStats) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> count(0, 1000);
  std::uniform_real_distribution<double> weight(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const QueryStats s{"q", count(rng), count(rng), count(rng)};
    const Weights w1{weight(rng), weight(rng), weight(rng)};
    const Weights w2{weight(rng), weight(rng), weight(rng)};
    const Weights sum{w1.atc + w2.atc, w1.clicks + w2.clicks, w1.impressions + w2.impressions};
    EXPECT_NEAR(score(s, sum), score(s, w1) + score(s, w2), 1e-9);
    const std::uint64_t k = 1 + i % 5;
    const QueryStats scaled{"q", k * s.atc, k * s.clicks, k * s.impressions};
    EXPECT_NEAR(score(scaled, w1), static_cast<double>(k) * score(s, w1), 1e-9);
  }
}

TEST(Score, RankingInvariantUnderPositiveRescale) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint64_t> count(0, 50);
  std::vector<QueryStats> stats;
  for (int i = 0; i < 200; ++i) {
    stats.push_back({"q" + std::to_string(i), count(rng), count(rng), count(rng)});
  }
  auto order = [&](const Weights& w) {
    const auto scored = score_all(stats, w);
    std::vector<std::size_t> idx(scored.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
    return idx;
  };
  const Weights w{1.0, 0.25, 0.125};
  for (double k : {0.5, 2.0, 8.0, 1024.0}) {
    EXPECT_EQ(order(w), order({k * w.atc, k * w.clicks, k * w.impressions})) << k;
  }
}

/// Events whose next-window ATC is exactly 2*atc + 0.5*clicks + 0*impressions
/// of the history window.
std::vector<RawEvent> planted_events(std::mt19937_64& rng, const FitOptions& opt,
                                     std::size_t queries) {
  const std::int64_t split = opt.history_days - 1;
  const std::int64_t last = opt.history_days + opt.target_days - 1;
  std::uniform_int_distribution<std::int64_t> history_day(0, split), target_day(split + 1, last);
  std::uniform_int_distribution<int> atc(0, 5), half_clicks(0, 10), imps(0, 40);

  std::vector<RawEvent> events;
  auto emit = [&](const std::string& q, int a, int c, int im) {
    for (int i = 0; i < a; ++i) events.push_back({history_day(rng), q, EventKind::kAtc});
    for (int i = 0; i < c; ++i) events.push_back({history_day(rng), q, EventKind::kClick});
    for (int i = 0; i < im; ++i) events.push_back({history_day(rng), q, EventKind::kImpression});
    for (int i = 0; i < 2 * a + c / 2; ++i) events.push_back({target_day(rng), q, EventKind::kAtc});
  };
  for (std::size_t i = 0; i < queries; ++i) {
    emit("query " + std::to_string(i), atc(rng), 2 * half_clicks(rng), imps(rng));
  }
  // Pin the span: one atc on the first day, its two target atcs on the last.
  events.push_back({0, "anchor", EventKind::kAtc});
  events.push_back({last, "anchor", EventKind::kAtc});
  events.push_back({last, "anchor", EventKind::kAtc});
  std::shuffle(events.begin(), events.end(), rng);
  return events;
}

TEST(FitWeights, RecoversPlantedWeights) {
  std::mt19937_64 rng(3);
  for (const FitOptions opt : {FitOptions{30, 7, false}, FitOptions{}}) {
    const auto events = planted_events(rng, opt, 60);
    const Weights w = fit_weights(events, opt);
    EXPECT_NEAR(w.atc, 2.0, 1e-6);
    EXPECT_NEAR(w.clicks, 0.5, 1e-6);
    EXPECT_NEAR(w.impressions, 0.0, 1e-6);
  }
}

TEST(FitWeights, AgreesWithCramerOracle) {
  std::mt19937_64 rng(4);
  const FitOptions opt{20, 5, false};
  auto events = planted_events(rng, opt, 40);
  // Add noise so the fit is not exact and the comparison is meaningful.
  std::uniform_int_distribution<int> pick(0, 39);
  for (int i = 0; i < 30; ++i) {
    events.push_back({22, "query " + std::to_string(pick(rng)), EventKind::kAtc});
  }
  const auto rows = build_training_rows(events, opt);
  const Weights fitted = fit_weights(events, opt);
  const Weights oracle = testing::cramer_least_squares(rows);
  EXPECT_NEAR(fitted.atc, oracle.atc, 1e-9);
  EXPECT_NEAR(fitted.clicks, oracle.clicks, 1e-9);
  EXPECT_NEAR(fitted.impressions, oracle.impressions, 1e-9);
}

TEST(FitWeights, DuplicatedRowsGiveSameWeights) {
  std::mt19937_64 rng(5);
  const FitOptions opt{20, 5, false};
  auto events = planted_events(rng, opt, 25);
  events.push_back({21, "query 3", EventKind::kAtc});
  const auto rows = build_training_rows(events, opt);
  auto doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const Weights a = solve_least_squares(rows);
  const Weights b = solve_least_squares(doubled);
  const Weights oracle = testing::cramer_least_squares(doubled);
  EXPECT_NEAR(a.atc, b.atc, 1e-9);
  EXPECT_NEAR(a.clicks, b.clicks, 1e-9);
  EXPECT_NEAR(a.impressions, b.impressions, 1e-9);
  EXPECT_NEAR(b.atc, oracle.atc, 1e-9);
  EXPECT_NEAR(b.clicks, oracle.clicks, 1e-9);
  EXPECT_NEAR(b.impressions, oracle.impressions, 1e-9);
}

TEST(FitWeights, ZeroFeaturesAreSingular) {
  // History window is day 1 only; the click on day 0 counts toward the span
  // but not toward features.
  const std::vector<RawEvent> events{{0, "milk", EventKind::kClick},
                                     {2, "milk", EventKind::kAtc}};
  EXPECT_THROW(fit_weights(events, {1, 1, false}), InsufficientSignal);
}

TEST(FitWeights, CollinearFeaturesAreSingular) {
  // clicks == impressions for every query.
  std::vector<RawEvent> events;
  for (int q = 1; q <= 5; ++q) {
    const std::string name = "q" + std::to_string(q);
    for (int i = 0; i < q; ++i) {
      events.push_back({0, name, EventKind::kClick});
      events.push_back({0, name, EventKind::kImpression});
      events.push_back({0, name, EventKind::kAtc});
    }
    events.push_back({1, name, EventKind::kAtc});
  }
  EXPECT_THROW(fit_weights(events, {1, 1, false}), InsufficientSignal);
}

TEST(FitWeights, ShortSpanIsRejected) {
  const std::vector<RawEvent> events{{0, "milk", EventKind::kAtc}, {10, "milk", EventKind::kAtc}};
  EXPECT_THROW(fit_weights(events), std::invalid_argument);
  EXPECT_THROW(fit_weights({}, {}), InsufficientSignal);
}

TEST(FitWeights, ClampFlagZeroesNegativeWeights) {
  // target = 3*atc - 1*clicks with clicks <= 3*atc so targets stay >= 0.
  std::vector<RawEvent> events;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> atc(1, 4), imps(0, 9);
  for (int q = 0; q < 30; ++q) {
    const std::string name = "q" + std::to_string(q);
    const int a = atc(rng);
    const int c = q % (3 * a + 1);
    const int im = imps(rng);
    for (int i = 0; i < a; ++i) events.push_back({0, name, EventKind::kAtc});
    for (int i = 0; i < c; ++i) events.push_back({0, name, EventKind::kClick});
    for (int i = 0; i < im; ++i) events.push_back({0, name, EventKind::kImpression});
    for (int i = 0; i < 3 * a - c; ++i) events.push_back({1, name, EventKind::kAtc});
  }
  const Weights raw = fit_weights(events, {1, 1, false});
  EXPECT_NEAR(raw.clicks, -1.0, 1e-6);
  const Weights clamped = fit_weights(events, {1, 1, true});
  EXPECT_EQ(clamped.clicks, 0.0);
  EXPECT_NEAR(clamped.atc, 3.0, 1e-6);
}

}  // namespace
}  // namespace qac
