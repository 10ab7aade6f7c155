#include <algorithm>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "uoptime/optimizer.hpp"

using namespace uoptime;
using testsupport::make_schema;

namespace {

OptimizationSettings settings_for(StabilityMetric m, double ts = 0.01, std::size_t resamples = 300) {
  OptimizationSettings s;
  s.metric = m;
  s.threshold = ts;
  s.bootstrap = {0.99, resamples, 17};
  return s;
}

void expect_matches_oracle(const MeasurementDataset& ds, const OptimizationSettings& settings) {
  const auto result = optimize(ds, settings);
  ASSERT_EQ(result.selections.size(), ds.benchmarks().size());
  for (const auto& sel : result.selections) {
    const auto expected = oracle::brute_force(ds, sel.benchmark, settings);
    EXPECT_EQ(sel.configuration, ExecutionConfiguration(expected.config)) << sel.benchmark;
    EXPECT_EQ(sel.flag == SelectionFlag::stable, expected.reduced) << sel.benchmark;
    if (expected.reduced) {
      EXPECT_EQ(sel.stability, expected.stability) << sel.benchmark;
    }
  }
}

}  // namespace

TEST(Optimize, ConstantBenchmarkShrinksToThreeSeconds) {
  const auto ds = testsupport::constant_dataset(make_schema({3, 5, 5}), {"flat"});
  for (auto m : {StabilityMetric::cv, StabilityMetric::rmad, StabilityMetric::rciw1,
                 StabilityMetric::rciw2, StabilityMetric::rciw3}) {
    const auto settings = settings_for(m);
    const auto r = optimize(ds, settings);
    ASSERT_EQ(r.selections.size(), 1u);
    const auto& s = r.selections[0];
    EXPECT_EQ(s.configuration, (ExecutionConfiguration{1, 1, 3})) << to_string(m);
    EXPECT_EQ(s.duration_s, 3.0);
    EXPECT_EQ(s.saved_s, 72.0);
    EXPECT_EQ(s.stability, 0.0);
    EXPECT_EQ(s.flag, SelectionFlag::stable);
    EXPECT_EQ(s.score, 100.0);
    EXPECT_EQ(oracle::brute_force(ds, "flat", settings).config, (std::vector<std::size_t>{1, 1, 3}));
  }
}

TEST(Optimize, FallsBackToFullConfigurationWhenNothingIsStable) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5, 5}), {"noisy"}, 5, 100, 0.2);
  const auto r = optimize(ds, settings_for(StabilityMetric::cv, 0.01));
  const auto& s = r.selections[0];
  EXPECT_EQ(s.flag, SelectionFlag::not_reduced);
  EXPECT_EQ(s.configuration, ds.full_configuration());
  EXPECT_EQ(s.saved_s, 0.0);
  EXPECT_GT(s.stability, 0.01);
  EXPECT_EQ(r.count(SelectionFlag::not_reduced), 1u);
}

TEST(Optimize, TwoDataPointConfigurationsAreNeverEvaluated) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5}), {"b"}, 1, 100, 0.01);
  const auto candidates = evaluate_candidates(ds, "b", settings_for(StabilityMetric::cv));
  const auto has = [&](ExecutionConfiguration e) {
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](const CandidateEvaluation& c) { return c.configuration == e; });
  };
  EXPECT_FALSE(has({1, 2}));
  EXPECT_FALSE(has({2, 1}));
  EXPECT_FALSE(has({1, 1}));
  EXPECT_TRUE(has({1, 3}));
  EXPECT_TRUE(has({3, 5}));
  EXPECT_EQ(candidates.size(), 15u - 3u);
  for (const auto& c : candidates) {
    EXPECT_EQ(c.measurements.size(), c.configuration.repetitions());
    EXPECT_EQ(c.duration_s, execution_duration(c.configuration, ds.schema()));
    EXPECT_GE(c.stability, 0.0);
  }
}

TEST(Optimize, PrunedSweepAgreesWithFullCandidateList) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5, 5}), {"a", "b"}, 8, 100, 0.01);
  const auto settings = settings_for(StabilityMetric::rmad, 0.006);
  const auto result = optimize(ds, settings);
  for (const auto& sel : result.selections) {
    auto candidates = evaluate_candidates(ds, sel.benchmark, settings);
    std::erase_if(candidates, [&](const auto& c) { return c.stability > settings.threshold; });
    ASSERT_FALSE(candidates.empty());
    const auto best = std::min_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      return std::tie(a.duration_s, a.stability, a.configuration) <
             std::tie(b.duration_s, b.stability, b.configuration);
    });
    EXPECT_EQ(sel.configuration, best->configuration);
    EXPECT_LE(sel.candidates_evaluated, ds.full_configuration().repetitions());
  }
}

TEST(Optimize, MatchesBruteForceOracleOnRandomDatasets) {
  const StabilityMetric metrics[] = {StabilityMetric::cv, StabilityMetric::rmad, StabilityMetric::rciw1,
                                     StabilityMetric::rciw2, StabilityMetric::rciw3};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto ds = testsupport::random_small_dataset(seed);
    auto settings = settings_for(metrics[seed % 5], seed % 2 ? 0.01 : 0.02, 200);
    settings.bootstrap.seed = seed;
    SCOPED_TRACE("seed " + std::to_string(seed));
    expect_matches_oracle(ds, settings);
  }
}

TEST(Optimize, DurationTiesPreferLowerStability) {
  // Outer level runs in parallel. With a floor of 4 points the cheapest candidates are
  // (2,2) and (3,2), both 2 s. Only one data point deviates, so the larger sample has the
  // lower CV (0.00204 vs 0.0025) and wins despite the lexicographic order.
  auto schema = make_schema({3, 4}, 1.0, {"iteration"});
  const auto ds = testsupport::make_dataset(schema, {"b"}, [](const auto&, const auto& idx) {
    return idx[0] == 1 && idx[1] == 1 ? 100.5 : 100.0;
  });
  auto settings = settings_for(StabilityMetric::cv, 0.01);
  settings.min_repetitions = 4;
  const auto r = optimize(ds, settings);
  EXPECT_EQ(r.selections[0].configuration, (ExecutionConfiguration{3, 2}));
  EXPECT_EQ(r.selections[0].duration_s, 2.0);
  EXPECT_EQ(oracle::brute_force(ds, "b", settings).config, (std::vector<std::size_t>{3, 2}));
}

TEST(Optimize, ExactTiesResolveToLexicographicallySmallest) {
  const auto ds = testsupport::constant_dataset(make_schema({3, 3}), {"b"});
  const auto r = optimize(ds, settings_for(StabilityMetric::rmad));
  // (1,3) and (3,1) both cost 3 s with stability 0.
  EXPECT_EQ(r.selections[0].configuration, (ExecutionConfiguration{1, 3}));
}

TEST(Optimize, ThresholdMonotonicity) {
  const double grid[] = {0.005, 0.01, 0.02, 0.05};
  for (std::uint64_t seed = 100; seed < 115; ++seed) {
    const auto ds = testsupport::random_small_dataset(seed, 4);
    std::map<std::string, double> previous;
    for (double ts : grid) {
      auto settings = settings_for(StabilityMetric::rciw1, ts, 200);
      const auto r = optimize(ds, settings);
      for (const auto& s : r.selections) {
        if (previous.count(s.benchmark)) {
          EXPECT_LE(s.duration_s, previous[s.benchmark]);
        }
        previous[s.benchmark] = s.duration_s;
        if (s.flag == SelectionFlag::stable) {
          EXPECT_LE(s.stability, ts);
        }
      }
    }
  }
}

TEST(Optimize, IndependentOfBenchmarkOrderAndThreadCount) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 4, 4}), testsupport::names(6), 3, 100, 0.01);
  auto records = ds.records();
  std::reverse(records.begin(), records.end());
  const auto reversed = MeasurementDataset::from_records(ds.schema(), ds.unit(), ds.semantics(), records);
  ASSERT_NE(ds.benchmarks(), reversed.benchmarks());

  auto settings = settings_for(StabilityMetric::rciw3, 0.01, 200);
  const auto a = optimize(ds, settings);
  settings.threads = 4;
  const auto b = optimize(reversed, settings);
  for (const auto& s : a.selections) {
    const auto* t = b.find(s.benchmark);
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(s.configuration, t->configuration);
    EXPECT_EQ(s.stability, t->stability);
    EXPECT_EQ(s.score, t->score);
    EXPECT_EQ(s.ci.lower, t->ci.lower);
    EXPECT_EQ(s.ci.upper, t->ci.upper);
  }
}

TEST(Optimize, ValidatesInputs) {
  const auto empty = MeasurementDataset::from_records(make_schema({3}), "ns", ValueSemantics::lower_is_better, {});
  EXPECT_THROW(optimize(empty, settings_for(StabilityMetric::cv)), ValidationError);

  const auto tiny = testsupport::constant_dataset(make_schema({1, 2}), {"b"});
  EXPECT_THROW(optimize(tiny, settings_for(StabilityMetric::cv)), ValidationError);

  const auto ds = testsupport::constant_dataset(make_schema({3}), {"b"});
  auto bad = settings_for(StabilityMetric::cv, 0.0);
  EXPECT_THROW(optimize(ds, bad), ValidationError);
  bad = settings_for(StabilityMetric::rciw1);
  bad.min_repetitions = 2;
  EXPECT_THROW(optimize(ds, bad), ValidationError);
  bad = settings_for(StabilityMetric::cv);
  bad.min_repetitions = 2;
  EXPECT_NO_THROW(optimize(ds, bad));
}

TEST(Optimize, ReportsScoreAndIntervalOfTheChosenConfiguration) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5, 5}), {"b"}, 21, 100, 0.003);
  const auto settings = settings_for(StabilityMetric::rciw3, 0.01, 500);
  const auto r = optimize(ds, settings);
  const auto& s = r.selections[0];
  const auto values = get_measurements(s.configuration, ds, "b");
  EXPECT_EQ(s.score, point_estimate(values, Estimator::median));
  EXPECT_LE(s.ci.lower, s.score);
  EXPECT_GE(s.ci.upper, s.score);
  EXPECT_EQ(s.ci.estimator, Estimator::median);
  EXPECT_LE(s.duration_s, r.full_duration_s);
  EXPECT_DOUBLE_EQ(r.total_saved_s(), r.total_full_duration_s() - r.total_duration_s());
}

TEST(MinimumBaseline, AlwaysOneByOneByThree) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5, 5}), testsupport::names(4), 2, 50, 0.05);
  const auto r = minimum_baseline(ds, settings_for(StabilityMetric::cv));
  for (const auto& s : r.selections) {
    EXPECT_EQ(s.configuration, (ExecutionConfiguration{1, 1, 3}));
    EXPECT_EQ(s.duration_s, 3.0);
    EXPECT_EQ(s.flag, SelectionFlag::unfiltered);
  }
  EXPECT_DOUBLE_EQ(r.total_saved_s() / r.total_full_duration_s(), 0.96);
}

TEST(MinimumBaseline, FloorForcesFullConfigurationOnTinySchemas) {
  const auto ds = testsupport::constant_dataset(make_schema({1, 3}), {"b"});
  const auto r = minimum_baseline(ds, settings_for(StabilityMetric::cv));
  EXPECT_EQ(r.selections[0].configuration, (ExecutionConfiguration{1, 3}));
}

TEST(MinimumBaseline, MatchesExhaustiveDurationScan) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = testsupport::random_small_dataset(seed, 1);
    const auto settings = settings_for(StabilityMetric::cv);
    const auto full = testsupport::full_counts(ds);
    std::optional<std::pair<double, std::vector<std::size_t>>> best;
    for (const auto& t : oracle::all_tuples(full)) {
      if (ExecutionConfiguration(t).repetitions() < settings.min_repetitions) continue;
      std::pair<double, std::vector<std::size_t>> key{oracle::duration(ds, t), t};
      if (!best || key < *best) best = key;
    }
    EXPECT_EQ(minimum_baseline(ds, settings).selections[0].configuration, ExecutionConfiguration(best->second));
  }
}

TEST(RandomBaseline, SingleEligibleConfiguration) {
  const auto ds = testsupport::constant_dataset(make_schema({1, 3}), testsupport::names(5));
  const auto r = random_baseline(ds, settings_for(StabilityMetric::cv), 99);
  for (const auto& s : r.selections) EXPECT_EQ(s.configuration, (ExecutionConfiguration{1, 3}));
}

TEST(RandomBaseline, DeterministicPerSeed) {
  const auto ds = testsupport::noisy_dataset(make_schema({3, 5, 5}), testsupport::names(10), 2, 50, 0.05);
  const auto settings = settings_for(StabilityMetric::cv);
  const auto a = random_baseline(ds, settings, 7);
  const auto b = random_baseline(ds, settings, 7);
  const auto c = random_baseline(ds, settings, 8);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.selections.size(); ++i) {
    EXPECT_EQ(a.selections[i].configuration, b.selections[i].configuration);
    any_difference |= a.selections[i].configuration != c.selections[i].configuration;
  }
  EXPECT_TRUE(any_difference);
}

TEST(RandomBaseline, UniformOverEligibleConfigurations) {
  const auto ds = testsupport::constant_dataset(make_schema({3, 5, 5}), {"b"});
  const auto eligible = eligible_configurations(ds, 3);
  std::size_t expected_count = 0;
  for (const auto& t : oracle::all_tuples({3, 5, 5})) expected_count += t[0] * t[1] * t[2] >= 3;
  // 75 tuples minus (1,1,1), (1,1,2), (1,2,1) and (2,1,1).
  ASSERT_EQ(expected_count, 71u);
  ASSERT_EQ(eligible.size(), expected_count);
  std::map<ExecutionConfiguration, int> hits;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) hits[draw_configuration(eligible, random_baseline_seed(i, "b"))]++;
  EXPECT_EQ(hits.size(), expected_count);
  double chi2 = 0;
  const double k = static_cast<double>(expected_count);
  const double expected = draws / k;
  for (const auto& e : eligible) {
    const double f = hits[e] / static_cast<double>(draws);
    EXPECT_NEAR(f, 1.0 / k, 0.01) << e.to_string();
    chi2 += (hits[e] - expected) * (hits[e] - expected) / expected;
  }
  // 70 degrees of freedom; the 0.999 quantile is about 112.3.
  EXPECT_LT(chi2, 112.3);
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {Strategy::uoptime, Strategy::minimum, Strategy::random}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("greedy"), ValidationError);
}
