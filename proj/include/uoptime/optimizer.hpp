#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uoptime/dataset.hpp"
#include "uoptime/error.hpp"
#include "uoptime/parallel.hpp"
#include "uoptime/random.hpp"
#include "uoptime/stability.hpp"

namespace uoptime {

struct OptimizationSettings {
  StabilityMetric metric = StabilityMetric::rciw3;
  double threshold = 0.01;
  BootstrapSettings bootstrap;
  // Floor on the total number of data points of a candidate configuration.
  std::size_t min_repetitions = 3;
  // Worker threads for the per-benchmark loop; 0 = hardware concurrency.
  std::size_t threads = 1;

  void validate() const {
    if (!(threshold > 0) || !std::isfinite(threshold))
      throw ValidationError("stability threshold must be positive");
    if (min_repetitions < 2) throw ValidationError("min_repetitions must be >= 2");
    if (min_repetitions < minimum_sample_size(metric))
      throw ValidationError("min_repetitions must be >= " +
                            std::to_string(minimum_sample_size(metric)) + " for metric " +
                            std::string(to_string(metric)));
    bootstrap.validate();
  }
};

enum class Strategy { uoptime, minimum, random };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::uoptime: return "uoptime";
    case Strategy::minimum: return "minimum";
    case Strategy::random: return "random";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "uoptime") return Strategy::uoptime;
  if (s == "minimum") return Strategy::minimum;
  if (s == "random") return Strategy::random;
  throw ValidationError("unknown strategy '" + std::string(s) + "'");
}

// stable: passed the threshold filter. not_reduced: nothing passed, full configuration kept.
// unfiltered: chosen by a baseline without looking at stability.
enum class SelectionFlag { stable, not_reduced, unfiltered };

inline std::string_view to_string(SelectionFlag f) {
  switch (f) {
    case SelectionFlag::stable: return "stable";
    case SelectionFlag::not_reduced: return "not_reduced";
    case SelectionFlag::unfiltered: return "unfiltered";
  }
  return "?";
}

inline SelectionFlag parse_flag(std::string_view s) {
  if (s == "stable") return SelectionFlag::stable;
  if (s == "not_reduced") return SelectionFlag::not_reduced;
  if (s == "unfiltered") return SelectionFlag::unfiltered;
  throw ParseError("unknown selection flag '" + std::string(s) + "'");
}

struct CandidateEvaluation {
  std::string benchmark;
  ExecutionConfiguration configuration;
  std::vector<double> measurements;
  double duration_s = 0;
  double stability = 0;
};

struct BenchmarkSelection {
  std::string benchmark;
  ExecutionConfiguration configuration;
  double stability = 0;
  double duration_s = 0;
  double saved_s = 0;
  double warmup_s = 0;
  double full_warmup_s = 0;
  double score = 0;
  ConfidenceInterval ci;
  SelectionFlag flag = SelectionFlag::stable;
  std::size_t candidates_evaluated = 0;
};

struct OptimizationResult {
  Strategy strategy = Strategy::uoptime;
  OptimizationSettings settings;
  ExecutionConfiguration full_configuration;
  double full_duration_s = 0;  // per benchmark
  std::vector<BenchmarkSelection> selections;

  double total_duration_s() const {
    double t = 0;
    for (const auto& s : selections) t += s.duration_s;
    return t;
  }
  double total_full_duration_s() const {
    return full_duration_s * static_cast<double>(selections.size());
  }
  double total_saved_s() const { return total_full_duration_s() - total_duration_s(); }
  double total_warmup_s() const {
    double t = 0;
    for (const auto& s : selections) t += s.warmup_s;
    return t;
  }
  double total_full_warmup_s() const {
    double t = 0;
    for (const auto& s : selections) t += s.full_warmup_s;
    return t;
  }
  std::size_t count(SelectionFlag f) const {
    std::size_t n = 0;
    for (const auto& s : selections) n += s.flag == f;
    return n;
  }

  const BenchmarkSelection* find(std::string_view benchmark) const {
    for (const auto& s : selections)
      if (s.benchmark == benchmark) return &s;
    return nullptr;
  }
};

// Seed of the bootstrap behind one stability value; independent of evaluation order.
inline std::uint64_t stability_seed(std::uint64_t global, std::string_view benchmark,
                                    const ExecutionConfiguration& e) {
  return SeedBuilder(global).add(std::string_view("stability")).add(benchmark).add(e.counts()).value();
}

inline std::uint64_t score_seed(std::uint64_t global, std::string_view benchmark,
                                const ExecutionConfiguration& e) {
  return SeedBuilder(global).add(std::string_view("score")).add(benchmark).add(e.counts()).value();
}

inline double candidate_stability(std::span<const double> measurements, std::string_view benchmark,
                                  const ExecutionConfiguration& e,
                                  const OptimizationSettings& settings) {
  return stability(measurements, settings.metric,
                   settings.bootstrap.with_seed(stability_seed(settings.bootstrap.seed, benchmark, e)));
}

// Every candidate with at least `min_repetitions` data points, in sweep order.
inline std::vector<CandidateEvaluation> evaluate_candidates(const MeasurementDataset& ds,
                                                            std::string_view benchmark,
                                                            const OptimizationSettings& settings) {
  settings.validate();
  std::vector<CandidateEvaluation> out;
  for (const auto& e : find_all_smaller_configurations(ds.full_configuration(), ds.schema())) {
    if (e.repetitions() < settings.min_repetitions) continue;
    CandidateEvaluation c{std::string(benchmark), e, get_measurements(e, ds, benchmark),
                          execution_duration(e, ds.schema()), 0};
    c.stability = candidate_stability(c.measurements, benchmark, e, settings);
    out.push_back(std::move(c));
  }
  return out;
}

namespace detail {

inline void validate_for_selection(const MeasurementDataset& ds,
                                   const OptimizationSettings& settings) {
  settings.validate();
  if (ds.benchmarks().empty()) throw ValidationError("dataset contains no benchmarks");
  if (ds.full_configuration().repetitions() < settings.min_repetitions)
    throw ValidationError("full configuration " + ds.full_configuration().to_string() + " has fewer than " +
                          std::to_string(settings.min_repetitions) + " data points");
}

inline BenchmarkSelection describe(const MeasurementDataset& ds, std::string_view benchmark,
                                   const ExecutionConfiguration& e, SelectionFlag flag,
                                   const OptimizationSettings& settings,
                                   std::optional<double> known_stability = std::nullopt) {
  const auto values = get_measurements(e, ds, benchmark);
  const auto& schema = ds.schema();
  BenchmarkSelection s;
  s.benchmark = std::string(benchmark);
  s.configuration = e;
  s.flag = flag;
  s.duration_s = execution_duration(e, schema);
  s.saved_s = execution_duration(ds.full_configuration(), schema) - s.duration_s;
  s.warmup_s = warmup_duration(e, ds);
  s.full_warmup_s = warmup_duration(ds.full_configuration(), ds);
  s.stability = known_stability ? *known_stability
                                : candidate_stability(values, benchmark, e, settings);
  const auto est = paired_estimator(settings.metric);
  s.score = point_estimate(values, est);
  if (values.size() >= kMinBootstrapSample) {
    s.ci = metric_interval(values, settings.metric,
                           settings.bootstrap.with_seed(score_seed(settings.bootstrap.seed, benchmark, e)));
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.ci = {nan, nan, est, paired_interval(settings.metric)};
  }
  return s;
}

inline OptimizationResult empty_result(const MeasurementDataset& ds, Strategy strategy,
                                       const OptimizationSettings& settings) {
  OptimizationResult r;
  r.strategy = strategy;
  r.settings = settings;
  r.full_configuration = ds.full_configuration();
  r.full_duration_s = execution_duration(r.full_configuration, ds.schema());
  r.selections.resize(ds.benchmarks().size());
  return r;
}

}  // namespace detail

// Shortest configuration whose stability is <= threshold for one benchmark.
// Candidates are swept by duration; the sweep stops once a stable candidate is
// known and the duration grows, which cannot change the outcome.
inline BenchmarkSelection optimize_benchmark(const MeasurementDataset& ds, std::string_view benchmark,
                                             const OptimizationSettings& settings,
                                             std::span<const ExecutionConfiguration> sweep) {
  const auto& schema = ds.schema();
  std::optional<ExecutionConfiguration> best;
  std::uint64_t best_units = 0;
  double best_stability = 0;
  std::size_t evaluated = 0;

  for (const auto& e : sweep) {
    if (e.repetitions() < settings.min_repetitions) continue;
    const auto units = execution_units(e, schema);
    if (best && units > best_units) break;
    const auto values = get_measurements(e, ds, benchmark);
    const double s = candidate_stability(values, benchmark, e, settings);
    ++evaluated;
    if (!(s <= settings.threshold)) continue;
    // Sweep order is lexicographic within equal duration, so strict < keeps the smallest tuple.
    if (!best || s < best_stability) {
      best = e;
      best_units = units;
      best_stability = s;
    }
  }

  BenchmarkSelection sel;
  if (best) {
    sel = detail::describe(ds, benchmark, *best, SelectionFlag::stable, settings, best_stability);
  } else {
    sel = detail::describe(ds, benchmark, ds.full_configuration(), SelectionFlag::not_reduced, settings);
  }
  sel.candidates_evaluated = evaluated;
  return sel;
}

inline OptimizationResult optimize(const MeasurementDataset& ds, const OptimizationSettings& settings) {
  detail::validate_for_selection(ds, settings);
  auto result = detail::empty_result(ds, Strategy::uoptime, settings);
  const auto sweep = find_all_smaller_configurations(ds.full_configuration(), ds.schema());
  const auto& benchmarks = ds.benchmarks();
  parallel_for(benchmarks.size(), settings.threads, [&](std::size_t i) {
    result.selections[i] = optimize_benchmark(ds, benchmarks[i], settings, sweep);
  });
  return result;
}

// Configurations eligible for the baselines, in sweep order.
inline std::vector<ExecutionConfiguration> eligible_configurations(const MeasurementDataset& ds,
                                                                   std::size_t min_repetitions) {
  std::vector<ExecutionConfiguration> out;
  for (auto& e : find_all_smaller_configurations(ds.full_configuration(), ds.schema()))
    if (e.repetitions() >= min_repetitions) out.push_back(std::move(e));
  return out;
}

// Always the cheapest eligible configuration, ties broken lexicographically.
inline OptimizationResult minimum_baseline(const MeasurementDataset& ds,
                                           const OptimizationSettings& settings) {
  detail::validate_for_selection(ds, settings);
  auto result = detail::empty_result(ds, Strategy::minimum, settings);
  const auto choice = eligible_configurations(ds, settings.min_repetitions).front();
  const auto& benchmarks = ds.benchmarks();
  parallel_for(benchmarks.size(), settings.threads, [&](std::size_t i) {
    result.selections[i] = detail::describe(ds, benchmarks[i], choice, SelectionFlag::unfiltered, settings);
  });
  return result;
}

inline std::uint64_t random_baseline_seed(std::uint64_t seed, std::string_view benchmark) {
  return SeedBuilder(seed).add(std::string_view("random-baseline")).add(benchmark).value();
}

inline const ExecutionConfiguration& draw_configuration(std::span<const ExecutionConfiguration> eligible,
                                                       std::uint64_t seed) {
  if (eligible.empty()) throw ValidationError("no eligible configuration to draw from");
  Rng rng(seed);
  return eligible[static_cast<std::size_t>(uniform_index(rng, eligible.size()))];
}

// Uniform draw over all eligible configurations, full configuration included.
inline OptimizationResult random_baseline(const MeasurementDataset& ds,
                                          const OptimizationSettings& settings, std::uint64_t seed) {
  detail::validate_for_selection(ds, settings);
  auto result = detail::empty_result(ds, Strategy::random, settings);
  const auto eligible = eligible_configurations(ds, settings.min_repetitions);
  const auto& benchmarks = ds.benchmarks();
  parallel_for(benchmarks.size(), settings.threads, [&](std::size_t i) {
    const auto& choice = draw_configuration(eligible, random_baseline_seed(seed, benchmarks[i]));
    result.selections[i] = detail::describe(ds, benchmarks[i], choice, SelectionFlag::unfiltered, settings);
  });
  return result;
}

inline OptimizationResult run_strategy(const MeasurementDataset& ds, Strategy strategy,
                                       const OptimizationSettings& settings) {
  switch (strategy) {
    case Strategy::minimum: return minimum_baseline(ds, settings);
    case Strategy::random: return random_baseline(ds, settings, settings.bootstrap.seed);
    case Strategy::uoptime: break;
  }
  return optimize(ds, settings);
}

}  // namespace uoptime
