#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uoptime/dataset.hpp"
#include "uoptime/error.hpp"
#include "uoptime/optimizer.hpp"
#include "uoptime/stability.hpp"

namespace uoptime {

using ConfigurationMap = std::map<std::string, ExecutionConfiguration, std::less<>>;

inline ConfigurationMap configurations_of(const OptimizationResult& result) {
  ConfigurationMap out;
  for (const auto& s : result.selections) out.emplace(s.benchmark, s.configuration);
  return out;
}

// Relative deviation of a reduced-configuration score from the full-configuration score.
inline double change_rate(double r_min, double r_full) {
  if (!(r_full > 0)) throw ValidationError("change rate needs a positive reference score");
  return std::abs(r_min - r_full) / r_full;
}

inline constexpr std::array<double, 3> kChangeRateThresholds{0.01, 0.03, 0.05};

struct ChangeRateRow {
  std::string benchmark;
  ExecutionConfiguration configuration;
  double r_full = 0;
  double r_min = 0;
  double change_rate = 0;

  // Strictly below.
  bool below(double threshold) const { return change_rate < threshold; }
};

struct ChangeRateReport {
  Estimator estimator = Estimator::mean;
  std::vector<ChangeRateRow> rows;
  double total_full_duration_s = 0;
  double total_min_duration_s = 0;
  double total_full_warmup_s = 0;
  double total_min_warmup_s = 0;
  std::vector<std::string> warnings;

  double fraction_below(double threshold) const {
    if (rows.empty()) return 0.0;
    const auto n = std::count_if(rows.begin(), rows.end(),
                                 [&](const ChangeRateRow& r) { return r.below(threshold); });
    return static_cast<double>(n) / static_cast<double>(rows.size());
  }

  // Share of measurement-phase time saved.
  double savings_fraction() const {
    return total_full_duration_s > 0 ? 1.0 - total_min_duration_s / total_full_duration_s : 0.0;
  }

  // Share of overall time saved, warmup included.
  double overall_savings_fraction() const {
    const double full = total_full_duration_s + total_full_warmup_s;
    return full > 0 ? 1.0 - (total_min_duration_s + total_min_warmup_s) / full : 0.0;
  }
};

// Scores each benchmark under its assigned configuration against the full configuration.
// Rows follow the dataset's benchmark order.
inline ChangeRateReport evaluate(const MeasurementDataset& ds, const ConfigurationMap& configs,
                                 Estimator estimator) {
  for (const auto& [b, e] : configs) {
    if (!ds.contains(b)) throw LookupError("result names unknown benchmark '" + b + "'");
    ds.schema().check(e);
  }
  ChangeRateReport report;
  report.estimator = estimator;
  const auto full = ds.full_configuration();
  for (const auto& b : ds.benchmarks()) {
    auto it = configs.find(b);
    if (it == configs.end()) continue;
    ChangeRateRow row;
    row.benchmark = b;
    row.configuration = it->second;
    row.r_full = point_estimate(get_measurements(full, ds, b), estimator);
    row.r_min = point_estimate(get_measurements(it->second, ds, b), estimator);
    row.change_rate = change_rate(row.r_min, row.r_full);
    report.total_full_duration_s += execution_duration(full, ds.schema());
    report.total_min_duration_s += execution_duration(it->second, ds.schema());
    report.total_full_warmup_s += warmup_duration(full, ds);
    report.total_min_warmup_s += warmup_duration(it->second, ds);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// Uses the metric's paired estimator unless one is given; a mismatch is reported as a warning.
inline ChangeRateReport evaluate(const MeasurementDataset& ds, const OptimizationResult& result,
                                 std::optional<Estimator> estimator = std::nullopt) {
  const auto paired = paired_estimator(result.settings.metric);
  auto report = evaluate(ds, configurations_of(result), estimator.value_or(paired));
  if (estimator && *estimator != paired)
    report.warnings.push_back("estimator " + std::string(to_string(*estimator)) +
                              " does not match metric " + std::string(to_string(result.settings.metric)) +
                              " (paired with " + std::string(to_string(paired)) + ")");
  return report;
}

// Drops the first `warmup_count` repetitions of one level and renumbers the rest.
// The discarded share is remembered so warmup seconds can still be reported.
inline MeasurementDataset discard_warmup(const MeasurementDataset& ds, std::string_view level_name,
                                         std::size_t warmup_count) {
  const auto level = ds.schema().index_of(level_name);
  if (!level) throw ValidationError("unknown level '" + std::string(level_name) + "'");
  const auto count = ds.schema().levels[*level].count;
  if (warmup_count >= count)
    throw ValidationError("warmup count " + std::to_string(warmup_count) + " leaves no measurements at level '" +
                          std::string(level_name) + "' (count " + std::to_string(count) + ")");
  if (warmup_count == 0) return ds;

  std::size_t total_warmup = warmup_count;
  if (const auto& prior = ds.warmup()) {
    if (prior->level != *level)
      throw ValidationError("warmup already discarded at a different level");
    total_warmup += prior->count;
  }

  auto schema = ds.schema();
  schema.levels[*level].count -= warmup_count;
  auto records = ds.records();
  std::erase_if(records, [&](const MeasurementRecord& r) { return r.indices[*level] <= warmup_count; });
  for (auto& r : records) r.indices[*level] -= warmup_count;
  return MeasurementDataset::from_records(std::move(schema), ds.unit(), ds.semantics(), records)
      .with_warmup({*level, total_warmup});
}

enum class EffectCategory { negligible, small, medium, large };

inline std::string_view to_string(EffectCategory c) {
  switch (c) {
    case EffectCategory::negligible: return "negligible";
    case EffectCategory::small: return "small";
    case EffectCategory::medium: return "medium";
    case EffectCategory::large: return "large";
  }
  return "?";
}

constexpr EffectCategory classify_effect(double delta) {
  const double a = delta < 0 ? -delta : delta;
  if (a < 0.147) return EffectCategory::negligible;
  if (a < 0.33) return EffectCategory::small;
  if (a < 0.474) return EffectCategory::medium;
  return EffectCategory::large;
}

struct EffectSize {
  double delta = 0;
  EffectCategory category = EffectCategory::negligible;
};

// Cliff's delta: P(x > y) - P(x < y) over all pairs.
inline EffectSize cliffs_delta(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("Cliff's delta needs two non-empty samples");
  std::vector<double> sorted_y(y.begin(), y.end());
  std::sort(sorted_y.begin(), sorted_y.end());
  long long dominance = 0;
  for (double xi : x) {
    const auto less = std::lower_bound(sorted_y.begin(), sorted_y.end(), xi) - sorted_y.begin();
    const auto greater = sorted_y.end() - std::upper_bound(sorted_y.begin(), sorted_y.end(), xi);
    dominance += less - greater;
  }
  const double delta =
      static_cast<double>(dominance) / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  return {delta, classify_effect(delta)};
}

}  // namespace uoptime
