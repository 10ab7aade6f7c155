#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "uoptime/dataset.hpp"
#include "uoptime/error.hpp"
#include "uoptime/evaluation.hpp"
#include "uoptime/random.hpp"
#include "uoptime/stability.hpp"

namespace uoptime {

inline constexpr double kDefaultRelevance = 0.03;

struct ComparisonRow {
  std::string benchmark;
  ExecutionConfiguration configuration;
  double score_v1 = 0;
  double score_v2 = 0;
  ConfidenceInterval ci_v1;
  ConfidenceInterval ci_v2;
  bool changed = false;   // the two intervals are disjoint
  bool relevant = false;  // changed and magnitude >= relevance threshold
  double magnitude = 0;   // |score_v2 - score_v1| / score_v1
};

struct VersionComparison {
  Estimator estimator = Estimator::median;
  double relevance = kDefaultRelevance;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> only_in_v1;
  std::vector<std::string> only_in_v2;

  std::size_t changed_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.changed;
    return n;
  }
  std::size_t relevant_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.relevant;
    return n;
  }
  const ComparisonRow* find(std::string_view benchmark) const {
    for (const auto& r : rows)
      if (r.benchmark == benchmark) return &r;
    return nullptr;
  }
};

struct VersionLabels {
  std::string v1 = "v1";
  std::string v2 = "v2";
};

inline std::uint64_t comparison_seed(std::uint64_t global, std::string_view version,
                                     std::string_view benchmark) {
  return SeedBuilder(global).add(std::string_view("compare")).add(version).add(benchmark).value();
}

// Flags benchmarks whose percentile CIs in the two versions do not overlap. Benchmarks
// without an entry in `configs` use the full configuration.
inline VersionComparison detect_changes(const MeasurementDataset& v1, const MeasurementDataset& v2,
                                        const ConfigurationMap& configs, Estimator estimator,
                                        const BootstrapSettings& settings,
                                        double relevance = kDefaultRelevance,
                                        const VersionLabels& labels = {}) {
  settings.validate();
  if (!(relevance >= 0) || !std::isfinite(relevance))
    throw ValidationError("relevance threshold must be non-negative");
  if (v1.schema().size() != v2.schema().size())
    throw ValidationError("versions have different numbers of repetition levels");

  VersionComparison out;
  out.estimator = estimator;
  out.relevance = relevance;
  for (const auto& b : v1.benchmarks())
    if (!v2.contains(b)) out.only_in_v1.push_back(b);
  for (const auto& b : v2.benchmarks())
    if (!v1.contains(b)) out.only_in_v2.push_back(b);

  for (const auto& b : v1.benchmarks()) {
    if (!v2.contains(b)) continue;
    auto it = configs.find(b);
    const auto e = it != configs.end() ? it->second : v1.full_configuration();
    v1.schema().check(e);
    v2.schema().check(e);
    const auto m1 = get_measurements(e, v1, b);
    const auto m2 = get_measurements(e, v2, b);

    ComparisonRow row;
    row.benchmark = b;
    row.configuration = e;
    row.score_v1 = point_estimate(m1, estimator);
    row.score_v2 = point_estimate(m2, estimator);
    row.ci_v1 = bootstrap_percentile_ci(m1, estimator,
                                        settings.with_seed(comparison_seed(settings.seed, labels.v1, b)));
    row.ci_v2 = bootstrap_percentile_ci(m2, estimator,
                                        settings.with_seed(comparison_seed(settings.seed, labels.v2, b)));
    row.changed = !row.ci_v1.overlaps(row.ci_v2);
    row.magnitude = change_rate(row.score_v2, row.score_v1);
    row.relevant = row.changed && row.magnitude >= relevance;
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw ValidationError("the two versions share no benchmarks");
  return out;
}

struct ConfusionSummary {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  // Absent when there are no negatives / positives in the ground truth.
  std::optional<double> fpr() const {
    if (fp + tn == 0) return std::nullopt;
    return static_cast<double>(fp) / static_cast<double>(fp + tn);
  }
  std::optional<double> fnr() const {
    if (fn + tp == 0) return std::nullopt;
    return static_cast<double>(fn) / static_cast<double>(fn + tp);
  }
  std::size_t total() const { return tp + fp + tn + fn; }
};

// The full configuration's relevant changes are the ground truth.
inline ConfusionSummary score_against_full(const VersionComparison& full,
                                           const VersionComparison& reduced) {
  std::set<std::string, std::less<>> universe;
  for (const auto& r : full.rows) universe.insert(r.benchmark);
  std::set<std::string, std::less<>> other;
  for (const auto& r : reduced.rows) other.insert(r.benchmark);
  if (universe != other || universe.size() != full.rows.size() || other.size() != reduced.rows.size())
    throw ValidationError("full and reduced comparisons cover different benchmarks");

  ConfusionSummary s;
  for (const auto& r : full.rows) {
    const bool truth = r.relevant;
    const bool flagged = reduced.find(r.benchmark)->relevant;
    if (truth && flagged)
      ++s.tp;
    else if (truth)
      ++s.fn;
    else if (flagged)
      ++s.fp;
    else
      ++s.tn;
  }
  return s;
}

}  // namespace uoptime
