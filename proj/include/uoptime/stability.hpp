#pragma once

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uoptime/error.hpp"
#include "uoptime/random.hpp"

namespace uoptime {

enum class Estimator { mean, median };
enum class IntervalMethod { percentile, t_interval };

inline std::string_view to_string(Estimator e) { return e == Estimator::mean ? "mean" : "median"; }
inline std::string_view to_string(IntervalMethod m) {
  return m == IntervalMethod::percentile ? "percentile" : "t_interval";
}

inline Estimator parse_estimator(std::string_view s) {
  if (s == "mean") return Estimator::mean;
  if (s == "median") return Estimator::median;
  throw ValidationError("unknown estimator '" + std::string(s) + "'");
}

// Relative variability measures; lower is more stable.
enum class StabilityMetric { cv, rmad, rciw1, rciw2, rciw3 };

inline std::string_view to_string(StabilityMetric m) {
  switch (m) {
    case StabilityMetric::cv: return "cv";
    case StabilityMetric::rmad: return "rmad";
    case StabilityMetric::rciw1: return "rciw1";
    case StabilityMetric::rciw2: return "rciw2";
    case StabilityMetric::rciw3: return "rciw3";
  }
  return "?";
}

inline StabilityMetric parse_metric(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto m : {StabilityMetric::cv, StabilityMetric::rmad, StabilityMetric::rciw1,
                 StabilityMetric::rciw2, StabilityMetric::rciw3})
    if (lower == to_string(m)) return m;
  throw ValidationError("unknown stability metric '" + std::string(s) + "'");
}

// CV, RCIW1 and RCIW2 are mean-based; RMAD and RCIW3 are median-based.
constexpr Estimator paired_estimator(StabilityMetric m) {
  return (m == StabilityMetric::rmad || m == StabilityMetric::rciw3) ? Estimator::median
                                                                      : Estimator::mean;
}

constexpr IntervalMethod paired_interval(StabilityMetric m) {
  return m == StabilityMetric::rciw2 ? IntervalMethod::t_interval : IntervalMethod::percentile;
}

constexpr bool is_bootstrap_metric(StabilityMetric m) {
  return m == StabilityMetric::rciw1 || m == StabilityMetric::rciw2 || m == StabilityMetric::rciw3;
}

// Smallest sample a metric accepts.
constexpr std::size_t minimum_sample_size(StabilityMetric m) {
  switch (m) {
    case StabilityMetric::cv: return 2;
    case StabilityMetric::rmad: return 1;
    default: return 3;
  }
}

struct BootstrapSettings {
  double confidence_level = 0.99;
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;

  double alpha() const { return 1.0 - confidence_level; }

  void validate() const {
    if (!(confidence_level > 0.0 && confidence_level < 1.0))
      throw ValidationError("confidence level must lie in (0, 1)");
    if (resamples < 1) throw ValidationError("bootstrap needs at least one resample");
  }

  BootstrapSettings with_seed(std::uint64_t s) const {
    auto copy = *this;
    copy.seed = s;
    return copy;
  }
};

struct ConfidenceInterval {
  double lower = 0;
  double upper = 0;
  Estimator estimator = Estimator::mean;
  IntervalMethod method = IntervalMethod::percentile;

  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
  bool overlaps(const ConfidenceInterval& o) const { return !(upper < o.lower || o.upper < lower); }
};

namespace stats {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation with denominator n - 1.
inline double sample_sd(std::span<const double> v, double m) {
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double sample_sd(std::span<const double> v) { return sample_sd(v, mean(v)); }

// Reorders `scratch`. Even lengths take the midpoint of the two central order statistics.
inline double median_inplace(std::span<double> scratch) {
  const auto n = scratch.size();
  const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(scratch.begin(), mid, scratch.end());
  if (n % 2 == 1) return *mid;
  const double lo = *std::max_element(scratch.begin(), mid);
  return lo + (*mid - lo) / 2;
}

inline double median(std::span<const double> v) {
  std::vector<double> copy(v.begin(), v.end());
  return median_inplace(copy);
}

// Linear interpolation between order statistics of a sorted sample, h = (n - 1) p.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace stats

inline double point_estimate(std::span<const double> values, Estimator e) {
  if (values.empty()) throw InsufficientDataError("point estimate of an empty sample");
  return e == Estimator::mean ? stats::mean(values) : stats::median(values);
}

inline double cv(std::span<const double> values) {
  if (values.size() < 2) throw InsufficientDataError("CV needs at least 2 values");
  if (stats::all_equal(values)) return 0.0;
  const double m = stats::mean(values);
  return stats::sample_sd(values, m) / m;
}

// Raw MAD / median, no consistency constant.
inline double rmad(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("RMAD needs at least 1 value");
  const double med = stats::median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(),
                 [med](double x) { return std::abs(x - med); });
  return stats::median_inplace(dev) / med;
}

inline constexpr std::size_t kMinBootstrapSample = 3;

inline ConfidenceInterval bootstrap_percentile_ci(std::span<const double> values, Estimator estimator,
                                                  const BootstrapSettings& settings) {
  settings.validate();
  if (values.size() < kMinBootstrapSample)
    throw InsufficientDataError("bootstrap needs at least 3 values");
  if (stats::all_equal(values))
    return {values.front(), values.front(), estimator, IntervalMethod::percentile};

  const auto n = values.size();
  Rng rng(settings.seed);
  std::vector<double> sample(n);
  std::vector<double> estimates(settings.resamples);
  for (auto& est : estimates) {
    for (auto& s : sample) s = values[static_cast<std::size_t>(uniform_index(rng, n))];
    est = estimator == Estimator::mean ? stats::mean(sample) : stats::median_inplace(sample);
  }
  std::sort(estimates.begin(), estimates.end());
  const double a = settings.alpha();
  return {stats::quantile_sorted(estimates, a / 2), stats::quantile_sorted(estimates, 1 - a / 2),
          estimator, IntervalMethod::percentile};
}

// Studentized bootstrap for the mean.
inline ConfidenceInterval bootstrap_t_ci(std::span<const double> values,
                                         const BootstrapSettings& settings) {
  settings.validate();
  if (values.size() < kMinBootstrapSample)
    throw InsufficientDataError("bootstrap needs at least 3 values");
  const auto n = values.size();
  const double xbar = stats::mean(values);
  if (stats::all_equal(values)) return {xbar, xbar, Estimator::mean, IntervalMethod::t_interval};
  const double root_n = std::sqrt(static_cast<double>(n));
  const double se = stats::sample_sd(values, xbar) / root_n;

  Rng rng(settings.seed);
  std::vector<double> sample(n);
  std::vector<double> t(settings.resamples);
  for (auto& ti : t) {
    for (auto& s : sample) s = values[static_cast<std::size_t>(uniform_index(rng, n))];
    const double m = stats::mean(sample);
    const double se_star = stats::sample_sd(sample, m) / root_n;
    ti = se_star > 0 ? (m - xbar) / se_star : 0.0;
  }
  std::sort(t.begin(), t.end());
  const double a = settings.alpha();
  return {xbar - stats::quantile_sorted(t, 1 - a / 2) * se,
          xbar - stats::quantile_sorted(t, a / 2) * se, Estimator::mean, IntervalMethod::t_interval};
}

// The interval a metric is built on; RCIW2 uses the t-interval, everything else a percentile CI.
inline ConfidenceInterval metric_interval(std::span<const double> values, StabilityMetric metric,
                                          const BootstrapSettings& settings) {
  if (paired_interval(metric) == IntervalMethod::t_interval) return bootstrap_t_ci(values, settings);
  return bootstrap_percentile_ci(values, paired_estimator(metric), settings);
}

inline double stability(std::span<const double> values, StabilityMetric metric,
                        const BootstrapSettings& settings) {
  if (values.size() < minimum_sample_size(metric))
    throw InsufficientDataError(std::string(to_string(metric)) + " needs at least " +
                                std::to_string(minimum_sample_size(metric)) + " values");
  switch (metric) {
    case StabilityMetric::cv: return cv(values);
    case StabilityMetric::rmad: return rmad(values);
    default: break;
  }
  const auto ci = metric_interval(values, metric, settings);
  return ci.width() / point_estimate(values, paired_estimator(metric));
}

}  // namespace uoptime
