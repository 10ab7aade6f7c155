#pragma once

#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uoptime/csv.hpp"
#include "uoptime/dataset.hpp"
#include "uoptime/error.hpp"
#include "uoptime/evaluation.hpp"
#include "uoptime/optimizer.hpp"
#include "uoptime/regression.hpp"

namespace uoptime::report {

using nlohmann::ordered_json;

inline constexpr const char* kOptimizationHeader =
    "benchmark,config,stability,score,ci_lower,ci_upper,duration_s,saved_s,flag";
inline constexpr const char* kEvaluationHeader =
    "benchmark,r_full,r_min,change_rate,below_1pct,below_3pct,below_5pct";
inline constexpr const char* kComparisonHeader =
    "benchmark,score_v1,score_v2,ci1_lo,ci1_hi,ci2_lo,ci2_hi,changed,relevant,magnitude";

namespace detail {

inline const char* boolean(bool b) { return b ? "true" : "false"; }

inline ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace detail

inline void write_optimization_csv(std::ostream& out, const OptimizationResult& r) {
  using csv::format_double;
  out << kOptimizationHeader << '\n';
  for (const auto& s : r.selections) {
    out << csv::escape(s.benchmark) << ',' << s.configuration.to_string() << ','
        << format_double(s.stability) << ',' << format_double(s.score) << ','
        << format_double(s.ci.lower) << ',' << format_double(s.ci.upper) << ','
        << format_double(s.duration_s) << ',' << format_double(s.saved_s) << ','
        << to_string(s.flag) << '\n';
  }
}

inline ordered_json settings_json(const OptimizationSettings& s) {
  return {{"metric", to_string(s.metric)},
          {"threshold", s.threshold},
          {"min_repetitions", s.min_repetitions},
          {"confidence_level", s.bootstrap.confidence_level},
          {"resamples", s.bootstrap.resamples},
          {"seed", s.bootstrap.seed}};
}

inline ordered_json optimization_summary(const OptimizationResult& r) {
  const double full = r.total_full_duration_s();
  const double full_overall = full + r.total_full_warmup_s();
  return {{"strategy", to_string(r.strategy)},
          {"settings", settings_json(r.settings)},
          {"full_configuration", r.full_configuration.to_string()},
          {"benchmarks", r.selections.size()},
          {"stable", r.count(SelectionFlag::stable)},
          {"not_reduced", r.count(SelectionFlag::not_reduced)},
          {"total_full_duration_s", full},
          {"total_duration_s", r.total_duration_s()},
          {"total_saved_s", r.total_saved_s()},
          {"saved_fraction", full > 0 ? r.total_saved_s() / full : 0.0},
          {"total_full_warmup_s", r.total_full_warmup_s()},
          {"total_warmup_s", r.total_warmup_s()},
          {"overall_saved_fraction",
           full_overall > 0 ? 1.0 - (r.total_duration_s() + r.total_warmup_s()) / full_overall : 0.0}};
}

// One row of a previously written optimization CSV.
struct SelectionRow {
  std::string benchmark;
  ExecutionConfiguration configuration;
  double stability = 0;
  double score = 0;
  SelectionFlag flag = SelectionFlag::stable;
};

inline std::vector<SelectionRow> read_optimization_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw ParseError("empty optimization result file");
  const auto expected = csv::split_row(kOptimizationHeader);
  if (*header != expected) throw ParseError("unexpected optimization result header", reader.line());
  std::vector<SelectionRow> rows;
  while (auto f = reader.next()) {
    if (f->size() != expected.size())
      throw ParseError("expected " + std::to_string(expected.size()) + " fields", reader.line());
    SelectionRow row;
    row.benchmark = (*f)[0];
    try {
      row.configuration = ExecutionConfiguration::parse((*f)[1]);
      row.flag = parse_flag((*f)[8]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), reader.line());
    }
    row.stability = csv::parse_double((*f)[2]).value_or(std::numeric_limits<double>::quiet_NaN());
    row.score = csv::parse_double((*f)[3]).value_or(std::numeric_limits<double>::quiet_NaN());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ConfigurationMap read_configurations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open result file '" + path + "'");
  ConfigurationMap out;
  for (auto& row : read_optimization_csv(in)) {
    if (!out.emplace(row.benchmark, row.configuration).second)
      throw IntegrityError("duplicate benchmark '" + row.benchmark + "' in result file");
  }
  return out;
}

inline void write_evaluation_csv(std::ostream& out, const ChangeRateReport& r) {
  using csv::format_double;
  out << kEvaluationHeader << '\n';
  for (const auto& row : r.rows) {
    out << csv::escape(row.benchmark) << ',' << format_double(row.r_full) << ','
        << format_double(row.r_min) << ',' << format_double(row.change_rate);
    for (double t : kChangeRateThresholds) out << ',' << detail::boolean(row.below(t));
    out << '\n';
  }
}

inline ordered_json evaluation_json(const ChangeRateReport& r) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"benchmark", row.benchmark},
                    {"config", row.configuration.to_string()},
                    {"r_full", row.r_full},
                    {"r_min", row.r_min},
                    {"change_rate", row.change_rate}});
  return {{"estimator", to_string(r.estimator)},
          {"benchmarks", r.rows.size()},
          {"fraction_below_1pct", r.fraction_below(kChangeRateThresholds[0])},
          {"fraction_below_3pct", r.fraction_below(kChangeRateThresholds[1])},
          {"fraction_below_5pct", r.fraction_below(kChangeRateThresholds[2])},
          {"total_full_duration_s", r.total_full_duration_s},
          {"total_min_duration_s", r.total_min_duration_s},
          {"savings_fraction", r.savings_fraction()},
          {"total_full_warmup_s", r.total_full_warmup_s},
          {"total_min_warmup_s", r.total_min_warmup_s},
          {"overall_savings_fraction", r.overall_savings_fraction()},
          {"warnings", r.warnings},
          {"rows", rows}};
}

inline void write_comparison_csv(std::ostream& out, const VersionComparison& c) {
  using csv::format_double;
  out << kComparisonHeader << '\n';
  for (const auto& r : c.rows) {
    out << csv::escape(r.benchmark) << ',' << format_double(r.score_v1) << ','
        << format_double(r.score_v2) << ',' << format_double(r.ci_v1.lower) << ','
        << format_double(r.ci_v1.upper) << ',' << format_double(r.ci_v2.lower) << ','
        << format_double(r.ci_v2.upper) << ',' << detail::boolean(r.changed) << ','
        << detail::boolean(r.relevant) << ',' << format_double(r.magnitude) << '\n';
  }
}

inline ordered_json comparison_json(const VersionComparison& c) {
  return {{"estimator", to_string(c.estimator)},
          {"relevance", c.relevance},
          {"benchmarks", c.rows.size()},
          {"changed", c.changed_count()},
          {"relevant", c.relevant_count()},
          {"only_in_v1", c.only_in_v1},
          {"only_in_v2", c.only_in_v2}};
}

inline ordered_json confusion_json(const ConfusionSummary& s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"tn", s.tn},
          {"fn", s.fn},
          {"fpr", detail::optional_number(s.fpr())},
          {"fnr", detail::optional_number(s.fnr())}};
}

// One JSON array per suite run.
inline void write_rmit_plan(std::ostream& out, const std::vector<std::vector<std::string>>& runs) {
  for (const auto& run : runs) out << ordered_json(run).dump() << '\n';
}

}  // namespace uoptime::report
