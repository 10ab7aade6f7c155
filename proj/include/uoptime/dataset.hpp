#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uoptime/csv.hpp"
#include "uoptime/error.hpp"
#include "uoptime/random.hpp"

namespace uoptime {

// Tuple of per-level repetition counts, outermost level first.
class ExecutionConfiguration {
public:
  ExecutionConfiguration() = default;
  explicit ExecutionConfiguration(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ValidationError("execution configuration needs at least one level");
    for (auto c : counts_)
      if (c == 0) throw ValidationError("execution configuration counts must be >= 1");
  }
  ExecutionConfiguration(std::initializer_list<std::size_t> counts)
      : ExecutionConfiguration(std::vector<std::size_t>(counts)) {}

  std::size_t size() const { return counts_.size(); }
  std::size_t operator[](std::size_t k) const { return counts_[k]; }
  std::span<const std::size_t> counts() const { return counts_; }

  std::uint64_t repetitions() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{1},
                           [](std::uint64_t a, std::size_t b) { return a * b; });
  }

  // Entry-wise <=; both must have the same length.
  bool fits_within(const ExecutionConfiguration& outer) const {
    if (size() != outer.size()) return false;
    for (std::size_t k = 0; k < size(); ++k)
      if (counts_[k] > outer.counts_[k]) return false;
    return true;
  }

  // "1x2x5"
  std::string to_string() const {
    std::string s;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      if (k) s.push_back('x');
      s += std::to_string(counts_[k]);
    }
    return s;
  }

  static ExecutionConfiguration parse(std::string_view text) {
    std::vector<std::size_t> counts;
    std::size_t start = 0;
    while (true) {
      const auto end = text.find('x', start);
      const auto part = text.substr(start, end == std::string_view::npos ? end : end - start);
      const auto v = csv::parse_int(part);
      if (!v || *v < 1) throw ParseError("invalid configuration '" + std::string(text) + "'");
      counts.push_back(static_cast<std::size_t>(*v));
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
    return ExecutionConfiguration(std::move(counts));
  }

  // Lexicographic, outermost level first.
  friend auto operator<=>(const ExecutionConfiguration&, const ExecutionConfiguration&) = default;
  friend bool operator==(const ExecutionConfiguration&, const ExecutionConfiguration&) = default;

private:
  std::vector<std::size_t> counts_;
};

struct Level {
  std::string name;
  std::size_t count = 1;
};

struct LevelSchema {
  std::vector<Level> levels;
  double leaf_duration_s = 1.0;
  // Levels whose repetitions run concurrently (e.g. cloud instances) and add no wall-clock time.
  std::vector<std::string> parallel_levels;

  std::size_t size() const { return levels.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (levels[k].name == name) return k;
    return std::nullopt;
  }

  bool is_parallel(std::size_t k) const {
    return std::find(parallel_levels.begin(), parallel_levels.end(), levels[k].name) !=
           parallel_levels.end();
  }

  ExecutionConfiguration full_configuration() const {
    std::vector<std::size_t> counts;
    for (const auto& l : levels) counts.push_back(l.count);
    return ExecutionConfiguration(std::move(counts));
  }

  void validate() const {
    if (levels.empty()) throw ValidationError("schema must declare at least one level");
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k].name.empty()) throw ValidationError("level names must be non-empty");
      if (levels[k].count < 1)
        throw ValidationError("level '" + levels[k].name + "' must have count >= 1");
      for (std::size_t j = 0; j < k; ++j)
        if (levels[j].name == levels[k].name)
          throw ValidationError("duplicate level name '" + levels[k].name + "'");
      if (levels[k].name == "benchmark" || levels[k].name == "value")
        throw ValidationError("level name '" + levels[k].name + "' collides with a CSV column");
    }
    if (!(leaf_duration_s > 0) || !std::isfinite(leaf_duration_s))
      throw ValidationError("leaf_duration_s must be a positive number");
    for (const auto& p : parallel_levels)
      if (!index_of(p)) throw ValidationError("parallel level '" + p + "' is not a declared level");
  }

  void check(const ExecutionConfiguration& e) const {
    if (!e.fits_within(full_configuration()))
      throw ValidationError("configuration " + e.to_string() + " does not fit schema " +
                            full_configuration().to_string());
  }
};

enum class ValueSemantics { lower_is_better, higher_is_better };

inline std::string_view to_string(ValueSemantics s) {
  return s == ValueSemantics::lower_is_better ? "lower_is_better" : "higher_is_better";
}

struct MeasurementRecord {
  std::string benchmark_id;
  std::vector<std::size_t> indices;  // 1-based, one per level
  double value = 0;
};

// Static warmup discarded at one level; kept so reports can show the warmup share of wall-clock time.
struct WarmupPhase {
  std::size_t level = 0;
  std::size_t count = 0;
};

namespace detail {

inline std::string format_indices(std::span<const std::size_t> idx) {
  std::string s = "(";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s.push_back(',');
    s += std::to_string(idx[k]);
  }
  return s + ")";
}

// Row-major offset (outermost level slowest) of a 1-based index tuple.
inline std::size_t grid_offset(std::span<const std::size_t> idx, const LevelSchema& schema) {
  std::size_t off = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) off = off * schema.levels[k].count + (idx[k] - 1);
  return off;
}

}  // namespace detail

// Immutable, validated complete grid of measurements per benchmark.
class MeasurementDataset {
public:
  static MeasurementDataset from_records(LevelSchema schema, std::string unit,
                                         ValueSemantics semantics,
                                         std::span<const MeasurementRecord> records) {
    schema.validate();
    MeasurementDataset ds;
    ds.schema_ = std::move(schema);
    ds.unit_ = std::move(unit);
    ds.semantics_ = semantics;
    const auto grid_size = static_cast<std::size_t>(ds.schema_.full_configuration().repetitions());
    std::vector<std::vector<bool>> seen;

    for (const auto& r : records) {
      if (r.indices.size() != ds.schema_.size())
        throw ValidationError("record for " + r.benchmark_id + " has " +
                              std::to_string(r.indices.size()) + " indices, schema has " +
                              std::to_string(ds.schema_.size()) + " levels");
      for (std::size_t k = 0; k < r.indices.size(); ++k)
        if (r.indices[k] < 1 || r.indices[k] > ds.schema_.levels[k].count)
          throw ValidationError("index " + detail::format_indices(r.indices) + " for " +
                                r.benchmark_id + " is outside the schema");
      if (!(r.value > 0) || !std::isfinite(r.value))
        throw ValidationError("value for " + r.benchmark_id + " at " +
                              detail::format_indices(r.indices) + " must be positive and finite");
      if (r.benchmark_id.empty()) throw ValidationError("benchmark id must be non-empty");

      auto [it, inserted] = ds.lookup_.try_emplace(r.benchmark_id, ds.benchmarks_.size());
      if (inserted) {
        ds.benchmarks_.push_back(r.benchmark_id);
        ds.grids_.emplace_back(grid_size, 0.0);
        seen.emplace_back(grid_size, false);
      }
      const auto off = detail::grid_offset(r.indices, ds.schema_);
      if (seen[it->second][off])
        throw IntegrityError("duplicate index " + detail::format_indices(r.indices) + " for " +
                             r.benchmark_id);
      seen[it->second][off] = true;
      ds.grids_[it->second][off] = r.value;
    }

    for (std::size_t b = 0; b < ds.benchmarks_.size(); ++b) {
      for (std::size_t off = 0; off < grid_size; ++off) {
        if (!seen[b][off])
          throw IntegrityError("missing index " + detail::format_indices(ds.indices_of(off)) +
                               " for " + ds.benchmarks_[b]);
      }
    }
    return ds;
  }

  const LevelSchema& schema() const { return schema_; }
  const std::string& unit() const { return unit_; }
  ValueSemantics semantics() const { return semantics_; }
  // In order of first appearance in the input.
  const std::vector<std::string>& benchmarks() const { return benchmarks_; }
  ExecutionConfiguration full_configuration() const { return schema_.full_configuration(); }
  const std::optional<WarmupPhase>& warmup() const { return warmup_; }

  bool contains(std::string_view benchmark) const {
    return lookup_.find(std::string(benchmark)) != lookup_.end();
  }

  // All values of one benchmark, row-major with the outermost level slowest.
  std::span<const double> grid(std::string_view benchmark) const {
    auto it = lookup_.find(std::string(benchmark));
    if (it == lookup_.end()) throw LookupError("unknown benchmark '" + std::string(benchmark) + "'");
    return grids_[it->second];
  }

  std::vector<std::size_t> indices_of(std::size_t offset) const {
    std::vector<std::size_t> idx(schema_.size());
    for (std::size_t k = schema_.size(); k-- > 0;) {
      idx[k] = offset % schema_.levels[k].count + 1;
      offset /= schema_.levels[k].count;
    }
    return idx;
  }

  std::vector<MeasurementRecord> records() const {
    std::vector<MeasurementRecord> out;
    for (std::size_t b = 0; b < benchmarks_.size(); ++b)
      for (std::size_t off = 0; off < grids_[b].size(); ++off)
        out.push_back({benchmarks_[b], indices_of(off), grids_[b][off]});
    return out;
  }

  MeasurementDataset with_warmup(WarmupPhase w) const {
    auto copy = *this;
    copy.warmup_ = w;
    return copy;
  }

private:
  LevelSchema schema_;
  std::string unit_;
  ValueSemantics semantics_ = ValueSemantics::lower_is_better;
  std::vector<std::string> benchmarks_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
  std::vector<std::vector<double>> grids_;
  std::optional<WarmupPhase> warmup_;
};

// Schema sidecar document: levels plus dataset-wide unit and value semantics.
struct SchemaDocument {
  LevelSchema schema;
  std::string unit = "ns/op";
  ValueSemantics semantics = ValueSemantics::lower_is_better;
};

inline SchemaDocument parse_schema_document(const nlohmann::json& j) {
  SchemaDocument doc;
  try {
    if (!j.is_object()) throw ParseError("schema document must be a JSON object");
    if (!j.contains("levels") || !j.at("levels").is_array())
      throw ParseError("schema document needs a 'levels' array");
    for (const auto& l : j.at("levels")) {
      const auto count = l.at("count").get<long long>();
      if (count < 1) throw ValidationError("level counts must be >= 1");
      doc.schema.levels.push_back({l.at("name").get<std::string>(), static_cast<std::size_t>(count)});
    }
    doc.schema.leaf_duration_s = j.value("leaf_duration_s", 1.0);
    if (j.contains("parallel_levels"))
      doc.schema.parallel_levels = j.at("parallel_levels").get<std::vector<std::string>>();
    doc.unit = j.value("unit", doc.unit);
    const auto sem = j.value("value_semantics", std::string("lower_is_better"));
    if (sem == "lower_is_better")
      doc.semantics = ValueSemantics::lower_is_better;
    else if (sem == "higher_is_better")
      doc.semantics = ValueSemantics::higher_is_better;
    else
      throw ValidationError("unknown value_semantics '" + sem + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema document: ") + e.what());
  }
  doc.schema.validate();
  return doc;
}

inline SchemaDocument load_schema_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema file '" + path + "': " + e.what());
  }
  return parse_schema_document(j);
}

// Input CSV: header `benchmark,<level_1>,...,<level_l>,value`, one row per data point.
inline MeasurementDataset parse_dataset(std::istream& in, const LevelSchema& schema, std::string unit,
                                        ValueSemantics semantics = ValueSemantics::lower_is_better) {
  schema.validate();
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw ParseError("empty measurement file");
  std::vector<std::string> expected{"benchmark"};
  for (const auto& l : schema.levels) expected.push_back(l.name);
  expected.push_back("value");
  if (*header != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw ParseError("header does not match schema, expected '" + want + "'", reader.line());
  }

  std::vector<MeasurementRecord> records;
  while (auto row = reader.next()) {
    const auto line = reader.line();
    if (row->size() != expected.size())
      throw ParseError("expected " + std::to_string(expected.size()) + " fields, got " +
                       std::to_string(row->size()),
                       line);
    MeasurementRecord r;
    r.benchmark_id = (*row)[0];
    if (r.benchmark_id.empty()) throw ParseError("empty benchmark name", line);
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const auto v = csv::parse_int((*row)[k + 1]);
      if (!v) throw ParseError("invalid index '" + (*row)[k + 1] + "'", line);
      if (*v < 1 || static_cast<std::size_t>(*v) > schema.levels[k].count)
        throw ValidationError("line " + std::to_string(line) + ": index " + std::to_string(*v) +
                              " out of range for level '" + schema.levels[k].name + "'");
      r.indices.push_back(static_cast<std::size_t>(*v));
    }
    const auto value = csv::parse_double(row->back());
    if (!value) throw ParseError("invalid value '" + row->back() + "'", line);
    if (!(*value > 0) || !std::isfinite(*value))
      throw ValidationError("line " + std::to_string(line) + ": value must be positive, got " +
                            row->back());
    r.value = *value;
    records.push_back(std::move(r));
  }
  return MeasurementDataset::from_records(schema, std::move(unit), semantics, records);
}

inline MeasurementDataset load_dataset(const std::string& path, const LevelSchema& schema,
                                       std::string unit,
                                       ValueSemantics semantics = ValueSemantics::lower_is_better) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open measurement file '" + path + "'");
  return parse_dataset(in, schema, std::move(unit), semantics);
}

inline MeasurementDataset load_dataset(const std::string& path, const SchemaDocument& doc) {
  return load_dataset(path, doc.schema, doc.unit, doc.semantics);
}

// Wall-clock cost in leaf units: product over the non-parallel levels.
inline std::uint64_t execution_units(const ExecutionConfiguration& e, const LevelSchema& schema) {
  std::uint64_t units = 1;
  for (std::size_t k = 0; k < e.size(); ++k)
    if (!schema.is_parallel(k)) units *= e[k];
  return units;
}

// Lower bound on wall-clock seconds, excluding any harness overhead.
inline double execution_duration(const ExecutionConfiguration& e, const LevelSchema& schema) {
  return static_cast<double>(execution_units(e, schema)) * schema.leaf_duration_s;
}

// Seconds of discarded warmup that a run under `e` still pays. The warmup level
// runs its fixed warmup count; levels inside it run at full length.
inline double warmup_duration(const ExecutionConfiguration& e, const MeasurementDataset& ds) {
  const auto& w = ds.warmup();
  if (!w || w->count == 0) return 0.0;
  const auto& schema = ds.schema();
  std::uint64_t units = 1;
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (schema.is_parallel(k)) continue;
    if (k < w->level)
      units *= e[k];
    else if (k == w->level)
      units *= w->count;
    else
      units *= schema.levels[k].count;
  }
  return static_cast<double>(units) * schema.leaf_duration_s;
}

namespace detail {

inline std::vector<ExecutionConfiguration> cartesian(const ExecutionConfiguration& e_max) {
  std::vector<ExecutionConfiguration> out;
  out.reserve(static_cast<std::size_t>(e_max.repetitions()));
  std::vector<std::size_t> cur(e_max.size(), 1);
  while (true) {
    out.emplace_back(cur);
    std::size_t k = cur.size();
    while (k-- > 0) {
      if (cur[k] < e_max[k]) {
        ++cur[k];
        break;
      }
      cur[k] = 1;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

}  // namespace detail

// Every configuration entry-wise <= e_max (e_max included), by total repetitions
// ascending with lexicographic tie-break.
inline std::vector<ExecutionConfiguration> find_all_smaller_configurations(
    const ExecutionConfiguration& e_max) {
  auto out = detail::cartesian(e_max);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.repetitions() < b.repetitions();
  });
  return out;
}

// Same set, ordered by wall-clock duration under `schema` then lexicographically.
inline std::vector<ExecutionConfiguration> find_all_smaller_configurations(
    const ExecutionConfiguration& e_max, const LevelSchema& schema) {
  auto out = detail::cartesian(e_max);
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return execution_units(a, schema) < execution_units(b, schema);
  });
  return out;
}

// Values a shorter run would have collected: every index tuple with idx[k] <= e[k],
// outermost level slowest.
inline std::vector<double> get_measurements(const ExecutionConfiguration& e,
                                            const MeasurementDataset& ds,
                                            std::string_view benchmark) {
  const auto grid = ds.grid(benchmark);
  ds.schema().check(e);
  const auto& schema = ds.schema();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(e.repetitions()));
  std::vector<std::size_t> idx(e.size(), 1);
  while (true) {
    out.push_back(grid[detail::grid_offset(idx, schema)]);
    std::size_t k = idx.size();
    while (k-- > 0) {
      if (idx[k] < e[k]) {
        ++idx[k];
        break;
      }
      idx[k] = 1;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

// Randomized multiple interleaved trials: per suite run, every benchmark appears
// `iterations_per_suite_run` times in a seeded uniform shuffle.
inline std::vector<std::vector<std::string>> rmit_schedule(std::span<const std::string> benchmarks,
                                                           std::size_t iterations_per_suite_run,
                                                           std::size_t suite_runs,
                                                           std::uint64_t seed) {
  if (benchmarks.empty()) throw ValidationError("RMIT schedule needs at least one benchmark");
  if (iterations_per_suite_run < 1 || suite_runs < 1)
    throw ValidationError("iterations and suite runs must be >= 1");
  Rng rng(SeedBuilder(seed).add(std::string_view("rmit")).value());
  std::vector<std::vector<std::string>> runs;
  runs.reserve(suite_runs);
  for (std::size_t s = 0; s < suite_runs; ++s) {
    std::vector<std::string> order;
    order.reserve(benchmarks.size() * iterations_per_suite_run);
    for (const auto& b : benchmarks)
      for (std::size_t i = 0; i < iterations_per_suite_run; ++i) order.push_back(b);
    shuffle(std::span<std::string>(order), rng);
    runs.push_back(std::move(order));
  }
  return runs;
}

}  // namespace uoptime
