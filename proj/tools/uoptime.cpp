// Command-line front end: optimize, evaluate, compare, rmit-plan.
//
// Exit codes: 0 success, 1 validation/usage error, 2 I/O error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uoptime/uoptime.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// Everything a run can be configured with; filled from flags, then from --manifest for
// flags left unset, then UOPTIME_SEED for the seed.
struct RunManifest {
  std::string schema;
  std::string schema_v2;
  std::string data;
  std::string v1;
  std::string v2;
  std::string configs;
  std::string result;
  std::string metric = "rciw3";
  double threshold = 0.01;
  std::optional<std::uint64_t> seed;
  std::size_t resamples = 10000;
  double confidence = 0.99;
  std::string estimator;
  std::string warmup_level;
  std::size_t warmup_count = 0;
  double relevance = uoptime::kDefaultRelevance;
  std::string strategy = "uoptime";
  std::size_t min_repetitions = 3;
  std::size_t threads = 0;
  std::string out = ".";
  std::vector<std::string> benchmarks;
  std::size_t iterations = 1;
  std::size_t suite_runs = 1;
};

// Applies manifest keys to options the user did not pass on the command line.
class ManifestBinder {
public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    auto* opt = app->add_option(flag, target, help);
    appliers_.push_back([app, opt, key, &target](const json& m) {
      if (app->parsed() && opt->count() == 0 && m.contains(key)) target = m.at(key).get<T>();
    });
    return opt;
  }

  CLI::Option* add_seed(CLI::App* app, std::optional<std::uint64_t>& target) {
    auto* opt = app->add_option("--seed", target,
                                "Seed for every random draw (falls back to UOPTIME_SEED, then 0)");
    appliers_.push_back([app, opt, &target](const json& m) {
      if (app->parsed() && opt->count() == 0 && m.contains("seed")) target = m.at("seed").get<std::uint64_t>();
    });
    return opt;
  }

  void apply(const json& manifest) const {
    for (const auto& a : appliers_) a(manifest);
  }

private:
  std::vector<std::function<void(const json&)>> appliers_;
};

json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw uoptime::IoError("cannot open manifest '" + path + "'");
  try {
    auto j = json::parse(in);
    if (!j.is_object()) throw uoptime::ParseError("manifest must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw uoptime::ParseError("manifest '" + path + "': " + e.what());
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("UOPTIME_SEED")) {
    const auto v = uoptime::csv::parse_int(env);
    if (!v || *v < 0) throw uoptime::ValidationError("UOPTIME_SEED must be a non-negative integer");
    return static_cast<std::uint64_t>(*v);
  }
  return 0;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw uoptime::ValidationError(std::string(flag) + " is required");
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw uoptime::IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw uoptime::IoError("cannot write '" + path.string() + "'");
  writer(out);
  out.flush();
  if (!out) throw uoptime::IoError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, ordered_json body) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  body["generated_at"] = stamp;
  write_file(path, [&](std::ostream& o) { o << body.dump(2) << '\n'; });
}

uoptime::BootstrapSettings bootstrap_settings(const RunManifest& m) {
  uoptime::BootstrapSettings b;
  b.confidence_level = m.confidence;
  b.resamples = m.resamples;
  b.seed = resolve_seed(m.seed);
  b.validate();
  return b;
}

uoptime::OptimizationSettings optimization_settings(const RunManifest& m) {
  uoptime::OptimizationSettings s;
  s.metric = uoptime::parse_metric(m.metric);
  s.threshold = m.threshold;
  s.bootstrap = bootstrap_settings(m);
  s.min_repetitions = m.min_repetitions;
  s.threads = m.threads;
  s.validate();
  return s;
}

uoptime::MeasurementDataset load_with_warmup(const std::string& data,
                                             const uoptime::SchemaDocument& doc,
                                             const RunManifest& m) {
  auto ds = uoptime::load_dataset(data, doc);
  if (!m.warmup_level.empty()) return uoptime::discard_warmup(ds, m.warmup_level, m.warmup_count);
  if (m.warmup_count > 0) throw uoptime::ValidationError("--warmup-count needs --warmup-level");
  return ds;
}

int cmd_optimize(const RunManifest& m) {
  require(m.schema, "--schema");
  require(m.data, "--data");
  const auto settings = optimization_settings(m);
  const auto strategy = uoptime::parse_strategy(m.strategy);
  const auto doc = uoptime::load_schema_document(m.schema);
  const auto ds = load_with_warmup(m.data, doc, m);
  const auto result = uoptime::run_strategy(ds, strategy, settings);

  const auto dir = prepare_out_dir(m.out);
  write_file(dir / "optimization.csv",
             [&](std::ostream& o) { uoptime::report::write_optimization_csv(o, result); });
  auto summary = uoptime::report::optimization_summary(result);
  summary["unit"] = ds.unit();
  if (ds.warmup())
    summary["warmup"] = {{"level", ds.schema().levels[ds.warmup()->level].name},
                         {"count", ds.warmup()->count}};
  write_json(dir / "optimization.json", std::move(summary));
  std::cout << "optimized " << result.selections.size() << " benchmarks ("
            << result.count(uoptime::SelectionFlag::not_reduced) << " not reduced), saved "
            << result.total_saved_s() << " of " << result.total_full_duration_s() << " s\n";
  return 0;
}

// Metric recorded next to a result file, when there is one.
std::optional<std::string> metric_beside(const std::string& result_path) {
  const auto summary = fs::path(result_path).replace_extension(".json");
  std::ifstream in(summary);
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    return j.at("settings").at("metric").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

int cmd_evaluate(const RunManifest& m, bool metric_given) {
  require(m.schema, "--schema");
  require(m.data, "--data");
  require(m.result, "--result");
  const auto doc = uoptime::load_schema_document(m.schema);
  const auto ds = load_with_warmup(m.data, doc, m);
  const auto configs = uoptime::report::read_configurations(m.result);

  std::string metric_name = m.metric;
  if (!metric_given)
    if (auto recorded = metric_beside(m.result)) metric_name = *recorded;
  const auto metric = uoptime::parse_metric(metric_name);
  const auto paired = uoptime::paired_estimator(metric);
  const auto estimator = m.estimator.empty() ? paired : uoptime::parse_estimator(m.estimator);

  auto report = uoptime::evaluate(ds, configs, estimator);
  if (estimator != paired)
    report.warnings.push_back("estimator " + std::string(uoptime::to_string(estimator)) +
                              " does not match metric " + metric_name);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';

  const auto dir = prepare_out_dir(m.out);
  write_file(dir / "evaluation.csv",
             [&](std::ostream& o) { uoptime::report::write_evaluation_csv(o, report); });
  write_json(dir / "evaluation.json", uoptime::report::evaluation_json(report));
  std::cout << "evaluated " << report.rows.size() << " benchmarks; below 1%: "
            << report.fraction_below(0.01) << ", savings " << report.savings_fraction() << '\n';
  return 0;
}

int cmd_compare(const RunManifest& m) {
  require(m.schema, "--schema");
  require(m.v1, "--v1");
  require(m.v2, "--v2");
  const auto doc1 = uoptime::load_schema_document(m.schema);
  const auto doc2 = m.schema_v2.empty() ? doc1 : uoptime::load_schema_document(m.schema_v2);
  const auto v1 = load_with_warmup(m.v1, doc1, m);
  const auto v2 = load_with_warmup(m.v2, doc2, m);
  const auto settings = bootstrap_settings(m);
  const auto estimator =
      m.estimator.empty() ? uoptime::Estimator::median : uoptime::parse_estimator(m.estimator);

  const auto full = uoptime::detect_changes(v1, v2, {}, estimator, settings, m.relevance);
  const auto dir = prepare_out_dir(m.out);
  ordered_json summary;
  summary["full"] = uoptime::report::comparison_json(full);

  if (m.configs.empty()) {
    write_file(dir / "comparison.csv",
               [&](std::ostream& o) { uoptime::report::write_comparison_csv(o, full); });
  } else {
    const auto configs = uoptime::report::read_configurations(m.configs);
    const auto reduced = uoptime::detect_changes(v1, v2, configs, estimator, settings, m.relevance);
    const auto confusion = uoptime::score_against_full(full, reduced);
    write_file(dir / "comparison.csv",
               [&](std::ostream& o) { uoptime::report::write_comparison_csv(o, reduced); });
    write_file(dir / "comparison_full.csv",
               [&](std::ostream& o) { uoptime::report::write_comparison_csv(o, full); });
    summary["reduced"] = uoptime::report::comparison_json(reduced);
    summary["confusion"] = uoptime::report::confusion_json(confusion);
  }
  write_json(dir / "comparison.json", summary);
  std::cout << "compared " << full.rows.size() << " shared benchmarks; " << full.relevant_count()
            << " relevant changes under the full configuration\n";
  return 0;
}

int cmd_rmit_plan(const RunManifest& m, bool out_given) {
  const auto runs = uoptime::rmit_schedule(m.benchmarks, m.iterations, m.suite_runs,
                                           resolve_seed(m.seed));
  if (!out_given) {
    uoptime::report::write_rmit_plan(std::cout, runs);
    return 0;
  }
  const auto dir = prepare_out_dir(m.out);
  write_file(dir / "rmit_plan.jsonl",
             [&](std::ostream& o) { uoptime::report::write_rmit_plan(o, runs); });
  return 0;
}

void report_error(const char* kind, const std::string& message, int code, bool as_json) {
  if (as_json) {
    std::cerr << ordered_json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump()
              << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finds per-benchmark minimal stable execution configurations from full microbenchmark runs"};
  app.require_subcommand(1);
  RunManifest m;
  ManifestBinder binder;
  std::string manifest_path;
  bool error_json = false;
  app.add_option("--manifest", manifest_path, "JSON manifest supplying defaults for any flag");
  app.add_flag("--error-json", error_json, "Report errors as a JSON object on stderr");

  auto add_bootstrap = [&](CLI::App* sub) {
    binder.add_seed(sub, m.seed);
    binder.add(sub, "--resamples", "resamples", m.resamples, "Bootstrap resamples (default 10000)");
    binder.add(sub, "--confidence", "confidence", m.confidence, "Confidence level (default 0.99)");
  };
  auto add_warmup = [&](CLI::App* sub) {
    binder.add(sub, "--warmup-level", "warmup_level", m.warmup_level,
               "Level whose first repetitions are discarded as warmup");
    binder.add(sub, "--warmup-count", "warmup_count", m.warmup_count,
               "Number of warmup repetitions to discard at --warmup-level");
  };
  auto add_out = [&](CLI::App* sub) {
    return binder.add(sub, "--out", "out", m.out, "Output directory (default .)");
  };

  auto* optimize = app.add_subcommand("optimize", "Select the shortest stable configuration per benchmark");
  binder.add(optimize, "--schema", "schema", m.schema, "Schema JSON sidecar");
  binder.add(optimize, "--data", "data", m.data, "Measurement CSV");
  binder.add(optimize, "--metric", "metric", m.metric, "cv | rmad | rciw1 | rciw2 | rciw3 (default rciw3)");
  binder.add(optimize, "--threshold", "threshold", m.threshold, "Stability threshold (default 0.01)");
  binder.add(optimize, "--strategy", "strategy", m.strategy, "uoptime | minimum | random (default uoptime)");
  binder.add(optimize, "--min-repetitions", "min_repetitions", m.min_repetitions,
             "Minimum data points per candidate (default 3)");
  binder.add(optimize, "--threads", "threads", m.threads, "Worker threads, 0 = all cores (default 0)");
  add_bootstrap(optimize);
  add_warmup(optimize);
  add_out(optimize);

  auto* evaluate = app.add_subcommand("evaluate", "Change rates and time savings of a result versus the full configuration");
  binder.add(evaluate, "--schema", "schema", m.schema, "Schema JSON sidecar");
  binder.add(evaluate, "--data", "data", m.data, "Measurement CSV");
  binder.add(evaluate, "--result", "result", m.result, "optimization.csv from the optimize command");
  auto* eval_metric = binder.add(evaluate, "--metric", "metric", m.metric,
                                 "Metric the result was built with (default: read from the result summary)");
  binder.add(evaluate, "--estimator", "estimator", m.estimator, "mean | median (default: paired with metric)");
  add_warmup(evaluate);
  add_out(evaluate);

  auto* compare = app.add_subcommand("compare", "Detect performance changes between two versions");
  binder.add(compare, "--schema", "schema", m.schema, "Schema JSON sidecar (both versions)");
  binder.add(compare, "--schema-v2", "schema_v2", m.schema_v2, "Schema for v2 when it differs");
  binder.add(compare, "--v1", "v1", m.v1, "Measurement CSV of the old version");
  binder.add(compare, "--v2", "v2", m.v2, "Measurement CSV of the new version");
  binder.add(compare, "--configs", "configs", m.configs,
             "optimization.csv with reduced configurations; enables FPR/FNR scoring");
  binder.add(compare, "--estimator", "estimator", m.estimator, "mean | median (default median)");
  binder.add(compare, "--relevance", "relevance", m.relevance, "Relevant change threshold (default 0.03)");
  add_bootstrap(compare);
  add_warmup(compare);
  add_out(compare);

  auto* plan = app.add_subcommand("rmit-plan", "Write a seeded RMIT schedule, one suite run per line");
  binder.add(plan, "--benchmarks", "benchmarks", m.benchmarks, "Benchmark names")->delimiter(',');
  binder.add(plan, "--iterations", "iterations", m.iterations, "Iterations per suite run (default 1)");
  binder.add(plan, "--suite-runs", "suite_runs", m.suite_runs, "Suite runs (default 1)");
  binder.add_seed(plan, m.seed);
  auto* plan_out = add_out(plan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), kExitValidation, error_json);
    return kExitValidation;
  }

  try {
    json manifest = json::object();
    if (!manifest_path.empty()) manifest = load_manifest(manifest_path);
    binder.apply(manifest);
    if (*optimize) return cmd_optimize(m);
    if (*evaluate) return cmd_evaluate(m, eval_metric->count() > 0 || manifest.contains("metric"));
    if (*compare) return cmd_compare(m);
    if (*plan) return cmd_rmit_plan(m, plan_out->count() > 0 || manifest.contains("out"));
  } catch (const uoptime::IoError& e) {
    report_error(e.kind(), e.what(), kExitIo, error_json);
    return kExitIo;
  } catch (const uoptime::Error& e) {
    report_error(e.kind(), e.what(), kExitValidation, error_json);
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error("validation", e.what(), kExitValidation, error_json);
    return kExitValidation;
  }
  return kExitValidation;
}
