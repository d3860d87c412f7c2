/*
 * Copyright 2026 The denitlab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DENITLAB_EXPERIMENT_HPP_
#define DENITLAB_EXPERIMENT_HPP_

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "denitlab/ablation.hpp"
#include "denitlab/anomaly.hpp"
#include "denitlab/evaluation.hpp"
#include "denitlab/hyperopt.hpp"
#include "denitlab/preprocess.hpp"
#include "denitlab/synthpilot.hpp"
#include "json.hpp"

namespace denitlab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kDataEnvVar = "DENITLAB_DATA";

struct CleaningConfig {
  bool enabled = true;
  CleaningParams params;
  PressureSignal signal = PressureSignal::kBoth;
};

struct SearchConfig {
  std::size_t budget = 50;
  std::uint64_t seed = 0;
  std::vector<std::size_t> h_values;                           // empty: arch defaults
  std::vector<std::vector<std::string>> covariate_sets;        // empty: arch defaults
  std::map<std::string, Dimension> hyperparams;                // merged over arch defaults
};

struct AblationConfig {
  std::vector<std::string> covariates;  // empty: the base model's covariates
  std::vector<std::size_t> h_values;    // empty: no history sweep
  std::size_t seeds_per_subset = 1;
  double top_fraction = 0.05;
};

/// One declarative experiment. Every field has a default so partial
/// documents resolve to a complete, reproducible run.
struct ExperimentConfig {
  std::optional<std::string> dataset;
  std::optional<SynthConfig> synth;
  Task task = Task::kNowcast;
  std::vector<ModelSpec> models;
  SearchConfig search;
  CvSettings folds;
  double train_fraction = 0.72;
  double val_fraction = 0.08;
  CleaningConfig cleaning;
  std::vector<std::uint64_t> seeds = {0};
  AnomalyParams anomaly;
  AblationConfig ablation;
  bool baselines = true;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::kInvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(ok, ErrorCode::kInvalidConfig, "unknown key '" + key + "' in " + where);
  }
}

inline Dimension dimension_from_json(const nlohmann::json& j, const std::string& name) {
  require(j.is_object() && j.size() == 1, ErrorCode::kInvalidConfig,
          "search dimension '" + name + "' needs exactly one of grid, uniform, log_uniform, int_uniform");
  const auto& [kind, v] = *j.items().begin();
  Dimension d;
  if (kind == "grid") {
    d = Dimension::grid(v.get<std::vector<double>>());
  } else {
    const auto lohi = v.get<std::vector<double>>();
    require(lohi.size() == 2, ErrorCode::kInvalidConfig, "'" + name + "' range needs [lo, hi]");
    if (kind == "uniform") d = Dimension::uniform(lohi[0], lohi[1]);
    else if (kind == "log_uniform") d = Dimension::log_uniform(lohi[0], lohi[1]);
    else if (kind == "int_uniform") d = Dimension::int_uniform(lohi[0], lohi[1]);
    else fail(ErrorCode::kInvalidConfig, "unknown dimension kind '" + kind + "'");
  }
  require(d.valid(), ErrorCode::kInvalidConfig, "search dimension '" + name + "' is empty");
  return d;
}

inline nlohmann::json dimension_to_json(const Dimension& d) {
  switch (d.kind) {
    case Dimension::Kind::kGrid: return {{"grid", d.values}};
    case Dimension::Kind::kUniform: return {{"uniform", {d.lo, d.hi}}};
    case Dimension::Kind::kLogUniform: return {{"log_uniform", {d.lo, d.hi}}};
    case Dimension::Kind::kIntUniform: return {{"int_uniform", {d.lo, d.hi}}};
  }
  return nullptr;
}

inline std::string_view to_string(PressureSignal s) {
  return s == PressureSignal::kBoth ? "both" : s == PressureSignal::kBottom ? "bottom" : "top";
}

inline PressureSignal parse_signal(std::string_view s) {
  if (s == "both") return PressureSignal::kBoth;
  if (s == "bottom") return PressureSignal::kBottom;
  if (s == "top") return PressureSignal::kTop;
  fail(ErrorCode::kInvalidConfig, "unknown pressure signal '" + std::string(s) + "'");
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"dataset", "synth", "task", "model", "models", "search", "folds", "final_split", "cleaning",
                      "seeds", "anomaly", "ablation", "baselines"},
                     "config");
  ExperimentConfig c;
  if (j.contains("dataset") && !j["dataset"].is_null()) c.dataset = j["dataset"].get<std::string>();
  if (j.contains("synth")) c.synth = j["synth"].get<SynthConfig>();
  c.task = parse_task(j.value("task", std::string("nowcast")));

  require(!(j.contains("model") && j.contains("models")), ErrorCode::kInvalidConfig, "give 'model' or 'models'");
  std::vector<nlohmann::json> model_docs;
  if (j.contains("model")) model_docs.push_back(j["model"]);
  if (j.contains("models")) model_docs = j["models"].get<std::vector<nlohmann::json>>();
  if (model_docs.empty()) model_docs.push_back({{"arch", "elastic_net"}});
  for (const auto& m : model_docs) {
    detail::check_keys(m, {"arch", "covariates", "h", "task", "hyperparams", "seed"}, "model");
    ModelSpec spec = spec_from_json(m);
    spec.task = c.task;
    spec.hyperparams = resolve_hyperparams(spec.arch, spec.hyperparams);
    validate_spec(spec);
    c.models.push_back(std::move(spec));
  }

  if (j.contains("search")) {
    const auto& s = j["search"];
    detail::check_keys(s, {"budget", "seed", "h_values", "covariate_sets", "hyperparams"}, "search");
    c.search.budget = s.value("budget", c.search.budget);
    c.search.seed = s.value("seed", c.search.seed);
    c.search.h_values = s.value("h_values", c.search.h_values);
    c.search.covariate_sets = s.value("covariate_sets", c.search.covariate_sets);
    if (s.contains("hyperparams")) {
      for (const auto& [name, d] : s["hyperparams"].items()) c.search.hyperparams[name] = detail::dimension_from_json(d, name);
    }
    require(c.search.budget >= 1, ErrorCode::kInvalidConfig, "search.budget >= 1");
  }
  if (j.contains("folds")) {
    const auto& f = j["folds"];
    detail::check_keys(f, {"n_folds", "train_block", "val_block", "test_fraction"}, "folds");
    c.folds.n_folds = f.value("n_folds", c.folds.n_folds);
    c.folds.train_block = f.value("train_block", c.folds.train_block);
    c.folds.val_block = f.value("val_block", c.folds.val_block);
    c.folds.test_fraction = f.value("test_fraction", c.folds.test_fraction);
  }
  if (j.contains("final_split")) {
    const auto& f = j["final_split"];
    detail::check_keys(f, {"train", "validation"}, "final_split");
    c.train_fraction = f.value("train", c.train_fraction);
    c.val_fraction = f.value("validation", c.val_fraction);
    (void)make_final_split(100, c.train_fraction, c.val_fraction);
  }
  if (j.contains("cleaning")) {
    const auto& f = j["cleaning"];
    detail::check_keys(f, {"enabled", "window", "deviation_threshold", "min_run", "merge_distance", "signal"},
                       "cleaning");
    c.cleaning.enabled = f.value("enabled", true);
    c.cleaning.params.window = f.value("window", c.cleaning.params.window);
    c.cleaning.params.deviation_threshold = f.value("deviation_threshold", c.cleaning.params.deviation_threshold);
    c.cleaning.params.min_run = f.value("min_run", c.cleaning.params.min_run);
    c.cleaning.params.merge_distance = f.value("merge_distance", c.cleaning.params.merge_distance);
    c.cleaning.signal = detail::parse_signal(f.value("signal", std::string("both")));
  }
  if (j.contains("seeds")) {
    c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    require(!c.seeds.empty(), ErrorCode::kInvalidConfig, "seeds must not be empty");
  }
  if (j.contains("anomaly")) {
    const auto& a = j["anomaly"];
    detail::check_keys(a, {"peak_window", "peak_sigma", "follow_ratio", "bias_window", "bias_threshold", "min_correlation"},
                       "anomaly");
    c.anomaly.peak_window = a.value("peak_window", c.anomaly.peak_window);
    c.anomaly.peak_sigma = a.value("peak_sigma", c.anomaly.peak_sigma);
    c.anomaly.follow_ratio = a.value("follow_ratio", c.anomaly.follow_ratio);
    c.anomaly.bias_window = a.value("bias_window", c.anomaly.bias_window);
    c.anomaly.bias_threshold = a.value("bias_threshold", c.anomaly.bias_threshold);
    c.anomaly.min_correlation = a.value("min_correlation", c.anomaly.min_correlation);
  }
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    detail::check_keys(a, {"covariates", "h_values", "seeds_per_subset", "top_fraction"}, "ablation");
    c.ablation.covariates = a.value("covariates", c.ablation.covariates);
    c.ablation.h_values = a.value("h_values", c.ablation.h_values);
    c.ablation.seeds_per_subset = a.value("seeds_per_subset", c.ablation.seeds_per_subset);
    c.ablation.top_fraction = a.value("top_fraction", c.ablation.top_fraction);
  }
  c.baselines = j.value("baselines", true);
  return c;
}

/// The fully resolved configuration, defaults included.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  nlohmann::json dims = nlohmann::json::object();
  for (const auto& [name, d] : c.search.hyperparams) dims[name] = detail::dimension_to_json(d);
  nlohmann::json j = {
      {"dataset", c.dataset ? nlohmann::json(*c.dataset) : nlohmann::json(nullptr)},
      {"task", to_string(c.task)},
      {"models", models},
      {"search",
       {{"budget", c.search.budget},
        {"seed", c.search.seed},
        {"h_values", c.search.h_values},
        {"covariate_sets", c.search.covariate_sets},
        {"hyperparams", dims}}},
      {"folds",
       {{"n_folds", c.folds.n_folds},
        {"train_block", c.folds.train_block},
        {"val_block", c.folds.val_block},
        {"test_fraction", c.folds.test_fraction}}},
      {"final_split", {{"train", c.train_fraction}, {"validation", c.val_fraction}}},
      {"cleaning",
       {{"enabled", c.cleaning.enabled},
        {"window", c.cleaning.params.window},
        {"deviation_threshold", c.cleaning.params.deviation_threshold},
        {"min_run", c.cleaning.params.min_run},
        {"merge_distance", c.cleaning.params.merge_distance},
        {"signal", detail::to_string(c.cleaning.signal)}}},
      {"seeds", c.seeds},
      {"anomaly",
       {{"peak_window", c.anomaly.peak_window},
        {"peak_sigma", c.anomaly.peak_sigma},
        {"follow_ratio", c.anomaly.follow_ratio},
        {"bias_window", c.anomaly.bias_window},
        {"bias_threshold", c.anomaly.bias_threshold},
        {"min_correlation", c.anomaly.min_correlation}}},
      {"ablation",
       {{"covariates", c.ablation.covariates},
        {"h_values", c.ablation.h_values},
        {"seeds_per_subset", c.ablation.seeds_per_subset},
        {"top_fraction", c.ablation.top_fraction}}},
      {"baselines", c.baselines},
  };
  if (c.synth) j["synth"] = *c.synth;
  return j;
}

/// Hash of the resolved config and the code version.
inline std::string run_id(const ExperimentConfig& c) {
  const std::uint64_t h = fnv1a(to_json(c).dump() + "|" + kVersion);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Pipeline stages

struct PreparedData {
  TimeSeriesFrame raw;
  TimeSeriesFrame frame;  // target interpolated across cleaning
  CleaningMask mask;
  std::optional<FaultSchedule> schedule;  // ground truth for synthetic data
  std::string source;
};

/// Dataset choice: explicit path, then the config's path, then the
/// environment default, then the synthetic generator. A config with a
/// `synth` section and no path ignores the environment.
inline std::optional<std::string> resolve_dataset(const ExperimentConfig& c,
                                                  const std::optional<std::string>& override_path) {
  if (override_path) return override_path;
  if (c.dataset) return c.dataset;
  if (c.synth) return std::nullopt;
  if (const char* env = std::getenv(kDataEnvVar); env != nullptr && *env != '\0') return std::string(env);
  return std::nullopt;
}

inline PreparedData prepare_data(const ExperimentConfig& c, const std::optional<std::string>& override_path = {}) {
  PreparedData d;
  if (const auto path = resolve_dataset(c, override_path)) {
    d.raw = load_csv(*path);
    d.source = *path;
  } else {
    auto out = generate(c.synth.value_or(SynthConfig{}));
    d.raw = std::move(out.frame);
    d.schedule = std::move(out.schedule);
    d.source = "synthpilot";
  }
  if (c.cleaning.enabled) d.mask = detect_cleaning(d.raw, c.cleaning.params, c.cleaning.signal);
  d.frame = interpolate_target(d.raw, d.mask);
  return d;
}

inline FoldPlan final_plan(const ExperimentConfig& c, const TimeSeriesFrame& frame) {
  return make_final_split(frame, c.train_fraction, c.val_fraction);
}

/// Reports for every non-empty split of the plan.
inline std::vector<EvalReport> evaluate_splits(const TrainedModel& m, const TimeSeriesFrame& frame,
                                               const FoldPlan& plan) {
  std::vector<EvalReport> out;
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    if (!ranges_of(plan, s).empty()) out.push_back(evaluate(m, frame, plan, s));
  }
  return out;
}

inline std::vector<EvalReport> baseline_reports(const TimeSeriesFrame& frame, const FoldPlan& plan, Task task) {
  std::vector<EvalReport> out;
  for (const auto& b : standard_baselines(task)) {
    for (Split s : {Split::kValidation, Split::kTest}) {
      if (!ranges_of(plan, s).empty()) out.push_back(evaluate_baseline(b, frame, plan, task, s));
    }
  }
  return out;
}

/// Trains every model once per seed on the final split and evaluates it.
/// Runs are independent; results are ordered by (model, seed).
inline std::vector<EvalReport> seed_reports(const ExperimentConfig& c, const TimeSeriesFrame& frame,
                                            std::size_t jobs = 1) {
  const FoldPlan plan = final_plan(c, frame);
  const std::size_t runs = c.models.size() * c.seeds.size();
  std::vector<std::vector<EvalReport>> slots(runs);
  parallel_for(runs, jobs, [&](std::size_t k) {
    ModelSpec spec = c.models[k / c.seeds.size()];
    spec.seed = c.seeds[k % c.seeds.size()];
    const auto trained = train_model(spec, frame, plan.train, plan.validation);
    slots[k] = evaluate_splits(trained.model, frame, plan);
  });
  std::vector<EvalReport> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

struct AnomalyRun {
  PredictionSeries series;  // one-step predictions on the evaluated split
  std::vector<AnomalyEvent> events;
};

/// One-step predictions over a split and the anomalies found in them.
/// Forecasting models contribute their first rollout step.
inline AnomalyRun run_anomaly(const TrainedModel& m, const TimeSeriesFrame& frame, const FoldPlan& plan,
                              const AnomalyParams& params, Split split = Split::kTest) {
  AnomalyRun run;
  run.series = predict_series(m, frame, ranges_of(plan, split), 1);
  std::vector<double> pred, actual;
  for (std::size_t i = 0; i < run.series.anchors.size(); ++i) {
    pred.push_back(run.series.pred[i][0]);
    actual.push_back(run.series.actual[i][0]);
  }
  run.events = detect_anomalies(pred, actual, params);
  return run;
}

/// Series-index events mapped to frame rows (forecast rows point at t+1),
/// with timestamps and the mean of every covariate over the interval.
inline nlohmann::json anomaly_json(const AnomalyRun& run, const TimeSeriesFrame& frame, Task task) {
  const std::size_t lead = task == Task::kForecast ? 1 : 0;
  auto row = [&](std::size_t i) { return run.series.anchors[i] + lead; };
  nlohmann::json events = events_to_json(run.events, [&](std::size_t i) {
    return format_timestamp(frame.timestamp_at(row(std::min(i, run.series.anchors.size() - 1))));
  });
  for (std::size_t k = 0; k < run.events.size(); ++k) {
    const auto& e = run.events[k];
    events[k]["start_row"] = row(e.start);
    events[k]["end_row"] = row(e.end - 1) + 1;
    nlohmann::json snapshot = nlohmann::json::object();
    for (const auto& col : frame.columns()) {
      if (col.name == frame.target_name()) continue;
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t i = row(e.start); i <= row(e.end - 1); ++i) {
        if (col.values[i]) {
          s += *col.values[i];
          ++n;
        }
      }
      snapshot[col.name] = n ? nlohmann::json(s / static_cast<double>(n)) : nlohmann::json(nullptr);
    }
    events[k]["covariate_means"] = snapshot;
  }
  return events;
}

/// The architecture's default search space with the config's overrides.
inline SearchSpace search_space(const ExperimentConfig& c, const ModelSpec& base) {
  SearchSpace s = default_search_space(base.arch, c.task);
  s.base = base;
  if (!c.search.h_values.empty()) s.h_values = c.search.h_values;
  s.covariate_sets = c.search.covariate_sets.empty() ? std::vector<std::vector<std::string>>{base.covariates}
                                                     : c.search.covariate_sets;
  for (const auto& [name, d] : c.search.hyperparams) s.hyperparams[name] = d;
  return s;
}

}  // namespace denitlab

#endif  // DENITLAB_EXPERIMENT_HPP_
