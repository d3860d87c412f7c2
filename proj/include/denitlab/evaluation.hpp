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

#ifndef DENITLAB_EVALUATION_HPP_
#define DENITLAB_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "denitlab/baselines.hpp"
#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "denitlab/model.hpp"
#include "denitlab/preprocess.hpp"
#include "json.hpp"

namespace denitlab {

inline constexpr std::size_t kForecastHorizon = kSamplesPerHour;

// ---------------------------------------------------------------------------
// Metrics

namespace detail {

inline void check_metric_inputs(std::span<const double> pred, std::span<const double> actual) {
  require(pred.size() == actual.size(), ErrorCode::kLengthMismatch,
          std::to_string(pred.size()) + " predictions vs " + std::to_string(actual.size()) + " actuals");
  require(!pred.empty(), ErrorCode::kLengthMismatch, "metrics need at least one point");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require(std::isfinite(pred[i]) && std::isfinite(actual[i]), ErrorCode::kNonFinite,
            "non-finite value at " + std::to_string(i));
  }
}

}  // namespace detail

inline double mse(std::span<const double> pred, std::span<const double> actual) {
  detail::check_metric_inputs(pred, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

inline double mae(std::span<const double> pred, std::span<const double> actual) {
  detail::check_metric_inputs(pred, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Reports

enum class Split { kTrain, kValidation, kTest };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation") return Split::kValidation;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kInvalidConfig, "unknown split '" + std::string(s) + "'");
}

inline const std::vector<IndexRange>& ranges_of(const FoldPlan& plan, Split s) {
  switch (s) {
    case Split::kTrain: return plan.train;
    case Split::kValidation: return plan.validation;
    case Split::kTest: return plan.test;
  }
  return plan.test;
}

/// Original-unit metrics of one model on one split.
struct EvalReport {
  std::string model_id;
  Task task = Task::kNowcast;
  Split split = Split::kTest;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n_points = 0;
  std::uint64_t seed = 0;
  std::vector<double> horizon_mse;  // forecasting diagnostics, one per step
};

struct SeedAggregate {
  double mean_mse = 0.0;
  double std_mse = 0.0;
  double mean_mae = 0.0;
  double std_mae = 0.0;
  std::size_t n_seeds = 0;
};

/// Predictions aligned with anchors; each entry holds one value per horizon step.
struct PredictionSeries {
  std::vector<std::size_t> anchors;
  std::vector<std::vector<double>> pred;
  std::vector<std::vector<double>> actual;
};

inline EvalReport score(const PredictionSeries& s, std::string model_id, Task task, Split split, std::uint64_t seed) {
  require(!s.anchors.empty(), ErrorCode::kNoAdmissibleWindows, "nothing to score");
  std::vector<double> pred, actual;
  const std::size_t steps = s.pred.front().size();
  std::vector<double> step_sse(steps, 0.0);
  for (std::size_t i = 0; i < s.anchors.size(); ++i) {
    for (std::size_t k = 0; k < steps; ++k) {
      pred.push_back(s.pred[i][k]);
      actual.push_back(s.actual[i][k]);
      step_sse[k] += (s.pred[i][k] - s.actual[i][k]) * (s.pred[i][k] - s.actual[i][k]);
    }
  }
  EvalReport r;
  r.model_id = std::move(model_id);
  r.task = task;
  r.split = split;
  r.mse = mse(pred, actual);
  r.mae = mae(pred, actual);
  r.n_points = pred.size();
  r.seed = seed;
  if (task == Task::kForecast) {
    for (double v : step_sse) r.horizon_mse.push_back(v / static_cast<double>(s.anchors.size()));
  }
  // Cauchy-Schwarz over the same points.
  require(r.mae * r.mae <= r.mse * (1.0 + 1e-12) + 1e-300, ErrorCode::kNonFinite, "mae^2 > mse");
  return r;
}

/// Runs the model over every admissible anchor of `ranges`. Nowcasting gives
/// one prediction per anchor; forecasting gives a six-step recursive rollout.
inline PredictionSeries predict_series(const TrainedModel& m, const TimeSeriesFrame& frame,
                                       const std::vector<IndexRange>& ranges, std::size_t horizon = kForecastHorizon) {
  const TimeSeriesFrame scaled = apply_scaler(frame, m.scaler);
  const bool forecast = m.spec.task == Task::kForecast;
  const WindowSpec wspec{m.spec.covariates, m.spec.h, forecast ? horizon : 0, forecast};
  const WindowSet set = build_windows(scaled, wspec, ranges);
  const auto& y = frame.target().values;
  PredictionSeries out;
  for (const auto& s : set.samples) {
    out.anchors.push_back(s.t);
    if (forecast) {
      out.pred.push_back(rollout_forecast(m, scaled, s.t, horizon));
      std::vector<double> actual;
      for (std::size_t k = 1; k <= horizon; ++k) actual.push_back(*y[s.t + k]);
      out.actual.push_back(std::move(actual));
    } else {
      out.pred.push_back(invert_target(m.scaler, {predict(m, s)}, frame.target_name()));
      out.actual.push_back({*y[s.t]});
    }
  }
  return out;
}

/// Metrics are computed against `frame` in its original units.
inline EvalReport evaluate(const TrainedModel& m, const TimeSeriesFrame& frame, const FoldPlan& plan, Split split,
                           std::string model_id = {}) {
  if (model_id.empty()) model_id = std::string(display_name(m.spec.arch));
  const auto series = predict_series(m, frame, ranges_of(plan, split));
  return score(series, std::move(model_id), m.spec.task, split, m.spec.seed);
}

namespace detail {

inline std::vector<double> present_target(const TimeSeriesFrame& frame, const std::vector<IndexRange>& ranges) {
  std::vector<double> v;
  const auto& y = frame.target().values;
  for (const auto& r : ranges) {
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (y[i]) v.push_back(*y[i]);
    }
  }
  return v;
}

}  // namespace detail

/// Forecasting baselines share one anchor set: every anchor with six past
/// target values and six future ones inside the same range.
inline PredictionSeries baseline_series(const BaselineSpec& b, const TimeSeriesFrame& frame, const FoldPlan& plan,
                                        Task task, Split split) {
  const auto& ranges = ranges_of(plan, split);
  PredictionSeries out;
  if (task == Task::kNowcast) {
    const auto& y = frame.target().values;
    std::vector<std::size_t> anchors;
    std::vector<double> values;
    for (const auto& r : ranges) {
      for (std::size_t i = r.begin; i < r.end; ++i) {
        if (y[i]) {
          anchors.push_back(i);
          values.push_back(*y[i]);
        }
      }
    }
    require(!anchors.empty(), ErrorCode::kNoAdmissibleWindows, "split has no target readings");
    std::vector<double> pred;
    switch (b.kind) {
      case BaselineKind::kTrainingMean:
        pred = training_mean_predict(detail::present_target(frame, plan.train), anchors.size());
        break;
      case BaselineKind::kRunningMean:
        pred = running_mean_series(values);
        break;
      default:
        fail(ErrorCode::kBadParams, b.name() + " is a forecasting baseline");
    }
    out.anchors = std::move(anchors);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      out.pred.push_back({pred[i]});
      out.actual.push_back({values[i]});
    }
    return out;
  }

  const std::size_t history = std::max({b.horizon, b.n, std::size_t{1}});
  const WindowSpec wspec{{}, history - 1, b.horizon, true};
  const WindowSet set = build_windows(frame, wspec, ranges);
  double train_mean = 0.0;
  if (b.kind == BaselineKind::kTrainingMean) train_mean = mean_of(detail::present_target(frame, plan.train));
  // Running mean restarts at the start of the evaluated split.
  const auto& y = frame.target().values;
  double run_sum = 0.0;
  std::size_t run_n = 0, cursor = ranges.empty() ? 0 : ranges.front().begin;
  std::size_t range_idx = 0;
  for (const auto& s : set.samples) {
    std::vector<double> pred;
    switch (b.kind) {
      case BaselineKind::kTrainingMean:
        pred.assign(b.horizon, train_mean);
        break;
      case BaselineKind::kRunningMean: {
        while (range_idx < ranges.size() && cursor <= s.t) {
          if (y[cursor]) {
            run_sum += *y[cursor];
            ++run_n;
          }
          if (++cursor >= ranges[range_idx].end && ++range_idx < ranges.size()) cursor = ranges[range_idx].begin;
        }
        pred.assign(b.horizon, run_sum / static_cast<double>(run_n));
        break;
      }
      case BaselineKind::kSeasonal:
        pred = seasonal_predict(s.y_hist, b.horizon);
        break;
      case BaselineKind::kTrendN:
        pred = trend_n_predict(s.y_hist, b.n, b.horizon);
        break;
    }
    out.anchors.push_back(s.t);
    out.pred.push_back(std::move(pred));
    out.actual.push_back(s.y);
  }
  return out;
}

inline EvalReport evaluate_baseline(const BaselineSpec& b, const TimeSeriesFrame& frame, const FoldPlan& plan,
                                    Task task, Split split) {
  return score(baseline_series(b, frame, plan, task, split), b.name(), task, split, 0);
}

/// The baselines reported for each task.
inline std::vector<BaselineSpec> standard_baselines(Task task) {
  if (task == Task::kNowcast) {
    return {{BaselineKind::kTrainingMean, 0, 0}, {BaselineKind::kRunningMean, 0, 0}};
  }
  return {{BaselineKind::kTrendN, 6, kForecastHorizon},
          {BaselineKind::kSeasonal, 0, kForecastHorizon},
          {BaselineKind::kTrendN, 3, kForecastHorizon},
          {BaselineKind::kTrainingMean, 0, kForecastHorizon}};
}

// ---------------------------------------------------------------------------
// Seed aggregation

/// Mean and sample (n - 1) standard deviation; a single report has std 0.
inline SeedAggregate aggregate_seeds(std::span<const EvalReport> reports) {
  require(!reports.empty(), ErrorCode::kEmpty, "no reports to aggregate");
  for (const auto& r : reports) {
    require(r.model_id == reports[0].model_id && r.task == reports[0].task && r.split == reports[0].split,
            ErrorCode::kMixedGroups, "reports mix models, tasks or splits");
  }
  const double n = static_cast<double>(reports.size());
  SeedAggregate a;
  a.n_seeds = reports.size();
  for (const auto& r : reports) {
    a.mean_mse += r.mse;
    a.mean_mae += r.mae;
  }
  a.mean_mse /= n;
  a.mean_mae /= n;
  // Identical runs keep their exact value so their spread is exactly zero.
  auto all_equal = [&](auto field) {
    return std::all_of(reports.begin(), reports.end(), [&](const EvalReport& r) { return field(r) == field(reports[0]); });
  };
  if (all_equal([](const EvalReport& r) { return r.mse; })) a.mean_mse = reports[0].mse;
  if (all_equal([](const EvalReport& r) { return r.mae; })) a.mean_mae = reports[0].mae;
  if (reports.size() > 1) {
    double smse = 0.0, smae = 0.0;
    for (const auto& r : reports) {
      smse += (r.mse - a.mean_mse) * (r.mse - a.mean_mse);
      smae += (r.mae - a.mean_mae) * (r.mae - a.mean_mae);
    }
    a.std_mse = std::sqrt(smse / (n - 1.0));
    a.std_mae = std::sqrt(smae / (n - 1.0));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Export

inline void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "model,task,split,seed,mse,mae,n_points\n";
  for (const auto& r : reports) {
    out << r.model_id << ',' << to_string(r.task) << ',' << to_string(r.split) << ',' << r.seed << ','
        << format_double(r.mse) << ',' << format_double(r.mae) << ',' << r.n_points << '\n';
  }
}

inline std::vector<EvalReport> read_report_csv(std::istream& in) {
  std::vector<EvalReport> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    require(f.size() == 7, ErrorCode::kIo, "report row needs 7 fields");
    EvalReport r;
    r.model_id = std::string(f[0]);
    r.task = parse_task(f[1]);
    r.split = parse_split(f[2]);
    r.seed = std::stoull(std::string(f[3]));
    r.mse = std::stod(std::string(f[4]));
    r.mae = std::stod(std::string(f[5]));
    r.n_points = std::stoull(std::string(f[6]));
    out.push_back(std::move(r));
  }
  return out;
}

/// Groups reports by (task, model) and aggregates every split, with models
/// ordered by mean test MSE inside each task.
inline nlohmann::json table1_json(std::span<const EvalReport> reports) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<EvalReport>> groups;
  for (const auto& r : reports) {
    groups[{std::string(to_string(r.task)), r.model_id, std::string(to_string(r.split))}].push_back(r);
  }
  std::map<std::string, std::map<std::string, nlohmann::json>> rows;
  for (const auto& [key, rs] : groups) {
    const auto& [task, model, split] = key;
    const auto a = aggregate_seeds(rs);
    rows[task][model][split] = {{"mean_mse", a.mean_mse}, {"std_mse", a.std_mse},   {"mean_mae", a.mean_mae},
                                {"std_mae", a.std_mae},   {"n_seeds", a.n_seeds}};
  }
  nlohmann::json out = nlohmann::json::object();
  for (auto& [task, models] : rows) {
    std::vector<std::pair<std::string, nlohmann::json>> ordered(models.begin(), models.end());
    auto test_mse = [](const nlohmann::json& m) {
      return m.contains("test") ? m["test"]["mean_mse"].get<double>() : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const auto& a, const auto& b) { return test_mse(a.second) < test_mse(b.second); });
    nlohmann::json list = nlohmann::json::array();
    for (auto& [model, splits] : ordered) {
      nlohmann::json row = splits;
      row["model"] = model;
      list.push_back(row);
    }
    out[task] = list;
  }
  return out;
}

}  // namespace denitlab

#endif  // DENITLAB_EVALUATION_HPP_
