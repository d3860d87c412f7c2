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

#ifndef DENITLAB_MODELS_SPEC_HPP_
#define DENITLAB_MODELS_SPEC_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "denitlab/error.hpp"
#include "denitlab/preprocess.hpp"
#include "json.hpp"

namespace denitlab {

enum class Arch { kElasticNet, kGbt, kRecurrent, kTcn };

inline std::string_view to_string(Arch a) {
  switch (a) {
    case Arch::kElasticNet: return "elastic_net";
    case Arch::kGbt: return "gbt";
    case Arch::kRecurrent: return "recurrent";
    case Arch::kTcn: return "tcn";
  }
  return "unknown";
}

inline Arch parse_arch(std::string_view s) {
  if (s == "elastic_net") return Arch::kElasticNet;
  if (s == "gbt") return Arch::kGbt;
  if (s == "recurrent") return Arch::kRecurrent;
  if (s == "tcn") return Arch::kTcn;
  fail(ErrorCode::kInvalidConfig, "unknown arch '" + std::string(s) + "'");
}

/// Display names used in reports.
inline std::string_view display_name(Arch a) {
  switch (a) {
    case Arch::kElasticNet: return "ElasticNet";
    case Arch::kGbt: return "GBT";
    case Arch::kRecurrent: return "LSTM";
    case Arch::kTcn: return "TCN";
  }
  return "unknown";
}

inline bool is_network(Arch a) { return a == Arch::kRecurrent || a == Arch::kTcn; }

using Hyperparams = std::map<std::string, double>;

/// Everything that determines one training run.
struct ModelSpec {
  Arch arch = Arch::kElasticNet;
  std::vector<std::string> covariates;
  std::size_t h = 0;
  Task task = Task::kNowcast;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;

  bool operator==(const ModelSpec&) const = default;

  /// Windows used for training: one-step targets; forecasting adds target history.
  WindowSpec training_windows() const {
    return WindowSpec{covariates, h, task == Task::kForecast ? 1u : 0u, task == Task::kForecast};
  }
  std::size_t inputs_per_step() const { return covariates.size() + (task == Task::kForecast ? 1 : 0); }
  std::size_t flat_features() const { return (h + 1) * inputs_per_step(); }
};

struct HyperparamRule {
  double default_value;
  double min;
  double max;
  bool integer = false;
};

/// Allowed hyperparameters and hard bounds per architecture. Search ranges
/// live in the search space, these only reject nonsense.
inline const std::map<std::string, HyperparamRule>& hyperparam_rules(Arch arch) {
  static const std::map<std::string, HyperparamRule> elastic_net = {
      {"alpha", {1e-3, 0.0, 1e3}},
      {"l1_ratio", {0.5, 0.0, 1.0}},
      {"tol", {1e-6, 1e-15, 1.0}},
      {"max_iter", {10000, 1, 1e7, true}},
  };
  static const std::map<std::string, HyperparamRule> gbt = {
      {"n_trees", {200, 0, 5000, true}},
      {"max_depth", {4, 1, 16, true}},
      {"learning_rate", {0.1, 1e-6, 1.0}},
      {"min_samples_leaf", {20, 1, 1e9, true}},
      {"subsample", {1.0, 1e-3, 1.0}},
      {"patience", {20, 0, 1e6, true}},
  };
  static const std::map<std::string, HyperparamRule> recurrent = {
      {"hidden", {16, 1, 512, true}},
      {"learning_rate", {3e-3, 1e-7, 1.0}},
      {"momentum", {0.9, 0.0, 0.999}},
      {"batch_size", {64, 1, 1e6, true}},
      {"max_epochs", {30, 1, 1e5, true}},
      {"patience", {5, 1, 1e5, true}},
      {"clip_norm", {5.0, 0.0, 1e9}},
  };
  static const std::map<std::string, HyperparamRule> tcn = {
      {"hidden", {16, 1, 512, true}},
      {"layers", {2, 1, 8, true}},
      {"kernel", {2, 1, 8, true}},
      {"learning_rate", {3e-3, 1e-7, 1.0}},
      {"momentum", {0.9, 0.0, 0.999}},
      {"batch_size", {64, 1, 1e6, true}},
      {"max_epochs", {30, 1, 1e5, true}},
      {"patience", {5, 1, 1e5, true}},
      {"clip_norm", {5.0, 0.0, 1e9}},
  };
  switch (arch) {
    case Arch::kElasticNet: return elastic_net;
    case Arch::kGbt: return gbt;
    case Arch::kRecurrent: return recurrent;
    case Arch::kTcn: return tcn;
  }
  return elastic_net;
}

/// Defaults merged with the spec's overrides, validated against the rules.
inline Hyperparams resolve_hyperparams(Arch arch, const Hyperparams& given) {
  const auto& rules = hyperparam_rules(arch);
  Hyperparams out;
  for (const auto& [name, rule] : rules) out[name] = rule.default_value;
  for (const auto& [name, value] : given) {
    auto it = rules.find(name);
    require(it != rules.end(), ErrorCode::kInvalidHyperparameter,
            "'" + name + "' is not a " + std::string(to_string(arch)) + " hyperparameter");
    const auto& rule = it->second;
    require(std::isfinite(value) && value >= rule.min && value <= rule.max, ErrorCode::kInvalidHyperparameter,
            "'" + name + "' = " + format_double(value) + " outside [" + format_double(rule.min) + ", " +
                format_double(rule.max) + "]");
    require(!rule.integer || value == std::floor(value), ErrorCode::kInvalidHyperparameter,
            "'" + name + "' must be an integer");
    out[name] = value;
  }
  return out;
}

inline void validate_spec(const ModelSpec& spec) {
  (void)resolve_hyperparams(spec.arch, spec.hyperparams);
  require(!spec.covariates.empty() || spec.task == Task::kForecast, ErrorCode::kSpecMismatch,
          "a nowcasting model needs at least one covariate");
}

enum class StopReason { kEarlyStop, kMaxIter, kConverged };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kEarlyStop: return "early_stop";
    case StopReason::kMaxIter: return "max_iter";
    case StopReason::kConverged: return "converged";
  }
  return "unknown";
}

inline StopReason parse_stop_reason(std::string_view s) {
  if (s == "early_stop") return StopReason::kEarlyStop;
  if (s == "max_iter") return StopReason::kMaxIter;
  if (s == "converged") return StopReason::kConverged;
  fail(ErrorCode::kBadArtifact, "unknown stop reason '" + std::string(s) + "'");
}

/// Loss per iteration (epoch, tree or sweep). Validation loss is NaN where
/// no validation data was supplied.
struct TrainLog {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t stopped_at = 0;
  StopReason stop_reason = StopReason::kMaxIter;
  std::size_t best_iteration = 0;

  bool operator==(const TrainLog&) const = default;
};

/// Tracks the best validation loss; stops after `patience` iterations
/// without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Returns true when `loss` at `iteration` is a new best.
  bool observe(std::size_t iteration, double loss) {
    current_ = iteration;
    if (loss < best_loss_) {
      best_loss_ = loss;
      best_iteration_ = iteration;
      return true;
    }
    return false;
  }

  bool should_stop() const { return patience_ > 0 && current_ >= best_iteration_ + patience_; }
  std::size_t best_iteration() const { return best_iteration_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_iteration_ = 0;
  std::size_t current_ = 0;
};

/// Dense row-major sample matrix for the tabular models.
struct FeatureMatrix {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Row-major window flattening: covariate rows oldest first, then the
/// target history when present.
inline void append_flat(const WindowSample& s, std::vector<double>& out) {
  out.insert(out.end(), s.x.begin(), s.x.end());
  out.insert(out.end(), s.y_hist.begin(), s.y_hist.end());
}

inline FeatureMatrix flatten(const WindowSet& set) {
  FeatureMatrix m;
  m.rows = set.samples.size();
  m.cols = m.rows ? set.samples.front().x.size() + set.samples.front().y_hist.size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& s : set.samples) append_flat(s, m.data);
  return m;
}

/// First target of each window (the one-step label).
inline std::vector<double> first_targets(const WindowSet& set) {
  std::vector<double> y;
  y.reserve(set.samples.size());
  for (const auto& s : set.samples) y.push_back(s.y.front());
  return y;
}

}  // namespace denitlab

#endif  // DENITLAB_MODELS_SPEC_HPP_
