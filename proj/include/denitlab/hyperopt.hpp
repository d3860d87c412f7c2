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

#ifndef DENITLAB_HYPEROPT_HPP_
#define DENITLAB_HYPEROPT_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "denitlab/evaluation.hpp"
#include "denitlab/model.hpp"
#include "denitlab/util.hpp"
#include "json.hpp"

namespace denitlab {

/// One searchable hyperparameter.
struct Dimension {
  enum class Kind { kGrid, kUniform, kLogUniform, kIntUniform };
  Kind kind = Kind::kGrid;
  std::vector<double> values;  // grid
  double lo = 0.0;
  double hi = 0.0;

  static Dimension grid(std::vector<double> v) { return {Kind::kGrid, std::move(v), 0.0, 0.0}; }
  static Dimension uniform(double lo, double hi) { return {Kind::kUniform, {}, lo, hi}; }
  static Dimension log_uniform(double lo, double hi) { return {Kind::kLogUniform, {}, lo, hi}; }
  static Dimension int_uniform(double lo, double hi) { return {Kind::kIntUniform, {}, lo, hi}; }

  bool valid() const {
    if (kind == Kind::kGrid) return !values.empty();
    if (kind == Kind::kLogUniform) return lo > 0.0 && hi >= lo;
    return hi >= lo;
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case Kind::kGrid: return values[rng.index(values.size())];
      case Kind::kUniform: return rng.uniform(lo, hi);
      case Kind::kLogUniform: return std::exp(rng.uniform(std::log(lo), std::log(hi)));
      case Kind::kIntUniform:
        return lo + static_cast<double>(rng.index(static_cast<std::size_t>(hi - lo) + 1));
    }
    return lo;
  }
};

/// Searchable choices for one architecture and task. `base` supplies the
/// arch, task and any fixed hyperparameters.
struct SearchSpace {
  ModelSpec base;
  std::vector<std::size_t> h_values = {0};
  std::vector<std::vector<std::string>> covariate_sets;
  std::map<std::string, Dimension> hyperparams;
};

/// Default ranges per architecture.
inline SearchSpace default_search_space(Arch arch, Task task) {
  SearchSpace s;
  s.base.arch = arch;
  s.base.task = task;
  s.base.covariates = default_covariates();
  s.covariate_sets = {default_covariates()};
  s.h_values = {0, 1, 2, 3, 5, 8, 11};
  switch (arch) {
    case Arch::kElasticNet:
      s.hyperparams = {{"alpha", Dimension::log_uniform(1e-4, 1e1)}, {"l1_ratio", Dimension::uniform(0.0, 1.0)}};
      break;
    case Arch::kGbt:
      s.hyperparams = {{"n_trees", Dimension::int_uniform(50, 500)},
                       {"max_depth", Dimension::int_uniform(2, 6)},
                       {"learning_rate", Dimension::log_uniform(0.01, 0.3)},
                       {"min_samples_leaf", Dimension::grid({5, 10, 20, 50})},
                       {"subsample", Dimension::uniform(0.5, 1.0)}};
      break;
    case Arch::kRecurrent:
      s.hyperparams = {{"hidden", Dimension::int_uniform(8, 64)},
                       {"learning_rate", Dimension::log_uniform(1e-4, 1e-2)},
                       {"patience", Dimension::grid({5})}};
      break;
    case Arch::kTcn:
      s.hyperparams = {{"hidden", Dimension::int_uniform(8, 64)},
                       {"layers", Dimension::int_uniform(1, 3)},
                       {"learning_rate", Dimension::log_uniform(1e-4, 1e-2)},
                       {"patience", Dimension::grid({5})}};
      break;
  }
  return s;
}

struct Trial {
  std::size_t index = 0;
  ModelSpec spec;
  std::vector<double> fold_val_mse;
  double mean_val_mse = std::numeric_limits<double>::infinity();
  std::string error;  // set when a fold failed; the trial then scores +inf
};

struct SearchResult {
  ModelSpec best;
  std::size_t best_index = 0;
  std::vector<Trial> trials;
};

/// Draws `budget` specs in a fixed order from one seeded stream.
inline std::vector<ModelSpec> sample_specs(const SearchSpace& space, std::size_t budget, std::uint64_t search_seed) {
  require(!space.h_values.empty() && !space.covariate_sets.empty(), ErrorCode::kBadParams, "empty search dimension");
  for (const auto& [name, dim] : space.hyperparams) {
    require(dim.valid(), ErrorCode::kBadParams, "search dimension '" + name + "' is empty");
  }
  Rng rng(search_seed);
  std::vector<ModelSpec> specs;
  for (std::size_t t = 0; t < budget; ++t) {
    ModelSpec s = space.base;
    s.h = space.h_values[rng.index(space.h_values.size())];
    s.covariates = space.covariate_sets[rng.index(space.covariate_sets.size())];
    for (const auto& [name, dim] : space.hyperparams) s.hyperparams[name] = dim.sample(rng);
    s.seed = mix_seed(search_seed, t);
    specs.push_back(std::move(s));
  }
  return specs;
}

/// Trains a spec on one fold and returns its validation MSE in original units.
inline double fold_validation_mse(const ModelSpec& spec, const TimeSeriesFrame& frame, const FoldPlan& fold) {
  const auto trained = train_model(spec, frame, fold.train, fold.validation);
  return evaluate(trained.model, frame, fold, Split::kValidation).mse;
}

/// Random search minimizing the mean validation MSE over the folds. Trials
/// run concurrently but are indexed by draw order, so results do not depend
/// on `jobs`. Ties go to the earliest trial.
inline SearchResult search(const SearchSpace& space, const TimeSeriesFrame& frame, const std::vector<FoldPlan>& folds,
                           std::size_t budget, std::uint64_t search_seed, std::size_t jobs = 1) {
  require(budget >= 1, ErrorCode::kBadParams, "budget >= 1");
  require(!folds.empty(), ErrorCode::kBadParams, "no folds");
  for (std::size_t h : space.h_values) {
    require(h + 1 < frame.length(), ErrorCode::kBadParams, "h candidate " + std::to_string(h) + " exceeds the frame");
  }
  const auto specs = sample_specs(space, budget, search_seed);
  SearchResult result;
  result.trials.resize(budget);
  for (std::size_t t = 0; t < budget; ++t) {
    result.trials[t].index = t;
    result.trials[t].spec = specs[t];
    result.trials[t].fold_val_mse.assign(folds.size(), std::numeric_limits<double>::infinity());
  }
  // Each job writes only its own (trial, fold) slot.
  std::vector<std::string> errors(budget * folds.size());
  parallel_for(budget * folds.size(), jobs, [&](std::size_t job) {
    const std::size_t t = job / folds.size(), f = job % folds.size();
    try {
      result.trials[t].fold_val_mse[f] = fold_validation_mse(specs[t], frame, folds[f]);
    } catch (const Error& e) {
      errors[job] = e.what();
    }
  });
  bool any = false;
  for (auto& trial : result.trials) {
    double sum = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& err = errors[trial.index * folds.size() + f];
      if (!err.empty() && trial.error.empty()) trial.error = "fold " + std::to_string(f) + ": " + err;
      sum += trial.fold_val_mse[f];
    }
    trial.mean_val_mse = std::isfinite(sum) ? sum / static_cast<double>(folds.size())
                                            : std::numeric_limits<double>::infinity();
    if (std::isfinite(trial.mean_val_mse) &&
        (!any || trial.mean_val_mse < result.trials[result.best_index].mean_val_mse)) {
      result.best_index = trial.index;
      any = true;
    }
  }
  require(any, ErrorCode::kAllTrialsFailed, "all " + std::to_string(budget) + " trials failed");
  result.best = result.trials[result.best_index].spec;
  return result;
}

/// Trains the chosen spec on the final contiguous split; the validation part
/// is used for early stopping only.
inline TrainResult finalize(const ModelSpec& best, const TimeSeriesFrame& frame, double train_fraction = 0.72,
                            double val_fraction = 0.08) {
  const FoldPlan plan = make_final_split(frame, train_fraction, val_fraction);
  return train_model(best, frame, plan.train, plan.validation);
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// One row per (trial, fold); the spec is embedded as JSON.
inline void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials) {
  out << "trial,fold,val_mse,mean_val_mse,error,spec\n";
  for (const auto& t : trials) {
    for (std::size_t f = 0; f < t.fold_val_mse.size(); ++f) {
      out << t.index << ',' << f << ',' << format_double(t.fold_val_mse[f]) << ',' << format_double(t.mean_val_mse)
          << ',' << detail::csv_quote(t.error) << ',' << detail::csv_quote(to_json(t.spec).dump()) << '\n';
    }
  }
}

}  // namespace denitlab

#endif  // DENITLAB_HYPEROPT_HPP_
