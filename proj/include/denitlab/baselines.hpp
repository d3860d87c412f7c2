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

#ifndef DENITLAB_BASELINES_HPP_
#define DENITLAB_BASELINES_HPP_

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "denitlab/error.hpp"

namespace denitlab {

enum class BaselineKind { kTrainingMean, kRunningMean, kSeasonal, kTrendN };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kTrainingMean;
  std::size_t n = 0;        // TrendN only
  std::size_t horizon = 6;  // forecasting horizon

  /// Report name, e.g. "BaselineTrend6".
  std::string name() const {
    switch (kind) {
      case BaselineKind::kTrainingMean: return "BaselineTrainingMean";
      case BaselineKind::kRunningMean: return "BaselineTestRunningMean";
      case BaselineKind::kSeasonal: return "BaselineSeasonal";
      case BaselineKind::kTrendN: return "BaselineTrend" + std::to_string(n);
    }
    return "Baseline";
  }
};

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Constant prediction at the training-set mean.
inline std::vector<double> training_mean_predict(std::span<const double> train, std::size_t count) {
  require(!train.empty(), ErrorCode::kEmptyTraining, "no training targets");
  return std::vector<double>(count, mean_of(train));
}

/// Mean of everything observed so far.
inline double running_mean_predict(std::span<const double> prefix) {
  require(!prefix.empty(), ErrorCode::kInsufficientHistory, "running mean of an empty prefix");
  return mean_of(prefix);
}

/// pred[i] = mean(values[0..i)); pred[0] = values[0] so the series is total.
inline std::vector<double> running_mean_series(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back(i == 0 ? values[0] : sum / static_cast<double>(i));
    sum += values[i];
  }
  return out;
}

/// Repeats the last `horizon` observations as the next block.
inline std::vector<double> seasonal_predict(std::span<const double> history, std::size_t horizon = 6) {
  require(horizon >= 1 && history.size() >= horizon, ErrorCode::kInsufficientHistory,
          "seasonal needs " + std::to_string(horizon) + " past values");
  return {history.end() - static_cast<std::ptrdiff_t>(horizon), history.end()};
}

/// Least-squares line through the last n points, extrapolated `horizon` steps.
inline std::vector<double> trend_n_predict(std::span<const double> history, std::size_t n, std::size_t horizon = 6) {
  require(n >= 2 && history.size() >= n, ErrorCode::kInsufficientHistory,
          "trend needs n >= 2 and n past values");
  const auto last = history.subspan(history.size() - n);
  const double x_mean = static_cast<double>(n - 1) / 2.0;
  const double y_mean = mean_of(last);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (last[i] - y_mean);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  std::vector<double> out;
  for (std::size_t k = 0; k < horizon; ++k) {
    out.push_back(y_mean + slope * (static_cast<double>(n + k) - x_mean));
  }
  return out;
}

}  // namespace denitlab

#endif  // DENITLAB_BASELINES_HPP_
