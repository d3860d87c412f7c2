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

#ifndef DENITLAB_ANOMALY_HPP_
#define DENITLAB_ANOMALY_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "denitlab/error.hpp"
#include "denitlab/preprocess.hpp"
#include "json.hpp"

namespace denitlab {

struct AnomalyParams {
  std::size_t peak_window = 145;  // ~1 day, centered
  double peak_sigma = 4.0;        // in robust-sigma units (1.4826 * MAD)
  double follow_ratio = 0.5;
  std::size_t bias_window = 36;   // 6 h
  double bias_threshold = 1.0;    // mg/L
  double min_correlation = 0.5;   // first-difference correlation for shape tracking
};

enum class AnomalyClass { kMissedPeak = 1, kSpuriousPeak = 2, kSustainedBias = 3 };

inline std::string_view to_string(AnomalyClass c) {
  switch (c) {
    case AnomalyClass::kMissedPeak: return "missed_target_peak";
    case AnomalyClass::kSpuriousPeak: return "spurious_predicted_peak";
    case AnomalyClass::kSustainedBias: return "sustained_bias";
  }
  return "unknown";
}

struct AnomalyEvent {
  AnomalyClass klass = AnomalyClass::kMissedPeak;
  std::size_t start = 0;  // half-open [start, end)
  std::size_t end = 0;
  double magnitude = 0.0;  // peak excess (classes 1, 2) or mean signed error (class 3)
  bool operator==(const AnomalyEvent&) const = default;
};

// Consistency constant turning a MAD into a normal-sigma estimate.
inline constexpr double kMadToSigma = 1.4826;
// Robust scale floor so perfectly flat stretches do not divide by zero.
inline constexpr double kMinRobustScale = 1e-9;

namespace detail {

struct RobustLevel {
  std::vector<double> median;
  std::vector<double> scale;
};

inline RobustLevel rolling_robust(std::span<const double> xs, std::size_t window) {
  const std::size_t half = window / 2;
  RobustLevel out{std::vector<double>(xs.size()), std::vector<double>(xs.size())};
  std::vector<double> buf;
  auto median_of = [](std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(xs.size(), i + half + 1);
    buf.assign(xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.begin() + static_cast<std::ptrdiff_t>(hi));
    const double m = median_of(buf);
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = std::abs(xs[lo + j] - m);
    out.median[i] = m;
    out.scale[i] = std::max(kMadToSigma * median_of(buf), kMinRobustScale);
  }
  return out;
}

/// Runs where `a` rises above its rolling median by more than sigma robust
/// units and `b` fails to follow by at least follow_ratio of that excess.
inline std::vector<AnomalyEvent> unfollowed_peaks(std::span<const double> a, std::span<const double> b,
                                                  const AnomalyParams& p, AnomalyClass klass) {
  const auto ra = rolling_robust(a, p.peak_window);
  const auto rb = rolling_robust(b, p.peak_window);
  std::vector<bool> flags(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) flags[i] = a[i] - ra.median[i] > p.peak_sigma * ra.scale[i];
  std::vector<AnomalyEvent> out;
  for (const auto& run : flags_to_runs(flags, 1, 1)) {
    double excess_a = -std::numeric_limits<double>::infinity();
    double excess_b = -std::numeric_limits<double>::infinity();
    for (std::size_t i = run.begin; i < run.end; ++i) {
      excess_a = std::max(excess_a, a[i] - ra.median[i]);
      excess_b = std::max(excess_b, b[i] - rb.median[i]);
    }
    if (excess_b < p.follow_ratio * excess_a) out.push_back({klass, run.begin, run.end, excess_a});
  }
  return out;
}

inline double diff_correlation(std::span<const double> a, std::span<const double> b, std::size_t lo, std::size_t hi) {
  lo = std::max<std::size_t>(lo, 1);
  if (hi <= lo) return 1.0;
  const double n = static_cast<double>(hi - lo);
  double ma = 0.0, mb = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    ma += (a[j] - a[j - 1]) / n;
    mb += (b[j] - b[j - 1]) / n;
  }
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    const double da = a[j] - a[j - 1] - ma, db = b[j] - b[j - 1] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 && sbb == 0.0) return 1.0;
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<AnomalyEvent> sustained_bias(std::span<const double> pred, std::span<const double> actual,
                                                const AnomalyParams& p) {
  const std::size_t n = pred.size(), half = p.bias_window / 2;
  std::vector<double> err(n), prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = pred[i] - actual[i];
    prefix[i + 1] = prefix[i] + err[i];
  }
  std::vector<int> sign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    const double mean_err = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    if (std::abs(mean_err) <= p.bias_threshold) continue;
    if (diff_correlation(pred, actual, lo, hi) < p.min_correlation) continue;
    sign[i] = mean_err > 0 ? 1 : -1;
  }
  std::vector<AnomalyEvent> out;
  for (std::size_t i = 0; i < n;) {
    if (sign[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && sign[j] == sign[i]) ++j;
    const double mean_err = (prefix[j] - prefix[i]) / static_cast<double>(j - i);
    if (j - i >= p.bias_window && std::abs(mean_err) >= p.bias_threshold) {
      out.push_back({AnomalyClass::kSustainedBias, i, j, mean_err});
    }
    i = j;
  }
  return out;
}

}  // namespace detail

/// Flags three kinds of anomalous prediction behaviour:
///   1. a target peak the prediction does not follow,
///   2. a predicted peak absent from the target,
///   3. a sustained signed bias while the prediction tracks the target's shape.
/// Events are sorted by class, then start.
inline std::vector<AnomalyEvent> detect_anomalies(std::span<const double> pred, std::span<const double> actual,
                                                  const AnomalyParams& params = {}) {
  require(pred.size() == actual.size(), ErrorCode::kLengthMismatch, "pred and actual lengths differ");
  require(params.peak_window >= 3 && params.peak_sigma > 0.0 && params.follow_ratio > 0.0 &&
              params.bias_window >= 2 && params.bias_threshold > 0.0,
          ErrorCode::kBadParams, "anomaly parameters must be positive");
  std::vector<AnomalyEvent> events = detail::unfollowed_peaks(actual, pred, params, AnomalyClass::kMissedPeak);
  const auto spurious = detail::unfollowed_peaks(pred, actual, params, AnomalyClass::kSpuriousPeak);
  events.insert(events.end(), spurious.begin(), spurious.end());
  const auto bias = detail::sustained_bias(pred, actual, params);
  events.insert(events.end(), bias.begin(), bias.end());
  return events;
}

/// `time_of(i)` maps a series index to an ISO-8601 timestamp.
inline nlohmann::json events_to_json(const std::vector<AnomalyEvent>& events,
                                     const std::function<std::string(std::size_t)>& time_of) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : events) {
    out.push_back({{"class", static_cast<int>(e.klass)},
                   {"kind", to_string(e.klass)},
                   {"start_index", e.start},
                   {"end_index", e.end},
                   {"start", time_of(e.start)},
                   {"end", time_of(e.end - 1)},
                   {"magnitude", e.magnitude}});
  }
  return out;
}

}  // namespace denitlab

#endif  // DENITLAB_ANOMALY_HPP_
