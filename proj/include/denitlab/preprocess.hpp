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

#ifndef DENITLAB_PREPROCESS_HPP_
#define DENITLAB_PREPROCESS_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "json.hpp"

namespace denitlab {

// ---------------------------------------------------------------------------
// Cleaning detection

struct CleaningParams {
  std::size_t window = 31;            // centered rolling-median width (samples)
  double deviation_threshold = 3.0;   // kPa
  std::size_t min_run = 3;            // shortest flagged run kept
  std::size_t merge_distance = 3;     // runs separated by fewer samples are merged
};

enum class PressureSignal { kBoth, kBottom, kTop };

/// Sorted, disjoint half-open intervals flagged as backwash/cleaning.
struct CleaningMask {
  std::vector<IndexRange> intervals;

  bool contains(std::size_t i) const {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), i,
                               [](std::size_t v, const IndexRange& r) { return v < r.begin; });
    return it != intervals.begin() && std::prev(it)->contains(i);
  }
  std::size_t flagged() const { return total_size(intervals); }
  bool operator==(const CleaningMask&) const = default;
};

/// Centered rolling median over present readings; missing where the whole window is missing.
inline std::vector<Reading> rolling_median(std::span<const Reading> xs, std::size_t window) {
  const std::size_t half = window / 2;
  std::vector<Reading> out(xs.size());
  std::vector<double> buf;
  buf.reserve(window + 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    buf.clear();
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(xs.size(), i + half + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (xs[j]) buf.push_back(*xs[j]);
    }
    if (buf.empty()) continue;
    const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    double m = *mid;
    if (buf.size() % 2 == 0) m = 0.5 * (m + *std::max_element(buf.begin(), mid));
    out[i] = m;
  }
  return out;
}

/// Turns a per-sample flag vector into maximal runs, merges runs closer than
/// `merge_distance`, then drops runs shorter than `min_run`.
inline std::vector<IndexRange> flags_to_runs(const std::vector<bool>& flags, std::size_t min_run,
                                             std::size_t merge_distance) {
  std::vector<IndexRange> runs;
  for (std::size_t i = 0; i < flags.size();) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < flags.size() && flags[j]) ++j;
    if (!runs.empty() && i - runs.back().end < merge_distance) {
      runs.back().end = j;
    } else {
      runs.push_back({i, j});
    }
    i = j;
  }
  std::erase_if(runs, [&](const IndexRange& r) { return r.size() < min_run; });
  return runs;
}

/// Flags runs where either pressure deviates from its rolling median by more
/// than the threshold. Pass an empty span to ignore one signal.
inline CleaningMask detect_cleaning(std::span<const Reading> pressure_bottom, std::span<const Reading> pressure_top,
                                    const CleaningParams& params = {}) {
  require(params.window >= 3 && params.deviation_threshold > 0.0 && params.min_run >= 1, ErrorCode::kBadParams,
          "cleaning window >= 3, threshold > 0, min_run >= 1");
  require(!pressure_bottom.empty() || !pressure_top.empty(), ErrorCode::kBadParams, "no pressure signal");
  require(pressure_bottom.empty() || pressure_top.empty() || pressure_bottom.size() == pressure_top.size(),
          ErrorCode::kLengthMismatch, "pressure series lengths differ");
  const std::size_t n = std::max(pressure_bottom.size(), pressure_top.size());
  std::vector<bool> flags(n, false);
  for (auto series : {pressure_bottom, pressure_top}) {
    if (series.empty()) continue;
    const auto med = rolling_median(series, params.window);
    for (std::size_t i = 0; i < n; ++i) {
      if (series[i] && med[i] && std::abs(*series[i] - *med[i]) > params.deviation_threshold) flags[i] = true;
    }
  }
  return CleaningMask{flags_to_runs(flags, params.min_run, params.merge_distance)};
}

inline CleaningMask detect_cleaning(const TimeSeriesFrame& frame, const CleaningParams& params = {},
                                    PressureSignal signal = PressureSignal::kBoth) {
  std::span<const Reading> bottom, top;
  if (signal != PressureSignal::kTop) bottom = frame.column("pressure_bottom").values;
  if (signal != PressureSignal::kBottom) top = frame.column("pressure_top").values;
  return detect_cleaning(bottom, top, params);
}

/// Replaces target readings inside each masked interval with the straight
/// line between the nearest unmasked readings on either side. Covariates are
/// untouched.
inline TimeSeriesFrame interpolate_target(const TimeSeriesFrame& frame, const CleaningMask& mask) {
  if (mask.intervals.empty()) return frame;
  std::vector<Reading> y = frame.target().values;
  const std::size_t n = y.size();
  for (std::size_t k = 0; k < mask.intervals.size(); ++k) {
    const auto& r = mask.intervals[k];
    require(r.begin < r.end && r.end <= n, ErrorCode::kBadParams, "mask interval outside frame");
    std::size_t left = r.begin;
    bool found_left = false;
    while (left > 0) {
      --left;
      if (y[left] && !mask.contains(left)) {
        found_left = true;
        break;
      }
    }
    std::size_t right = r.end;
    while (right < n && (!y[right] || mask.contains(right))) ++right;
    require(found_left && right < n, ErrorCode::kMaskTouchesBoundary,
            "interval [" + std::to_string(r.begin) + ", " + std::to_string(r.end) + ") has no bracketing reading");
    const double y0 = *y[left], y1 = *y[right];
    const double span = static_cast<double>(right - left);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      y[i] = y0 + (y1 - y0) * static_cast<double>(i - left) / span;
    }
  }
  return frame.with_values(frame.target_index(), std::move(y));
}

inline nlohmann::json mask_to_json(const CleaningMask& mask) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : mask.intervals) out.push_back({{"start", r.begin}, {"end", r.end}});
  return out;
}

inline CleaningMask mask_from_json(const nlohmann::json& j) {
  CleaningMask mask;
  for (const auto& e : j) mask.intervals.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()});
  return mask;
}

// ---------------------------------------------------------------------------
// Supervised windows

enum class Task { kNowcast, kForecast };

inline std::string_view to_string(Task t) { return t == Task::kNowcast ? "nowcast" : "forecast"; }

inline Task parse_task(std::string_view s) {
  if (s == "nowcast") return Task::kNowcast;
  if (s == "forecast") return Task::kForecast;
  fail(ErrorCode::kInvalidConfig, "unknown task '" + std::string(s) + "'");
}

struct WindowSpec {
  std::vector<std::string> covariates;
  std::size_t h = 0;               // history length; each window holds h + 1 rows
  std::size_t horizon = 0;         // 0 for nowcasting
  bool with_target_history = false;
};

/// One supervised example anchored at row `t`.
struct WindowSample {
  std::vector<double> x;       // (h + 1) x n_features, oldest row first
  std::vector<double> y_hist;  // target over [t - h, t]; empty when nowcasting
  std::vector<double> y;       // y_t when nowcasting, y_{t+1..t+horizon} otherwise
  std::size_t t = 0;
};

struct WindowSet {
  std::vector<WindowSample> samples;
  std::size_t candidates = 0;
  std::size_t skipped = 0;
  std::size_t n_features = 0;
  std::size_t h = 0;
};

namespace detail {

inline std::vector<const std::vector<Reading>*> covariate_columns(const TimeSeriesFrame& frame,
                                                                  const std::vector<std::string>& names) {
  std::vector<const std::vector<Reading>*> cols;
  for (const auto& name : names) {
    require(name != frame.target_name(), ErrorCode::kBadParams, "the target cannot be a covariate");
    cols.push_back(&frame.column(name).values);
  }
  return cols;
}

}  // namespace detail

/// Admissibility of one anchor: the span [t - h, t + horizon] stays inside
/// `range`, crosses no gap, and every value the window needs is present.
inline std::optional<WindowSample> make_window(const TimeSeriesFrame& frame,
                                               const std::vector<const std::vector<Reading>*>& cols,
                                               const WindowSpec& spec, IndexRange range, std::size_t t) {
  if (t < range.begin + spec.h || t + spec.horizon >= range.end) return std::nullopt;
  const std::size_t first = t - spec.h;
  const std::size_t last = t + spec.horizon;
  if (frame.crosses_gap(first, last)) return std::nullopt;
  const auto& y = frame.target().values;
  const std::size_t cov_last = t + (spec.horizon > 0 ? spec.horizon - 1 : 0);
  WindowSample s;
  s.t = t;
  s.x.reserve((spec.h + 1) * cols.size());
  for (std::size_t i = first; i <= t; ++i) {
    for (const auto* c : cols) {
      if (!(*c)[i]) return std::nullopt;
      s.x.push_back(*(*c)[i]);
    }
  }
  for (std::size_t i = t + 1; i <= cov_last; ++i) {
    for (const auto* c : cols) {
      if (!(*c)[i]) return std::nullopt;
    }
  }
  if (spec.with_target_history) {
    for (std::size_t i = first; i <= t; ++i) {
      if (!y[i]) return std::nullopt;
      s.y_hist.push_back(*y[i]);
    }
  }
  if (spec.horizon == 0) {
    if (!y[t]) return std::nullopt;
    s.y.push_back(*y[t]);
  } else {
    for (std::size_t i = t + 1; i <= last; ++i) {
      if (!y[i]) return std::nullopt;
      s.y.push_back(*y[i]);
    }
  }
  return s;
}

/// One window per admissible anchor in `ranges`; a window never leaves the
/// range its anchor belongs to.
inline WindowSet build_windows(const TimeSeriesFrame& frame, const WindowSpec& spec,
                               const std::vector<IndexRange>& ranges) {
  const auto cols = detail::covariate_columns(frame, spec.covariates);
  require(!cols.empty() || spec.with_target_history, ErrorCode::kBadParams, "window has no inputs");
  WindowSet set;
  set.n_features = cols.size();
  set.h = spec.h;
  for (const auto& r : ranges) {
    require(r.end <= frame.length(), ErrorCode::kBadParams, "range beyond frame");
    for (std::size_t t = r.begin; t < r.end; ++t) {
      ++set.candidates;
      if (auto s = make_window(frame, cols, spec, r, t)) {
        set.samples.push_back(std::move(*s));
      } else {
        ++set.skipped;
      }
    }
  }
  require(!set.samples.empty(), ErrorCode::kNoAdmissibleWindows,
          std::to_string(set.candidates) + " candidate anchors, none admissible");
  return set;
}

}  // namespace denitlab

#endif  // DENITLAB_PREPROCESS_HPP_
