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

// Shared fixtures for the unit tests.

#ifndef DENITLAB_TESTS_SUPPORT_HPP_
#define DENITLAB_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "denitlab/dataset.hpp"
#include "denitlab/synthpilot.hpp"
#include "denitlab/util.hpp"

namespace denitlab::testing {

inline Timestamp test_start() { return parse_timestamp("2023-01-01T00:00:00Z"); }

/// Frame from named dense columns; the last column is the target unless named.
inline TimeSeriesFrame make_frame(std::vector<std::pair<std::string, std::vector<double>>> cols,
                                  std::vector<Gap> gaps = {}, std::string target = "nitrate_out") {
  std::vector<Column> columns;
  for (auto& [name, values] : cols) {
    std::vector<Reading> r(values.begin(), values.end());
    columns.push_back({name, "", std::move(r)});
  }
  return TimeSeriesFrame(test_start(), std::move(columns), std::move(gaps), std::move(target));
}

/// nitrate_out = a * nitrate_in + b * temperature + c + noise, with a third
/// covariate (oxygen_in) that carries no signal.
struct LinearFrameOptions {
  std::size_t length = 2000;
  double a = 0.5;
  double b = 0.0;
  double c = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 7;
};

inline TimeSeriesFrame linear_frame(const LinearFrameOptions& o = {}) {
  Rng rng(o.seed);
  std::vector<double> nin(o.length), temp(o.length), o2(o.length), y(o.length);
  double drift = 0.0;
  for (std::size_t i = 0; i < o.length; ++i) {
    drift = 0.95 * drift + rng.normal(0.0, 1.0);
    nin[i] = 10.0 + drift;
    temp[i] = 12.0 + rng.normal(0.0, 1.0);
    o2[i] = 3.0 + rng.normal(0.0, 0.5);
    y[i] = o.a * nin[i] + o.b * temp[i] + o.c + rng.normal(0.0, 1.0) * o.noise;
  }
  return make_frame({{"temperature", temp}, {"nitrate_in", nin}, {"oxygen_in", o2}, {"nitrate_out", y}});
}

/// Small synthpilot configuration that keeps the suite fast.
inline SynthConfig small_synth(std::size_t days = 14, std::uint64_t seed = 3) {
  SynthConfig c;
  c.days = days;
  c.seed = seed;
  return c;
}

inline std::vector<double> dense(const std::vector<Reading>& r) {
  std::vector<double> out;
  for (const auto& v : r) out.push_back(v.value_or(std::nan("")));
  return out;
}

}  // namespace denitlab::testing

#endif  // DENITLAB_TESTS_SUPPORT_HPP_
