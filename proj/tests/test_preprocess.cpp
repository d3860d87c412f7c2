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

#include <catch2/catch_amalgamated.hpp>

#include "denitlab/preprocess.hpp"
#include "denitlab/synthpilot.hpp"
#include "support.hpp"

using namespace denitlab;
using namespace denitlab::testing;

namespace {

std::vector<Reading> readings(std::vector<double> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("flat pressure gives an empty mask", "[preprocess]") {
  const auto p = readings(std::vector<double>(500, 100.0));
  CHECK(detect_cleaning(p, p).intervals.empty());
}

TEST_CASE("single spike shorter than min_run is ignored", "[preprocess]") {
  std::vector<double> v(300, 100.0);
  v[150] = 130.0;
  const auto p = readings(v);
  CHECK(detect_cleaning(p, {}).intervals.empty());
}

TEST_CASE("one injected six-sample dip is recovered exactly", "[preprocess]") {
  Rng rng(4);
  std::vector<double> v(600);
  for (auto& x : v) x = 120.0 + rng.normal(0.0, 0.1);
  const CleaningParams params;
  for (std::size_t i = 300; i < 306; ++i) v[i] -= 3.0 * params.deviation_threshold;
  const auto mask = detect_cleaning(readings(v), {}, params);
  REQUIRE(mask.intervals.size() == 1);
  CHECK(mask.intervals[0] == IndexRange{300, 306});
}

TEST_CASE("runs closer than the merge distance are joined", "[preprocess]") {
  std::vector<bool> flags(40, false);
  for (std::size_t i : {5u, 6u, 7u, 9u, 10u, 11u, 30u, 31u, 32u}) flags[i] = true;
  const auto runs = flags_to_runs(flags, 3, 3);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0] == IndexRange{5, 12});
  CHECK(runs[1] == IndexRange{30, 33});
  CHECK(flags_to_runs(flags, 4, 1).size() == 0);
}

TEST_CASE("cleaning detection matches the generator's schedule", "[preprocess][synth]") {
  auto cfg = small_synth(10, 11);
  cfg.cleaning_jitter = 20;
  const auto out = generate(cfg);
  const auto mask = detect_cleaning(out.frame);
  CHECK(mask.intervals == out.schedule.cleaning);
  CHECK(detect_cleaning(out.frame, {}, PressureSignal::kBottom).intervals == out.schedule.cleaning);
  CHECK(detect_cleaning(out.frame, {}, PressureSignal::kTop).intervals == out.schedule.cleaning);
}

TEST_CASE("interpolate_target", "[preprocess]") {
  const auto f = make_frame({{"a", {1, 2, 3, 4}}, {"nitrate_out", {4, 100, -7, 10}}});
  const CleaningMask mask{{{1, 3}}};
  const auto g = interpolate_target(f, mask);
  CHECK(dense(g.target().values) == std::vector<double>{4, 6, 8, 10});
  CHECK(g.column("a").values == f.column("a").values);
  CHECK(dense(interpolate_target(f, {}).target().values) == dense(f.target().values));
  CHECK_THROWS_MATCHES(interpolate_target(f, CleaningMask{{{0, 2}}}), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::kMaskTouchesBoundary; }));
}

TEST_CASE("interpolation is idempotent on synthetic data", "[preprocess][property]") {
  const auto out = generate(small_synth(5, 21));
  const auto mask = detect_cleaning(out.frame);
  const auto once = interpolate_target(out.frame, mask);
  const auto twice = interpolate_target(once, mask);
  CHECK(once.target().values == twice.target().values);
  for (const auto& c : out.frame.columns()) {
    if (c.name != "nitrate_out") CHECK(once.column(c.name).values == c.values);
  }
}

TEST_CASE("mask json round trip", "[preprocess]") {
  const CleaningMask m{{{3, 9}, {20, 26}}};
  CHECK(mask_to_json(m).dump() == R"([{"end":9,"start":3},{"end":26,"start":20}])");
  CHECK(mask_from_json(mask_to_json(m)) == m);
}

TEST_CASE("window counting and gap exclusion", "[preprocess]") {
  std::vector<double> a(10), y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = static_cast<double>(i);
    y[i] = 2.0 * static_cast<double>(i);
  }
  const WindowSpec spec{{"a"}, 2, 0, false};
  const auto plain = build_windows(make_frame({{"a", a}, {"nitrate_out", y}}), spec, {{0, 10}});
  CHECK(plain.samples.size() == 8);
  CHECK(plain.samples.size() + plain.skipped == plain.candidates);
  for (const auto& s : plain.samples) CHECK(s.y_hist.empty());
  CHECK(plain.samples.front().x == std::vector<double>{0, 1, 2});
  CHECK(plain.samples.front().y == std::vector<double>{4});

  const auto gapped = build_windows(make_frame({{"a", a}, {"nitrate_out", y}}, {{4, 1}}), spec, {{0, 10}});
  for (const auto& s : gapped.samples) CHECK_FALSE((s.t - 2 <= 4 && s.t >= 5));
  CHECK(gapped.samples.size() == 6);
  CHECK(gapped.samples.size() + gapped.skipped == gapped.candidates);

  const WindowSpec fc{{"a"}, 1, 3, true};
  const auto f = build_windows(make_frame({{"a", a}, {"nitrate_out", y}}), fc, {{0, 5}, {5, 10}});
  for (const auto& s : f.samples) {
    CHECK(s.y_hist.size() == 2);
    CHECK(s.y.size() == 3);
    CHECK(((s.t >= 1 && s.t + 3 < 5) || (s.t >= 6 && s.t + 3 < 10)));
  }
  CHECK(f.samples.size() == 2);
}

TEST_CASE("windows skip missing covariates and never leave their range", "[preprocess][property]") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 60 + rng.index(60);
    std::vector<Reading> a(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() > 0.05) a[i] = rng.normal();
      y[i] = rng.normal();
    }
    std::vector<Gap> gaps;
    for (std::size_t i = 5; i + 5 < n; i += 17 + rng.index(10)) gaps.push_back({i, 1 + rng.index(3)});
    const TimeSeriesFrame f(test_start(), {{"a", "", a}, {"nitrate_out", "", y}}, gaps);
    const std::size_t h = rng.index(4), horizon = rng.index(3);
    const WindowSpec spec{{"a"}, h, horizon, horizon > 0};
    const std::size_t cut = n / 2;
    try {
      const auto set = build_windows(f, spec, {{0, cut}, {cut, n}});
      CHECK(set.samples.size() + set.skipped == set.candidates);
      for (const auto& s : set.samples) {
        CHECK_FALSE(f.crosses_gap(s.t - h, s.t + horizon));
        CHECK(((s.t + horizon < cut) == (s.t - h < cut)));
        for (std::size_t i = s.t - h; i <= s.t; ++i) CHECK(a[i].has_value());
      }
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoAdmissibleWindows);
    }
  }
}
