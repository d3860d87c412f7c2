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

#include <sstream>

#include "denitlab/baselines.hpp"
#include "denitlab/evaluation.hpp"
#include "support.hpp"

using namespace denitlab;
using namespace denitlab::testing;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double level = 5.0;
  for (auto& x : v) {
    level += rng.normal(0.0, 0.3);
    x = level;
  }
  return v;
}

// Slope/intercept from the textbook normal equations in raw sums.
std::vector<double> trend_oracle(const std::vector<double>& history, std::size_t n, std::size_t horizon) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::size_t off = history.size() - n;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i), y = history[off + i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  const double icept = (sy - slope * sx) / nn;
  std::vector<double> out;
  for (std::size_t k = 0; k < horizon; ++k) out.push_back(icept + slope * static_cast<double>(n + k));
  return out;
}

TrainedModel persistence_model() {
  TrainedModel m;
  m.spec.arch = Arch::kElasticNet;
  m.spec.task = Task::kForecast;
  m.params = ElasticNetParams{{1.0}, 0.0};
  m.scaler = Scaler::identity({"nitrate_out"});
  return m;
}

}  // namespace

TEST_CASE("baseline examples", "[baselines]") {
  CHECK(training_mean_predict(std::vector<double>{1, 2, 3}, 4) == std::vector<double>(4, 2.0));
  CHECK_THROWS_AS(training_mean_predict(std::vector<double>{}, 1), Error);
  CHECK(running_mean_predict(std::vector<double>{2, 4, 6}) == 4.0);
  CHECK(running_mean_predict(std::vector<double>{7.5}) == 7.5);
  CHECK(running_mean_series(std::vector<double>{3, 5, 7}) == std::vector<double>{3, 3, 4});
  const std::vector<double> hour{1, 2, 3, 4, 5, 6, 7};
  CHECK(seasonal_predict(hour, 6) == std::vector<double>{2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(seasonal_predict(std::vector<double>{1, 2}, 6), Error);
  CHECK(trend_n_predict(std::vector<double>{1, 2, 3}, 3, 2) == std::vector<double>{4, 5});
  CHECK(trend_n_predict(std::vector<double>{9, 4, 4}, 2, 3) == std::vector<double>{4, 4, 4});
  CHECK_THROWS_AS(trend_n_predict(std::vector<double>{1, 2}, 3, 2), Error);
  CHECK(BaselineSpec{BaselineKind::kTrendN, 6, 6}.name() == "BaselineTrend6");
}

TEST_CASE("running mean equals brute force", "[baselines][property]") {
  Rng rng(4);
  const auto v = random_series(rng, 500);
  const auto series = running_mean_series(v);
  for (std::size_t i = 1; i < v.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) s += v[j];
    CHECK(series[i] == s / static_cast<double>(i));
    CHECK(running_mean_predict(std::span<const double>(v).first(i)) == s / static_cast<double>(i));
  }
}

TEST_CASE("trend line equals the normal-equation oracle", "[baselines][property]") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(10);
    const auto h = random_series(rng, n + rng.index(5));
    const auto got = trend_n_predict(h, n, 6);
    const auto want = trend_oracle(h, n, 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-12 * std::max(1.0, std::abs(want[k])));
  }
  // Integer data on an exact line is reproduced exactly.
  CHECK(trend_n_predict(std::vector<double>{2, 5, 8, 11}, 4, 3) == std::vector<double>{14, 17, 20});
}

TEST_CASE("seasonal and trend are translation equivariant", "[baselines][property]") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto h = random_series(rng, 12);
    const double c = std::ldexp(static_cast<double>(rng.index(64)), -2);
    auto shifted = h;
    for (auto& v : shifted) v += c;
    const auto s0 = seasonal_predict(h), s1 = seasonal_predict(shifted);
    for (std::size_t k = 0; k < 6; ++k) CHECK(s1[k] == h[h.size() - 6 + k] + c);
    for (std::size_t n : {3u, 6u}) {
      const auto t0 = trend_n_predict(h, n), t1 = trend_n_predict(shifted, n);
      for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(t1[k] - (t0[k] + c)) < 1e-11);
    }
  }
}

TEST_CASE("mse and mae", "[evaluation]") {
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(mae(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, 3}) == 5.0);
  CHECK(mae(std::vector<double>{0, 0}, std::vector<double>{1, 3}) == 2.0);
  CHECK_THROWS_AS(mse(std::vector<double>{0}, std::vector<double>{1, 3}), Error);
  CHECK_THROWS_AS(mse(std::vector<double>{std::nan("")}, std::vector<double>{1}), Error);
  Rng rng(1);
  std::vector<double> p(1000), a(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    p[i] = rng.normal(3, 2);
    a[i] = rng.normal(3, 2);
  }
  std::vector<double> sq(1000);
  for (std::size_t i = 0; i < 1000; ++i) sq[i] = (p[i] - a[i]) * (p[i] - a[i]);
  std::sort(sq.begin(), sq.end());
  double oracle = 0.0;
  for (double v : sq) oracle += v;
  oracle /= 1000.0;
  CHECK(std::abs(mse(p, a) - oracle) <= 1e-10 * oracle);
  CHECK(mae(p, a) * mae(p, a) <= mse(p, a));
}

TEST_CASE("seed aggregation uses the sample std", "[evaluation]") {
  auto rep = [](double m) {
    EvalReport r;
    r.model_id = "X";
    r.mse = m;
    r.mae = std::sqrt(m);
    return r;
  };
  const std::vector<EvalReport> three{rep(1), rep(2), rep(3)};
  const auto a = aggregate_seeds(three);
  CHECK(a.mean_mse == 2.0);
  CHECK(a.std_mse == 1.0);
  CHECK(aggregate_seeds(std::vector<EvalReport>{rep(4)}).std_mse == 0.0);
  CHECK(aggregate_seeds(std::vector<EvalReport>(10, rep(4))).std_mse == 0.0);
  auto other = three;
  other[1].model_id = "Y";
  CHECK_THROWS_AS(aggregate_seeds(other), Error);
  CHECK_THROWS_AS(aggregate_seeds(std::vector<EvalReport>{}), Error);
}

TEST_CASE("training mean on a constant target scores zero", "[evaluation]") {
  const auto f = make_frame({{"a", std::vector<double>(100, 1.0)}, {"nitrate_out", std::vector<double>(100, 3.5)}});
  const auto plan = make_final_split(f);
  CHECK(evaluate_baseline({BaselineKind::kTrainingMean, 0, 0}, f, plan, Task::kNowcast, Split::kTest).mse == 0.0);
  CHECK(evaluate_baseline({BaselineKind::kTrainingMean, 0, 6}, f, plan, Task::kForecast, Split::kTest).mse == 0.0);
  CHECK(evaluate_baseline({BaselineKind::kSeasonal, 0, 6}, f, plan, Task::kForecast, Split::kTest).mse == 0.0);
}

TEST_CASE("persistence model equals lag-one seasonal at horizon one", "[evaluation]") {
  Rng rng(3);
  const auto f = make_frame({{"nitrate_out", random_series(rng, 300)}});
  const auto plan = make_final_split(f);
  const auto model = score(predict_series(persistence_model(), f, plan.test, 1), "m", Task::kForecast, Split::kTest, 0);
  const auto base = evaluate_baseline({BaselineKind::kSeasonal, 0, 1}, f, plan, Task::kForecast, Split::kTest);
  CHECK(model.mse == base.mse);
  CHECK(model.mae == base.mae);
  CHECK(model.n_points == base.n_points);
}

TEST_CASE("forecast baselines share anchors and pool six horizons", "[evaluation]") {
  Rng rng(5);
  const auto f = make_frame({{"nitrate_out", random_series(rng, 400)}});
  const auto plan = make_final_split(f);
  std::vector<std::size_t> anchors;
  for (const auto& b : standard_baselines(Task::kForecast)) {
    const auto s = baseline_series(b, f, plan, Task::kForecast, Split::kTest);
    if (anchors.empty()) anchors = s.anchors;
    CHECK(s.anchors == anchors);
    const auto r = score(s, b.name(), Task::kForecast, Split::kTest, 0);
    CHECK(r.n_points == 6 * s.anchors.size());
    REQUIRE(r.horizon_mse.size() == 6);
    double pooled = 0.0;
    for (double v : r.horizon_mse) pooled += v / 6.0;
    CHECK(std::abs(pooled - r.mse) <= 1e-12 * std::max(1.0, r.mse));
  }
  CHECK(anchors.front() == plan.test[0].begin + 5);
}

TEST_CASE("pooled forecast metric is permutation invariant", "[evaluation][property]") {
  Rng rng(8);
  PredictionSeries s;
  for (std::size_t i = 0; i < 50; ++i) {
    s.anchors.push_back(i);
    std::vector<double> p(6), a(6);
    for (std::size_t k = 0; k < 6; ++k) {
      p[k] = rng.normal();
      a[k] = rng.normal();
    }
    s.pred.push_back(p);
    s.actual.push_back(a);
  }
  const auto r0 = score(s, "m", Task::kForecast, Split::kTest, 0);
  std::vector<std::size_t> order(50);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  PredictionSeries t;
  for (std::size_t i : order) {
    t.anchors.push_back(s.anchors[i]);
    t.pred.push_back(s.pred[i]);
    t.actual.push_back(s.actual[i]);
  }
  const auto r1 = score(t, "m", Task::kForecast, Split::kTest, 0);
  CHECK(std::abs(r0.mse - r1.mse) < 1e-12);
  CHECK(std::abs(r0.mae - r1.mae) < 1e-12);
}

TEST_CASE("exact scaled predictions give zero error after inversion", "[evaluation]") {
  const auto f = linear_frame({.length = 600, .a = 2.0, .c = 3.0});
  const auto plan = make_final_split(f);
  TrainedModel m;
  m.spec = {Arch::kElasticNet, {"nitrate_in"}, 0, Task::kNowcast, {}, 0};
  m.scaler = fit_scaler(f, plan.train, {"nitrate_in", "nitrate_out"});
  // y_s = (2 x + 3 - my) / sy = (2 sx / sy) x_s + (2 mx + 3 - my) / sy
  const auto& sx = m.scaler.at("nitrate_in");
  const auto& sy = m.scaler.at("nitrate_out");
  m.params = ElasticNetParams{{2.0 * sx.std / sy.std}, (2.0 * sx.mean + 3.0 - sy.mean) / sy.std};
  const auto r = evaluate(m, f, plan, Split::kTest);
  CHECK(r.mse < 1e-20);
  CHECK(r.model_id == "ElasticNet");
}

TEST_CASE("report csv and table1 json", "[evaluation]") {
  std::vector<EvalReport> reports;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    EvalReport a;
    a.model_id = "LSTM";
    a.task = Task::kForecast;
    a.mse = 0.2 + 0.01 * static_cast<double>(seed);
    a.mae = 0.3;
    a.n_points = 60;
    a.seed = seed;
    reports.push_back(a);
  }
  EvalReport b = reports[0];
  b.model_id = "BaselineSeasonal";
  b.mse = 0.5;
  reports.push_back(b);
  std::ostringstream out;
  write_report_csv(out, reports);
  std::istringstream in(out.str());
  const auto back = read_report_csv(in);
  REQUIRE(back.size() == reports.size());
  CHECK(back[1].mse == reports[1].mse);
  CHECK(back[3].model_id == "BaselineSeasonal");
  const auto t = table1_json(reports);
  REQUIRE(t["forecast"].size() == 2);
  CHECK(t["forecast"][0]["model"] == "LSTM");
  CHECK(t["forecast"][0]["test"]["n_seeds"] == 3);
  CHECK(t["forecast"][0]["test"]["std_mse"].get<double>() > 0.0);
  CHECK(t["forecast"][1]["test"]["std_mse"].get<double>() == 0.0);
}
