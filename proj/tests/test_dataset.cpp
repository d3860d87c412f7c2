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

#include "denitlab/dataset.hpp"
#include "support.hpp"

using namespace denitlab;
using namespace denitlab::testing;

namespace {

std::string csv_header() {
  std::string h = "timestamp";
  for (const auto& c : default_schema()) h += "," + c.name;
  return h + "\n";
}

std::string csv_row(const std::string& ts, double v) {
  std::string r = ts;
  for (std::size_t i = 0; i < default_schema().size(); ++i) r += "," + format_double(v + static_cast<double>(i));
  return r + "\n";
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kIo;
}

// Index-by-index classification of a blocked CV prefix.
enum class Role { kTrain, kVal, kTest };

std::vector<Role> oracle_roles(std::size_t length, std::size_t fold, const CvSettings& s) {
  const auto test_len = static_cast<std::size_t>(std::ceil(s.test_fraction * static_cast<double>(length) - 1e-9));
  const std::size_t prefix = length - test_len, cycle = s.train_block + s.val_block;
  const std::size_t val_start = s.train_block - fold * s.val_block;
  std::vector<Role> roles(length, Role::kTest);
  for (std::size_t i = 0; i < prefix; ++i) {
    const std::size_t pos = i % cycle;
    roles[i] = (pos >= val_start && pos < val_start + s.val_block) ? Role::kVal : Role::kTrain;
  }
  return roles;
}

std::vector<Role> plan_roles(std::size_t length, const FoldPlan& p) {
  std::vector<int> seen(length, 0);
  std::vector<Role> roles(length, Role::kTest);
  auto mark = [&](const std::vector<IndexRange>& rs, Role role) {
    for (const auto& r : rs) {
      for (std::size_t i = r.begin; i < r.end; ++i) {
        roles[i] = role;
        ++seen[i];
      }
    }
  };
  mark(p.train, Role::kTrain);
  mark(p.validation, Role::kVal);
  mark(p.test, Role::kTest);
  for (int s : seen) REQUIRE(s == 1);
  return roles;
}

}  // namespace

TEST_CASE("timestamps parse and format", "[dataset]") {
  const auto t = parse_timestamp("2023-03-01T10:20:00Z");
  CHECK(format_timestamp(t) == "2023-03-01T10:20:00Z");
  CHECK(parse_timestamp("2023-03-01 10:20") == t);
  CHECK(parse_timestamp("2023-03-01T10:20:00+00:00") == t);
  CHECK(code_of([] { parse_timestamp("2023-13-40T00:00:00Z"); }) == ErrorCode::kUnparsableTimestamp);
  CHECK(code_of([] { parse_timestamp("2023-02-29T00:00:00Z"); }) == ErrorCode::kUnparsableTimestamp);
  CHECK(code_of([] { parse_timestamp("yesterday"); }) == ErrorCode::kUnparsableTimestamp);
}

TEST_CASE("format_double round-trips", "[dataset]") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.normal(0.0, 1e3);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("load_csv basic, gaps and errors", "[dataset]") {
  SECTION("three rows, no gaps") {
    std::istringstream in(csv_header() + csv_row("2023-01-01T00:00:00Z", 1) + csv_row("2023-01-01T00:10:00Z", 2) +
                          csv_row("2023-01-01T00:20:00Z", 3));
    const auto f = read_csv(in);
    CHECK(f.length() == 3);
    CHECK(f.gaps().empty());
    CHECK(f.target_name() == "nitrate_out");
    CHECK(*f.column("temperature").values[2] == 3.0);
  }
  SECTION("30 minute jump records a gap of two steps") {
    std::istringstream in(csv_header() + csv_row("2023-01-01T00:00:00Z", 1) + csv_row("2023-01-01T00:30:00Z", 2));
    const auto f = read_csv(in);
    CHECK(f.length() == 2);
    REQUIRE(f.gaps().size() == 1);
    CHECK(f.gaps()[0] == Gap{0, 2});
    CHECK(format_timestamp(f.timestamp_at(1)) == "2023-01-01T00:30:00Z");
    CHECK(f.crosses_gap(0, 1));
    CHECK_FALSE(f.crosses_gap(1, 1));
  }
  SECTION("empty field is missing") {
    std::string row = "2023-01-01T00:00:00Z,";
    for (std::size_t i = 1; i < default_schema().size(); ++i) row += ",1";
    std::istringstream in(csv_header() + row + "\n");
    const auto f = read_csv(in);
    CHECK_FALSE(f.column("temperature").values[0].has_value());
  }
  SECTION("errors") {
    std::istringstream bad_date(csv_header() + csv_row("2023-13-40T00:00:00Z", 1));
    CHECK(code_of([&] { read_csv(bad_date); }) == ErrorCode::kUnparsableTimestamp);
    std::istringstream backwards(csv_header() + csv_row("2023-01-01T00:10:00Z", 1) + csv_row("2023-01-01T00:00:00Z", 1));
    CHECK(code_of([&] { read_csv(backwards); }) == ErrorCode::kNonMonotonicTime);
    std::istringstream off_grid(csv_header() + csv_row("2023-01-01T00:00:00Z", 1) + csv_row("2023-01-01T00:15:00Z", 1));
    CHECK(code_of([&] { read_csv(off_grid); }) == ErrorCode::kOffGridTimestamp);
    std::istringstream missing("timestamp,temperature\n2023-01-01T00:00:00Z,1\n");
    CHECK(code_of([&] { read_csv(missing); }) == ErrorCode::kMissingColumn);
  }
}

TEST_CASE("csv write then read is byte-stable", "[dataset]") {
  const auto f = generate(denitlab::testing::small_synth(2)).frame;
  std::ostringstream a;
  write_csv(a, f);
  std::istringstream in(a.str());
  const auto g = read_csv(in);
  std::ostringstream b;
  write_csv(b, g);
  CHECK(a.str() == b.str());
  CHECK(g.length() == f.length());
}

TEST_CASE("cv folds: 140 days and the 28-day cycle", "[dataset]") {
  const std::size_t day = kSamplesPerDay;
  const auto plans = make_cv_folds(140 * day);
  REQUIRE(plans.size() == 4);
  for (const auto& p : plans) {
    REQUIRE(p.test.size() == 1);
    CHECK(p.test[0].begin == 112 * day);
    CHECK(p.test[0].end == 140 * day);
  }
  for (std::size_t a = 0; a < plans.size(); ++a) {
    for (std::size_t b = a + 1; b < plans.size(); ++b) CHECK(plans[a].validation != plans[b].validation);
  }
  const auto one = make_cv_folds(35 * day);  // prefix of 28 days
  REQUIRE(one[0].validation.size() == 1);
  CHECK(one[0].validation[0] == IndexRange{21 * day, 28 * day});
  REQUIRE(one[0].train.size() == 1);
  CHECK(one[0].train[0] == IndexRange{0, 21 * day});
  CHECK(code_of([] { make_cv_folds(30 * kSamplesPerDay); }) == ErrorCode::kFrameTooShort);
}

TEST_CASE("cv folds match an index-wise oracle on random lengths", "[dataset][property]") {
  Rng rng(2024);
  const CvSettings s;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t length = 5040 + rng.index(30000);
    const auto plans = make_cv_folds(length, s);
    REQUIRE(plans.size() == s.n_folds);
    for (std::size_t k = 0; k < plans.size(); ++k) {
      CHECK(plan_roles(length, plans[k]) == oracle_roles(length, k, s));
      std::size_t max_fit = 0;
      for (const auto& r : plans[k].train) max_fit = std::max(max_fit, r.end);
      for (const auto& r : plans[k].validation) max_fit = std::max(max_fit, r.end);
      CHECK(max_fit <= plans[k].test[0].begin);
      CHECK(plans[k].test == plans[0].test);
    }
  }
}

TEST_CASE("final split rounding", "[dataset]") {
  auto p = make_final_split(100);
  CHECK(p.train[0] == IndexRange{0, 72});
  CHECK(p.validation[0] == IndexRange{72, 80});
  CHECK(p.test[0] == IndexRange{80, 100});
  p = make_final_split(25);
  CHECK(p.train[0] == IndexRange{0, 18});
  CHECK(p.validation[0] == IndexRange{18, 20});
  CHECK(p.test[0] == IndexRange{20, 25});
  CHECK(code_of([] { make_final_split(100, 0.9, 0.2); }) == ErrorCode::kInvalidFractions);
}

TEST_CASE("scaler", "[dataset]") {
  SECTION("two-point symmetry with population std") {
    const auto f = make_frame({{"a", {2, 4}}, {"nitrate_out", {1, 2}}});
    const auto s = fit_scaler(f, {{0, 2}}, {"a"});
    CHECK(s.at("a").mean == 3.0);
    CHECK(s.at("a").std == 1.0);
    const auto g = apply_scaler(f, s);
    CHECK(*g.column("a").values[0] == -1.0);
    CHECK(*g.column("a").values[1] == 1.0);
    CHECK(*g.column("nitrate_out").values[0] == 1.0);  // not in the scaler
  }
  SECTION("constant column") {
    const auto f = make_frame({{"a", {5, 5, 5}}, {"nitrate_out", {1, 2, 3}}});
    CHECK(code_of([&] { fit_scaler(f, {{0, 3}}); }) == ErrorCode::kZeroVarianceColumn);
    CHECK(code_of([&] { fit_scaler(f, {}); }) == ErrorCode::kEmptyRanges);
  }
  SECTION("round trip within 1e-12 relative") {
    Rng rng(9);
    std::vector<double> y(500);
    for (auto& v : y) v = rng.normal(5.0, 3.0) * std::pow(10.0, rng.uniform(-3.0, 3.0));
    const auto f = make_frame({{"nitrate_out", y}});
    const auto s = fit_scaler(f, {{0, 250}});
    const auto scaled = dense(apply_scaler(f, s).target().values);
    const auto back = invert_target(s, scaled, "nitrate_out");
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(back[i] - y[i]) <= 1e-12 * std::max(1.0, std::abs(y[i])));
    }
  }
}

TEST_CASE("frame invariants", "[dataset]") {
  CHECK(code_of([] { make_frame({{"a", {1, 2}}, {"nitrate_out", {1}}}); }) == ErrorCode::kDimensionMismatch);
  CHECK(code_of([] { make_frame({{"a", {1}}, {"a", {1}}, {"nitrate_out", {1}}}); }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([] { make_frame({{"a", {1}}}); }) == ErrorCode::kMissingColumn);
  const auto f = make_frame({{"a", {1, 2, 3, 4}}, {"nitrate_out", {1, 2, 3, 4}}}, {{1, 3}});
  const auto s = f.slice({2, 4});
  CHECK(s.length() == 2);
  CHECK(s.gaps().empty());
  CHECK(f.grid_offset(2) == 5);
}
