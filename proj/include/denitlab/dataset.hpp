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

#ifndef DENITLAB_DATASET_HPP_
#define DENITLAB_DATASET_HPP_

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "denitlab/error.hpp"

namespace denitlab {

// Sample grid. Blocks are counted in samples so gaps do not shift them.
inline constexpr std::int64_t kStepSeconds = 600;
inline constexpr std::size_t kSamplesPerHour = 6;
inline constexpr std::size_t kSamplesPerDay = 144;
inline constexpr std::size_t kSamplesPerWeek = 7 * kSamplesPerDay;

inline constexpr std::string_view kTimestampColumn = "timestamp";
inline constexpr std::string_view kTargetColumn = "nitrate_out";

using Timestamp = std::chrono::sys_seconds;

/// A reading is either a finite value or explicitly missing.
using Reading = std::optional<double>;

struct ColumnSpec {
  std::string name;
  std::string unit;
};

/// The ten covariates followed by the target, in dataset order.
inline const std::vector<ColumnSpec>& default_schema() {
  static const std::vector<ColumnSpec> schema = {
      {"temperature", "degC"},    {"nitrate_in", "mg/L"},  {"oxygen_in", "mg/L"},
      {"ortho_phosphate", "mg/L"}, {"turbidity", "NTU"},    {"ammonium", "mg/L"},
      {"methanol", "mg/s"},        {"water_flow", "L/s"},   {"pressure_top", "kPa"},
      {"pressure_bottom", "kPa"},  {"nitrate_out", "mg/L"},
  };
  return schema;
}

inline std::vector<std::string> default_covariates() {
  std::vector<std::string> names;
  for (const auto& c : default_schema()) {
    if (c.name != kTargetColumn) names.push_back(c.name);
  }
  return names;
}

struct Column {
  std::string name;
  std::string unit;
  std::vector<Reading> values;
};

/// Missing grid steps between two consecutive rows.
struct Gap {
  std::size_t after_index = 0;
  std::size_t missing_steps = 0;
  bool operator==(const Gap&) const = default;
};

/// Half-open row index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

inline std::size_t total_size(const std::vector<IndexRange>& ranges) {
  std::size_t n = 0;
  for (const auto& r : ranges) n += r.size();
  return n;
}

// ---------------------------------------------------------------------------
// Timestamps

namespace detail {

inline bool parse_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace detail

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z|+00:00]` (a space may replace `T`). Only UTC is accepted.
inline Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string_view s = detail::trim(text);
  auto bad = [&]() -> Timestamp { fail(ErrorCode::kUnparsableTimestamp, "'" + std::string(text) + "'"); };
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return bad();
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), mo) ||
      !detail::parse_uint(s.substr(8, 2), d) || !detail::parse_uint(s.substr(11, 2), hh) ||
      !detail::parse_uint(s.substr(14, 2), mm)) {
    return bad();
  }
  std::string_view rest = s.substr(16);
  if (!rest.empty() && rest.front() == ':') {
    if (rest.size() < 3 || !detail::parse_uint(rest.substr(1, 2), ss)) return bad();
    rest.remove_prefix(3);
  }
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return bad();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return bad();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

/// Shortest text that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Frame

/// Uniformly gridded multivariate record. Rows are the observed grid steps;
/// skipped steps are described by `gaps()`. Immutable once built.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame() = default;

  TimeSeriesFrame(Timestamp start, std::vector<Column> columns, std::vector<Gap> gaps = {},
                  std::string target = std::string(kTargetColumn))
      : start_(start), columns_(std::move(columns)), gaps_(std::move(gaps)), target_(std::move(target)) {
    length_ = columns_.empty() ? 0 : columns_.front().values.size();
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      require(columns_[i].values.size() == length_, ErrorCode::kDimensionMismatch,
              "column '" + columns_[i].name + "' has a different length");
      for (std::size_t j = 0; j < i; ++j) {
        require(columns_[j].name != columns_[i].name, ErrorCode::kInvalidConfig,
                "duplicate column '" + columns_[i].name + "'");
      }
      for (const auto& v : columns_[i].values) {
        require(!v || std::isfinite(*v), ErrorCode::kNonFinite,
                "column '" + columns_[i].name + "' holds a non-finite value");
      }
    }
    target_index_ = find(target_).value_or(columns_.size());
    require(target_index_ < columns_.size(), ErrorCode::kMissingColumn, "target column '" + target_ + "'");
    std::size_t prev = 0;
    for (std::size_t g = 0; g < gaps_.size(); ++g) {
      require(gaps_[g].missing_steps >= 1 && gaps_[g].after_index + 1 < length_, ErrorCode::kInvalidConfig,
              "gap out of bounds");
      require(g == 0 || gaps_[g].after_index > prev, ErrorCode::kInvalidConfig, "gaps must be sorted");
      prev = gaps_[g].after_index;
    }
  }

  Timestamp start_time() const { return start_; }
  std::size_t length() const { return length_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Gap>& gaps() const { return gaps_; }
  const std::string& target_name() const { return target_; }
  std::size_t target_index() const { return target_index_; }
  const Column& target() const { return columns_[target_index_]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    return std::nullopt;
  }

  const Column& column(std::string_view name) const {
    const auto idx = find(name);
    require(idx.has_value(), ErrorCode::kMissingColumn, "'" + std::string(name) + "'");
    return columns_[*idx];
  }

  /// Grid position of row i counting skipped steps.
  std::int64_t grid_offset(std::size_t row) const {
    std::int64_t offset = static_cast<std::int64_t>(row);
    for (const auto& g : gaps_) {
      if (g.after_index >= row) break;
      offset += static_cast<std::int64_t>(g.missing_steps);
    }
    return offset;
  }

  Timestamp timestamp_at(std::size_t row) const {
    return start_ + std::chrono::seconds(grid_offset(row) * kStepSeconds);
  }

  /// True when some gap separates two rows inside [first, last].
  bool crosses_gap(std::size_t first, std::size_t last) const {
    for (const auto& g : gaps_) {
      if (g.after_index >= first && g.after_index < last) return true;
    }
    return false;
  }

  /// Copy with one column's values replaced.
  TimeSeriesFrame with_values(std::size_t column_index, std::vector<Reading> values) const {
    TimeSeriesFrame out = *this;
    require(column_index < out.columns_.size() && values.size() == length_, ErrorCode::kDimensionMismatch,
            "replacement column");
    out.columns_[column_index].values = std::move(values);
    return out;
  }

  /// Copy restricted to rows [range.begin, range.end); gaps are rebased.
  TimeSeriesFrame slice(IndexRange range) const {
    require(range.end <= length_ && range.begin < range.end, ErrorCode::kBadParams, "slice range");
    std::vector<Column> cols = columns_;
    for (auto& c : cols) {
      c.values = std::vector<Reading>(c.values.begin() + static_cast<std::ptrdiff_t>(range.begin),
                                      c.values.begin() + static_cast<std::ptrdiff_t>(range.end));
    }
    std::vector<Gap> gaps;
    for (const auto& g : gaps_) {
      if (g.after_index >= range.begin && g.after_index + 1 < range.end) {
        gaps.push_back({g.after_index - range.begin, g.missing_steps});
      }
    }
    return TimeSeriesFrame(timestamp_at(range.begin), std::move(cols), std::move(gaps), target_);
  }

 private:
  Timestamp start_{};
  std::vector<Column> columns_;
  std::vector<Gap> gaps_;
  std::string target_ = std::string(kTargetColumn);
  std::size_t length_ = 0;
  std::size_t target_index_ = 0;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

inline Reading parse_reading(std::string_view field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    fail(ErrorCode::kIo, "line " + std::to_string(line_no) + ": malformed number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a dataset CSV. Columns come out in schema order; extra header
/// columns are ignored. Empty fields are missing readings.
inline TimeSeriesFrame read_csv(std::istream& in, const std::vector<ColumnSpec>& schema = default_schema(),
                                std::string target = std::string(kTargetColumn)) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo, "empty input");
  const auto header = detail::split_csv_line(line);
  require(!header.empty() && header.front() == kTimestampColumn, ErrorCode::kMissingColumn,
          "first column must be 'timestamp'");
  std::vector<std::size_t> field_of(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = std::find(header.begin() + 1, header.end(), schema[c].name);
    require(it != header.end(), ErrorCode::kMissingColumn, "'" + schema[c].name + "'");
    field_of[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<Column> columns;
  for (const auto& s : schema) columns.push_back({s.name, s.unit, {}});
  std::vector<Gap> gaps;
  std::optional<Timestamp> start, prev;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    require(fields.size() == header.size(), ErrorCode::kIo,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
    const Timestamp t = parse_timestamp(fields[0]);
    if (prev) {
      const auto delta = (t - *prev).count();
      require(delta > 0, ErrorCode::kNonMonotonicTime, "line " + std::to_string(line_no));
      require(delta % kStepSeconds == 0, ErrorCode::kOffGridTimestamp, "line " + std::to_string(line_no));
      const auto steps = delta / kStepSeconds;
      if (steps > 1) gaps.push_back({rows - 1, static_cast<std::size_t>(steps - 1)});
    } else {
      start = t;
    }
    prev = t;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      columns[c].values.push_back(detail::parse_reading(fields[field_of[c]], line_no));
    }
    ++rows;
  }
  return TimeSeriesFrame(start.value_or(Timestamp{}), std::move(columns), std::move(gaps), std::move(target));
}

inline TimeSeriesFrame load_csv(const std::string& path, const std::vector<ColumnSpec>& schema = default_schema(),
                                std::string target = std::string(kTargetColumn)) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open '" + path + "'");
  return read_csv(in, schema, std::move(target));
}

inline void write_csv(std::ostream& out, const TimeSeriesFrame& frame) {
  out << kTimestampColumn;
  for (const auto& c : frame.columns()) out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < frame.length(); ++i) {
    out << format_timestamp(frame.timestamp_at(i));
    for (const auto& c : frame.columns()) {
      out << ',';
      if (c.values[i]) out << format_double(*c.values[i]);
    }
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const TimeSeriesFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write '" + path + "'");
  write_csv(out, frame);
}

// ---------------------------------------------------------------------------
// Splits

/// Train / validation / test row ranges of one experiment.
struct FoldPlan {
  std::vector<IndexRange> train;
  std::vector<IndexRange> validation;
  std::vector<IndexRange> test;
};

struct CvSettings {
  std::size_t n_folds = 4;
  std::size_t train_block = 3 * kSamplesPerWeek;
  std::size_t val_block = kSamplesPerWeek;
  double test_fraction = 0.20;
};

namespace detail {

// Guards floor/ceil of products such as 0.72 * 25 against representation error.
inline constexpr double kFractionSlack = 1e-9;

inline std::size_t floor_count(double fraction, std::size_t length) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(length) + kFractionSlack));
}

inline std::size_t ceil_count(double fraction, std::size_t length) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(length) - kFractionSlack));
}

}  // namespace detail

/// Blocked cross-validation: the last ceil(test_fraction * length) rows are
/// the shared test tail; the prefix is tiled with train/validation cycles.
/// Fold k moves the validation block k blocks earlier inside each cycle.
inline std::vector<FoldPlan> make_cv_folds(std::size_t length, const CvSettings& settings = {}) {
  require(settings.test_fraction >= 0.0 && settings.test_fraction < 1.0, ErrorCode::kInvalidFractions,
          "test_fraction must lie in [0, 1)");
  require(settings.train_block > 0 && settings.val_block > 0 && settings.n_folds > 0, ErrorCode::kBadParams,
          "block sizes and fold count must be positive");
  const std::size_t cycle = settings.train_block + settings.val_block;
  require(settings.n_folds * settings.val_block <= cycle, ErrorCode::kBadParams,
          "more folds than validation positions in a cycle");
  const std::size_t test_len = detail::ceil_count(settings.test_fraction, length);
  const std::size_t prefix = length - std::min(test_len, length);
  require(prefix >= cycle, ErrorCode::kFrameTooShort,
          "need " + std::to_string(cycle) + " rows before the test tail, have " + std::to_string(prefix));

  std::vector<FoldPlan> plans;
  for (std::size_t k = 0; k < settings.n_folds; ++k) {
    const std::size_t shift = (k * settings.val_block) % cycle;
    const std::size_t offset = (settings.train_block + cycle - shift) % cycle;
    FoldPlan plan;
    std::size_t cursor = 0;
    for (std::size_t base = 0; base < prefix; base += cycle) {
      const std::size_t vs = base + offset;
      if (vs >= prefix) break;
      const std::size_t ve = std::min(vs + settings.val_block, prefix);
      if (vs > cursor) plan.train.push_back({cursor, vs});
      plan.validation.push_back({vs, ve});
      cursor = ve;
    }
    if (cursor < prefix) plan.train.push_back({cursor, prefix});
    if (test_len > 0) plan.test.push_back({prefix, length});
    plans.push_back(std::move(plan));
  }
  return plans;
}

inline std::vector<FoldPlan> make_cv_folds(const TimeSeriesFrame& frame, const CvSettings& settings = {}) {
  return make_cv_folds(frame.length(), settings);
}

/// Contiguous train / validation / test split. Range starts are floored;
/// the remainder goes to the test tail.
inline FoldPlan make_final_split(std::size_t length, double train_fraction = 0.72, double val_fraction = 0.08) {
  const double test_fraction = 1.0 - train_fraction - val_fraction;
  require(train_fraction > 0.0 && val_fraction >= 0.0 && test_fraction >= -detail::kFractionSlack,
          ErrorCode::kInvalidFractions,
          "train " + format_double(train_fraction) + " + validation " + format_double(val_fraction) + " exceed 1");
  const std::size_t val_start = std::min(detail::floor_count(train_fraction, length), length);
  const std::size_t test_start = std::min(detail::floor_count(train_fraction + val_fraction, length), length);
  FoldPlan plan;
  plan.train.push_back({0, val_start});
  if (test_start > val_start) plan.validation.push_back({val_start, test_start});
  if (length > test_start) plan.test.push_back({test_start, length});
  return plan;
}

inline FoldPlan make_final_split(const TimeSeriesFrame& frame, double train_fraction = 0.72,
                                 double val_fraction = 0.08) {
  return make_final_split(frame.length(), train_fraction, val_fraction);
}

// ---------------------------------------------------------------------------
// Standardization

struct ColumnStats {
  std::string name;
  double mean = 0.0;
  double std = 1.0;
};

/// Per-column standardization fitted on a set of row ranges.
struct Scaler {
  std::vector<ColumnStats> stats;
  std::vector<IndexRange> fitted_on;

  const ColumnStats* find(std::string_view name) const {
    for (const auto& s : stats) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  const ColumnStats& at(std::string_view name) const {
    const auto* s = find(name);
    require(s != nullptr, ErrorCode::kMissingColumn, "scaler has no column '" + std::string(name) + "'");
    return *s;
  }

  static Scaler identity(const std::vector<std::string>& names) {
    Scaler s;
    for (const auto& n : names) s.stats.push_back({n, 0.0, 1.0});
    return s;
  }
};

/// Population mean/std over the present readings inside `ranges`. An empty
/// `columns` list means every column of the frame.
inline Scaler fit_scaler(const TimeSeriesFrame& frame, const std::vector<IndexRange>& ranges,
                         const std::vector<std::string>& columns = {}) {
  require(total_size(ranges) > 0, ErrorCode::kEmptyRanges, "scaler needs at least one row");
  std::vector<std::string> names = columns;
  if (names.empty()) {
    for (const auto& c : frame.columns()) names.push_back(c.name);
  }
  Scaler scaler;
  scaler.fitted_on = ranges;
  for (const auto& name : names) {
    const auto& values = frame.column(name).values;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : ranges) {
      require(r.end <= frame.length(), ErrorCode::kEmptyRanges, "range beyond frame");
      for (std::size_t i = r.begin; i < r.end; ++i) {
        if (values[i]) {
          sum += *values[i];
          ++n;
        }
      }
    }
    require(n > 0, ErrorCode::kEmptyRanges, "column '" + name + "' has no readings in the fit ranges");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : ranges) {
      for (std::size_t i = r.begin; i < r.end; ++i) {
        if (values[i]) ss += (*values[i] - mean) * (*values[i] - mean);
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    require(sd > 0.0 && std::isfinite(sd), ErrorCode::kZeroVarianceColumn, "'" + name + "'");
    scaler.stats.push_back({name, mean, sd});
  }
  return scaler;
}

/// Standardizes every scaler column over all rows; other columns pass through.
inline TimeSeriesFrame apply_scaler(const TimeSeriesFrame& frame, const Scaler& scaler) {
  std::vector<Column> cols = frame.columns();
  for (auto& c : cols) {
    const auto* s = scaler.find(c.name);
    if (s == nullptr) continue;
    for (auto& v : c.values) {
      if (v) v = (*v - s->mean) / s->std;
    }
  }
  return TimeSeriesFrame(frame.start_time(), std::move(cols), frame.gaps(), frame.target_name());
}

inline double unscale_value(const ColumnStats& s, double v) { return v * s.std + s.mean; }
inline double scale_value(const ColumnStats& s, double v) { return (v - s.mean) / s.std; }

/// Maps standardized target values back to original units.
inline std::vector<double> invert_target(const Scaler& scaler, std::vector<double> values,
                                         std::string_view target = kTargetColumn) {
  const auto& s = scaler.at(target);
  for (auto& v : values) v = unscale_value(s, v);
  return values;
}

}  // namespace denitlab

#endif  // DENITLAB_DATASET_HPP_
