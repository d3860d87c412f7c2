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

#ifndef DENITLAB_ABLATION_HPP_
#define DENITLAB_ABLATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
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

inline constexpr std::size_t kMaxAblationCovariates = 16;

struct AblationRow {
  std::uint32_t mask = 0;  // bit i set: covariates[i] included
  std::vector<std::string> names;
  double val_mse = std::numeric_limits<double>::quiet_NaN();
  double test_mse = std::numeric_limits<double>::quiet_NaN();
  std::string error;

  bool ok() const { return error.empty() && std::isfinite(test_mse); }
};

struct AblationTable {
  ModelSpec base_spec;
  std::vector<std::string> covariates;
  std::vector<AblationRow> rows;  // masks 1 .. 2^n - 1 in increasing order
  std::vector<std::string> notes;
};

inline std::vector<std::string> subset_names(const std::vector<std::string>& covariates, std::uint32_t mask) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (mask & (1u << i)) out.push_back(covariates[i]);
  }
  return out;
}

/// Trains and scores one spec on a plan's train/validation/test ranges,
/// averaging over `seeds` derived seeds.
inline std::pair<double, double> train_and_score(const ModelSpec& spec, const TimeSeriesFrame& frame,
                                                 const FoldPlan& split, std::size_t seeds) {
  double val = 0.0, test = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    ModelSpec run = spec;
    if (seeds > 1) run.seed = mix_seed(spec.seed, s);
    const auto trained = train_model(run, frame, split.train, split.validation);
    val += split.validation.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : evaluate(trained.model, frame, split, Split::kValidation).mse;
    test += evaluate(trained.model, frame, split, Split::kTest).mse;
  }
  return {val / static_cast<double>(seeds), test / static_cast<double>(seeds)};
}

/// One model per non-empty covariate subset with all other settings fixed.
/// The empty subset is skipped and noted.
inline AblationTable covariate_sweep(const ModelSpec& base_spec, const std::vector<std::string>& covariates,
                                     const TimeSeriesFrame& frame, const FoldPlan& split, std::size_t jobs = 1,
                                     std::size_t seeds_per_subset = 1) {
  require(!covariates.empty() && covariates.size() <= kMaxAblationCovariates, ErrorCode::kGuardrailExceeded,
          std::to_string(covariates.size()) + " covariates; the sweep supports 1.." +
              std::to_string(kMaxAblationCovariates));
  require(seeds_per_subset >= 1, ErrorCode::kBadParams, "seeds_per_subset >= 1");
  AblationTable table;
  table.base_spec = base_spec;
  table.covariates = covariates;
  table.notes.push_back("mask 0 (empty subset) skipped");
  const std::uint32_t n_masks = (1u << covariates.size()) - 1;
  table.rows.resize(n_masks);
  parallel_for(n_masks, jobs, [&](std::size_t k) {
    auto& row = table.rows[k];
    row.mask = static_cast<std::uint32_t>(k + 1);
    row.names = subset_names(covariates, row.mask);
    ModelSpec spec = base_spec;
    spec.covariates = row.names;
    try {
      std::tie(row.val_mse, row.test_mse) = train_and_score(spec, frame, split, seeds_per_subset);
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  return table;
}

struct CovariateImportance {
  std::string name;
  double mean_mse_with = std::numeric_limits<double>::quiet_NaN();
  double mean_mse_without = std::numeric_limits<double>::quiet_NaN();
  std::size_t count_with = 0;
  std::size_t count_without = 0;
  double top_k_prevalence = 0.0;
};

struct ImportanceSummary {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<CovariateImportance> covariates;
};

/// With/without mean test MSE per covariate and its prevalence among the
/// ceil(top_fraction * rows) lowest-MSE subsets. Failed rows are ignored.
inline ImportanceSummary importance(const AblationTable& table, double top_fraction = 0.05) {
  std::vector<const AblationRow*> rows;
  for (const auto& r : table.rows) {
    if (r.ok()) rows.push_back(&r);
  }
  require(!rows.empty(), ErrorCode::kEmptyTable, "no completed ablation rows");
  require(top_fraction > 0.0 && top_fraction <= 1.0, ErrorCode::kBadParams, "top_fraction in (0, 1]");
  ImportanceSummary out;
  out.rows = rows.size();
  out.k = std::max<std::size_t>(1, detail::ceil_count(top_fraction, rows.size()));
  std::vector<const AblationRow*> ranked = rows;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const AblationRow* a, const AblationRow* b) { return a->test_mse < b->test_mse; });
  for (std::size_t i = 0; i < table.covariates.size(); ++i) {
    const std::uint32_t bit = 1u << i;
    CovariateImportance c;
    c.name = table.covariates[i];
    double with = 0.0, without = 0.0;
    for (const auto* r : rows) {
      if (r->mask & bit) {
        with += r->test_mse;
        ++c.count_with;
      } else {
        without += r->test_mse;
        ++c.count_without;
      }
    }
    if (c.count_with) c.mean_mse_with = with / static_cast<double>(c.count_with);
    if (c.count_without) c.mean_mse_without = without / static_cast<double>(c.count_without);
    std::size_t top = 0;
    for (std::size_t j = 0; j < out.k; ++j) top += (ranked[j]->mask & bit) ? 1 : 0;
    c.top_k_prevalence = static_cast<double>(top) / static_cast<double>(out.k);
    out.covariates.push_back(std::move(c));
  }
  return out;
}

struct HistoryPoint {
  std::size_t h = 0;
  std::optional<double> val_mse;
  std::optional<double> test_mse;  // absent when no window fits
  std::string error;
};

/// One model per history length, everything else fixed.
inline std::vector<HistoryPoint> history_sweep(const ModelSpec& base_spec, const std::vector<std::size_t>& h_values,
                                               const TimeSeriesFrame& frame, const FoldPlan& split,
                                               std::size_t jobs = 1) {
  std::vector<HistoryPoint> out(h_values.size());
  parallel_for(h_values.size(), jobs, [&](std::size_t i) {
    out[i].h = h_values[i];
    ModelSpec spec = base_spec;
    spec.h = h_values[i];
    try {
      const auto [val, test] = train_and_score(spec, frame, split, 1);
      if (std::isfinite(val)) out[i].val_mse = val;
      out[i].test_mse = test;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoAdmissibleWindows) throw;
      out[i].error = e.what();
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline void write_ablation_csv(std::ostream& out, const AblationTable& table) {
  out << "mask,covariates,val_mse,test_mse,error\n";
  for (const auto& r : table.rows) {
    std::string names;
    for (const auto& n : r.names) names += (names.empty() ? "" : ";") + n;
    out << r.mask << ',' << names << ',' << format_double(r.val_mse) << ',' << format_double(r.test_mse) << ','
        << (r.error.empty() ? "" : "\"" + r.error + "\"") << '\n';
  }
}

inline nlohmann::json to_json(const ImportanceSummary& s) {
  nlohmann::json mean_mse = nlohmann::json::array(), prevalence = nlohmann::json::array();
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& c : s.covariates) {
    mean_mse.push_back({{"covariate", c.name},
                        {"mean_mse_with", num(c.mean_mse_with)},
                        {"mean_mse_without", num(c.mean_mse_without)},
                        {"count_with", c.count_with},
                        {"count_without", c.count_without}});
    prevalence.push_back({{"covariate", c.name}, {"top_k_prevalence", c.top_k_prevalence}});
  }
  return {{"rows", s.rows}, {"k", s.k}, {"mean_mse", mean_mse}, {"top_k", prevalence}};
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryPoint>& points) {
  out << "h,val_mse,test_mse\n";
  for (const auto& p : points) {
    out << p.h << ',' << (p.val_mse ? format_double(*p.val_mse) : "") << ','
        << (p.test_mse ? format_double(*p.test_mse) : "") << '\n';
  }
}

}  // namespace denitlab

#endif  // DENITLAB_ABLATION_HPP_
