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

#ifndef DENITLAB_MODELS_GBT_HPP_
#define DENITLAB_MODELS_GBT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "denitlab/error.hpp"
#include "denitlab/models/spec.hpp"
#include "denitlab/util.hpp"

namespace denitlab {

/// Internal nodes route `x[feature] <= threshold` to `left`. Leaves have
/// feature == -1 and carry the (learning-rate scaled) value.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
  bool operator==(const RegressionTree&) const = default;
};

struct GbtParams {
  double base = 0.0;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
  bool operator==(const GbtParams&) const = default;
};

struct GbtOptions {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
  double subsample = 1.0;
  std::uint64_t seed = 0;
  std::size_t patience = 0;  // 0 disables early stopping
};

struct GbtFit {
  GbtParams params;
  TrainLog log;
};

inline double predict_gbt(const GbtParams& p, std::span<const double> x) {
  require(x.size() == p.n_features, ErrorCode::kSpecMismatch, "gbt feature count");
  double out = p.base;
  for (const auto& t : p.trees) out += t.predict(x);
  return out;
}

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct ScanState {
  double left_sum = 0.0;
  std::size_t left_count = 0;
  double last = 0.0;
  bool has_last = false;
};

struct NodeStats {
  double sum = 0.0;
  std::size_t count = 0;
};

// Gains below this are floating-point noise, not structure.
inline constexpr double kMinSplitGain = 1e-12;

/// Grows one depth-limited tree on `residual` over rows with node_of >= 0
/// using level-wise exact greedy search over presorted feature orders.
inline RegressionTree grow_tree(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                                const std::vector<double>& residual, std::vector<int>& node_of,
                                const GbtOptions& opt) {
  RegressionTree tree;
  std::vector<NodeStats> stats(1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (node_of[i] == 0) {
      stats[0].sum += residual[i];
      ++stats[0].count;
    }
  }
  tree.nodes.push_back({});
  std::vector<int> frontier = {0};
  for (std::size_t depth = 0; depth < opt.max_depth && !frontier.empty(); ++depth) {
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<char> active(n_nodes, 0);
    for (int id : frontier) {
      if (stats[static_cast<std::size_t>(id)].count >= 2 * opt.min_samples_leaf) active[static_cast<std::size_t>(id)] = 1;
    }
    std::vector<SplitCandidate> best(n_nodes);
    std::vector<ScanState> scan(n_nodes);
    for (std::size_t f = 0; f < x.cols; ++f) {
      std::fill(scan.begin(), scan.end(), ScanState{});
      for (std::uint32_t i : order[f]) {
        const int node = node_of[i];
        if (node < 0 || !active[static_cast<std::size_t>(node)]) continue;
        auto& st = scan[static_cast<std::size_t>(node)];
        const auto& ns = stats[static_cast<std::size_t>(node)];
        const double v = x.at(i, f);
        if (st.has_last && v > st.last && st.left_count >= opt.min_samples_leaf &&
            ns.count - st.left_count >= opt.min_samples_leaf) {
          const double lc = static_cast<double>(st.left_count);
          const double rc = static_cast<double>(ns.count - st.left_count);
          const double rs = ns.sum - st.left_sum;
          const double gain = st.left_sum * st.left_sum / lc + rs * rs / rc -
                              ns.sum * ns.sum / static_cast<double>(ns.count);
          auto& b = best[static_cast<std::size_t>(node)];
          if (gain > b.gain) b = {gain, static_cast<int>(f), st.last + 0.5 * (v - st.last)};
        }
        st.left_sum += residual[i];
        ++st.left_count;
        st.last = v;
        st.has_last = true;
      }
    }
    std::vector<int> next;
    std::vector<int> child_of(n_nodes, -1);
    for (int id : frontier) {
      const auto& b = best[static_cast<std::size_t>(id)];
      if (!active[static_cast<std::size_t>(id)] || b.feature < 0 || b.gain <= kMinSplitGain) continue;
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      child_of[static_cast<std::size_t>(id)] = node.left;
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.resize(tree.nodes.size());
      next.push_back(node.left);
      next.push_back(node.left + 1);
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
      const int node = node_of[i];
      if (node < 0 || child_of[static_cast<std::size_t>(node)] < 0) continue;
      const auto& parent = tree.nodes[static_cast<std::size_t>(node)];
      const int child = x.at(i, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? parent.left : parent.right;
      node_of[i] = child;
      stats[static_cast<std::size_t>(child)].sum += residual[i];
      ++stats[static_cast<std::size_t>(child)].count;
    }
    frontier = std::move(next);
  }
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    auto& node = tree.nodes[id];
    if (node.feature < 0 && stats[id].count > 0) {
      node.value = opt.learning_rate * stats[id].sum / static_cast<double>(stats[id].count);
    }
  }
  return tree;
}

}  // namespace detail

/// Stagewise boosting on squared loss. Starts from mean(y); each stage fits a
/// regression tree to the residuals and adds it scaled by the learning rate.
/// With validation data and patience > 0 the ensemble is truncated to the
/// stage with the lowest validation MSE.
inline GbtFit fit_gbt(const FeatureMatrix& x, std::span<const double> y, const GbtOptions& opt,
                      const FeatureMatrix* x_val = nullptr, std::span<const double> y_val = {}) {
  require(x.rows == y.size() && x.data.size() == x.rows * x.cols, ErrorCode::kDimensionMismatch,
          "X has " + std::to_string(x.rows) + " rows, y has " + std::to_string(y.size()));
  require(x.rows > 0, ErrorCode::kEmptyWindows, "no training rows");
  require(opt.max_depth >= 1 && opt.learning_rate > 0.0 && opt.min_samples_leaf >= 1 && opt.subsample > 0.0 &&
              opt.subsample <= 1.0,
          ErrorCode::kInvalidHyperparameter, "gbt options");
  require(x_val == nullptr || (x_val->rows == y_val.size() && x_val->cols == x.cols), ErrorCode::kDimensionMismatch,
          "validation shape");
  const std::size_t n = x.rows;
  GbtFit fit;
  fit.params.n_features = x.cols;
  fit.params.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  fit.log.stop_reason = StopReason::kMaxIter;

  const bool degenerate = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (degenerate || opt.n_trees == 0) {
    if (degenerate) fit.log.stop_reason = StopReason::kConverged;
    return fit;
  }

  std::vector<std::vector<std::uint32_t>> order(x.cols, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0u);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
  }

  Rng rng(opt.seed);
  std::vector<double> pred(n, fit.params.base), residual(n);
  const bool has_val = x_val != nullptr && x_val->rows > 0;
  std::vector<double> val_pred(has_val ? x_val->rows : 0, fit.params.base);
  EarlyStopper stopper(has_val ? opt.patience : 0);
  std::vector<std::uint32_t> rows(n);
  std::vector<int> node_of(n);
  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.subsample * static_cast<double>(n))));

  for (std::size_t stage = 0; stage < opt.n_trees; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    if (sample_size < n) {
      std::fill(node_of.begin(), node_of.end(), -1);
      std::iota(rows.begin(), rows.end(), 0u);
      for (std::size_t k = 0; k < sample_size; ++k) {
        std::swap(rows[k], rows[k + rng.index(n - k)]);
        node_of[rows[k]] = 0;
      }
    } else {
      std::fill(node_of.begin(), node_of.end(), 0);
    }
    auto tree = detail::grow_tree(x, order, residual, node_of, opt);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += tree.predict({x.row(i), x.cols});
      sse += (y[i] - pred[i]) * (y[i] - pred[i]);
    }
    fit.params.trees.push_back(std::move(tree));
    fit.log.train_loss.push_back(sse / static_cast<double>(n));
    fit.log.stopped_at = stage;
    if (has_val) {
      double vs = 0.0;
      for (std::size_t i = 0; i < x_val->rows; ++i) {
        val_pred[i] += fit.params.trees.back().predict({x_val->row(i), x_val->cols});
        vs += (y_val[i] - val_pred[i]) * (y_val[i] - val_pred[i]);
      }
      fit.log.val_loss.push_back(vs / static_cast<double>(x_val->rows));
      stopper.observe(stage, fit.log.val_loss.back());
      if (stopper.should_stop()) {
        fit.log.stop_reason = StopReason::kEarlyStop;
        break;
      }
    } else {
      fit.log.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  fit.log.best_iteration = fit.log.stopped_at;
  if (has_val && opt.patience > 0) {
    fit.log.best_iteration = stopper.best_iteration();
    fit.params.trees.resize(stopper.best_iteration() + 1);
  }
  return fit;
}

}  // namespace denitlab

#endif  // DENITLAB_MODELS_GBT_HPP_
