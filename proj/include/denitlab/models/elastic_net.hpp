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

#ifndef DENITLAB_MODELS_ELASTIC_NET_HPP_
#define DENITLAB_MODELS_ELASTIC_NET_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "denitlab/error.hpp"
#include "denitlab/models/spec.hpp"

namespace denitlab {

struct ElasticNetParams {
  std::vector<double> weights;
  double intercept = 0.0;
  bool operator==(const ElasticNetParams&) const = default;
};

struct ElasticNetOptions {
  double alpha = 1e-3;
  double l1_ratio = 0.5;
  double tol = 1e-6;
  std::size_t max_iter = 10000;
};

struct ElasticNetFit {
  ElasticNetParams params;
  TrainLog log;
  bool converged = false;
};

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

inline double predict_elastic_net(const ElasticNetParams& p, std::span<const double> features) {
  require(features.size() == p.weights.size(), ErrorCode::kSpecMismatch, "elastic net feature count");
  double out = p.intercept;
  for (std::size_t j = 0; j < features.size(); ++j) out += p.weights[j] * features[j];
  return out;
}

namespace detail {

inline double mse_of(const ElasticNetParams& p, const FeatureMatrix& x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double e = predict_elastic_net(p, {x.row(i), x.cols}) - y[i];
    s += e * e;
  }
  return s / static_cast<double>(x.rows);
}

}  // namespace detail

/// Minimizes (1/2N)|y - Xw - b|^2 + alpha (l1_ratio |w|_1 + (1 - l1_ratio)/2 |w|^2)
/// by cyclic coordinate descent on centered data; the intercept is not
/// penalized. Stops once the largest coordinate change in a sweep is below
/// `tol`. A run that hits `max_iter` returns its last (lowest-objective)
/// iterate with `converged == false`.
inline ElasticNetFit fit_elastic_net(const FeatureMatrix& x, std::span<const double> y,
                                     const ElasticNetOptions& opt, const FeatureMatrix* x_val = nullptr,
                                     std::span<const double> y_val = {}) {
  require(x.rows == y.size() && x.data.size() == x.rows * x.cols, ErrorCode::kDimensionMismatch,
          "X has " + std::to_string(x.rows) + " rows, y has " + std::to_string(y.size()));
  require(x.rows > 0, ErrorCode::kEmptyWindows, "no training rows");
  require(opt.alpha >= 0.0 && opt.l1_ratio >= 0.0 && opt.l1_ratio <= 1.0 && opt.tol > 0.0,
          ErrorCode::kInvalidHyperparameter, "alpha >= 0, l1_ratio in [0, 1], tol > 0");
  require(x_val == nullptr || (x_val->rows == y_val.size() && x_val->cols == x.cols), ErrorCode::kDimensionMismatch,
          "validation shape");
  const std::size_t n = x.rows, p = x.cols;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> col_mean(p, 0.0);
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) col_mean[j] += x.at(i, j);
    y_mean += y[i];
  }
  for (auto& m : col_mean) m *= inv_n;
  y_mean *= inv_n;

  // Column-major centered copy.
  std::vector<double> xc(n * p);
  std::vector<double> sq_norm(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double* col = xc.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = x.at(i, j) - col_mean[j];
      sq_norm[j] += col[i] * col[i];
    }
    sq_norm[j] *= inv_n;
  }
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - y_mean;

  const double l1 = opt.alpha * opt.l1_ratio;
  const double l2 = opt.alpha * (1.0 - opt.l1_ratio);
  ElasticNetFit fit;
  std::vector<double> w(p, 0.0);
  auto snapshot = [&] {
    fit.params.weights = w;
    double b = y_mean;
    for (std::size_t j = 0; j < p; ++j) b -= col_mean[j] * w[j];
    fit.params.intercept = b;
  };

  for (std::size_t sweep = 0; sweep < opt.max_iter; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double denom = sq_norm[j] + l2;
      const double* col = xc.data() + j * n;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * r[i];
      rho = rho * inv_n + sq_norm[j] * w[j];
      const double updated = denom > 0.0 ? soft_threshold(rho, l1) / denom : 0.0;
      const double delta = updated - w[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) r[i] -= col[i] * delta;
        w[j] = updated;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    double sse = 0.0;
    for (double e : r) sse += e * e;
    fit.log.train_loss.push_back(sse * inv_n);
    if (x_val != nullptr && x_val->rows > 0) {
      snapshot();
      fit.log.val_loss.push_back(detail::mse_of(fit.params, *x_val, y_val));
    } else {
      fit.log.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    fit.log.stopped_at = sweep;
    if (max_delta < opt.tol) {
      fit.converged = true;
      break;
    }
  }
  snapshot();
  fit.log.stop_reason = fit.converged ? StopReason::kConverged : StopReason::kMaxIter;
  fit.log.best_iteration = fit.log.stopped_at;
  return fit;
}

}  // namespace denitlab

#endif  // DENITLAB_MODELS_ELASTIC_NET_HPP_
