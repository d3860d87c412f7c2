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

#ifndef DENITLAB_MODEL_HPP_
#define DENITLAB_MODEL_HPP_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "denitlab/models/elastic_net.hpp"
#include "denitlab/models/gbt.hpp"
#include "denitlab/models/network.hpp"
#include "denitlab/models/spec.hpp"
#include "denitlab/preprocess.hpp"
#include "denitlab/util.hpp"
#include "json.hpp"

namespace denitlab {

using ModelParameters = std::variant<ElasticNetParams, GbtParams, NetworkParams>;

/// A fitted model together with the standardization it expects.
struct TrainedModel {
  ModelSpec spec;
  ModelParameters params;
  Scaler scaler;
  std::string scaler_id;
};

struct TrainResult {
  TrainedModel model;
  TrainLog log;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
};

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// JSON encoding

inline nlohmann::json to_json(const ModelSpec& s) {
  return {{"arch", to_string(s.arch)}, {"covariates", s.covariates}, {"h", s.h},
          {"task", to_string(s.task)},  {"hyperparams", s.hyperparams}, {"seed", s.seed}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.arch = parse_arch(j.at("arch").get<std::string>());
  s.covariates = j.value("covariates", default_covariates());
  s.h = j.value("h", std::size_t{0});
  s.task = parse_task(j.value("task", std::string("nowcast")));
  s.hyperparams = j.value("hyperparams", Hyperparams{});
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

inline nlohmann::json to_json(const Scaler& s) {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& c : s.stats) stats.push_back({{"name", c.name}, {"mean", c.mean}, {"std", c.std}});
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& r : s.fitted_on) ranges.push_back({r.begin, r.end});
  return {{"stats", stats}, {"fitted_on", ranges}};
}

inline Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s;
  for (const auto& c : j.at("stats")) {
    s.stats.push_back({c.at("name").get<std::string>(), c.at("mean").get<double>(), c.at("std").get<double>()});
  }
  for (const auto& r : j.at("fitted_on")) s.fitted_on.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
  return s;
}

inline std::string scaler_fingerprint(const Scaler& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(s).dump())));
  return buf;
}

inline nlohmann::json to_json(const TrainLog& log) {
  // NaN is not representable in JSON; absent validation losses become null.
  nlohmann::json val = nlohmann::json::array();
  for (double v : log.val_loss) val.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  return {{"train_loss", log.train_loss},
          {"val_loss", val},
          {"stopped_at", log.stopped_at},
          {"stop_reason", to_string(log.stop_reason)},
          {"best_iteration", log.best_iteration}};
}

namespace detail {

inline nlohmann::json params_to_json(const ModelParameters& p) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ElasticNetParams>) {
          return {{"kind", "elastic_net"}, {"weights", v.weights}, {"intercept", v.intercept}};
        } else if constexpr (std::is_same_v<T, GbtParams>) {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : v.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
            trees.push_back(nodes);
          }
          return {{"kind", "gbt"}, {"base", v.base}, {"n_features", v.n_features}, {"trees", trees}};
        } else {
          return {{"kind", "network"}, {"arch", to_string(v.arch)}, {"inputs", v.inputs}, {"hidden", v.hidden},
                  {"levels", v.levels},  {"kernel", v.kernel},        {"theta", v.theta}};
        }
      },
      p);
}

inline ModelParameters params_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "elastic_net") {
    return ElasticNetParams{j.at("weights").get<std::vector<double>>(), j.at("intercept").get<double>()};
  }
  if (kind == "gbt") {
    GbtParams p;
    p.base = j.at("base").get<double>();
    p.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t) {
        tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                              n.at(4).get<double>()});
      }
      p.trees.push_back(std::move(tree));
    }
    return p;
  }
  if (kind == "network") {
    NetworkParams p;
    p.arch = parse_arch(j.at("arch").get<std::string>());
    p.inputs = j.at("inputs").get<std::size_t>();
    p.hidden = j.at("hidden").get<std::size_t>();
    p.levels = j.at("levels").get<std::size_t>();
    p.kernel = j.at("kernel").get<std::size_t>();
    p.theta = j.at("theta").get<std::vector<double>>();
    const std::size_t expected =
        with_network(p, [](const auto& net) { return net.parameter_count(); });
    require(p.theta.size() == expected, ErrorCode::kBadArtifact, "network parameter count");
    return p;
  }
  fail(ErrorCode::kBadArtifact, "unknown parameter kind '" + kind + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedModel& m) {
  return {{"format", "denitlab.model"},
          {"version", kModelFormatVersion},
          {"spec", to_json(m.spec)},
          {"scaler_id", m.scaler_id},
          {"scaler", to_json(m.scaler)},
          {"parameters", detail::params_to_json(m.params)}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  require(j.value("format", std::string()) == "denitlab.model", ErrorCode::kBadArtifact, "not a model artifact");
  require(j.value("version", 0) == kModelFormatVersion, ErrorCode::kBadArtifact,
          "unsupported model format version " + std::to_string(j.value("version", 0)));
  TrainedModel m;
  m.spec = spec_from_json(j.at("spec"));
  m.scaler = scaler_from_json(j.at("scaler"));
  m.scaler_id = j.at("scaler_id").get<std::string>();
  m.params = detail::params_from_json(j.at("parameters"));
  return m;
}

/// Model artifact: CBOR encoding of the JSON document above. Doubles are
/// stored as IEEE-754 binary64 so parameters round-trip bit-exactly.
inline std::vector<std::uint8_t> serialize(const TrainedModel& m) { return nlohmann::json::to_cbor(to_json(m)); }

inline TrainedModel deserialize(const std::vector<std::uint8_t>& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadArtifact, e.what());
  }
  return model_from_json(j);
}

inline void save_model(const std::string& path, const TrainedModel& m) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

// ---------------------------------------------------------------------------
// Prediction

/// One-step prediction in the standardized domain: y_t for nowcasting,
/// y_{t+1} for forecasting.
inline double predict(const TrainedModel& m, const WindowSample& s) {
  const std::size_t n_cov = m.spec.covariates.size();
  const bool forecast = m.spec.task == Task::kForecast;
  require(s.x.size() == (m.spec.h + 1) * n_cov && s.y_hist.size() == (forecast ? m.spec.h + 1 : 0),
          ErrorCode::kSpecMismatch, "window shape does not match the model spec");
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NetworkParams>) {
          const auto seq = window_sequence(s, n_cov);
          return predict_network(p, seq, m.spec.h + 1);
        } else {
          std::vector<double> features;
          features.reserve(m.spec.flat_features());
          append_flat(s, features);
          if constexpr (std::is_same_v<T, ElasticNetParams>) {
            return predict_elastic_net(p, features);
          } else {
            return predict_gbt(p, features);
          }
        }
      },
      m.params);
}

/// Recursive multi-step forecast from anchor t on a frame standardized with
/// the model's scaler. Each prediction is fed back as the newest target
/// history value; measured covariates for t+1.. are taken as known. Returns
/// predictions for t+1..t+steps in original units.
inline std::vector<double> rollout_forecast(const TrainedModel& m, const TimeSeriesFrame& scaled, std::size_t t,
                                            std::size_t steps = kSamplesPerHour) {
  require(m.spec.task == Task::kForecast, ErrorCode::kSpecMismatch, "rollout needs a forecasting model");
  require(steps >= 1, ErrorCode::kBadParams, "steps >= 1");
  const std::size_t h = m.spec.h;
  require(t >= h && t + steps - 1 < scaled.length(), ErrorCode::kWindowCrossesGap, "rollout span outside frame");
  require(!scaled.crosses_gap(t - h, t + steps - 1), ErrorCode::kWindowCrossesGap,
          "rollout from anchor " + std::to_string(t) + " crosses a gap");
  std::vector<const std::vector<Reading>*> cols;
  for (const auto& c : m.spec.covariates) cols.push_back(&scaled.column(c).values);
  const auto& y = scaled.target().values;

  std::vector<double> history;
  for (std::size_t i = t - h; i <= t; ++i) {
    require(y[i].has_value(), ErrorCode::kNoAdmissibleWindows, "missing target history");
    history.push_back(*y[i]);
  }
  std::vector<double> out;
  WindowSample s;
  for (std::size_t k = 0; k < steps; ++k) {
    s.t = t + k;
    s.x.clear();
    for (std::size_t i = t + k - h; i <= t + k; ++i) {
      for (const auto* c : cols) {
        require((*c)[i].has_value(), ErrorCode::kNoAdmissibleWindows, "missing covariate in rollout");
        s.x.push_back(*(*c)[i]);
      }
    }
    s.y_hist.assign(history.end() - static_cast<std::ptrdiff_t>(h + 1), history.end());
    const double next = predict(m, s);
    history.push_back(next);
    out.push_back(next);
  }
  return invert_target(m.scaler, std::move(out), scaled.target_name());
}

// ---------------------------------------------------------------------------
// Training

/// Fits the scaler on `train`, builds one-step windows, and trains the spec's
/// architecture. Validation windows drive early stopping; only the given
/// ranges are ever read.
inline TrainResult train_model(const ModelSpec& spec, const TimeSeriesFrame& frame,
                               const std::vector<IndexRange>& train, const std::vector<IndexRange>& val) {
  validate_spec(spec);
  const Hyperparams hp = resolve_hyperparams(spec.arch, spec.hyperparams);
  std::vector<std::string> scaled_columns = spec.covariates;
  scaled_columns.push_back(frame.target_name());
  const Scaler scaler = fit_scaler(frame, train, scaled_columns);
  const TimeSeriesFrame scaled = apply_scaler(frame, scaler);
  const WindowSpec wspec = spec.training_windows();
  const WindowSet train_set = build_windows(scaled, wspec, train);
  WindowSet val_set;
  if (total_size(val) > 0) {
    try {
      val_set = build_windows(scaled, wspec, val);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoAdmissibleWindows) throw;
    }
  }
  const auto uz = [&](const char* name) { return static_cast<std::size_t>(hp.at(name)); };

  TrainResult result;
  result.train_windows = train_set.samples.size();
  result.val_windows = val_set.samples.size();
  result.model.spec = spec;
  result.model.scaler = scaler;
  result.model.scaler_id = scaler_fingerprint(scaler);

  switch (spec.arch) {
    case Arch::kElasticNet: {
      const auto x = flatten(train_set);
      const auto y = first_targets(train_set);
      const auto xv = flatten(val_set);
      const auto yv = first_targets(val_set);
      auto fit = fit_elastic_net(x, y, {hp.at("alpha"), hp.at("l1_ratio"), hp.at("tol"), uz("max_iter")},
                                 xv.rows ? &xv : nullptr, yv);
      result.model.params = std::move(fit.params);
      result.log = std::move(fit.log);
      break;
    }
    case Arch::kGbt: {
      const auto x = flatten(train_set);
      const auto y = first_targets(train_set);
      const auto xv = flatten(val_set);
      const auto yv = first_targets(val_set);
      GbtOptions opt{uz("n_trees"), uz("max_depth"), hp.at("learning_rate"), uz("min_samples_leaf"),
                     hp.at("subsample"), spec.seed, uz("patience")};
      auto fit = fit_gbt(x, y, opt, xv.rows ? &xv : nullptr, yv);
      result.model.params = std::move(fit.params);
      result.log = std::move(fit.log);
      break;
    }
    case Arch::kRecurrent:
    case Arch::kTcn: {
      require(!val_set.samples.empty(), ErrorCode::kEmptyWindows, "networks need validation windows");
      const std::size_t n_cov = spec.covariates.size();
      const auto tr = to_sequences(train_set, n_cov);
      const auto va = to_sequences(val_set, n_cov);
      NetworkParams p;
      p.arch = spec.arch;
      p.inputs = spec.inputs_per_step();
      p.hidden = uz("hidden");
      if (spec.arch == Arch::kTcn) {
        p.levels = uz("layers");
        p.kernel = uz("kernel");
      }
      NetworkOptions opt{hp.at("learning_rate"), hp.at("momentum"), uz("batch_size"), uz("max_epochs"),
                         uz("patience"), hp.at("clip_norm"), spec.seed};
      auto fit = with_network(p, [&](const auto& net) { return train_network(net, tr, va, opt); });
      p.theta = std::move(fit.theta);
      result.model.params = std::move(p);
      result.log = std::move(fit.log);
      break;
    }
  }
  return result;
}

}  // namespace denitlab

#endif  // DENITLAB_MODEL_HPP_
