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

#ifndef DENITLAB_MODELS_NETWORK_HPP_
#define DENITLAB_MODELS_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "denitlab/error.hpp"
#include "denitlab/models/spec.hpp"
#include "denitlab/util.hpp"

namespace denitlab {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Gated memory cell (LSTM), single layer, linear head on the final state.
//
// theta layout: W [4H x (D+H)] row-major (gate blocks i, f, g, o),
//               b [4H], head_w [H], head_b [1].

class RecurrentNet {
 public:
  RecurrentNet(std::size_t inputs, std::size_t hidden) : d_(inputs), h_(hidden) {}

  std::size_t inputs() const { return d_; }
  std::size_t parameter_count() const { return 4 * h_ * (d_ + h_) + 4 * h_ + h_ + 1; }

  /// Uniform +-1/sqrt(fan_in) for the cell, zero head.
  void initialize(std::span<double> theta, Rng& rng) const {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_ + h_));
    const std::size_t cell = 4 * h_ * (d_ + h_) + 4 * h_;
    for (std::size_t i = 0; i < cell; ++i) theta[i] = rng.uniform(-bound, bound);
    std::fill(theta.begin() + static_cast<std::ptrdiff_t>(cell), theta.end(), 0.0);
  }

  struct Workspace {
    std::vector<double> z, gates, c, h, tanh_c, dz, da;
  };

  double forward(std::span<const double> theta, const double* seq, std::size_t steps, Workspace& ws) const {
    const std::size_t zw = d_ + h_, g4 = 4 * h_;
    ws.z.assign(steps * zw, 0.0);
    ws.gates.assign(steps * g4, 0.0);
    ws.c.assign((steps + 1) * h_, 0.0);
    ws.h.assign((steps + 1) * h_, 0.0);
    ws.tanh_c.assign(steps * h_, 0.0);
    const double* w = theta.data();
    const double* b = w + g4 * zw;
    for (std::size_t t = 0; t < steps; ++t) {
      double* z = ws.z.data() + t * zw;
      std::copy(seq + t * d_, seq + (t + 1) * d_, z);
      std::copy(ws.h.data() + t * h_, ws.h.data() + (t + 1) * h_, z + d_);
      double* a = ws.gates.data() + t * g4;
      for (std::size_t r = 0; r < g4; ++r) {
        double s = b[r];
        const double* wr = w + r * zw;
        for (std::size_t k = 0; k < zw; ++k) s += wr[k] * z[k];
        a[r] = s;
      }
      const double* c_prev = ws.c.data() + t * h_;
      double* c = ws.c.data() + (t + 1) * h_;
      double* hh = ws.h.data() + (t + 1) * h_;
      double* tc = ws.tanh_c.data() + t * h_;
      for (std::size_t j = 0; j < h_; ++j) {
        const double ig = sigmoid(a[j]);
        const double fg = sigmoid(a[h_ + j]);
        const double gg = std::tanh(a[2 * h_ + j]);
        const double og = sigmoid(a[3 * h_ + j]);
        a[j] = ig;
        a[h_ + j] = fg;
        a[2 * h_ + j] = gg;
        a[3 * h_ + j] = og;
        c[j] = fg * c_prev[j] + ig * gg;
        tc[j] = std::tanh(c[j]);
        hh[j] = og * tc[j];
      }
    }
    const double* head_w = b + g4;
    double y = head_w[h_];
    const double* h_last = ws.h.data() + steps * h_;
    for (std::size_t j = 0; j < h_; ++j) y += head_w[j] * h_last[j];
    return y;
  }

  /// Accumulates d(loss)/d(theta) into grad given d(loss)/d(output) = dy.
  void backward(std::span<const double> theta, std::size_t steps, Workspace& ws, double dy,
                std::span<double> grad) const {
    const std::size_t zw = d_ + h_, g4 = 4 * h_;
    const double* w = theta.data();
    const double* head_w = w + g4 * zw + g4;
    double* gw = grad.data();
    double* gb = gw + g4 * zw;
    double* ghw = gb + g4;
    const double* h_last = ws.h.data() + steps * h_;
    for (std::size_t j = 0; j < h_; ++j) ghw[j] += dy * h_last[j];
    ghw[h_] += dy;

    std::vector<double> dh(h_), dc(h_, 0.0);
    for (std::size_t j = 0; j < h_; ++j) dh[j] = dy * head_w[j];
    ws.da.assign(g4, 0.0);
    ws.dz.assign(zw, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
      const double* a = ws.gates.data() + t * g4;
      const double* c_prev = ws.c.data() + t * h_;
      const double* tc = ws.tanh_c.data() + t * h_;
      for (std::size_t j = 0; j < h_; ++j) {
        const double ig = a[j], fg = a[h_ + j], gg = a[2 * h_ + j], og = a[3 * h_ + j];
        const double d_o = dh[j] * tc[j];
        dc[j] += dh[j] * og * (1.0 - tc[j] * tc[j]);
        const double d_i = dc[j] * gg;
        const double d_g = dc[j] * ig;
        const double d_f = dc[j] * c_prev[j];
        ws.da[j] = d_i * ig * (1.0 - ig);
        ws.da[h_ + j] = d_f * fg * (1.0 - fg);
        ws.da[2 * h_ + j] = d_g * (1.0 - gg * gg);
        ws.da[3 * h_ + j] = d_o * og * (1.0 - og);
        dc[j] *= fg;
      }
      const double* z = ws.z.data() + t * zw;
      std::fill(ws.dz.begin(), ws.dz.end(), 0.0);
      for (std::size_t r = 0; r < g4; ++r) {
        const double g = ws.da[r];
        if (g == 0.0) continue;
        gb[r] += g;
        double* gwr = gw + r * zw;
        const double* wr = w + r * zw;
        for (std::size_t k = 0; k < zw; ++k) {
          gwr[k] += g * z[k];
          ws.dz[k] += g * wr[k];
        }
      }
      for (std::size_t j = 0; j < h_; ++j) dh[j] = ws.dz[d_ + j];
    }
  }

 private:
  std::size_t d_, h_;
};

// ---------------------------------------------------------------------------
// Temporal convolutional network: `levels` dilated causal convolutions
// (dilation 2^level, tanh activation) with residual connections, linear head
// on the last time step. Level 0 projects D inputs to H channels with a 1x1
// convolution on the residual path.
//
// theta layout per level: W [H x Cin x K], b [H], then for level 0 only
// P [H x D], pb [H]; finally head_w [H], head_b [1].

class TcnNet {
 public:
  TcnNet(std::size_t inputs, std::size_t hidden, std::size_t levels, std::size_t kernel)
      : d_(inputs), h_(hidden), levels_(levels), k_(kernel) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < levels_; ++l) {
      Level lv;
      lv.cin = l == 0 ? d_ : h_;
      lv.dilation = std::size_t{1} << l;
      lv.w = off;
      off += h_ * lv.cin * k_;
      lv.b = off;
      off += h_;
      lv.project = lv.cin != h_;
      if (lv.project) {
        lv.p = off;
        off += h_ * lv.cin;
        lv.pb = off;
        off += h_;
      }
      layout_.push_back(lv);
    }
    head_ = off;
    count_ = off + h_ + 1;
  }

  std::size_t inputs() const { return d_; }
  std::size_t parameter_count() const { return count_; }

  void initialize(std::span<double> theta, Rng& rng) const {
    for (const auto& lv : layout_) {
      const double conv_bound = 1.0 / std::sqrt(static_cast<double>(lv.cin * k_));
      for (std::size_t i = lv.w; i < lv.b + h_; ++i) theta[i] = rng.uniform(-conv_bound, conv_bound);
      if (lv.project) {
        const double proj_bound = 1.0 / std::sqrt(static_cast<double>(lv.cin));
        for (std::size_t i = lv.p; i < lv.pb + h_; ++i) theta[i] = rng.uniform(-proj_bound, proj_bound);
      }
    }
    std::fill(theta.begin() + static_cast<std::ptrdiff_t>(head_), theta.end(), 0.0);
  }

  struct Workspace {
    std::vector<std::vector<double>> act;   // level inputs; act[levels] is the top output
    std::vector<std::vector<double>> tanh;  // activated convolution per level
    std::vector<double> d_out, d_in;
  };

  double forward(std::span<const double> theta, const double* seq, std::size_t steps, Workspace& ws) const {
    ws.act.resize(levels_ + 1);
    ws.tanh.resize(levels_);
    ws.act[0].assign(seq, seq + steps * d_);
    for (std::size_t l = 0; l < levels_; ++l) {
      const auto& lv = layout_[l];
      const auto& in = ws.act[l];
      auto& th = ws.tanh[l];
      auto& out = ws.act[l + 1];
      th.assign(steps * h_, 0.0);
      out.assign(steps * h_, 0.0);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t o = 0; o < h_; ++o) {
          double s = theta[lv.b + o];
          for (std::size_t k = 0; k < k_; ++k) {
            const std::size_t lag = k * lv.dilation;
            if (lag > t) break;
            const double* x = in.data() + (t - lag) * lv.cin;
            const double* w = theta.data() + lv.w + (o * lv.cin) * k_;
            for (std::size_t i = 0; i < lv.cin; ++i) s += w[i * k_ + k] * x[i];
          }
          th[t * h_ + o] = std::tanh(s);
          double skip;
          if (lv.project) {
            skip = theta[lv.pb + o];
            const double* p = theta.data() + lv.p + o * lv.cin;
            const double* x = in.data() + t * lv.cin;
            for (std::size_t i = 0; i < lv.cin; ++i) skip += p[i] * x[i];
          } else {
            skip = in[t * lv.cin + o];
          }
          out[t * h_ + o] = th[t * h_ + o] + skip;
        }
      }
    }
    const double* top = ws.act[levels_].data() + (steps - 1) * h_;
    double y = theta[head_ + h_];
    for (std::size_t j = 0; j < h_; ++j) y += theta[head_ + j] * top[j];
    return y;
  }

  void backward(std::span<const double> theta, std::size_t steps, Workspace& ws, double dy,
                std::span<double> grad) const {
    const double* top = ws.act[levels_].data() + (steps - 1) * h_;
    for (std::size_t j = 0; j < h_; ++j) grad[head_ + j] += dy * top[j];
    grad[head_ + h_] += dy;
    ws.d_out.assign(steps * h_, 0.0);
    for (std::size_t j = 0; j < h_; ++j) ws.d_out[(steps - 1) * h_ + j] = dy * theta[head_ + j];

    for (std::size_t l = levels_; l-- > 0;) {
      const auto& lv = layout_[l];
      const auto& in = ws.act[l];
      const auto& th = ws.tanh[l];
      ws.d_in.assign(steps * lv.cin, 0.0);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t o = 0; o < h_; ++o) {
          const double g_out = ws.d_out[t * h_ + o];
          if (g_out == 0.0) continue;
          const double tv = th[t * h_ + o];
          const double dz = g_out * (1.0 - tv * tv);
          grad[lv.b + o] += dz;
          for (std::size_t k = 0; k < k_; ++k) {
            const std::size_t lag = k * lv.dilation;
            if (lag > t) break;
            const double* x = in.data() + (t - lag) * lv.cin;
            double* dx = ws.d_in.data() + (t - lag) * lv.cin;
            const std::size_t wbase = lv.w + (o * lv.cin) * k_;
            for (std::size_t i = 0; i < lv.cin; ++i) {
              grad[wbase + i * k_ + k] += dz * x[i];
              dx[i] += dz * theta[wbase + i * k_ + k];
            }
          }
          if (lv.project) {
            grad[lv.pb + o] += g_out;
            const double* x = in.data() + t * lv.cin;
            double* dx = ws.d_in.data() + t * lv.cin;
            for (std::size_t i = 0; i < lv.cin; ++i) {
              grad[lv.p + o * lv.cin + i] += g_out * x[i];
              dx[i] += g_out * theta[lv.p + o * lv.cin + i];
            }
          } else {
            ws.d_in[t * lv.cin + o] += g_out;
          }
        }
      }
      std::swap(ws.d_out, ws.d_in);
    }
  }

 private:
  struct Level {
    std::size_t cin = 0, dilation = 1, w = 0, b = 0, p = 0, pb = 0;
    bool project = false;
  };
  std::size_t d_, h_, levels_, k_;
  std::vector<Level> layout_;
  std::size_t head_ = 0, count_ = 0;
};

// ---------------------------------------------------------------------------
// Fitted state and training

struct NetworkParams {
  Arch arch = Arch::kRecurrent;
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t levels = 1;
  std::size_t kernel = 1;
  std::vector<double> theta;
  bool operator==(const NetworkParams&) const = default;
};

/// Per-step input sequence of a window: covariates, then the target history value.
inline std::vector<double> window_sequence(const WindowSample& s, std::size_t n_cov) {
  const std::size_t steps = n_cov > 0 ? s.x.size() / n_cov : s.y_hist.size();
  const std::size_t d = n_cov + (s.y_hist.empty() ? 0 : 1);
  std::vector<double> seq(steps * d);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(s.x.begin() + static_cast<std::ptrdiff_t>(t * n_cov),
              s.x.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_cov), seq.begin() + static_cast<std::ptrdiff_t>(t * d));
    if (!s.y_hist.empty()) seq[t * d + n_cov] = s.y_hist[t];
  }
  return seq;
}

/// Calls fn(net) with the concrete network for these parameters.
template <class Fn>
decltype(auto) with_network(const NetworkParams& p, Fn&& fn) {
  if (p.arch == Arch::kRecurrent) return fn(RecurrentNet(p.inputs, p.hidden));
  return fn(TcnNet(p.inputs, p.hidden, p.levels, p.kernel));
}

inline double predict_network(const NetworkParams& p, std::span<const double> seq, std::size_t steps) {
  require(steps > 0 && seq.size() == steps * p.inputs, ErrorCode::kSpecMismatch, "network input shape");
  return with_network(p, [&](const auto& net) {
    typename std::decay_t<decltype(net)>::Workspace ws;
    return net.forward(p.theta, seq.data(), steps, ws);
  });
}

struct NetworkOptions {
  double learning_rate = 3e-3;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double clip_norm = 5.0;  // 0 disables clipping
  std::uint64_t seed = 0;
};

/// Training losses at or below this are treated as an exact fit.
inline constexpr double kConvergedLoss = 1e-14;

struct SequenceBatch {
  std::vector<double> seq;  // n x steps x inputs
  std::vector<double> y;
  std::size_t steps = 0;
  std::size_t inputs = 0;
  std::size_t size() const { return y.size(); }
  const double* at(std::size_t i) const { return seq.data() + i * steps * inputs; }
};

inline SequenceBatch to_sequences(const WindowSet& set, std::size_t n_cov) {
  SequenceBatch b;
  b.steps = set.h + 1;
  b.inputs = n_cov + (set.samples.empty() || set.samples.front().y_hist.empty() ? 0 : 1);
  for (const auto& s : set.samples) {
    const auto seq = window_sequence(s, n_cov);
    b.seq.insert(b.seq.end(), seq.begin(), seq.end());
    b.y.push_back(s.y.front());
  }
  return b;
}

template <class Net>
double sequence_mse(const Net& net, std::span<const double> theta, const SequenceBatch& data) {
  typename Net::Workspace ws;
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = net.forward(theta, data.at(i), data.steps, ws) - data.y[i];
    s += e * e;
  }
  return s / static_cast<double>(data.size());
}

struct NetworkFit {
  std::vector<double> theta;
  TrainLog log;
};

/// Mini-batch gradient descent with momentum on MSE. Keeps the parameters of
/// the epoch with the lowest validation loss and stops after `patience`
/// epochs without improvement.
template <class Net>
NetworkFit train_network(const Net& net, const SequenceBatch& train, const SequenceBatch& val,
                         const NetworkOptions& opt) {
  require(train.size() > 0 && val.size() > 0, ErrorCode::kEmptyWindows, "network training needs train and val windows");
  require(train.inputs == net.inputs() && val.inputs == net.inputs(), ErrorCode::kDimensionMismatch, "input width");
  Rng rng(opt.seed);
  std::vector<double> theta(net.parameter_count());
  net.initialize(theta, rng);
  std::vector<double> velocity(theta.size(), 0.0), grad(theta.size());
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  typename Net::Workspace ws;

  NetworkFit fit;
  fit.theta = theta;
  EarlyStopper stopper(opt.patience);
  fit.log.stop_reason = StopReason::kMaxIter;
  for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      const double scale = 2.0 / static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const double out = net.forward(theta, train.at(i), train.steps, ws);
        net.backward(theta, train.steps, ws, scale * (out - train.y[i]), grad);
      }
      if (opt.clip_norm > 0.0) {
        double norm = 0.0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > opt.clip_norm) {
          for (auto& g : grad) g *= opt.clip_norm / norm;
        }
      }
      for (std::size_t j = 0; j < theta.size(); ++j) {
        velocity[j] = opt.momentum * velocity[j] - opt.learning_rate * grad[j];
        theta[j] += velocity[j];
      }
    }
    const double train_loss = sequence_mse(net, theta, train);
    const double val_loss = sequence_mse(net, theta, val);
    fit.log.train_loss.push_back(train_loss);
    fit.log.val_loss.push_back(val_loss);
    fit.log.stopped_at = epoch;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      fail(ErrorCode::kNonFiniteLoss, "epoch " + std::to_string(epoch) + ": train " + format_double(train_loss) +
                                          ", val " + format_double(val_loss));
    }
    if (stopper.observe(epoch, val_loss)) fit.theta = theta;
    if (train_loss <= kConvergedLoss) {
      fit.log.stop_reason = StopReason::kConverged;
      break;
    }
    if (stopper.should_stop()) {
      fit.log.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  fit.log.best_iteration = stopper.best_iteration();
  return fit;
}

}  // namespace denitlab

#endif  // DENITLAB_MODELS_NETWORK_HPP_
