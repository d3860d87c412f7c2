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

#ifndef DENITLAB_SYNTHPILOT_HPP_
#define DENITLAB_SYNTHPILOT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "denitlab/util.hpp"
#include "json.hpp"

namespace denitlab {

/// Open-loop methanol controller constants. The defaults are
/// order-of-magnitude placeholders, not plant values.
struct DosingParams {
  double k1 = 1.0;            // gain on nitrate above the setpoint
  double k2 = 0.3;            // oxygen gain
  double c_out_target = 2.0;  // outlet nitrate-N setpoint, mg/L
};

/// Methanol dosing rate q_w * (k1 * c_in - k1 * c_out_target + k2 * c_o2),
/// clamped at zero because a pump cannot remove methanol.
inline double methanol_dose(double q_w, double c_in, double c_o2, const DosingParams& d) {
  require(std::isfinite(q_w) && std::isfinite(c_in) && std::isfinite(c_o2) && std::isfinite(d.k1) &&
              std::isfinite(d.k2) && std::isfinite(d.c_out_target),
          ErrorCode::kNonFiniteInput, "dosing inputs must be finite");
  require(q_w >= 0.0, ErrorCode::kNonFiniteInput, "water flow must be non-negative");
  return std::max(0.0, q_w * (d.k1 * c_in - d.k1 * d.c_out_target + d.k2 * c_o2));
}

enum class FaultKind { kMethanolDropout, kTurbiditySpike };

inline std::string_view to_string(FaultKind k) {
  return k == FaultKind::kMethanolDropout ? "methanol_dropout" : "turbidity_spike";
}

struct FaultSpec {
  FaultKind kind = FaultKind::kMethanolDropout;
  std::size_t start = 0;     // sample index
  std::size_t duration = 0;  // samples
  double magnitude = 0.0;    // turbidity spikes only, NTU
};

struct CarrierRefill {
  double day = 0.0;
  double volume = 3.0;  // m3 after the refill
};

/// Every coefficient of the invented response model lives here.
struct SynthConfig {
  std::size_t days = 60;
  std::uint64_t seed = 1;
  std::string start_time = "2023-01-01T00:00:00Z";
  DosingParams dosing;

  // temperature, degC: base + amplitude * sin(2 pi day / period + phase) + noise
  double temp_base = 12.0;
  double temp_amplitude = 3.0;
  double temp_period_days = 365.0;
  double temp_phase = 0.0;
  double temp_noise = 0.1;

  // water flow, L/s: diurnal sinusoid
  double flow_base = 2.0;
  double flow_diurnal = 0.3;  // relative amplitude
  double flow_noise = 0.05;

  // inlet nitrate, mg/L: anti-correlated with flow plus a slow AR(1) drift
  double nitrate_in_base = 12.0;
  double nitrate_in_flow_coupling = 4.0;
  double nitrate_in_drift_sd = 0.05;
  double nitrate_in_drift_persistence = 0.995;
  double nitrate_in_noise = 0.1;

  double oxygen_base = 3.0;
  double oxygen_noise = 0.1;
  double ammonium_base = 1.0;
  double ammonium_noise = 0.05;
  double phosphate_base = 0.3;
  double phosphate_noise = 0.02;
  double turbidity_base = 5.0;
  double turbidity_noise = 0.3;
  double spike_rate = 0.002;     // per sample and column
  double spike_decay = 0.7;
  double spike_scale = 3.0;      // spike height in units of the column noise x 10

  // pressures, kPa, with backwash transients
  double pressure_bottom_base = 120.0;
  double pressure_top_base = 20.0;
  double pressure_noise = 0.1;
  double cleaning_dip = 20.0;    // bottom pressure drop during backwash
  double cleaning_spike = 10.0;  // top pressure rise during backwash
  double pressure_per_carrier = 5.0;

  // expanded-clay carrier volume, m3
  double carrier_initial = 3.0;
  double carrier_decay_per_day = 0.0073;
  std::vector<CarrierRefill> refills;

  // removal response
  double eta_max = 0.95;
  double stoich_k1 = 1.0;  // methanol needed per mg/L nitrate at full removal
  double q10 = 2.0;
  double t_ref = 15.0;
  double lag = 0.7;        // weight of the previous outlet value
  double nitrate_out_noise = 0.05;

  std::vector<FaultSpec> faults;

  // backwash schedule, samples
  std::size_t cleaning_period = kSamplesPerDay;
  std::size_t cleaning_duration = kSamplesPerHour;
  std::size_t cleaning_offset = 60;
  std::size_t cleaning_jitter = 0;

  std::size_t length() const { return days * kSamplesPerDay; }
};

struct ResolvedFault {
  FaultKind kind = FaultKind::kMethanolDropout;
  IndexRange interval;
};

/// Ground truth of when cleaning and faults happen.
struct FaultSchedule {
  std::vector<IndexRange> cleaning;
  std::vector<ResolvedFault> faults;
};

inline void validate(const SynthConfig& c) {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::kInvalidConfig, what); };
  check(c.days >= 1, "days >= 1");
  check(c.dosing.k1 > 0.0 && c.dosing.k2 >= 0.0 && c.dosing.c_out_target >= 0.0,
        "dosing needs k1 > 0, k2 >= 0, c_out_target >= 0");
  check(c.cleaning_duration >= 1 && c.cleaning_period > c.cleaning_duration + 2 * c.cleaning_jitter,
        "cleaning period must exceed duration plus jitter");
  check(c.eta_max >= 0.0 && c.eta_max <= 1.0, "eta_max in [0, 1]");
  check(c.lag >= 0.0 && c.lag < 1.0, "lag in [0, 1)");
  check(c.carrier_initial > 0.0 && c.carrier_decay_per_day >= 0.0, "carrier volume");
  check(c.q10 > 0.0 && c.stoich_k1 > 0.0 && c.flow_base > 0.0, "positive response constants");
  check(c.spike_decay >= 0.0 && c.spike_decay < 1.0 && c.spike_rate >= 0.0 && c.spike_rate <= 1.0, "spikes");
  for (const auto& f : c.faults) {
    check(f.duration >= 1 && f.start + f.duration <= c.length(), "fault window outside the generated horizon");
  }
  for (const auto& r : c.refills) check(r.day >= 0.0 && r.volume > 0.0, "refill");
  (void)parse_timestamp(c.start_time);
}

/// Cleaning and fault intervals as a pure function of the config.
inline FaultSchedule resolve_schedule(const SynthConfig& c) {
  validate(c);
  FaultSchedule s;
  Rng jitter(mix_seed(c.seed, 0xC1EA));
  const std::size_t n = c.length();
  for (std::size_t base = c.cleaning_offset + c.cleaning_jitter; base < n; base += c.cleaning_period) {
    std::size_t start = base;
    if (c.cleaning_jitter > 0) start = base - c.cleaning_jitter + jitter.index(2 * c.cleaning_jitter + 1);
    const std::size_t end = std::min(n, start + c.cleaning_duration);
    if (end > start) s.cleaning.push_back({start, end});
  }
  for (const auto& f : c.faults) s.faults.push_back({f.kind, {f.start, f.start + f.duration}});
  return s;
}

/// Carrier volume after `day` days of exponential loss and any refills.
inline double carrier_volume(const SynthConfig& c, double day) {
  double v = c.carrier_initial, since = 0.0;
  std::vector<CarrierRefill> refills = c.refills;
  std::sort(refills.begin(), refills.end(), [](const auto& a, const auto& b) { return a.day < b.day; });
  for (const auto& r : refills) {
    if (r.day > day) break;
    v = r.volume;
    since = r.day;
  }
  return v * std::exp(-c.carrier_decay_per_day * (day - since));
}

struct SynthOutput {
  TimeSeriesFrame frame;
  FaultSchedule schedule;
};

/// Generates all eleven dataset columns on a gap-free grid. All randomness
/// comes from one stream drawn in a fixed per-step order.
///
/// Outlet nitrate follows c_in * (1 - eta) through a one-step exponential
/// lag, with eta = eta_max * sat(dosed / required) * temp_factor * carrier_factor.
/// Readings during backwash are meaningless (uniform on [0, c_in]).
inline SynthOutput generate(const SynthConfig& c) {
  const FaultSchedule schedule = resolve_schedule(c);
  const std::size_t n = c.length();
  std::vector<std::vector<Reading>> col(default_schema().size(), std::vector<Reading>(n));
  enum { kTemp, kNin, kO2, kPo4, kTurb, kNh4, kMeoh, kFlow, kPtop, kPbot, kNout };

  std::vector<char> cleaning(n, 0), dropout(n, 0);
  std::vector<double> turbidity_fault(n, 0.0);
  for (const auto& r : schedule.cleaning) {
    for (std::size_t i = r.begin; i < r.end; ++i) cleaning[i] = 1;
  }
  for (std::size_t k = 0; k < schedule.faults.size(); ++k) {
    const auto& f = schedule.faults[k];
    for (std::size_t i = f.interval.begin; i < f.interval.end; ++i) {
      if (f.kind == FaultKind::kMethanolDropout) {
        dropout[i] = 1;
      } else {
        turbidity_fault[i] += c.faults[k].magnitude;
      }
    }
  }

  Rng rng(c.seed);
  double drift = 0.0, spike_o2 = 0.0, spike_nh4 = 0.0, spike_turb = 0.0;
  double outlet = -1.0;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < n; ++t) {
    const double day = static_cast<double>(t) / static_cast<double>(kSamplesPerDay);
    const double time_of_day = static_cast<double>(t % kSamplesPerDay) / static_cast<double>(kSamplesPerDay);

    const double temp = c.temp_base + c.temp_amplitude * std::sin(two_pi * day / c.temp_period_days + c.temp_phase) +
                        rng.normal(0.0, c.temp_noise);
    const double flow_rel = c.flow_diurnal * std::sin(two_pi * (time_of_day - 0.3)) + rng.normal(0.0, c.flow_noise);
    const double flow = std::max(0.0, c.flow_base * (1.0 + flow_rel));
    drift = c.nitrate_in_drift_persistence * drift + rng.normal(0.0, c.nitrate_in_drift_sd);
    const double c_in = std::max(0.1, c.nitrate_in_base + drift - c.nitrate_in_flow_coupling * flow_rel +
                                          rng.normal(0.0, c.nitrate_in_noise));
    const double o2_noise = rng.normal(0.0, c.oxygen_noise);
    const double nh4_noise = rng.normal(0.0, c.ammonium_noise);
    const double po4_noise = rng.normal(0.0, c.phosphate_noise);
    const double turb_noise = rng.normal(0.0, c.turbidity_noise);
    spike_o2 = c.spike_decay * spike_o2 + (rng.uniform() < c.spike_rate ? c.spike_scale * 10.0 * c.oxygen_noise : 0.0);
    spike_nh4 =
        c.spike_decay * spike_nh4 + (rng.uniform() < c.spike_rate ? c.spike_scale * 10.0 * c.ammonium_noise : 0.0);
    spike_turb =
        c.spike_decay * spike_turb + (rng.uniform() < c.spike_rate ? c.spike_scale * 10.0 * c.turbidity_noise : 0.0);
    const double p_bot_noise = rng.normal(0.0, c.pressure_noise);
    const double p_top_noise = rng.normal(0.0, c.pressure_noise);
    const double out_noise = rng.normal(0.0, c.nitrate_out_noise);
    const double garbage = rng.uniform();

    const double o2 = std::max(0.0, c.oxygen_base + spike_o2 + o2_noise);
    const double nh4 = std::max(0.0, c.ammonium_base + spike_nh4 + nh4_noise);
    const double po4 = std::max(0.0, c.phosphate_base + po4_noise);
    const double turb = std::max(0.0, c.turbidity_base + spike_turb + turbidity_fault[t] + turb_noise);

    const double planned = methanol_dose(flow, c_in, o2, c.dosing);
    const double dosed = dropout[t] ? 0.0 : planned;
    const double required = flow * (c.stoich_k1 * c_in + c.dosing.k2 * o2);
    const double sufficiency = required > 0.0 ? std::clamp(dosed / required, 0.0, 1.0) : 1.0;
    const double temp_factor = std::min(1.0, std::pow(c.q10, (temp - c.t_ref) / 10.0));
    const double volume = carrier_volume(c, day);
    const double carrier_factor = std::min(1.0, volume / c.carrier_initial);
    const double eta = c.eta_max * sufficiency * temp_factor * carrier_factor;
    const double steady = c_in * (1.0 - eta);
    outlet = outlet < 0.0 ? steady : c.lag * outlet + (1.0 - c.lag) * steady;
    outlet = std::clamp(outlet, 0.0, c_in);
    const double reading = cleaning[t] ? garbage * c_in : std::clamp(outlet + out_noise, 0.0, c_in);

    const double p_bot = c.pressure_bottom_base + c.pressure_per_carrier * volume / c.carrier_initial + p_bot_noise -
                         (cleaning[t] ? c.cleaning_dip : 0.0);
    const double p_top = c.pressure_top_base + p_top_noise + (cleaning[t] ? c.cleaning_spike : 0.0);

    col[kTemp][t] = temp;
    col[kNin][t] = c_in;
    col[kO2][t] = o2;
    col[kPo4][t] = po4;
    col[kTurb][t] = turb;
    col[kNh4][t] = nh4;
    col[kMeoh][t] = dosed;
    col[kFlow][t] = flow;
    col[kPtop][t] = p_top;
    col[kPbot][t] = p_bot;
    col[kNout][t] = reading;
  }

  std::vector<Column> columns;
  for (std::size_t i = 0; i < default_schema().size(); ++i) {
    columns.push_back({default_schema()[i].name, default_schema()[i].unit, std::move(col[i])});
  }
  return {TimeSeriesFrame(parse_timestamp(c.start_time), std::move(columns)), schedule};
}

// ---------------------------------------------------------------------------
// JSON

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DosingParams, k1, k2, c_out_target)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CarrierRefill, day, volume)

inline void to_json(nlohmann::json& j, const FaultSpec& f) {
  j = {{"kind", to_string(f.kind)}, {"start", f.start}, {"duration", f.duration}, {"magnitude", f.magnitude}};
}

inline void from_json(const nlohmann::json& j, FaultSpec& f) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "methanol_dropout") {
    f.kind = FaultKind::kMethanolDropout;
  } else if (kind == "turbidity_spike") {
    f.kind = FaultKind::kTurbiditySpike;
  } else {
    fail(ErrorCode::kInvalidConfig, "unknown fault kind '" + kind + "'");
  }
  f.start = j.at("start").get<std::size_t>();
  f.duration = j.at("duration").get<std::size_t>();
  f.magnitude = j.value("magnitude", 0.0);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    SynthConfig, days, seed, start_time, dosing, temp_base, temp_amplitude, temp_period_days, temp_phase, temp_noise,
    flow_base, flow_diurnal, flow_noise, nitrate_in_base, nitrate_in_flow_coupling, nitrate_in_drift_sd,
    nitrate_in_drift_persistence, nitrate_in_noise, oxygen_base, oxygen_noise, ammonium_base, ammonium_noise,
    phosphate_base, phosphate_noise, turbidity_base, turbidity_noise, spike_rate, spike_decay, spike_scale,
    pressure_bottom_base, pressure_top_base, pressure_noise, cleaning_dip, cleaning_spike, pressure_per_carrier,
    carrier_initial, carrier_decay_per_day, refills, eta_max, stoich_k1, q10, t_ref, lag, nitrate_out_noise, faults,
    cleaning_period, cleaning_duration, cleaning_offset, cleaning_jitter)

inline nlohmann::json schedule_to_json(const FaultSchedule& s, const TimeSeriesFrame& frame) {
  nlohmann::json cleaning = nlohmann::json::array(), faults = nlohmann::json::array();
  for (const auto& r : s.cleaning) {
    cleaning.push_back({{"start", r.begin}, {"end", r.end}, {"start_time", format_timestamp(frame.timestamp_at(r.begin))}});
  }
  for (const auto& f : s.faults) {
    faults.push_back({{"kind", to_string(f.kind)},
                      {"start", f.interval.begin},
                      {"end", f.interval.end},
                      {"start_time", format_timestamp(frame.timestamp_at(f.interval.begin))}});
  }
  return {{"cleaning", cleaning}, {"faults", faults}};
}

}  // namespace denitlab

#endif  // DENITLAB_SYNTHPILOT_HPP_
