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

// denitlab command-line driver.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "denitlab/denitlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

int exit_code_for(denitlab::ErrorCode code) {
  using denitlab::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kBadParams:
    case ErrorCode::kInvalidHyperparameter:
    case ErrorCode::kInvalidFractions:
    case ErrorCode::kGuardrailExceeded:
    case ErrorCode::kSpecMismatch:
      return kExitConfig;
    case ErrorCode::kMissingColumn:
    case ErrorCode::kUnparsableTimestamp:
    case ErrorCode::kNonMonotonicTime:
    case ErrorCode::kOffGridTimestamp:
    case ErrorCode::kFrameTooShort:
    case ErrorCode::kZeroVarianceColumn:
    case ErrorCode::kEmptyRanges:
    case ErrorCode::kMaskTouchesBoundary:
    case ErrorCode::kNoAdmissibleWindows:
    case ErrorCode::kIo:
    case ErrorCode::kBadArtifact:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kEmptyTraining:
    case ErrorCode::kInsufficientHistory:
      return kExitData;
    default:
      return kExitTraining;
  }
}

struct Options {
  std::string config;
  std::string out = "out";
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset;
  std::string model;
};

struct Context {
  Options opt;
  denitlab::ExperimentConfig config;
  std::string started;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Thrown for problems with the config document itself.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

denitlab::ExperimentConfig load_config(const Options& opt) {
  json doc = json::object();
  if (!opt.config.empty()) {
    std::ifstream in(opt.config);
    if (!in) throw ConfigError("cannot open config '" + opt.config + "'");
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config '" + opt.config + "': " + e.what());
    }
  }
  denitlab::ExperimentConfig c;
  try {
    c = denitlab::parse_experiment(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.dataset && fs::path(*c.dataset).is_relative() && !opt.config.empty()) {
    c.dataset = (fs::path(opt.config).parent_path() / *c.dataset).lexically_normal().string();
  }
  if (opt.seed) {
    for (auto& m : c.models) m.seed = *opt.seed;
    c.search.seed = *opt.seed;
    c.seeds = {*opt.seed};
    if (c.synth) c.synth->seed = *opt.seed;
  }
  return c;
}

fs::path out_path(const Context& ctx, const std::string& name) { return fs::path(ctx.opt.out) / name; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  denitlab::require(static_cast<bool>(out), denitlab::ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  denitlab::require(static_cast<bool>(out), denitlab::ErrorCode::kIo, "write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

template <class Writer>
void write_stream(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_text(path, os.str());
}

void write_manifest(const Context& ctx, const std::string& command, const denitlab::PreparedData* data,
                    const std::vector<std::string>& outputs) {
  json m = {
      {"command", command},
      {"version", denitlab::kVersion},
      {"run_id", denitlab::run_id(ctx.config)},
      {"config", denitlab::to_json(ctx.config)},
      {"started", ctx.started},
      {"finished", utc_now()},
      {"jobs", ctx.opt.jobs},
      {"outputs", outputs},
  };
  if (data != nullptr) {
    m["data"] = {{"source", data->source},
                 {"rows", data->frame.length()},
                 {"first", denitlab::format_timestamp(data->frame.timestamp_at(0))},
                 {"last", denitlab::format_timestamp(data->frame.timestamp_at(data->frame.length() - 1))},
                 {"cleaning_intervals", data->mask.intervals.size()}};
  }
  write_json(out_path(ctx, "manifest.json"), m);
}

json mask_json(const denitlab::PreparedData& d) {
  json intervals = json::array();
  for (const auto& r : d.mask.intervals) {
    intervals.push_back({{"start", r.begin},
                         {"end", r.end},
                         {"start_time", denitlab::format_timestamp(d.frame.timestamp_at(r.begin))},
                         {"end_time", denitlab::format_timestamp(d.frame.timestamp_at(r.end - 1))}});
  }
  return {{"intervals", intervals}, {"masked_rows", d.mask.flagged()}};
}

const denitlab::ModelSpec& primary_model(const Context& ctx) { return ctx.config.models.front(); }

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const Context& ctx) {
  const denitlab::SynthConfig sc = ctx.config.synth.value_or(denitlab::SynthConfig{});
  const auto out = denitlab::generate(sc);
  denitlab::save_csv(out_path(ctx, "data.csv").string(), out.frame);
  write_json(out_path(ctx, "faults.json"), denitlab::schedule_to_json(out.schedule, out.frame));
  write_manifest(ctx, "synth", nullptr, {"data.csv", "faults.json"});
  std::cout << "synth: " << out.frame.length() << " rows, " << out.schedule.cleaning.size() << " cleaning events, "
            << out.schedule.faults.size() << " faults\n";
  return 0;
}

int cmd_train(const Context& ctx) {
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  const auto plan = denitlab::final_plan(ctx.config, data.frame);
  const auto result = denitlab::train_model(primary_model(ctx), data.frame, plan.train, plan.validation);
  denitlab::save_model(out_path(ctx, "model.bin").string(), result.model);
  json log = denitlab::to_json(result.log);
  log["train_windows"] = result.train_windows;
  log["val_windows"] = result.val_windows;
  write_json(out_path(ctx, "train_log.json"), log);
  write_json(out_path(ctx, "cleaning_mask.json"), mask_json(data));
  write_manifest(ctx, "train", &data, {"model.bin", "train_log.json", "cleaning_mask.json"});
  std::cout << "train: " << denitlab::to_string(result.model.spec.arch) << " on " << result.train_windows
            << " windows\n";
  return 0;
}

void print_reports(const std::vector<denitlab::EvalReport>& reports) {
  for (const auto& r : reports) {
    std::printf("%-16s %-10s mse=%.6g mae=%.6g n=%zu\n", r.model_id.c_str(), std::string(to_string(r.split)).c_str(),
                r.mse, r.mae, r.n_points);
  }
}

int cmd_evaluate(const Context& ctx) {
  const auto model = denitlab::load_model(ctx.opt.model);
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  const auto plan = denitlab::final_plan(ctx.config, data.frame);
  auto reports = denitlab::evaluate_splits(model, data.frame, plan);
  if (ctx.config.baselines) {
    const auto base = denitlab::baseline_reports(data.frame, plan, model.spec.task);
    reports.insert(reports.end(), base.begin(), base.end());
  }
  write_stream(out_path(ctx, "report.csv"), [&](std::ostream& os) { denitlab::write_report_csv(os, reports); });
  write_manifest(ctx, "evaluate", &data, {"report.csv"});
  print_reports(reports);
  return 0;
}

int cmd_hyperopt(const Context& ctx) {
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  const auto space = denitlab::search_space(ctx.config, primary_model(ctx));
  const auto folds = denitlab::make_cv_folds(data.frame, ctx.config.folds);
  const auto result =
      denitlab::search(space, data.frame, folds, ctx.config.search.budget, ctx.config.search.seed, ctx.opt.jobs);
  write_stream(out_path(ctx, "trials.csv"), [&](std::ostream& os) { denitlab::write_trials_csv(os, result.trials); });
  json best = denitlab::to_json(result.best);
  best["mean_val_mse"] = result.trials[result.best_index].mean_val_mse;
  best["trial"] = result.best_index;
  write_json(out_path(ctx, "best_spec.json"), best);
  const auto final_model = denitlab::finalize(result.best, data.frame, ctx.config.train_fraction, ctx.config.val_fraction);
  denitlab::save_model(out_path(ctx, "model.bin").string(), final_model.model);
  write_manifest(ctx, "hyperopt", &data, {"trials.csv", "best_spec.json", "model.bin"});
  std::cout << "hyperopt: best trial " << result.best_index << " mean val mse "
            << result.trials[result.best_index].mean_val_mse << "\n";
  return 0;
}

int cmd_ablate(const Context& ctx) {
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  const auto plan = denitlab::final_plan(ctx.config, data.frame);
  const auto& base = primary_model(ctx);
  const auto& covs = ctx.config.ablation.covariates.empty() ? base.covariates : ctx.config.ablation.covariates;
  const auto table =
      denitlab::covariate_sweep(base, covs, data.frame, plan, ctx.opt.jobs, ctx.config.ablation.seeds_per_subset);
  write_stream(out_path(ctx, "ablation.csv"), [&](std::ostream& os) { denitlab::write_ablation_csv(os, table); });
  std::vector<std::string> outputs = {"ablation.csv"};
  try {
    write_json(out_path(ctx, "importance.json"),
               denitlab::to_json(denitlab::importance(table, ctx.config.ablation.top_fraction)));
    outputs.push_back("importance.json");
  } catch (const denitlab::Error& e) {
    if (e.code() != denitlab::ErrorCode::kEmptyTable) throw;
    std::cerr << "ablate: " << e.what() << "\n";
  }
  if (!ctx.config.ablation.h_values.empty()) {
    const auto points = denitlab::history_sweep(base, ctx.config.ablation.h_values, data.frame, plan, ctx.opt.jobs);
    write_stream(out_path(ctx, "history.csv"), [&](std::ostream& os) { denitlab::write_history_csv(os, points); });
    outputs.push_back("history.csv");
  }
  write_manifest(ctx, "ablate", &data, outputs);
  std::cout << "ablate: " << table.rows.size() << " subsets of " << covs.size() << " covariates\n";
  return 0;
}

int cmd_anomaly(const Context& ctx) {
  const auto model = denitlab::load_model(ctx.opt.model);
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  const auto plan = denitlab::final_plan(ctx.config, data.frame);
  const auto run = denitlab::run_anomaly(model, data.frame, plan, ctx.config.anomaly);
  json doc = {{"split", "test"},
              {"task", denitlab::to_string(model.spec.task)},
              {"events", denitlab::anomaly_json(run, data.frame, model.spec.task)}};
  write_json(out_path(ctx, "anomalies.json"), doc);
  write_manifest(ctx, "anomaly", &data, {"anomalies.json"});
  std::cout << "anomaly: " << run.events.size() << " events\n";
  return 0;
}

int cmd_report(const Context& ctx) {
  const auto data = denitlab::prepare_data(ctx.config, ctx.opt.dataset);
  auto reports = denitlab::seed_reports(ctx.config, data.frame, ctx.opt.jobs);
  if (ctx.config.baselines) {
    const auto base = denitlab::baseline_reports(data.frame, denitlab::final_plan(ctx.config, data.frame), ctx.config.task);
    reports.insert(reports.end(), base.begin(), base.end());
  }
  write_stream(out_path(ctx, "report.csv"), [&](std::ostream& os) { denitlab::write_report_csv(os, reports); });
  write_json(out_path(ctx, "table1.json"), denitlab::table1_json(reports));
  write_manifest(ctx, "report", &data, {"report.csv", "table1.json"});
  print_reports(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"denitlab: soft sensors for denitrification filter monitoring"};
  app.set_version_flag("--version", denitlab::kVersion);
  app.require_subcommand(1);

  Options opt;
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  auto add_common = [&](CLI::App* sub, bool needs_model) {
    sub->add_option("--config,-c", opt.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out,-o", opt.out, "output directory")->capture_default_str();
    sub->add_option("--jobs,-j", opt.jobs, "worker threads (0: all cores)")->check(CLI::Range(std::size_t{0}, std::size_t{4096}));
    sub->add_option("--seed", opt.seed, "override every seed in the config");
    sub->add_option("--dataset", opt.dataset, "CSV path; overrides the config");
    if (needs_model) {
      sub->add_option("--model,-m", opt.model, "trained model artifact (default: OUT/model.bin)");
    }
  };
  struct Command {
    const char* name;
    const char* help;
    bool needs_model;
    int (*run)(const Context&);
  };
  const Command commands[] = {
      {"synth", "generate a synthetic pilot dataset", false, cmd_synth},
      {"train", "train one model on the final split", false, cmd_train},
      {"evaluate", "score a trained model and the baselines", true, cmd_evaluate},
      {"hyperopt", "random search over cross-validation folds", false, cmd_hyperopt},
      {"ablate", "covariate power-set and history sweeps", false, cmd_ablate},
      {"anomaly", "detect process anomalies on the test split", true, cmd_anomaly},
      {"report", "multi-seed evaluation and summary table", false, cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, c.needs_model);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  opt.jobs = opt.jobs == 0 ? hw : opt.jobs;
  if (opt.model.empty()) opt.model = (fs::path(opt.out) / "model.bin").string();

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      Context ctx{opt, load_config(opt), utc_now()};
      fs::create_directories(opt.out);
      return cmd->run(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "denitlab " << cmd->name << ": " << e.what() << "\n";
      return kExitConfig;
    } catch (const denitlab::Error& e) {
      std::cerr << "denitlab " << cmd->name << ": " << e.what() << "\n";
      return exit_code_for(e.code());
    } catch (const json::exception& e) {
      std::cerr << "denitlab " << cmd->name << ": " << e.what() << "\n";
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "denitlab " << cmd->name << ": " << e.what() << "\n";
      return kExitData;
    }
  }
  return kExitConfig;
}
