// stair: stagewise training for long-term time series forecasting.
//
// Subcommands: train, eval, ablate-stages, ablate-norm, capacity, synth,
// gradcheck, report. See --help on each.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stair/checkpoint.hpp"
#include "stair/experiment.hpp"
#include "stair/gradcheck.hpp"
#include "stair/kernels.hpp"

namespace fs = std::filesystem;
using namespace stair;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string dataset;
  std::vector<int> horizons;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::string norm;  // none | alpha | revin
  std::optional<double> alpha;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config file (JSON)");
  cmd->add_option("--dataset", o.dataset, "dataset CSV path (overrides config)");
  cmd->add_option("--horizon", o.horizons, "prediction length(s) (overrides config)");
  cmd->add_option("--seed", o.seed, "random seed (overrides config)");
  cmd->add_option("--out", o.out, "output directory (overrides config)");
  cmd->add_option("--format", o.format, "report format: json|csv|table (default: all)");
  cmd->add_option("--norm", o.norm, "normalization: none|alpha|revin (overrides config)");
  cmd->add_option("--alpha", o.alpha, "normalization strength in [0,1] (with --norm alpha)");
  cmd->add_option("--preset", o.preset, "backbone preset name (overrides config)");
}

ExperimentConfig build_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    cfg = ExperimentConfig::from_file(o.config_path);
  } else if (o.dataset.empty()) {
    throw std::runtime_error("either --config or --dataset is required");
  }
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.horizons.empty()) cfg.horizons = o.horizons;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.preset.empty()) {
    cfg.preset = o.preset;
    cfg.backbone_layers = 0;
  }
  if (!o.norm.empty()) {
    if (o.norm == "none") {
      cfg.norm_mode = "none";
    } else if (o.norm == "alpha") {
      cfg.norm_mode = "full";
      cfg.norm_alpha = o.alpha.value_or(cfg.norm_alpha);
    } else if (o.norm == "revin") {
      cfg.norm_mode = "full";
      cfg.norm_alpha = 1.0;
    } else {
      throw std::runtime_error("--norm must be none|alpha|revin");
    }
  } else if (o.alpha) {
    cfg.norm_alpha = *o.alpha;
  }
  return cfg;
}

void emit_all_formats(const ExperimentReport& report, const std::string& format,
                      const std::string& dir) {
  if (dir.empty()) return;
  if (format.empty()) {
    for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table}) {
      for (const auto& p : emit_report(report, f, dir)) std::cerr << "wrote " << p << "\n";
    }
  } else {
    for (const auto& p : emit_report(report, report_format_from_string(format), dir)) {
      std::cerr << "wrote " << p << "\n";
    }
  }
}

int cmd_train(const CommonOpts& o, bool print_table) {
  ExperimentConfig cfg = build_config(o);
  const ExperimentReport report = run_experiment(cfg);
  const std::string report_dir =
      cfg.out_dir.empty() ? "" : (fs::path(cfg.out_dir) / report.dataset).string();
  emit_all_formats(report, o.format, report_dir);
  if (print_table) std::cout << report_to_table(report);
  for (const auto& h : report.horizons) {
    if (h.failed) return 1;
  }
  return 0;
}

struct SweepColumn {
  std::string label;
  ExperimentReport report;
};

// Prints a horizon x setting matrix of the selected stage's test metrics and
// optionally writes <stem>.txt/.csv under out_dir.
int print_sweep(const std::vector<SweepColumn>& cols, const std::string& out_dir,
                const std::string& stem) {
  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s", "horizon");
  table += buf;
  for (const auto& c : cols) {
    std::snprintf(buf, sizeof(buf), " | %-10s %-10s", (c.label + " mse").c_str(), "mae");
    table += buf;
  }
  table += "\n";
  std::string csv = "label,horizon,stage,mse,mae\n";

  const auto& horizons = cols.front().report.horizons;
  bool any_failed = false;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    std::snprintf(buf, sizeof(buf), "%-10d", horizons[hi].horizon);
    table += buf;
    for (const auto& c : cols) {
      const auto& entry = c.report.horizons[hi];
      if (entry.failed) {
        any_failed = true;
        std::snprintf(buf, sizeof(buf), " | %-21s", "FAILED");
        table += buf;
        continue;
      }
      const StageReport* sel = c.report.stage_report(entry.horizon, entry.selected_stage);
      std::snprintf(buf, sizeof(buf), " | %-10.4f %-10.4f", sel->test_mse, sel->test_mae);
      table += buf;
      std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f,%.6f\n", c.label.c_str(), entry.horizon,
                    entry.selected_stage, sel->test_mse, sel->test_mae);
      csv += buf;
    }
    table += "\n";
  }
  std::cout << table;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream t(fs::path(out_dir) / (stem + ".txt"));
    t << table;
    std::ofstream c(fs::path(out_dir) / (stem + ".csv"));
    c << csv;
    std::cerr << "wrote " << (fs::path(out_dir) / (stem + ".txt")).string() << ", "
              << (fs::path(out_dir) / (stem + ".csv")).string() << "\n";
  }
  return any_failed ? 1 : 0;
}

int cmd_ablate_norm(const CommonOpts& o) {
  ExperimentConfig base = build_config(o);
  base.out_dir.clear();  // sweep runs stay in memory
  struct Setting {
    const char* label;
    const char* mode;
    double alpha;
  };
  const Setting settings[] = {
      {"none", "none", 0.0},
      {"a0.95", "full", 0.95},
      {"a0.99", "full", 0.99},
      {"revin", "full", 1.0},
  };
  std::vector<SweepColumn> cols;
  for (const auto& s : settings) {
    ExperimentConfig cfg = base;
    cfg.norm_mode = s.mode;
    cfg.norm_alpha = s.alpha;
    std::cerr << "== normalization " << s.label << "\n";
    cols.push_back({s.label, run_experiment(cfg)});
  }
  return print_sweep(cols, o.out, "ablate_norm");
}

int cmd_capacity(const CommonOpts& o, bool grid) {
  ExperimentConfig base = build_config(o);
  base.out_dir.clear();

  if (grid) {
    // Deterministic capacity grid scored by stage-1 validation MSE with
    // 20-epoch candidate runs on the first configured horizon.
    const int horizon = base.horizons.front();
    const RawSeries series = base.is_synthetic() ? gen_synthetic(base.synthetic_spec())
                                                 : load_csv(resolve_dataset_path(base.dataset));
    const SplitProtocol protocol = resolve_protocol(base.protocol, base.dataset_name());
    auto data = prepare_stage_data<float>(series, protocol,
                                          static_cast<std::size_t>(base.lookback),
                                          static_cast<std::size_t>(horizon));
    const std::uint64_t seed_h = mix_seed(base.seed, static_cast<std::uint64_t>(horizon));
    double best_val = std::numeric_limits<double>::infinity();
    int best_layers = 1, best_hidden = 0;
    std::printf("%-8s %-8s %-12s\n", "layers", "hidden", "val_mse");
    for (int layers : {1, 2, 3, 4}) {
      for (int hidden : {64, 128, 256, 512, 1024}) {
        if (layers == 1 && hidden != 64) continue;  // hidden unused for linear
        ExperimentConfig cfg = base;
        cfg.backbone_layers = layers;
        cfg.backbone_hidden = hidden;
        const ResolvedRun run = resolve_run(cfg, horizon);
        StagedTrainer<float> trainer(&data, run.norm,
                                     static_cast<std::size_t>(cfg.batch_size), seed_h);
        auto s1 = trainer.run_stage1(run.backbone, run.stage1);
        std::printf("%-8d %-8d %-12.6f\n", layers, layers == 1 ? 0 : hidden,
                    s1.report.best_val_mse);
        if (s1.report.best_val_mse < best_val) {
          best_val = s1.report.best_val_mse;
          best_layers = layers;
          best_hidden = hidden;
        }
      }
    }
    std::printf("selected: layers=%d hidden=%d (val_mse %.6f)\n", best_layers,
                best_layers == 1 ? 0 : best_hidden, best_val);
    return 0;
  }

  ExperimentConfig linear_cfg = base;
  linear_cfg.preset = "linear";
  linear_cfg.backbone_layers = 0;
  ExperimentConfig mlp_cfg = base;
  mlp_cfg.backbone_layers = 0;
  const BackbonePreset auto_preset = resolve_preset("auto", base.dataset_name());
  mlp_cfg.preset = auto_preset.layers > 1 ? "auto" : "mlp";

  std::vector<SweepColumn> cols;
  std::cerr << "== linear preset\n";
  cols.push_back({"linear", run_experiment(linear_cfg)});
  std::cerr << "== mlp preset\n";
  cols.push_back({"mlp", run_experiment(mlp_cfg)});
  return print_sweep(cols, o.out, "capacity");
}

int cmd_eval(const std::string& run_dir) {
  const fs::path dir(run_dir);
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("eval: no manifest.json in " + run_dir);
  nlohmann::json manifest;
  mf >> manifest;

  ExperimentConfig cfg = ExperimentConfig::from_json(manifest.at("config"));
  const int horizon = manifest.at("horizon").get<int>();
  const RawSeries series = cfg.is_synthetic() ? gen_synthetic(cfg.synthetic_spec())
                                              : load_csv(resolve_dataset_path(cfg.dataset));
  const SplitProtocol protocol = resolve_protocol(cfg.protocol, cfg.dataset_name());
  auto data = prepare_stage_data<float>(series, protocol,
                                        static_cast<std::size_t>(cfg.lookback),
                                        static_cast<std::size_t>(horizon));
  const ResolvedRun run = resolve_run(cfg, horizon);
  StagedTrainer<float> trainer(&data, run.norm, static_cast<std::size_t>(cfg.batch_size),
                               manifest.at("derived_seed").get<std::uint64_t>());

  std::printf("%-8s %-12s %-12s %-12s %-6s\n", "stage", "test_mse", "test_mae", "manifest_mse",
              "match");
  bool all_match = true;
  for (const auto& sj : manifest.at("stages")) {
    const int stage = sj.at("stage").get<int>();
    const std::string ckpt = (dir / sj.at("checkpoint").get<std::string>()).string();
    auto loaded = load_checkpoint<float>(ckpt);
    const Metrics m = loaded.residual
                          ? trainer.evaluate_composite(loaded.bank, *loaded.residual, data.test)
                          : trainer.evaluate_bank(loaded.bank, data.test);
    const double recorded = sj.at("test_mse").get<double>();
    const bool ok = std::fabs(m.mse - recorded) <= 1e-6 * std::max(1.0, std::fabs(recorded));
    all_match = all_match && ok;
    std::printf("%-8d %-12.6f %-12.6f %-12.6f %s\n", stage, m.mse, m.mae, recorded,
                ok ? "yes" : "NO");
  }
  std::printf("selected stage: %d\n", manifest.at("selected_stage").get<int>());
  if (!all_match) {
    std::cerr << "warning: re-evaluated metrics differ from the manifest "
                 "(different machine or modified checkpoints?)\n";
  }
  return 0;
}

int cmd_synth(const std::string& out_path, const SyntheticSpec& spec) {
  auto series = gen_synthetic(spec);
  write_csv(series, out_path);
  std::cerr << "wrote " << out_path << " (" << series.rows << " rows, " << series.cols
            << " channels)\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  bool ok = true;
  std::printf("%-24s %-10s %-14s\n", "configuration", "params", "max_rel_err");
  for (const auto& res : run_gradcheck_suite(seed)) {
    std::printf("%-24s %-10zu %-14.3e\n", res.name.c_str(), res.params, res.max_rel_err);
    ok = ok && res.max_rel_err < 1e-4;
  }
  if (!ok) {
    std::cerr << "gradcheck FAILED: a configuration exceeded 1e-4\n";
    return 1;
  }
  std::printf("gradcheck passed (all configurations < 1e-4)\n");
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format) {
  const fs::path json_path = fs::path(run_dir) / "report.json";
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("report: cannot open " + json_path.string());
  nlohmann::json j;
  in >> j;
  const ExperimentReport report = parse_report(j);
  if (format.empty() || format == "table") {
    std::cout << report_to_table(report);
  } else if (format == "csv") {
    std::cout << report_to_csv(report);
  } else if (format == "json") {
    std::cout << report_to_json(report).dump(2) << "\n";
  } else {
    throw std::runtime_error("report: unknown format '" + format + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stagewise training for long-term time series forecasting"};
  app.require_subcommand(1);

  CommonOpts train_opts, ablate_opts, norm_opts, cap_opts;
  bool cap_grid = false;

  auto* train = app.add_subcommand("train", "run the full three-stage training");
  add_common(train, train_opts);

  auto* ablate = app.add_subcommand("ablate-stages", "per-stage results across horizons");
  add_common(ablate, ablate_opts);

  auto* ablate_norm =
      app.add_subcommand("ablate-norm", "sweep normalization: none, a=0.95, a=0.99, revin");
  add_common(ablate_norm, norm_opts);

  auto* capacity = app.add_subcommand("capacity", "linear vs MLP preset comparison");
  add_common(capacity, cap_opts);
  capacity->add_flag("--grid", cap_grid,
                     "run the deterministic layers x hidden grid scored by stage-1 val MSE");

  std::string eval_run;
  auto* eval = app.add_subcommand("eval", "re-evaluate saved checkpoints of one run");
  eval->add_option("--run", eval_run, "run directory (<out>/<dataset>/<horizon>)")->required();

  std::string synth_out = "synthetic.csv";
  SyntheticSpec synth_spec;
  std::string synth_rule = "shared";
  auto* synth = app.add_subcommand("synth", "generate and save a synthetic series");
  synth->add_option("--out", synth_out, "output CSV path");
  synth->add_option("--channels", synth_spec.channels, "number of channels");
  synth->add_option("--length", synth_spec.length, "series length");
  synth->add_option("--order", synth_spec.order, "autoregression order");
  synth->add_option("--rule", synth_rule, "shared|individual");
  synth->add_option("--coupling", synth_spec.coupling, "cross-channel coupling strength");
  synth->add_option("--noise", synth_spec.noise, "noise standard deviation");
  synth->add_option("--seed", synth_spec.seed, "generator seed");

  std::uint64_t gradcheck_seed = 2026;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", gradcheck_seed, "seed for the random shapes");

  std::string report_run, report_format;
  auto* report = app.add_subcommand("report", "re-emit report files from a run manifest");
  report->add_option("--run", report_run, "directory containing report.json")->required();
  report->add_option("--format", report_format, "json|csv|table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_opts, true);
    if (*ablate) return cmd_train(ablate_opts, true);
    if (*ablate_norm) return cmd_ablate_norm(norm_opts);
    if (*capacity) return cmd_capacity(cap_opts, cap_grid);
    if (*eval) return cmd_eval(eval_run);
    if (*synth) {
      synth_spec.rule = synth_rule;
      return cmd_synth(synth_out, synth_spec);
    }
    if (*gradcheck) return cmd_gradcheck(gradcheck_seed);
    if (*report) return cmd_report(report_run, report_format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
