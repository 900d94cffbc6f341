#include "stair/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "stair/checkpoint.hpp"
#include "stair/metrics.hpp"

namespace stair {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string basename_no_ext(const std::string& path) {
  return fs::path(path).stem().string();
}

void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "dataset",          "protocol",        "lookback",        "horizons",
      "preset",           "backbone_layers", "backbone_hidden", "backbone_activation",
      "dropout_rate",     "norm_mode",       "norm_alpha",      "batch_size",
      "seed",             "stage1_lr",       "stage2_lr",       "stage3_lr",
      "stage1_epochs",    "stage2_epochs",   "stage3_epochs",   "patience",
      "weight_decay",     "clip_norm",       "anchor_coeff",    "adam_beta1",
      "adam_beta2",       "adam_eps",        "residual_hidden", "residual_rank",
      "residual_scale",   "out_dir",         "save_predictions",
      "synthetic_channels", "synthetic_length", "synthetic_order", "synthetic_rule",
      "synthetic_coupling", "synthetic_noise",  "synthetic_seed",  "synthetic_coeffs",
  };
  check_known_keys(j, known);
  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("dataset", c.dataset);
  get("protocol", c.protocol);
  get("lookback", c.lookback);
  get("horizons", c.horizons);
  get("preset", c.preset);
  get("backbone_layers", c.backbone_layers);
  get("backbone_hidden", c.backbone_hidden);
  get("backbone_activation", c.backbone_activation);
  get("dropout_rate", c.dropout_rate);
  get("norm_mode", c.norm_mode);
  get("norm_alpha", c.norm_alpha);
  get("batch_size", c.batch_size);
  get("seed", c.seed);
  get("stage1_lr", c.stage1_lr);
  get("stage2_lr", c.stage2_lr);
  get("stage3_lr", c.stage3_lr);
  get("stage1_epochs", c.stage1_epochs);
  get("stage2_epochs", c.stage2_epochs);
  get("stage3_epochs", c.stage3_epochs);
  get("patience", c.patience);
  get("weight_decay", c.weight_decay);
  get("clip_norm", c.clip_norm);
  get("anchor_coeff", c.anchor_coeff);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("residual_hidden", c.residual_hidden);
  get("residual_rank", c.residual_rank);
  get("residual_scale", c.residual_scale);
  get("out_dir", c.out_dir);
  get("save_predictions", c.save_predictions);
  get("synthetic_channels", c.synthetic_channels);
  get("synthetic_length", c.synthetic_length);
  get("synthetic_order", c.synthetic_order);
  get("synthetic_rule", c.synthetic_rule);
  get("synthetic_coupling", c.synthetic_coupling);
  get("synthetic_noise", c.synthetic_noise);
  get("synthetic_seed", c.synthetic_seed);
  get("synthetic_coeffs", c.synthetic_coeffs);
  if (c.dataset.empty() && c.synthetic_channels <= 0) {
    throw std::invalid_argument("config: either 'dataset' or 'synthetic_channels' is required");
  }
  if (c.horizons.empty()) throw std::invalid_argument("config: 'horizons' must be non-empty");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{
      {"dataset", dataset},
      {"protocol", protocol},
      {"lookback", lookback},
      {"horizons", horizons},
      {"preset", preset},
      {"backbone_layers", backbone_layers},
      {"backbone_hidden", backbone_hidden},
      {"backbone_activation", backbone_activation},
      {"dropout_rate", dropout_rate},
      {"norm_mode", norm_mode},
      {"norm_alpha", norm_alpha},
      {"batch_size", batch_size},
      {"seed", seed},
      {"stage1_lr", stage1_lr},
      {"stage2_lr", stage2_lr},
      {"stage3_lr", stage3_lr},
      {"stage1_epochs", stage1_epochs},
      {"stage2_epochs", stage2_epochs},
      {"stage3_epochs", stage3_epochs},
      {"patience", patience},
      {"weight_decay", weight_decay},
      {"clip_norm", clip_norm},
      {"anchor_coeff", anchor_coeff},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_eps", adam_eps},
      {"residual_hidden", residual_hidden},
      {"residual_rank", residual_rank},
      {"residual_scale", residual_scale},
      {"out_dir", out_dir},
      {"save_predictions", save_predictions},
  };
  if (synthetic_channels > 0) {
    j["synthetic_channels"] = synthetic_channels;
    j["synthetic_length"] = synthetic_length;
    j["synthetic_order"] = synthetic_order;
    j["synthetic_rule"] = synthetic_rule;
    j["synthetic_coupling"] = synthetic_coupling;
    j["synthetic_noise"] = synthetic_noise;
    j["synthetic_seed"] = synthetic_seed;
    if (!synthetic_coeffs.empty()) j["synthetic_coeffs"] = synthetic_coeffs;
  }
  return j;
}

std::string ExperimentConfig::dataset_name() const {
  if (is_synthetic()) return "synthetic";
  return lower(basename_no_ext(dataset));
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
  SyntheticSpec spec;
  spec.channels = static_cast<std::size_t>(synthetic_channels);
  spec.length = static_cast<std::size_t>(synthetic_length);
  spec.order = static_cast<std::size_t>(synthetic_order);
  spec.rule = synthetic_rule;
  spec.coupling = synthetic_coupling;
  spec.noise = synthetic_noise;
  spec.seed = synthetic_seed;
  spec.coeffs = synthetic_coeffs;
  return spec;
}

BackbonePreset resolve_preset(const std::string& preset, const std::string& dataset_name) {
  const std::string name = preset == "auto" ? dataset_name : lower(preset);
  if (name == "etth1" || name == "etth2" || name == "exchange" || name == "exchange_rate" ||
      name == "linear") {
    return {1, 512};
  }
  if (name == "ettm1" || name == "ettm2" || name == "weather" || name == "mlp") {
    return {2, 512};
  }
  if (name == "traffic" || name == "solar") return {4, 512};
  if (name == "electricity") return {4, 1024};
  if (preset != "auto") {
    throw std::invalid_argument("unknown preset '" + preset + "'");
  }
  return {1, 512};  // unknown datasets default to the linear mapping
}

SplitProtocol resolve_protocol(const std::string& protocol, const std::string& dataset_name) {
  if (protocol != "auto") return protocol_from_string(protocol);
  if (dataset_name == "etth1" || dataset_name == "etth2") return SplitProtocol::EttHourly;
  if (dataset_name == "ettm1" || dataset_name == "ettm2") return SplitProtocol::EttMinutely;
  return SplitProtocol::Ratio712;
}

ResolvedRun resolve_run(const ExperimentConfig& cfg, int horizon) {
  ResolvedRun run;
  BackbonePreset preset{cfg.backbone_layers, cfg.backbone_hidden};
  if (cfg.backbone_layers <= 0) preset = resolve_preset(cfg.preset, cfg.dataset_name());
  run.backbone.layers = preset.layers;
  run.backbone.hidden = preset.hidden;
  run.backbone.activation = activation_from_string(cfg.backbone_activation);
  run.backbone.dropout_rate = cfg.dropout_rate;
  run.backbone.input_len = cfg.lookback;
  run.backbone.horizon = horizon;
  run.backbone.validate();

  run.norm.mode = norm_mode_from_string(cfg.norm_mode);
  run.norm.alpha = cfg.norm_alpha;

  auto stage = [&](double lr, int epochs) {
    StageOptim opt;
    opt.optim.lr = lr;
    opt.optim.beta1 = cfg.adam_beta1;
    opt.optim.beta2 = cfg.adam_beta2;
    opt.optim.eps = cfg.adam_eps;
    opt.optim.weight_decay = cfg.weight_decay;
    opt.optim.clip_norm = cfg.clip_norm;
    opt.epochs = epochs;
    opt.patience = cfg.patience;
    opt.anchor = cfg.anchor_coeff;
    opt.optim.validate();
    return opt;
  };
  run.stage1 = stage(cfg.stage1_lr, cfg.stage1_epochs);
  run.stage2 = stage(cfg.stage2_lr, cfg.stage2_epochs);
  run.stage3 = stage(cfg.stage3_lr, cfg.stage3_epochs);
  return run;
}

std::string resolve_dataset_path(const std::string& path) {
  if (fs::exists(path)) return path;
  if (!fs::path(path).is_absolute()) {
    if (const char* base = std::getenv("STAIR_DATA_DIR")) {
      const fs::path joined = fs::path(base) / path;
      if (fs::exists(joined)) return joined.string();
    }
  }
  return path;  // let the loader report the missing file
}

const StageReport* ExperimentReport::stage_report(int horizon, int stage) const {
  for (const auto& h : horizons) {
    if (h.horizon != horizon || h.failed) continue;
    for (const auto& s : h.stages) {
      if (s.stage == stage) return &s;
    }
  }
  return nullptr;
}

namespace {

void write_predictions(const std::string& dir, int stage, const PredictionDump<float>& dump) {
  const std::string bin = dir + "/predictions_stage" + std::to_string(stage) + ".bin";
  std::ofstream out(bin, std::ios::binary);
  out.write(reinterpret_cast<const char*>(dump.preds.data()),
            static_cast<std::streamsize>(dump.preds.size() * sizeof(float)));
  if (!out) throw std::runtime_error("cannot write " + bin);
  nlohmann::json meta{{"windows", dump.windows},
                      {"horizon", dump.horizon},
                      {"channels", dump.channels},
                      {"dtype", "f32"},
                      {"layout", "window,horizon,channel"}};
  std::ofstream meta_out(dir + "/predictions_stage" + std::to_string(stage) + ".json");
  meta_out << meta.dump(2) << "\n";
}

void write_targets(const std::string& dir, const PredictionDump<float>& dump) {
  const std::string bin = dir + "/targets.bin";
  std::ofstream out(bin, std::ios::binary);
  out.write(reinterpret_cast<const char*>(dump.targets.data()),
            static_cast<std::streamsize>(dump.targets.size() * sizeof(float)));
  if (!out) throw std::runtime_error("cannot write " + bin);
}

nlohmann::json stage_report_json(const StageReport& r, bool include_timing) {
  nlohmann::json j{
      {"stage", r.stage},
      {"initial_val_mse", r.initial_val_mse},
      {"initial_val_mae", r.initial_val_mae},
      {"train_loss", r.train_loss},
      {"val_mse", r.val_mse},
      {"val_mae", r.val_mae},
      {"best_epoch", r.best_epoch},
      {"best_val_mse", r.best_val_mse},
      {"best_val_mae", r.best_val_mae},
      {"test_mse", r.test_mse},
      {"test_mae", r.test_mae},
  };
  if (include_timing) j["wall_time_s"] = r.wall_time_s;
  return j;
}

StageReport stage_report_from_json(const nlohmann::json& j) {
  StageReport r;
  r.stage = j.at("stage").get<int>();
  r.initial_val_mse = j.at("initial_val_mse").get<double>();
  r.initial_val_mae = j.at("initial_val_mae").get<double>();
  r.train_loss = j.at("train_loss").get<std::vector<double>>();
  r.val_mse = j.at("val_mse").get<std::vector<double>>();
  r.val_mae = j.at("val_mae").get<std::vector<double>>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_mse = j.at("best_val_mse").get<double>();
  r.best_val_mae = j.at("best_val_mae").get<double>();
  r.test_mse = j.at("test_mse").get<double>();
  r.test_mae = j.at("test_mae").get<double>();
  if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.dataset = cfg.dataset_name();
  report.seed = cfg.seed;
  report.config = cfg.to_json();
  report.config_hash = fnv1a(report.config.dump());

  const RawSeries series = cfg.is_synthetic()
                               ? gen_synthetic(cfg.synthetic_spec())
                               : load_csv(resolve_dataset_path(cfg.dataset));
  const SplitProtocol protocol = resolve_protocol(cfg.protocol, report.dataset);

  for (int horizon : cfg.horizons) {
    HorizonEntry entry;
    entry.horizon = horizon;
    try {
      const ResolvedRun run = resolve_run(cfg, horizon);
      const std::uint64_t seed_h = mix_seed(cfg.seed, static_cast<std::uint64_t>(horizon));
      auto data = prepare_stage_data<float>(series, protocol,
                                            static_cast<std::size_t>(cfg.lookback),
                                            static_cast<std::size_t>(horizon));
      StagedTrainer<float> trainer(&data, run.norm, static_cast<std::size_t>(cfg.batch_size),
                                   seed_h);

      std::cerr << "[" << report.dataset << "/" << horizon << "] stage 1 ("
                << run.backbone.layers << "-layer)...\n";
      auto s1 = trainer.run_stage1(run.backbone, run.stage1);
      std::cerr << "  stage 1: best epoch " << s1.report.best_epoch << ", val mse "
                << s1.report.best_val_mse << ", test mse " << s1.report.test_mse << "\n";

      auto s2 = trainer.run_stage2(s1.bank, run.stage2);
      std::cerr << "  stage 2: best epoch " << s2.report.best_epoch << ", val mse "
                << s2.report.best_val_mse << ", test mse " << s2.report.test_mse << "\n";

      entry.stages = {s1.report, s2.report};
      std::optional<typename StagedTrainer<float>::Stage3Result> s3;
      if (data.train.channels() >= 2) {
        s3 = trainer.run_stage3(s2.bank, run.stage3,
                                static_cast<std::size_t>(cfg.residual_hidden),
                                static_cast<std::size_t>(cfg.residual_rank),
                                static_cast<float>(cfg.residual_scale));
        std::cerr << "  stage 3: best epoch " << s3->report.best_epoch << ", val mse "
                  << s3->report.best_val_mse << ", test mse " << s3->report.test_mse << "\n";
        entry.stages.push_back(s3->report);
      }
      entry.selected_stage = select_stage(entry.stages);

      if (!cfg.out_dir.empty()) {
        const fs::path dir = fs::path(cfg.out_dir) / report.dataset / std::to_string(horizon);
        fs::create_directories(dir);
        save_checkpoint((dir / "stage1.ckpt").string(), s1.bank);
        save_checkpoint((dir / "stage2.ckpt").string(), s2.bank);
        if (s3) save_checkpoint((dir / "stage3.ckpt").string(), s2.bank, &s3->residual);

        nlohmann::json manifest{
            {"dataset", report.dataset},
            {"dataset_path", cfg.is_synthetic() ? "" : cfg.dataset},
            {"horizon", horizon},
            {"seed", cfg.seed},
            {"derived_seed", seed_h},
            {"config_hash", report.config_hash},
            {"config", report.config},
            {"selected_stage", entry.selected_stage},
        };
        nlohmann::json stages = nlohmann::json::array();
        for (const auto& sr : entry.stages) {
          stages.push_back({{"stage", sr.stage},
                            {"best_epoch", sr.best_epoch},
                            {"best_val_mse", sr.best_val_mse},
                            {"best_val_mae", sr.best_val_mae},
                            {"test_mse", sr.test_mse},
                            {"test_mae", sr.test_mae},
                            {"checkpoint", "stage" + std::to_string(sr.stage) + ".ckpt"}});
        }
        manifest["stages"] = stages;
        std::ofstream mf(dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
        if (!mf) throw std::runtime_error("cannot write manifest in " + dir.string());

        ExperimentReport horizon_report;
        horizon_report.dataset = report.dataset;
        horizon_report.seed = report.seed;
        horizon_report.config_hash = report.config_hash;
        horizon_report.config = report.config;
        horizon_report.horizons.push_back(entry);
        for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table}) {
          emit_report(horizon_report, f, dir.string());
        }

        if (cfg.save_predictions) {
          auto d1 = trainer.predict(s1.bank, nullptr, data.test);
          write_predictions(dir.string(), 1, d1);
          write_targets(dir.string(), d1);
          auto d2 = trainer.predict(s2.bank, nullptr, data.test);
          write_predictions(dir.string(), 2, d2);
          if (s3) {
            auto d3 = trainer.predict(s2.bank, &s3->residual, data.test);
            write_predictions(dir.string(), 3, d3);
          }
        }
      }
    } catch (const std::exception& e) {
      entry.failed = true;
      entry.error = e.what();
      entry.stages.clear();
      std::cerr << "[" << report.dataset << "/" << horizon << "] FAILED: " << e.what() << "\n";
    }
    report.horizons.push_back(std::move(entry));
  }
  return report;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "table" || s == "text-table" || s == "txt") return ReportFormat::Table;
  throw std::invalid_argument("unknown report format '" + s + "' (expected json|csv|table)");
}

nlohmann::json report_to_json(const ExperimentReport& report, bool include_timing) {
  nlohmann::json j{
      {"dataset", report.dataset},
      {"seed", report.seed},
      {"config_hash", report.config_hash},
      {"config", report.config},
  };
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& entry : report.horizons) {
    nlohmann::json hj{{"horizon", entry.horizon},
                      {"failed", entry.failed},
                      {"selected_stage", entry.selected_stage}};
    if (entry.failed) hj["error"] = entry.error;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& sr : entry.stages) stages.push_back(stage_report_json(sr, include_timing));
    hj["stages"] = stages;
    horizons.push_back(hj);
  }
  j["horizons"] = horizons;
  if (auto avg = horizon_averages(report)) {
    nlohmann::json aj = nlohmann::json::array();
    for (std::size_t s = 0; s < avg->size(); ++s) {
      aj.push_back({{"stage", s + 1}, {"test_mse", (*avg)[s].test_mse},
                    {"test_mae", (*avg)[s].test_mae}});
    }
    j["averages"] = aj;
  }
  return j;
}

ExperimentReport parse_report(const nlohmann::json& j) {
  ExperimentReport report;
  report.dataset = j.at("dataset").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.config_hash = j.at("config_hash").get<std::uint64_t>();
  report.config = j.at("config");
  for (const auto& hj : j.at("horizons")) {
    HorizonEntry entry;
    entry.horizon = hj.at("horizon").get<int>();
    entry.failed = hj.at("failed").get<bool>();
    entry.selected_stage = hj.at("selected_stage").get<int>();
    if (hj.contains("error")) entry.error = hj.at("error").get<std::string>();
    for (const auto& sj : hj.at("stages")) entry.stages.push_back(stage_report_from_json(sj));
    report.horizons.push_back(std::move(entry));
  }
  return report;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out = "dataset,horizon,stage,mse,mae,val_mse,val_mae,best_epoch\n";
  char buf[256];
  for (const auto& entry : report.horizons) {
    if (entry.failed) continue;
    for (const auto& sr : entry.stages) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%d\n",
                    report.dataset.c_str(), entry.horizon, sr.stage, sr.test_mse, sr.test_mae,
                    sr.best_val_mse, sr.best_val_mae, sr.best_epoch);
      out += buf;
    }
  }
  return out;
}

std::string report_to_table(const ExperimentReport& report) {
  // Stage-ablation layout: one row per horizon, per-stage MSE/MAE columns,
  // a marker on metrics strictly lower than the previous stage's.
  std::string out;
  char buf[512];
  std::size_t max_stages = 0;
  for (const auto& e : report.horizons) max_stages = std::max(max_stages, e.stages.size());
  if (max_stages == 0) max_stages = 3;

  std::snprintf(buf, sizeof(buf), "%-12s %8s", "dataset", "horizon");
  out += buf;
  for (std::size_t s = 1; s <= max_stages; ++s) {
    std::snprintf(buf, sizeof(buf), " | stage %zu %-8s %-8s", s, "mse", "mae");
    out += buf;
  }
  out += " | selected\n";
  out += std::string(out.size() - 1, '-') + "\n";

  auto cell = [&](double value, double prev, bool has_prev) {
    char c[32];
    std::snprintf(c, sizeof(c), "%.4f%s", value, has_prev && value < prev ? "v" : " ");
    return std::string(c);
  };

  for (const auto& entry : report.horizons) {
    std::snprintf(buf, sizeof(buf), "%-12s %8d", report.dataset.c_str(), entry.horizon);
    out += buf;
    if (entry.failed) {
      out += " | FAILED: " + entry.error + "\n";
      continue;
    }
    for (std::size_t s = 0; s < entry.stages.size(); ++s) {
      const auto& sr = entry.stages[s];
      const bool has_prev = s > 0;
      const double prev_mse = has_prev ? entry.stages[s - 1].test_mse : 0.0;
      const double prev_mae = has_prev ? entry.stages[s - 1].test_mae : 0.0;
      std::snprintf(buf, sizeof(buf), " | %-16s %-8s",
                    cell(sr.test_mse, prev_mse, has_prev).c_str(),
                    cell(sr.test_mae, prev_mae, has_prev).c_str());
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " | stage %d\n", entry.selected_stage);
    out += buf;
  }

  if (auto avg = horizon_averages(report)) {
    std::snprintf(buf, sizeof(buf), "%-12s %8s", report.dataset.c_str(), "avg");
    out += buf;
    for (std::size_t s = 0; s < avg->size(); ++s) {
      const bool has_prev = s > 0;
      const double prev_mse = has_prev ? (*avg)[s - 1].test_mse : 0.0;
      const double prev_mae = has_prev ? (*avg)[s - 1].test_mae : 0.0;
      std::snprintf(buf, sizeof(buf), " | %-16s %-8s",
                    cell((*avg)[s].test_mse, prev_mse, has_prev).c_str(),
                    cell((*avg)[s].test_mae, prev_mae, has_prev).c_str());
      out += buf;
    }
    out += " |\n";
  }
  return out;
}

std::vector<std::string> emit_report(const ExperimentReport& report, ReportFormat format,
                                     const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("emit_report: cannot create output directory " + dir);
  }
  std::vector<std::string> written;
  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path);
    out << content;
    if (!out) throw std::runtime_error("emit_report: cannot write " + path);
    written.push_back(path);
  };
  switch (format) {
    case ReportFormat::Json:
      write_file("report.json", report_to_json(report).dump(2) + "\n");
      break;
    case ReportFormat::Csv:
      write_file("report.csv", report_to_csv(report));
      break;
    case ReportFormat::Table:
      write_file("report.txt", report_to_table(report));
      break;
  }
  return written;
}

std::optional<std::vector<StageAverage>> horizon_averages(const ExperimentReport& report) {
  static const std::vector<int> standard = {96, 192, 336, 720};
  std::vector<const HorizonEntry*> found;
  for (int h : standard) {
    const HorizonEntry* match = nullptr;
    for (const auto& entry : report.horizons) {
      if (entry.horizon == h && !entry.failed) match = &entry;
    }
    if (!match) return std::nullopt;
    found.push_back(match);
  }
  // only average when every entry reports the same stage count
  const std::size_t n_stages = found[0]->stages.size();
  for (const auto* e : found) {
    if (e->stages.size() != n_stages) return std::nullopt;
  }
  std::vector<StageAverage> avg(n_stages);
  for (const auto* e : found) {
    for (std::size_t s = 0; s < n_stages; ++s) {
      avg[s].test_mse += e->stages[s].test_mse / 4.0;
      avg[s].test_mae += e->stages[s].test_mae / 4.0;
    }
  }
  return avg;
}

}  // namespace stair
