#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stair/backbone.hpp"
#include "stair/dataio.hpp"
#include "stair/norm.hpp"
#include "stair/trainer.hpp"

// Experiment runner: resolves a flat JSON config (defaults from the shipped
// hyperparameter table), trains the three stages per horizon, selects the
// best validated stage, and emits reports. Horizon runs are independent:
// each derives its own seed as mix_seed(seed, horizon), so adding or removing
// horizons never changes the results of the others.

namespace stair {

struct ExperimentConfig {
  std::string dataset;  // CSV path; empty when synthetic_channels > 0
  std::string protocol = "auto";
  int lookback = 96;
  std::vector<int> horizons = {96, 192, 336, 720};
  std::string preset = "auto";
  int backbone_layers = 0;  // 0 = resolve from preset
  int backbone_hidden = 512;
  std::string backbone_activation = "relu";
  double dropout_rate = 0.1;
  std::string norm_mode = "full";
  double norm_alpha = 0.99;
  int batch_size = 64;
  std::uint64_t seed = 2026;
  double stage1_lr = 1e-3;
  double stage2_lr = 1e-5;
  double stage3_lr = 1e-5;
  int stage1_epochs = 20;
  int stage2_epochs = 20;
  int stage3_epochs = 20;
  int patience = 10;
  double weight_decay = 1e-5;
  double clip_norm = 1.0;
  double anchor_coeff = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int residual_hidden = 32;
  int residual_rank = 32;
  double residual_scale = 1.0;
  std::string out_dir;  // empty = keep everything in memory
  bool save_predictions = false;

  // synthetic data source (used when synthetic_channels > 0)
  int synthetic_channels = 0;
  int synthetic_length = 4000;
  int synthetic_order = 4;
  std::string synthetic_rule = "shared";
  double synthetic_coupling = 0.0;
  double synthetic_noise = 0.1;
  std::uint64_t synthetic_seed = 2026;
  std::vector<std::vector<double>> synthetic_coeffs;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;

  // Short name used for the output layout and preset lookup.
  std::string dataset_name() const;
  SyntheticSpec synthetic_spec() const;
  bool is_synthetic() const { return synthetic_channels > 0; }
};

// Capacity presets: dataset name -> (layers, hidden). "linear" and "mlp" are
// generic presets; "auto" resolves from the dataset name, defaulting to
// linear for unknown data.
struct BackbonePreset {
  int layers = 1;
  int hidden = 512;
};
BackbonePreset resolve_preset(const std::string& preset, const std::string& dataset_name);
SplitProtocol resolve_protocol(const std::string& protocol, const std::string& dataset_name);

// Fully resolved model/optimizer settings for one horizon.
struct ResolvedRun {
  BackboneConfig backbone;
  NormSpec norm;
  StageOptim stage1;
  StageOptim stage2;
  StageOptim stage3;
};
ResolvedRun resolve_run(const ExperimentConfig& cfg, int horizon);

struct HorizonEntry {
  int horizon = 0;
  bool failed = false;
  std::string error;
  std::vector<StageReport> stages;  // stage 1..N in order
  int selected_stage = 0;
};

struct ExperimentReport {
  std::string dataset;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  nlohmann::json config;
  std::vector<HorizonEntry> horizons;

  const StageReport* stage_report(int horizon, int stage) const;
};

// Runs every configured horizon (stage 1 -> 2 -> 3, validation-selected
// checkpoints, test metrics). A failure in one horizon is recorded and the
// remaining horizons proceed. When out_dir is set, checkpoints and manifests
// are written under <out>/<dataset>/<horizon>/.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { Json, Csv, Table };
ReportFormat report_format_from_string(const std::string& s);

// report.json is lossless (parse_report inverts it); csv has one row per
// (dataset, horizon, stage); the table mirrors the stage-ablation layout with
// improvement markers against the previous stage.
nlohmann::json report_to_json(const ExperimentReport& report, bool include_timing = false);
ExperimentReport parse_report(const nlohmann::json& j);
std::string report_to_csv(const ExperimentReport& report);
std::string report_to_table(const ExperimentReport& report);

// Writes report.json / report.csv / report.txt into dir (created if needed).
// Returns the paths written.
std::vector<std::string> emit_report(const ExperimentReport& report, ReportFormat format,
                                     const std::string& dir);

// Averages over exactly the four standard horizons; absent when any of them
// is missing or failed.
struct StageAverage {
  double test_mse = 0.0;
  double test_mae = 0.0;
};
std::optional<std::vector<StageAverage>> horizon_averages(const ExperimentReport& report);

// Resolves a dataset path against STAIR_DATA_DIR when the plain path does
// not exist.
std::string resolve_dataset_path(const std::string& path);

}  // namespace stair
