#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stair/experiment.hpp"
#include "stair/metrics.hpp"
#include "test_util.hpp"

using namespace stair;
namespace fs = std::filesystem;

namespace {

// Small synthetic experiment that trains in well under a second.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.synthetic_channels = 3;
  cfg.synthetic_length = 600;
  cfg.synthetic_rule = "individual";
  cfg.synthetic_noise = 0.1;
  cfg.synthetic_seed = 5;
  cfg.lookback = 12;
  cfg.horizons = {4};
  cfg.preset = "linear";
  cfg.norm_mode = "none";
  cfg.stage1_lr = 3e-3;
  cfg.stage2_lr = 1e-3;
  cfg.stage3_lr = 1e-3;
  cfg.stage1_epochs = 4;
  cfg.stage2_epochs = 3;
  cfg.stage3_epochs = 2;
  cfg.batch_size = 32;
  cfg.seed = 2026;
  cfg.residual_hidden = 8;
  cfg.residual_rank = 2;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("compute_metrics: exact and constant-error cases") {
  std::vector<double> t(12, 1.0);
  auto m0 = compute_metrics(t, t, 2, 3, 2);
  CHECK(m0.mse == 0.0);
  CHECK(m0.mae == 0.0);

  std::vector<double> p(12, 1.5);
  auto m1 = compute_metrics(p, t, 2, 3, 2);
  CHECK(m1.mse == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(m1.mae == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("compute_metrics matches an elementwise oracle") {
  auto p = testutil::random_vec<double>(2 * 3 * 2, 1);
  auto t = testutil::random_vec<double>(2 * 3 * 2, 2);
  auto m = compute_metrics(p, t, 2, 3, 2);
  double sq = 0, ab = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sq += (p[i] - t[i]) * (p[i] - t[i]);
    ab += std::fabs(p[i] - t[i]);
  }
  CHECK(std::fabs(m.mse - sq / 12.0) < 1e-12);
  CHECK(std::fabs(m.mae - ab / 12.0) < 1e-12);
}

TEST_CASE("compute_metrics: shape mismatch and non-finite windows") {
  std::vector<double> p(12, 0.0), t(12, 0.0);
  CHECK_THROWS_AS(compute_metrics(p, t, 2, 3, 3), std::invalid_argument);

  p[7] = std::numeric_limits<double>::quiet_NaN();  // window 1 of shape (2,3,2)
  CHECK_THROWS_WITH_AS(compute_metrics(p, t, 2, 3, 2), doctest::Contains("[1]"),
                       std::runtime_error);
}

TEST_CASE("config: defaults, round trip, unknown keys") {
  auto j = nlohmann::json{{"dataset", "data/ETTh1.csv"}};
  auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.lookback == 96);
  CHECK(cfg.horizons == std::vector<int>({96, 192, 336, 720}));
  CHECK(cfg.norm_alpha == 0.99);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.seed == 2026);
  CHECK(cfg.stage1_lr == 1e-3);
  CHECK(cfg.stage2_lr == 1e-5);
  CHECK(cfg.weight_decay == 1e-5);
  CHECK(cfg.anchor_coeff == 1e-4);
  CHECK(cfg.residual_hidden == 32);
  CHECK(cfg.residual_rank == 32);
  CHECK(cfg.dataset_name() == "etth1");

  auto cfg2 = ExperimentConfig::from_json(cfg.to_json());
  CHECK(cfg2.to_json() == cfg.to_json());

  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json({{"dataset", "x.csv"}, {"lerning_rate", 1.0}}),
                       doctest::Contains("lerning_rate"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::object()), std::invalid_argument);
}

TEST_CASE("preset and protocol resolution") {
  CHECK(resolve_preset("auto", "etth1").layers == 1);
  CHECK(resolve_preset("auto", "etth2").layers == 1);
  CHECK(resolve_preset("auto", "exchange").layers == 1);
  CHECK(resolve_preset("auto", "ettm1").layers == 2);
  CHECK(resolve_preset("auto", "ettm1").hidden == 512);
  CHECK(resolve_preset("auto", "weather").layers == 2);
  CHECK(resolve_preset("auto", "traffic").layers == 4);
  CHECK(resolve_preset("auto", "traffic").hidden == 512);
  CHECK(resolve_preset("auto", "electricity").layers == 4);
  CHECK(resolve_preset("auto", "electricity").hidden == 1024);
  CHECK(resolve_preset("auto", "unknown_thing").layers == 1);
  CHECK(resolve_preset("mlp", "etth1").layers == 2);
  CHECK_THROWS_AS(resolve_preset("bogus", "etth1"), std::invalid_argument);

  CHECK(resolve_protocol("auto", "etth1") == SplitProtocol::EttHourly);
  CHECK(resolve_protocol("auto", "ettm2") == SplitProtocol::EttMinutely);
  CHECK(resolve_protocol("auto", "weather") == SplitProtocol::Ratio712);
  CHECK(resolve_protocol("ett-hourly", "weather") == SplitProtocol::EttHourly);
}

TEST_CASE("per-horizon seeds differ and mix deterministically") {
  CHECK(mix_seed(2026, 96) != mix_seed(2026, 192));
  CHECK(mix_seed(2026, 96) == mix_seed(2026, 96));
  CHECK(mix_seed(2026, 96) != mix_seed(2027, 96));
}

TEST_CASE("run_experiment: report round trip, csv schema, stage monotone start") {
  auto cfg = tiny_config();
  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.horizons.size() == 1);
  REQUIRE(!report.horizons[0].failed);
  REQUIRE(report.horizons[0].stages.size() == 3);

  // json round trip is lossless
  const auto j = report_to_json(report);
  const auto back = report_to_json(parse_report(j));
  CHECK(j == back);

  // csv header and row shape
  const std::string csv = report_to_csv(report);
  CHECK(csv.rfind("dataset,horizon,stage,mse,mae,val_mse,val_mae,best_epoch\n", 0) == 0);
  std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 1 + 3);  // header + one row per stage

  // stage monotonicity at step 0
  const auto& stages = report.horizons[0].stages;
  CHECK(stages[1].initial_val_mse == stages[0].best_val_mse);
  CHECK(stages[2].initial_val_mse == stages[1].best_val_mse);
}

TEST_CASE("table improvement markers appear exactly on strict improvement") {
  ExperimentReport report;
  report.dataset = "demo";
  HorizonEntry entry;
  entry.horizon = 96;
  entry.selected_stage = 2;
  StageReport s1, s2, s3;
  s1.stage = 1; s1.test_mse = 0.400000; s1.test_mae = 0.420000;
  s2.stage = 2; s2.test_mse = 0.380000; s2.test_mae = 0.420000;  // mse improves, mae ties
  s3.stage = 3; s3.test_mse = 0.380000; s3.test_mae = 0.410000;  // mse ties, mae improves
  entry.stages = {s1, s2, s3};
  report.horizons.push_back(entry);
  const std::string table = report_to_table(report);
  CHECK(table.find("0.3800v") != std::string::npos);
  CHECK(table.find("0.4200v") == std::string::npos);  // tie is not an improvement
  CHECK(table.find("0.4100v") != std::string::npos);
}

TEST_CASE("horizon independence: results unchanged by adding horizons") {
  auto cfg = tiny_config();
  cfg.horizons = {4};
  const auto solo = run_experiment(cfg);
  cfg.horizons = {4, 6};
  const auto both = run_experiment(cfg);
  REQUIRE(!solo.horizons[0].failed);
  REQUIRE(!both.horizons[0].failed);
  CHECK(solo.horizons[0].stages[0].test_mse == both.horizons[0].stages[0].test_mse);
  CHECK(solo.horizons[0].stages[2].val_mse == both.horizons[0].stages[2].val_mse);
  CHECK(solo.horizons[0].selected_stage == both.horizons[0].selected_stage);
}

TEST_CASE("determinism: identical config and seed produce byte-identical outputs") {
  auto cfg = tiny_config();
  const std::string out = "/tmp/stair_cli_det";
  fs::remove_all(out);
  cfg.out_dir = out;

  const std::vector<std::string> rels = {"synthetic/report.json", "synthetic/4/stage1.ckpt",
                                         "synthetic/4/stage2.ckpt", "synthetic/4/stage3.ckpt",
                                         "synthetic/4/manifest.json"};
  auto run_once = [&]() {
    auto r = run_experiment(cfg);
    emit_report(r, ReportFormat::Json, out + "/synthetic");
    std::vector<std::string> bytes;
    for (const auto& rel : rels) bytes.push_back(slurp(out + "/" + rel));
    return bytes;
  };
  const auto first = run_once();
  fs::remove_all(out);
  const auto second = run_once();
  for (std::size_t i = 0; i < rels.size(); ++i) {
    INFO(rels[i]);
    CHECK(first[i] == second[i]);
  }
  fs::remove_all(out);
}

TEST_CASE("metric-space consistency: saved predictions reproduce stage metrics") {
  auto cfg = tiny_config();
  cfg.out_dir = "/tmp/stair_cli_preds";
  cfg.save_predictions = true;
  fs::remove_all(cfg.out_dir);
  auto report = run_experiment(cfg);
  REQUIRE(!report.horizons[0].failed);

  for (int stage = 1; stage <= 3; ++stage) {
    const std::string base = cfg.out_dir + "/synthetic/4/";
    nlohmann::json meta;
    std::ifstream meta_in(base + "predictions_stage" + std::to_string(stage) + ".json");
    REQUIRE(meta_in.good());
    meta_in >> meta;
    const std::size_t n = meta.at("windows").get<std::size_t>();
    const std::size_t h = meta.at("horizon").get<std::size_t>();
    const std::size_t c = meta.at("channels").get<std::size_t>();

    auto read_bin = [&](const std::string& name) {
      const std::string bytes = slurp(base + name);
      std::vector<float> v(bytes.size() / sizeof(float));
      std::memcpy(v.data(), bytes.data(), bytes.size());
      return v;
    };
    const auto preds = read_bin("predictions_stage" + std::to_string(stage) + ".bin");
    const auto targets = read_bin("targets.bin");
    const Metrics m = compute_metrics(preds, targets, n, h, c);
    const StageReport* sr = report.stage_report(4, stage);
    REQUIRE(sr != nullptr);
    CHECK(std::fabs(m.mse - sr->test_mse) < 1e-9);
    CHECK(std::fabs(m.mae - sr->test_mae) < 1e-9);
  }
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("averages appear exactly when the four standard horizons are present") {
  ExperimentReport report;
  report.dataset = "demo";
  for (int h : {96, 192, 336, 720}) {
    HorizonEntry e;
    e.horizon = h;
    e.selected_stage = 1;
    StageReport s1;
    s1.stage = 1;
    s1.test_mse = 0.1 * h / 96.0;
    s1.test_mae = 0.2;
    e.stages = {s1};
    report.horizons.push_back(e);
  }
  auto avg = horizon_averages(report);
  REQUIRE(avg.has_value());
  CHECK((*avg)[0].test_mse ==
        doctest::Approx(0.1 * (1.0 + 2.0 + 3.5 + 7.5) / 4.0).epsilon(1e-12));

  report.horizons.pop_back();
  CHECK(!horizon_averages(report).has_value());

  report.horizons.push_back(report.horizons[0]);
  report.horizons.back().horizon = 720;
  report.horizons.back().failed = true;
  CHECK(!horizon_averages(report).has_value());
}

TEST_CASE("emit_report rejects unwritable directories") {
  ExperimentReport report;
  report.dataset = "demo";
  CHECK_THROWS_AS(emit_report(report, ReportFormat::Json, "/proc/nonexistent/dir"),
                  std::runtime_error);
}

TEST_CASE("STAIR_DATA_DIR prefixes relative dataset paths") {
  const std::string dir = "/tmp/stair_data_dir_test";
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/tiny.csv");
    f << "date,a\n1,1.0\n2,2.0\n";
  }
  setenv("STAIR_DATA_DIR", dir.c_str(), 1);
  CHECK(resolve_dataset_path("tiny.csv") == dir + "/tiny.csv");
  CHECK(resolve_dataset_path("/absolute/missing.csv") == "/absolute/missing.csv");
  unsetenv("STAIR_DATA_DIR");
  fs::remove_all(dir);
}
