#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "test_util.hpp"

using nlohmann::json;
using rare::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = 0;
  std::string err;
};

Result run(const TempDir& dir, const std::string& args) {
  const auto err_path = dir.path() / "stderr.txt";
  const std::string cmd = std::string(RARE_CLI) + " " + args + " > " +
                          (dir.path() / "stdout.txt").string() + " 2> " + err_path.string();
  const int raw = std::system(cmd.c_str());
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return json::parse(in);
}

std::string write_config(const TempDir& dir) {
  const json cfg = {{"schema_version", 1},
                    {"input_size", 160},
                    {"backbone_channels", 8},
                    {"neck_channels", 8},
                    {"neck_strides", {16, 32}},
                    {"object_embed_dim", 16},
                    {"scene_hidden_dim", 16},
                    {"fused_dim", 16},
                    {"num_heads", 2},
                    {"classifier_hidden_dim", 8},
                    {"synth_num_positive", 2},
                    {"synth_num_negative", 2},
                    {"synth_test_positive", 1},
                    {"synth_test_negative", 1},
                    {"synth_frames", 10},
                    {"epochs", 2},
                    {"batch_size", 2},
                    {"bench_warmup", 2},
                    {"bench_measured", 5},
                    {"dataset_root", (dir.path() / "data").string()},
                    {"output_dir", (dir.path() / "run").string()}};
  const auto path = dir.path() / "config.json";
  std::ofstream(path) << cfg.dump();
  return "--config " + path.string();
}

}  // namespace

TEST_CASE("end to end commands") {
  unsetenv("RARE_OUTPUT_DIR");
  TempDir dir("cli");
  const auto cfg = write_config(dir);
  const auto run_dir = dir.path() / "run";

  REQUIRE(run(dir, "generate-data " + cfg).status == 0);
  CHECK(fs::exists(dir.path() / "data" / "train" / "manifest.json"));
  CHECK(fs::exists(dir.path() / "data" / "test" / "manifest.json"));

  REQUIRE(run(dir, "train " + cfg).status == 0);
  CHECK(fs::exists(run_dir / "checkpoint.bin"));
  for (int e = 1; e <= 2; ++e) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03d.json", e);
    const auto log = read_json(run_dir / "logs" / name);
    CHECK(log.at("schema_version") == 1);
    CHECK(log.contains("config"));
    const auto& loss = log.at("loss");
    CHECK(std::abs(loss.at("total").get<double>() -
                   (loss.at("adalea").get<double>() +
                    loss.at("gamma").get<double>() * loss.at("ranking").get<double>())) <= 1e-9);
  }
  const auto summary = read_json(run_dir / "train_summary.json");
  CHECK(summary.at("schema_version") == 1);

  REQUIRE(run(dir, "evaluate " + cfg).status == 0);
  const auto metrics = read_json(run_dir / "metrics_test.json");
  CHECK(metrics.at("schema_version") == 1);
  const double ap = metrics.at("ap").get<double>();
  CHECK(ap >= 0.0);
  CHECK(ap <= 1.0);
  CHECK(metrics.at("config").at("epochs") == 2);

  REQUIRE(run(dir, "bench " + cfg).status == 0);
  const auto latency = read_json(run_dir / "latency.json");
  CHECK(latency.at("schema_version") == 1);
  CHECK(latency.at("per_frame_ms").size() == 5);
  CHECK(latency.at("warmup") == 2);
  const double mean = latency.at("mean_ms").get<double>();
  CHECK(std::abs(latency.at("fps").get<double>() - 1000.0 / mean) <= 1e-9 * 1000.0 / mean);

  REQUIRE(run(dir, "demo " + cfg).status == 0);
  const fs::path demo_root = run_dir / "demo";
  REQUIRE(fs::exists(demo_root));
  const fs::path video_dir = fs::directory_iterator(demo_root)->path();
  int overlays = 0, curves = 0;
  for (const auto& e : fs::directory_iterator(video_dir)) {
    const auto name = e.path().filename().string();
    overlays += name.rfind("overlay_", 0) == 0;
    curves += name == "risk_curve.png";
  }
  CHECK(overlays == 10);
  CHECK(curves == 1);
  const auto demo = read_json(video_dir / "demo.json");
  CHECK(demo.at("accident_frame").is_number_integer());
  CHECK(demo.at("frames").size() == 10);
}

TEST_CASE("overrides and the environment reach the artifacts") {
  TempDir dir("cli_env");
  const auto cfg = write_config(dir);
  REQUIRE(run(dir, "generate-data " + cfg).status == 0);
  const auto env_dir = dir.path() / "env_run";
  setenv("RARE_OUTPUT_DIR", env_dir.c_str(), 1);
  const auto r = run(dir, "train " + cfg + " --set epochs=1 --set gamma=0");
  unsetenv("RARE_OUTPUT_DIR");
  REQUIRE(r.status == 0);
  const auto log = read_json(env_dir / "logs" / "epoch_001.json");
  CHECK(log.at("config").at("gamma") == 0.0);
  CHECK(log.at("config").at("output_dir") == env_dir.string());
  CHECK_FALSE(fs::exists(env_dir / "logs" / "epoch_002.json"));
}

TEST_CASE("errors produce a json record and a nonzero status") {
  unsetenv("RARE_OUTPUT_DIR");
  TempDir dir("cli_err");
  const auto cfg = write_config(dir);

  auto r = run(dir, "evaluate " + cfg);  // no dataset, no checkpoint
  CHECK(r.status == 1);
  const auto err = json::parse(r.err);
  CHECK(err.at("schema_version") == 1);
  CHECK(err.at("error").contains("code"));
  CHECK(err.at("error").contains("message"));

  r = run(dir, "train " + cfg + " --set no_such_key=1");
  CHECK(r.status == 1);
  CHECK(json::parse(r.err).at("error").at("code") == "invalid-config");

  r = run(dir, "frobnicate");
  CHECK(r.status == 64);
  CHECK(json::parse(r.err).at("error").at("code") == "usage");
}
