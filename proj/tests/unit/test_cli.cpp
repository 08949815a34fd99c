#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "microweather/errors.hpp"

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mwx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return mwx::run_cli(static_cast<int>(argv.size()), argv.data());
}

void write_config(const std::filesystem::path& p) {
  std::ofstream f(p);
  f << "# small world\n"
       "synth_n_backbone = 12\nsynth_n_train = 6\nsynth_n_val = 3\nsynth_n_test = 4\n"
       "synth_nlat = 5\nsynth_nlon = 5\nsynth_time_steps = 48\n"
       "d_latent = 12\nn_heads = 3\nn_layers_self = 1\nn_layers_cross = 1\nmlp_hidden = 8\n"
       "location_hidden = 8\nlocation_dim = 6\nlocation_encoding_degree = 3\n"
       "steps = 6\neval_every = 3\ntimestamps_per_step = 4\nval_timestamps = 8\n";
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"train", "--no-such-flag"}), 1);
  testing::internal::GetCapturedStderr();
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"frobnicate"}), 1);
  testing::internal::GetCapturedStderr();
}

TEST(Cli, MissingCheckpointIsDataErrorNamingPath) {
  fixture::TempDir dir("cli_missing");
  write_config(dir.path() / "cfg.txt");
  const std::string data = (dir.path() / "data").string();
  ASSERT_EQ(run({"synth", "--config", (dir.path() / "cfg.txt").string(), "--out", data, "--log-level", "warn"}), 0);
  const std::string ckpt = (dir.path() / "nope.mwx").string();
  testing::internal::CaptureStderr();
  const int code = run({"evaluate", "--data", data, "--checkpoint", ckpt, "--out", (dir.path() / "ev").string()});
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 2);
  EXPECT_NE(err.find(ckpt), std::string::npos) << err;
}

TEST(Cli, ConfigFileParsing) {
  fixture::TempDir dir("cli_cfg");
  {
    std::ofstream f(dir.path() / "a.txt");
    f << "# comment\n\nd_latent = 16 # trailing\n  connectivity=knn:5\n";
  }
  const auto m = mwx::read_config_file((dir.path() / "a.txt").string());
  EXPECT_EQ(m.at("d_latent"), "16");
  EXPECT_EQ(m.at("connectivity"), "knn:5");
  {
    std::ofstream f(dir.path() / "b.txt");
    f << "no equals sign here\n";
  }
  EXPECT_THROW(mwx::read_config_file((dir.path() / "b.txt").string()), mw::InvalidConfig);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  fixture::TempDir dir("cli_key");
  {
    std::ofstream f(dir.path() / "c.txt");
    f << "learning_rate = 3\n";
  }
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"synth", "--config", (dir.path() / "c.txt").string(), "--out", (dir.path() / "o").string()}), 1);
  testing::internal::GetCapturedStderr();
}

TEST(Cli, SmallPipelineRuns) {
  fixture::TempDir dir("cli_pipe");
  const std::string cfg = (dir.path() / "cfg.txt").string();
  write_config(dir.path() / "cfg.txt");
  const std::string data = (dir.path() / "data").string();
  const std::string run_dir = (dir.path() / "run").string();
  testing::internal::CaptureStdout();
  ASSERT_EQ(run({"synth", "--config", cfg, "--out", data, "--log-level", "warn"}), 0);
  ASSERT_EQ(run({"train", "--config", cfg, "--data", data, "--out", run_dir, "--log-level", "warn"}), 0);
  const std::string ckpt = run_dir + "/model.mwx";
  ASSERT_EQ(run({"evaluate", "--config", cfg, "--data", data, "--checkpoint", ckpt, "--out", run_dir,
                 "--log-level", "warn"}),
            0);
  ASSERT_EQ(run({"baseline", "--data", data, "--out", run_dir, "--log-level", "warn"}), 0);
  ASSERT_EQ(run({"infer-point", "--data", data, "--checkpoint", ckpt, "--lat", "37.5", "--lon", "-99.5", "--out",
                 run_dir + "/pt", "--log-level", "warn"}),
            0);
  testing::internal::GetCapturedStdout();
  for (const char* f : {"model.mwx", "train_log.csv", "metrics.csv", "distance.csv", "baselines.csv", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / f)) << f;
  }
  const std::string metrics = fixture::read_file(dir.path() / "run" / "metrics.csv");
  EXPECT_NE(metrics.find("temperature,mae"), std::string::npos);
}
