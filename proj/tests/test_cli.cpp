#include <doctest.h>

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "oracles.hpp"
#include "sgdrf/config.hpp"
#include "sgdrf/data_io.hpp"
#include "test_support.hpp"

using namespace sgdrf;
using sgdrf::testing::slurp;
using sgdrf::testing::spit;
using sgdrf::testing::TempDir;

namespace {

int run_cli(std::vector<std::string> args) { return cli::run(args); }

// Runs the command with stdout and stderr captured.
int cli_captured(std::vector<std::string> args, std::string& out, std::string& err) {
  std::ostringstream o, e;
  auto* old_out = std::cout.rdbuf(o.rdbuf());
  auto* old_err = std::cerr.rdbuf(e.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  out = o.str();
  err = e.str();
  return code;
}

std::string config_1d(int K, int W, int m, const std::string& extra = "") {
  return "[world]\nlower = 0\nupper = 1\n[model]\nK = " + std::to_string(K) +
         "\nW = " + std::to_string(W) + "\n[kernel]\nlengthscales = 0.2\n[inducing]\ncounts = " +
         std::to_string(m) + "\n[inference]\nn_s = 8\nsamples = 4\niters_per_obs = 2\nseed = 3\n" +
         extra;
}

std::string config_2d(int K, int W, int m, const std::string& extra = "") {
  return "[world]\nlower = 0, 0\nupper = 1, 1\n[model]\nK = " + std::to_string(K) +
         "\nW = " + std::to_string(W) + "\n[kernel]\nlengthscales = 0.3, 0.3\n[inducing]\ncounts = " +
         std::to_string(m) + ", " + std::to_string(m) +
         "\n[inference]\nn_s = 8\nsamples = 4\niters_per_obs = 2\nseed = 5\n" + extra;
}

}  // namespace

TEST_CASE("exit codes distinguish usage, validation and I/O failures") {
  TempDir dir("exit");
  std::string out, err;
  CHECK(cli_captured({}, out, err) == cli::kValidationError);
  CHECK(cli_captured({"frobnicate"}, out, err) == cli::kValidationError);
  CHECK(cli_captured({"generate", "--out", "x.csv"}, out, err) == cli::kValidationError);
  CHECK(cli_captured({"generate", "--config", (dir / "none.ini").string(), "--out",
                      (dir / "d.csv").string()},
                     out, err) == cli::kIoError);
  spit(dir / "bad.ini", config_1d(2, 4, 5, "[vgp]\nnoise_var = -1\n"));
  CHECK(cli_captured({"generate", "--config", (dir / "bad.ini").string(), "--out",
                      (dir / "d.csv").string()},
                     out, err) == cli::kValidationError);
  CHECK(err.find("vgp.noise_var") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "d.csv"));

  spit(dir / "ok.ini", config_1d(2, 4, 5));
  spit(dir / "ragged.csv", "x1,c0,c1,c2,c3\n0.5,1,2\n");
  CHECK(cli_captured({"fit", "--config", (dir / "ok.ini").string(), "--data",
                      (dir / "ragged.csv").string(), "--checkpoint-out", (dir / "ck").string()},
                     out, err) == cli::kIoError);
  spit(dir / "outside.csv", "x1,c0,c1,c2,c3\n1.5,1,2,0,0\n");
  CHECK(cli_captured({"fit", "--config", (dir / "ok.ini").string(), "--data",
                      (dir / "outside.csv").string(), "--checkpoint-out", (dir / "ck").string()},
                     out, err) == cli::kValidationError);
  spit(dir / "corrupt.bin", "SGDRF garbage");
  CHECK(cli_captured({"predict", "--config", (dir / "ok.ini").string(), "--checkpoint",
                      (dir / "corrupt.bin").string(), "--out", (dir / "p.csv").string()},
                     out, err) == cli::kIoError);
  CHECK(cli_captured({"bench", "--config", (dir / "ok.ini").string(), "--out",
                      (dir / "b.csv").string(), "--iterations", "10"},
                     out, err) == cli::kValidationError);

  // Overflowing kernel variance makes every Gram factorization fail.
  spit(dir / "huge.ini",
       "[world]\nlower = 0\nupper = 1\n[model]\nK = 2\nW = 4\n[kernel]\nvariance = 1e308\n"
       "lengthscales = 0.2\n[inducing]\ncounts = 5\n");
  CHECK(cli_captured({"generate", "--config", (dir / "huge.ini").string(), "--out",
                      (dir / "d.csv").string(), "--count-per-location", "3"},
                     out, err) == cli::kRuntimeError);
}

TEST_CASE("help for every command lists its flags and defaults") {
  const std::map<std::string, std::vector<std::string>> expected{
      {"generate",
       {"--config", "--out", "--truth-out", "--locations", "--grid", "--count-per-location", "--seed",
        "grid", "100"}},
      {"fit", {"--config", "--data", "--checkpoint-out", "--checkpoint-every", "--log-every", "100"}},
      {"vgp-fit", {"--config", "--data", "--out"}},
      {"predict",
       {"--config", "--checkpoint", "--locations", "--grid", "--out", "--theta-out", "--mode",
        "--samples", "--seed", "plug_in", "1000"}},
      {"evaluate", {"--config", "--data", "--checkpoints-dir", "--model", "--out", "sgdrf"}},
      {"simulate-lawnmower", {"--config", "--features", "--out-map", "--out-checkpoint"}},
      {"bench", {"--config", "--sizes", "--out", "--iterations", "--warmup", "100,1000,10000"}}};
  for (const auto& [command, flags] : expected) {
    std::string out, err;
    CHECK(cli_captured({command, "--help"}, out, err) == cli::kOk);
    for (const auto& flag : flags) {
      INFO(command << " " << flag);
      CHECK(out.find(flag) != std::string::npos);
    }
  }
  std::string out, err;
  CHECK(cli_captured({"--help"}, out, err) == cli::kOk);
  for (const auto& [command, flags] : expected) CHECK(out.find(command) != std::string::npos);
}

TEST_CASE("generate is deterministic and honours the requested counts") {
  TempDir dir("gen");
  spit(dir / "c.ini", config_1d(3, 7, 6));
  const auto gen = [&](const std::string& tag, const std::string& seed) {
    std::vector<std::string> args{"generate", "--config", (dir / "c.ini").string(), "--out",
                                  (dir / (tag + ".csv")).string(), "--truth-out",
                                  (dir / (tag + "_truth.csv")).string(), "--grid", "25",
                                  "--count-per-location", "37"};
    if (!seed.empty()) {
      args.push_back("--seed");
      args.push_back(seed);
    }
    return run_cli(args);
  };
  REQUIRE(gen("a", "") == cli::kOk);
  REQUIRE(gen("b", "") == cli::kOk);
  REQUIRE(gen("c", "99") == cli::kOk);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a_truth.csv") == slurp(dir / "b_truth.csv"));
  CHECK(slurp(dir / "a_truth.theta.csv") == slurp(dir / "b_truth.theta.csv"));
  CHECK(slurp(dir / "a_truth.phi.csv") == slurp(dir / "b_truth.phi.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));

  const Dataset d = read_dataset(dir / "a.csv");
  CHECK(d.W == 7);
  CHECK(d.dim == 1);
  REQUIRE(d.records.size() == 25);
  for (const auto& r : d.records) CHECK(r.total() == 37);
  const PredictiveDistribution truth = read_predictions(dir / "a_truth.csv");
  for (Eigen::Index i = 0; i < truth.p_obs.rows(); ++i)
    CHECK(std::abs(truth.p_obs.row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("fit checkpoints on the stride and at the end, reproducibly") {
  TempDir dir("fit");
  spit(dir / "c.ini", config_1d(2, 4, 5));
  REQUIRE(run_cli({"generate", "--config", (dir / "c.ini").string(), "--out",
               (dir / "d.csv").string(), "--grid", "10", "--count-per-location", "20"}) == cli::kOk);
  for (const char* run : {"r1", "r2"}) {
    std::string out, err;
    REQUIRE(cli_captured({"fit", "--config", (dir / "c.ini").string(), "--data",
                          (dir / "d.csv").string(), "--checkpoint-out", (dir / run).string(),
                          "--checkpoint-every", "5", "--log-every", "4"},
                         out, err) == cli::kOk);
    CHECK(err.find("t=2 iter=4 elbo=") != std::string::npos);
  }
  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir / "r1"))
    names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"ckpt_t00000005.bin", "ckpt_t00000010.bin"});
  CHECK(slurp(dir / "r1" / "ckpt_t00000010.bin") == slurp(dir / "r2" / "ckpt_t00000010.bin"));
  CHECK(slurp(dir / "r1" / "ckpt_t00000005.bin") == slurp(dir / "r2" / "ckpt_t00000005.bin"));

  const auto final_ckpt = std::get<SgdrfCheckpoint>(load_checkpoint(dir / "r1" / "ckpt_t00000010.bin"));
  CHECK(final_ckpt.state.step_count == 20);
  CHECK(final_ckpt.config_hash == config_hash(load_config(dir / "c.ini")));

  REQUIRE(run_cli({"predict", "--config", (dir / "c.ini").string(), "--checkpoint",
               (dir / "r1" / "ckpt_t00000010.bin").string(), "--grid", "7", "--out",
               (dir / "p.csv").string(), "--theta-out", (dir / "t.csv").string()}) == cli::kOk);
  const PredictiveDistribution p = read_predictions(dir / "p.csv");
  CHECK(p.p_obs.rows() == 7);
  CHECK(p.p_obs.cols() == 4);
  REQUIRE(run_cli({"predict", "--config", (dir / "c.ini").string(), "--checkpoint",
               (dir / "r1" / "ckpt_t00000010.bin").string(), "--out", (dir / "mc.csv").string(),
               "--mode", "monte_carlo", "--samples", "50", "--seed", "4"}) == cli::kOk);
  REQUIRE(run_cli({"predict", "--config", (dir / "c.ini").string(), "--checkpoint",
               (dir / "r1" / "ckpt_t00000010.bin").string(), "--out", (dir / "mc2.csv").string(),
               "--mode", "monte_carlo", "--samples", "50", "--seed", "4"}) == cli::kOk);
  CHECK(slurp(dir / "mc.csv") == slurp(dir / "mc2.csv"));

  spit(dir / "k3.ini", config_1d(3, 4, 5));
  std::string out, err;
  CHECK(cli_captured({"predict", "--config", (dir / "k3.ini").string(), "--checkpoint",
                      (dir / "r1" / "ckpt_t00000010.bin").string(), "--out",
                      (dir / "x.csv").string()},
                     out, err) == cli::kValidationError);
  CHECK(err.find("K=2") != std::string::npos);
  CHECK(err.find("K=3") != std::string::npos);
}

TEST_CASE("evaluate gives zero medians when predictions equal the empirical frequencies") {
  TempDir dir("evalzero");
  spit(dir / "c.ini", config_1d(1, 2, 4));
  std::string rows = "x1,c0,c1\n";
  for (int i = 0; i < 6; ++i) rows += std::to_string(i / 5.0) + ",1,3\n";
  spit(dir / "d.csv", rows);
  const RunConfig config = load_config(dir / "c.ini");
  SgdrfCheckpoint ck;
  ck.state = VariationalState::initial(1, 4, Eigen::Vector2d(1.0, 3.0));
  ck.optimizer = OptimizerState::zeros(ck.state.flat().size(), AdamConfig{});
  ck.config_hash = config_hash(config);
  std::filesystem::create_directories(dir / "ck");
  save_checkpoint(ck, dir / "ck" / "ckpt_t00000002.bin");
  save_checkpoint(ck, dir / "ck" / "ckpt_t00000004.bin");
  save_checkpoint(ck, dir / "ck" / "ckpt_t00000006.bin");
  std::string out, err;
  REQUIRE(cli_captured({"evaluate", "--config", (dir / "c.ini").string(), "--data",
                        (dir / "d.csv").string(), "--checkpoints-dir", (dir / "ck").string(),
                        "--out", (dir / "m.csv").string()},
                       out, err) == cli::kOk);
  CHECK(err.find("t=6") != std::string::npos);
  CHECK(err.find("excluded") != std::string::npos);
  const auto m = read_metrics(dir / "m.csv");
  REQUIRE(m.size() == 2);
  CHECK(m[0].checkpoint_t == 2);
  CHECK(m[1].checkpoint_t == 4);
  for (const auto& s : m) {
    CHECK(std::abs(s.median) < 1e-12);
    CHECK(std::abs(s.q75) < 1e-12);
  }

  std::filesystem::create_directories(dir / "empty");
  CHECK(cli_captured({"evaluate", "--config", (dir / "c.ini").string(), "--data",
                      (dir / "d.csv").string(), "--checkpoints-dir", (dir / "empty").string(),
                      "--out", (dir / "m2.csv").string()},
                     out, err) == cli::kIoError);
}

TEST_CASE("evaluate coverage grows along a forward sweep and matches brute force") {
  TempDir dir("evalcov");
  spit(dir / "c.ini", config_1d(2, 3, 5,
                                "[vgp]\niterations = 2\n[evaluation]\ncheckpoint_stride = 4\n"));
  const int n = 40;
  std::string rows = "x1,c0,c1,c2\n";
  for (int i = 0; i < n; ++i) rows += std::to_string(i / (n - 1.0)) + ",2,1,1\n";
  spit(dir / "d.csv", rows);
  REQUIRE(run_cli({"evaluate", "--config", (dir / "c.ini").string(), "--data",
               (dir / "d.csv").string(), "--model", "vgp", "--out", (dir / "m.csv").string()}) ==
          cli::kOk);
  const auto metrics = read_metrics(dir / "m.csv");
  const Dataset d = read_dataset(dir / "d.csv");
  REQUIRE(metrics.size() == 9);
  double prev = 0.0;
  for (const auto& s : metrics) {
    std::vector<std::vector<double>> obs, fut;
    for (std::size_t i = 0; i < d.records.size(); ++i)
      (i < s.checkpoint_t ? obs : fut).push_back({d.records[i].location[0]});
    CHECK(s.coverage_fraction == oracle::coverage(obs, fut, {0.2}));
    CHECK(s.coverage_fraction >= prev);
    prev = s.coverage_fraction;
  }
  CHECK(metrics.back().coverage_fraction > metrics.front().coverage_fraction);
}

TEST_CASE("vgp-fit writes a loadable baseline checkpoint") {
  TempDir dir("vgp");
  spit(dir / "c.ini", config_1d(2, 4, 5, "[vgp]\niterations = 20\n"));
  REQUIRE(run_cli({"generate", "--config", (dir / "c.ini").string(), "--out",
               (dir / "d.csv").string(), "--grid", "12"}) == cli::kOk);
  REQUIRE(run_cli({"vgp-fit", "--config", (dir / "c.ini").string(), "--data",
               (dir / "d.csv").string(), "--out", (dir / "v.bin").string()}) == cli::kOk);
  REQUIRE(run_cli({"vgp-fit", "--config", (dir / "c.ini").string(), "--data",
               (dir / "d.csv").string(), "--out", (dir / "v2.bin").string()}) == cli::kOk);
  CHECK(slurp(dir / "v.bin") == slurp(dir / "v2.bin"));
  CHECK(std::holds_alternative<VgpCheckpoint>(load_checkpoint(dir / "v.bin")));
  REQUIRE(run_cli({"predict", "--config", (dir / "c.ini").string(), "--checkpoint",
               (dir / "v.bin").string(), "--out", (dir / "p.csv").string()}) == cli::kOk);
  std::string out, err;
  CHECK(cli_captured({"predict", "--config", (dir / "c.ini").string(), "--checkpoint",
                      (dir / "v.bin").string(), "--out", (dir / "p.csv").string(),
                      "--theta-out", (dir / "t.csv").string()},
                     out, err) == cli::kValidationError);
}

TEST_CASE("lawnmower with one community yields an all-zero map of grid size") {
  TempDir dir("lawn");
  spit(dir / "c.ini", config_2d(1, 5, 3));
  REQUIRE(run_cli({"generate", "--config", (dir / "c.ini").string(), "--out",
               (dir / "f.csv").string(), "--grid", "6,4", "--count-per-location", "10"}) ==
          cli::kOk);
  REQUIRE(run_cli({"simulate-lawnmower", "--config", (dir / "c.ini").string(), "--features",
               (dir / "f.csv").string(), "--out-map", (dir / "map.csv").string(),
               "--out-checkpoint", (dir / "final.bin").string()}) == cli::kOk);
  const CommunityMap map = read_community_map(dir / "map.csv");
  CHECK(map.counts == std::vector<int>{6, 4});
  CHECK(map.labels == std::vector<int>(24, 0));
  CHECK(slurp(dir / "map.pgm").find("\n6 4\n") != std::string::npos);
  const auto ck = std::get<SgdrfCheckpoint>(load_checkpoint(dir / "final.bin"));
  CHECK(ck.state.step_count == 48);

  // A features file that is not a full grid is rejected.
  std::string text = slurp(dir / "f.csv");
  text.erase(text.find_last_of('\n', text.size() - 2) + 1);
  spit(dir / "partial.csv", text);
  std::string out, err;
  CHECK(cli_captured({"simulate-lawnmower", "--config", (dir / "c.ini").string(), "--features",
                      (dir / "partial.csv").string(), "--out-map", (dir / "m2.csv").string()},
                     out, err) == cli::kValidationError);
}

TEST_CASE("bench reports one row per size and scales with the subsample size") {
  TempDir dir("bench");
  const auto mean_time = [&](int n_s) {
    spit(dir / "b.ini", "[world]\nlower = 0\nupper = 1\n[model]\nK = 3\nW = 30\n"
                        "[kernel]\nlengthscales = 0.2\n[inducing]\ncounts = 10\n"
                        "[inference]\nsamples = 8\nn_s = " + std::to_string(n_s) + "\n");
    REQUIRE(run_cli({"bench", "--config", (dir / "b.ini").string(), "--sizes", "500,1000", "--out",
                 (dir / "b.csv").string(), "--iterations", "200"}) == cli::kOk);
    std::ifstream in(dir / "b.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# config_hash=", 0) == 0);
    std::getline(in, line);
    CHECK(line == "t,n_s,m,samples,iterations,mean_iter_seconds,peak_rss_kb,buffer_bytes");
    std::vector<double> times;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      REQUIRE(f.size() == 8);
      CHECK(std::stoi(f[1]) == n_s);
      CHECK(std::stoi(f[4]) == 200);
      times.push_back(std::stod(f[5]));
    }
    CHECK(times.size() == 2);
    return (times[0] + times[1]) / 2.0;
  };
  const double t64 = mean_time(64);
  const double t128 = mean_time(128);
  MESSAGE("mean iteration seconds n_s=64: " << t64 << ", n_s=128: " << t128);
  CHECK(t128 / t64 >= 1.3);
  CHECK(t128 / t64 <= 3.0);
}
