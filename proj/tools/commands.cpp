#include "commands.hpp"

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

#include "sgdrf/config.hpp"
#include "sgdrf/data_io.hpp"
#include "sgdrf/error.hpp"
#include "sgdrf/inference.hpp"
#include "sgdrf/latent_model.hpp"
#include "sgdrf/metrics.hpp"
#include "sgdrf/vgp.hpp"

namespace sgdrf::cli {

namespace {

namespace fs = std::filesystem;

std::vector<int> parse_counts(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": expected comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

std::vector<Location> resolve_locations(const RunConfig& config, const std::string& spec,
                                        const std::string& grid_counts) {
  if (spec == "grid") {
    const std::vector<int> counts =
        grid_counts.empty() ? config.inducing_counts : parse_counts(grid_counts, "--grid");
    return make_grid(config.world, counts).points;
  }
  std::vector<Location> locs = read_locations(spec);
  for (std::size_t i = 0; i < locs.size(); ++i)
    require(config.world.contains(locs[i]),
            spec + ": location " + std::to_string(i + 1) + " is outside the world bounds");
  return locs;
}

void check_dataset(const Dataset& data, const RunConfig& config, const std::string& path) {
  require(data.dim == static_cast<int>(config.dim()),
          path + ": dataset has " + std::to_string(data.dim) +
              " coordinates, config world has " + std::to_string(config.dim()));
  require(data.W == config.W, path + ": dataset has W=" + std::to_string(data.W) +
                                  ", config has W=" + std::to_string(config.W));
  for (std::size_t i = 0; i < data.records.size(); ++i)
    require(config.world.contains(data.records[i].location),
            path + ": record " + std::to_string(i + 1) + " lies outside the world bounds");
}

std::string checkpoint_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_t%08zu.bin", t);
  return buf;
}

void save_engine(const StreamingEngine& engine, const fs::path& path, const std::string& hash) {
  save_checkpoint(SgdrfCheckpoint{engine.state(), engine.optimizer(), hash}, path);
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string config, out, truth_out, locations = "grid", grid;
  long long count_per_location = 100;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& a) {
  const RunConfig config = load_config(a.config);
  const std::string hash = config_hash(config);
  const std::vector<Location> locs = resolve_locations(config, a.locations, a.grid);
  const SyntheticData data = generate_synthetic(config.hyperparams(), locs,
                                                a.count_per_location,
                                                a.seed.value_or(config.seed));
  write_dataset(Dataset{static_cast<int>(config.dim()), config.W, data.records}, a.out, hash);
  if (!a.truth_out.empty()) {
    const fs::path truth(a.truth_out);
    write_predictions(data.truth, truth, hash, "truth");
    fs::path theta = truth, phi = truth;
    write_theta(data.truth, theta.replace_extension(".theta.csv"), hash);
    write_phi(data.phi, phi.replace_extension(".phi.csv"), hash);
  }
  return kOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  std::string config, data, checkpoint_out;
  int checkpoint_every = 0;  // 0: evaluation.checkpoint_stride
  int log_every = 100;
};

int cmd_fit(const FitArgs& a) {
  const RunConfig config = load_config(a.config);
  const std::string hash = config_hash(config);
  const Dataset data = read_dataset(a.data);
  check_dataset(data, config, a.data);
  const int every = a.checkpoint_every > 0 ? a.checkpoint_every : config.checkpoint_stride;
  require(every >= 1, "--checkpoint-every must be positive");

  const GdrfModel model(config.hyperparams());
  const fs::path dir(a.checkpoint_out);
  fs::create_directories(dir);
  const std::size_t n = data.records.size();

  StreamCallbacks cb;
  cb.on_iteration = [&](const ProgressEvent& e) {
    if (a.log_every > 0 && e.iteration % static_cast<std::uint64_t>(a.log_every) == 0)
      std::cerr << "t=" << e.t << " iter=" << e.iteration << " elbo=" << e.elbo << "\n";
  };
  cb.on_observation = [&](std::size_t t, const StreamingEngine& engine) {
    if (t % static_cast<std::size_t>(every) == 0 || t == n)
      save_engine(engine, dir / checkpoint_name(t), hash);
  };
  if (n == 0) {
    StreamingEngine engine(model, config.engine_config());
    save_engine(engine, dir / checkpoint_name(0), hash);
    return kOk;
  }
  streaming_fit(data.records, model, config.engine_config(), cb);
  return kOk;
}

// --- vgp-fit ----------------------------------------------------------------

struct VgpFitArgs {
  std::string config, data, out;
};

int cmd_vgp_fit(const VgpFitArgs& a) {
  const RunConfig config = load_config(a.config);
  const Dataset data = read_dataset(a.data);
  check_dataset(data, config, a.data);
  const GdrfModel model(config.hyperparams());
  const VgpState state = vgp_fit(data.records, model, config.vgp_config());
  save_checkpoint(VgpCheckpoint{state, config_hash(config)}, a.out);
  return kOk;
}

// --- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string config, checkpoint, locations = "grid", grid, out, theta_out, mode = "plug_in";
  int samples = 1000;
  std::uint64_t seed = 0;
};

int cmd_predict(const PredictArgs& a) {
  const RunConfig config = load_config(a.config);
  const std::string hash = config_hash(config);
  const GdrfModel model(config.hyperparams());
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  check_checkpoint_dimensions(ckpt, config.K, model.m(), config.W);
  const std::vector<Location> queries = resolve_locations(config, a.locations, a.grid);

  PredictiveDistribution pred;
  std::string kind;
  if (const auto* s = std::get_if<SgdrfCheckpoint>(&ckpt)) {
    PredictMode mode = PlugIn{};
    if (a.mode == "monte_carlo") {
      require(a.samples >= 1, "--samples must be positive in monte_carlo mode");
      mode = MonteCarlo{a.samples, a.seed};
    } else {
      require(a.mode == "plug_in", "--mode must be plug_in or monte_carlo");
    }
    pred = predict(s->state, queries, model, mode);
    kind = "sgdrf";
  } else {
    pred = vgp_predict(std::get<VgpCheckpoint>(ckpt).state, queries, model);
    kind = "vgp";
  }
  write_predictions(pred, a.out, hash, kind);
  if (!a.theta_out.empty()) {
    require(pred.theta.cols() > 0, "--theta-out: the VGP model has no community weights");
    write_theta(pred, a.theta_out, hash);
  }
  return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string config, data, checkpoints_dir, model = "sgdrf", out;
};

std::vector<Location> locations_of(std::span<const ObservationRecord> records) {
  std::vector<Location> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.location);
  return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const RunConfig config = load_config(a.config);
  const std::string hash = config_hash(config);
  const Dataset data = read_dataset(a.data);
  check_dataset(data, config, a.data);
  const GdrfModel model(config.hyperparams());
  const std::size_t n = data.records.size();
  require(a.model == "sgdrf" || a.model == "vgp", "--model must be sgdrf or vgp");

  std::vector<std::pair<std::size_t, fs::path>> checkpoints;
  if (a.model == "sgdrf") {
    require(!a.checkpoints_dir.empty(), "--checkpoints-dir is required for --model sgdrf");
    if (!fs::is_directory(a.checkpoints_dir))
      throw IoError("checkpoint directory " + a.checkpoints_dir + " does not exist");
    const std::regex pattern(R"(ckpt_t(\d+)\.bin)");
    for (const auto& entry : fs::directory_iterator(a.checkpoints_dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, pattern))
        checkpoints.emplace_back(std::stoull(m[1].str()), entry.path());
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    if (checkpoints.empty())
      throw IoError("no checkpoints (ckpt_t*.bin) found in " + a.checkpoints_dir);
  } else {
    for (std::size_t t = static_cast<std::size_t>(config.checkpoint_stride); t <= n;
         t += static_cast<std::size_t>(config.checkpoint_stride))
      checkpoints.emplace_back(t, fs::path());
  }

  const std::vector<Location> all_locations = locations_of(data.records);
  std::vector<PklSummary> summaries;
  for (const auto& [t, path] : checkpoints) {
    if (t >= n) {
      std::cerr << "evaluate: checkpoint t=" << t << " has no future records (N=" << n
                << "); excluded\n";
      continue;
    }
    const std::span<const ObservationRecord> future(data.records.data() + t, n - t);
    const std::vector<Location> future_locs(all_locations.begin() + static_cast<long>(t),
                                            all_locations.end());
    PredictiveDistribution pred;
    if (a.model == "sgdrf") {
      const Checkpoint ckpt = load_checkpoint(path);
      check_checkpoint_dimensions(ckpt, config.K, model.m(), config.W);
      const auto* s = std::get_if<SgdrfCheckpoint>(&ckpt);
      require(s != nullptr, path.string() + " is not an S-GDRF checkpoint");
      pred = predict(s->state, future_locs, model);
    } else {
      const std::vector<ObservationRecord> seen(data.records.begin(),
                                                data.records.begin() + static_cast<long>(t));
      pred = vgp_predict(vgp_fit(seen, model, config.vgp_config()), future_locs, model);
    }
    PklSummary s = pkl_checkpoint(pred, future, config.epsilon);
    s.checkpoint_t = t;
    const std::vector<Location> observed(all_locations.begin(),
                                         all_locations.begin() + static_cast<long>(t));
    s.coverage_fraction = coverage_fraction(observed, future_locs, config.kernel.lengthscales);
    summaries.push_back(std::move(s));
  }
  if (summaries.empty()) throw ValidationError("evaluate: no checkpoint with t < N to evaluate");
  write_metrics(summaries, a.out, config.epsilon, hash, a.model);
  return kOk;
}

// --- simulate-lawnmower -----------------------------------------------------

struct LawnmowerArgs {
  std::string config, features, out_map, out_checkpoint;
  int log_every = 0;
};

std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

int cmd_simulate_lawnmower(const LawnmowerArgs& a) {
  const RunConfig config = load_config(a.config);
  const std::string hash = config_hash(config);
  require(config.dim() == 2, "simulate-lawnmower requires a 2-D world");
  const Dataset data = read_dataset(a.features);
  check_dataset(data, config, a.features);
  require(!data.records.empty(), a.features + ": no records");

  std::vector<double> xs, ys;
  for (const auto& r : data.records) {
    xs.push_back(r.location[0]);
    ys.push_back(r.location[1]);
  }
  const int counts[2] = {static_cast<int>(distinct_sorted(xs).size()),
                         static_cast<int>(distinct_sorted(ys).size())};
  const RegularGrid grid = make_grid(config.world, counts);
  require(grid.size() == data.records.size(),
          a.features + ": " + std::to_string(data.records.size()) +
              " records do not form a " + std::to_string(counts[0]) + "x" +
              std::to_string(counts[1]) + " grid");

  // Match each record to its grid cell.
  std::vector<const ObservationRecord*> by_cell(grid.size(), nullptr);
  for (const auto& r : data.records) {
    int cell[2];
    for (int d = 0; d < 2; ++d) {
      const double lo = config.world.lower[static_cast<std::size_t>(d)];
      const double hi = config.world.upper[static_cast<std::size_t>(d)];
      const double pos = counts[d] == 1 ? 0.0
                                        : (r.location[static_cast<std::size_t>(d)] - lo) /
                                              (hi - lo) * (counts[d] - 1);
      cell[d] = static_cast<int>(std::lround(pos));
      require(cell[d] >= 0 && cell[d] < counts[d] && std::abs(pos - cell[d]) < 1e-6,
              a.features + ": record location does not lie on the configured grid");
    }
    const std::size_t idx = grid.index(cell);
    require(by_cell[idx] == nullptr, a.features + ": duplicate grid cell in features");
    by_cell[idx] = &r;
  }

  std::vector<ObservationRecord> stream;
  stream.reserve(grid.size());
  for (const Location& x : lawnmower_trajectory(grid)) {
    int cell[2];
    for (int d = 0; d < 2; ++d) {
      const double lo = config.world.lower[static_cast<std::size_t>(d)];
      const double hi = config.world.upper[static_cast<std::size_t>(d)];
      cell[d] = counts[d] == 1 ? 0
                               : static_cast<int>(std::lround(
                                     (x[static_cast<std::size_t>(d)] - lo) / (hi - lo) *
                                     (counts[d] - 1)));
    }
    stream.push_back(*by_cell[grid.index(cell)]);
  }

  const GdrfModel model(config.hyperparams());
  StreamCallbacks cb;
  cb.on_iteration = [&](const ProgressEvent& e) {
    if (a.log_every > 0 && e.iteration % static_cast<std::uint64_t>(a.log_every) == 0)
      std::cerr << "t=" << e.t << " iter=" << e.iteration << " elbo=" << e.elbo << "\n";
  };
  std::optional<SgdrfCheckpoint> final_ckpt;
  cb.on_observation = [&](std::size_t t, const StreamingEngine& engine) {
    if (t == stream.size())
      final_ckpt = SgdrfCheckpoint{engine.state(), engine.optimizer(), hash};
  };
  const VariationalState state = streaming_fit(stream, model, config.engine_config(), cb);
  const PredictiveDistribution pred = predict(state, grid.points, model);
  write_community_map(ml_community_map(pred, grid), config.K, a.out_map, hash);
  if (!a.out_checkpoint.empty()) save_checkpoint(*final_ckpt, a.out_checkpoint);
  return kOk;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string config, sizes = "100,1000,10000", out;
  int iterations = 100;
  int warmup = 10;
};

struct BenchRow {
  std::size_t t = 0;
  double mean_iter_seconds = 0.0;
  std::size_t buffer_bytes = 0;
  long peak_rss_kb = 0;
};

BenchRow bench_one(const RunConfig& config, std::size_t t, int iterations, int warmup) {
  const GdrfModel model(config.hyperparams());
  EngineConfig ec = config.engine_config();
  StreamingEngine engine(model, ec);
  Rng rng(config.seed + t);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> category(0, config.W - 1);
  for (std::size_t i = 0; i < t; ++i) {
    double c[2];
    for (std::size_t d = 0; d < config.dim(); ++d)
      c[d] = config.world.lower[d] + unif(rng) * (config.world.upper[d] - config.world.lower[d]);
    std::map<int, std::int64_t> counts;
    for (int j = 0; j < 10; ++j) ++counts[category(rng)];
    ObservationRecord rec;
    rec.location = Location(std::span<const double>(c, config.dim()));
    rec.num_categories = config.W;
    for (const auto& [w, n] : counts) rec.counts.push_back({w, n});
    engine.observe(std::move(rec));
  }
  for (int i = 0; i < warmup; ++i) engine.train_step();
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) engine.train_step();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  BenchRow row;
  row.t = t;
  row.mean_iter_seconds = elapsed.count() / iterations;
  row.buffer_bytes = engine.buffer().memory_bytes();
  return row;
}

// Runs one size in a child process so its peak resident set is measured in
// isolation.
BenchRow bench_isolated(const RunConfig& config, std::size_t t, int iterations, int warmup) {
  int fds[2];
  if (pipe(fds) != 0) throw Error("bench: pipe failed");
  const pid_t pid = fork();
  if (pid < 0) throw Error("bench: fork failed");
  if (pid == 0) {
    close(fds[0]);
    int status = 0;
    BenchRow row;
    try {
      row = bench_one(config, t, iterations, warmup);
    } catch (...) {
      status = 1;
    }
    const ssize_t wrote = write(fds[1], &row, sizeof(row));
    close(fds[1]);
    _exit(wrote == static_cast<ssize_t>(sizeof(row)) ? status : 1);
  }
  close(fds[1]);
  BenchRow row;
  const ssize_t got = read(fds[0], &row, sizeof(row));
  close(fds[0]);
  int status = 0;
  rusage usage{};
  wait4(pid, &status, 0, &usage);
  if (got != static_cast<ssize_t>(sizeof(row)) || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error("bench: measurement at t=" + std::to_string(t) + " failed");
  row.peak_rss_kb = usage.ru_maxrss;
  return row;
}

int cmd_bench(const BenchArgs& a) {
  const RunConfig config = load_config(a.config);
  require(a.iterations >= 100, "--iterations must be >= 100");
  require(a.warmup >= 0, "--warmup must be >= 0");
  std::vector<std::size_t> sizes;
  for (int s : parse_counts(a.sizes, "--sizes")) {
    require(s >= 1, "--sizes entries must be positive");
    sizes.push_back(static_cast<std::size_t>(s));
  }
  const GdrfModel model(config.hyperparams());
  std::string out = "# config_hash=" + config_hash(config) + "\n";
  out += "t,n_s,m,samples,iterations,mean_iter_seconds,peak_rss_kb,buffer_bytes\n";
  std::cout.flush();
  std::cerr.flush();
  for (std::size_t t : sizes) {
    const BenchRow row = bench_isolated(config, t, a.iterations, a.warmup);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu,%d,%lld,%d,%d,%.9g,%ld,%zu\n", row.t,
                  config.subsampler.n_s, static_cast<long long>(model.m()), config.samples,
                  a.iterations, row.mean_iter_seconds, row.peak_rss_kb, row.buffer_bytes);
    out += buf;
  }
  write_file_atomic(a.out, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Streaming Gaussian-Dirichlet random fields"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a synthetic dataset from the generative model");
  g->add_option("--config", gen.config, "Run configuration file")->required();
  g->add_option("--out", gen.out, "Dataset CSV to write")->required();
  g->add_option("--truth-out", gen.truth_out,
                "Ground-truth predictions CSV (also writes .theta.csv and .phi.csv)");
  g->add_option("--locations", gen.locations, "'grid' or a CSV of x1[,x2] locations")
      ->capture_default_str();
  g->add_option("--grid", gen.grid, "Grid counts for --locations grid (default: inducing.counts)");
  g->add_option("--count-per-location", gen.count_per_location, "Counts drawn per location")
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed (default: inference.seed)");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Stream a dataset through the S-GDRF trainer");
  f->add_option("--config", fit.config, "Run configuration file")->required();
  f->add_option("--data", fit.data, "Dataset CSV, replayed in file order")->required();
  f->add_option("--checkpoint-out", fit.checkpoint_out, "Checkpoint directory")->required();
  f->add_option("--checkpoint-every", fit.checkpoint_every,
                "Checkpoint stride in records (0: evaluation.checkpoint_stride)")
      ->capture_default_str();
  f->add_option("--log-every", fit.log_every, "Progress line every N iterations (0: off)")
      ->capture_default_str();

  VgpFitArgs vfit;
  auto* v = app.add_subcommand("vgp-fit", "Fit the per-category VGP baseline offline");
  v->add_option("--config", vfit.config, "Run configuration file")->required();
  v->add_option("--data", vfit.data, "Dataset CSV")->required();
  v->add_option("--out", vfit.out, "Checkpoint file to write")->required();

  PredictArgs pa;
  auto* p = app.add_subcommand("predict", "Predict observation distributions from a checkpoint");
  p->add_option("--config", pa.config, "Run configuration file")->required();
  p->add_option("--checkpoint", pa.checkpoint, "S-GDRF or VGP checkpoint")->required();
  p->add_option("--locations", pa.locations, "'grid' or a CSV of x1[,x2] locations")
      ->capture_default_str();
  p->add_option("--grid", pa.grid, "Grid counts for --locations grid (default: inducing.counts)");
  p->add_option("--out", pa.out, "Predictions CSV to write")->required();
  p->add_option("--theta-out", pa.theta_out, "Community weights CSV to write (S-GDRF only)");
  p->add_option("--mode", pa.mode, "plug_in or monte_carlo")->capture_default_str();
  p->add_option("--samples", pa.samples, "Posterior samples in monte_carlo mode")
      ->capture_default_str();
  p->add_option("--seed", pa.seed, "Seed for monte_carlo mode")->capture_default_str();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Predictive KL and coverage at each checkpoint");
  e->add_option("--config", ev.config, "Run configuration file")->required();
  e->add_option("--data", ev.data, "Dataset CSV used for training")->required();
  e->add_option("--checkpoints-dir", ev.checkpoints_dir, "Directory of ckpt_t*.bin (sgdrf)");
  e->add_option("--model", ev.model, "sgdrf or vgp")->capture_default_str();
  e->add_option("--out", ev.out, "Metrics CSV to write")->required();

  LawnmowerArgs lm;
  auto* l = app.add_subcommand("simulate-lawnmower",
                               "Stream a gridded dataset along a lawnmower path");
  l->add_option("--config", lm.config, "Run configuration file (2-D world)")->required();
  l->add_option("--features", lm.features, "Dataset CSV whose locations form a grid")
      ->required();
  l->add_option("--out-map", lm.out_map, "Community map CSV (a .pgm is written alongside)")
      ->required();
  l->add_option("--out-checkpoint", lm.out_checkpoint, "Final checkpoint file");
  l->add_option("--log-every", lm.log_every, "Progress line every N iterations (0: off)")
      ->capture_default_str();

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Per-iteration cost and memory versus buffer size");
  b->add_option("--config", bn.config, "Run configuration file")->required();
  b->add_option("--sizes", bn.sizes, "Comma-separated buffer sizes")->capture_default_str();
  b->add_option("--out", bn.out, "Benchmark CSV to write")->required();
  b->add_option("--iterations", bn.iterations, "Timed iterations per size (>= 100)")
      ->capture_default_str();
  b->add_option("--warmup", bn.warmup, "Untimed warmup iterations")->capture_default_str();

  std::vector<const char*> argv{"sgdrf"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (f->parsed()) return cmd_fit(fit);
    if (v->parsed()) return cmd_vgp_fit(vfit);
    if (p->parsed()) return cmd_predict(pa);
    if (e->parsed()) return cmd_evaluate(ev);
    if (l->parsed()) return cmd_simulate_lawnmower(lm);
    if (b->parsed()) return cmd_bench(bn);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidationError;
  } catch (const IoError& err) {
    std::cerr << "I/O error: " << err.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "I/O error: " << err.what() << "\n";
    return kIoError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  }
  return kValidationError;
}

}  // namespace sgdrf::cli
