#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgdrf/geometry.hpp"
#include "sgdrf/gp_algebra.hpp"
#include "sgdrf/inference.hpp"
#include "sgdrf/model_types.hpp"
#include "sgdrf/vgp.hpp"

namespace sgdrf {

// Every experiment knob, loaded from a sectioned key = value file:
//
//   [world]      dim, lower, upper
//   [model]      K, W, beta, gp_mean
//   [kernel]     variance, lengthscales
//   [inducing]   counts
//   [inference]  n_s, decay, correct_bias, samples, iters_per_obs, lr, seed
//   [vgp]        noise_var, iterations
//   [metrics]    epsilon
//   [evaluation] checkpoint_stride
//
// Lists are comma separated. world.*, model.K, model.W, kernel.lengthscales
// and inducing.counts are required; everything else has a default.
struct RunConfig {
  WorldBounds world;
  int K = 0;
  int W = 0;
  std::vector<double> beta{0.1};  // one value (shared) or W values
  double gp_mean = 0.0;
  KernelParams kernel;
  std::vector<int> inducing_counts;
  SubsamplerConfig subsampler;
  int samples = 8;
  int iters_per_obs = 10;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double vgp_noise_var = 0.01;
  int vgp_iterations = 1000;
  double epsilon = 1e-3;
  int checkpoint_stride = 10;

  std::size_t dim() const { return world.dim(); }

  // Throws ValidationError with a section.key qualified message.
  void validate() const;

  ModelHyperparams hyperparams() const;
  EngineConfig engine_config() const;
  VgpConfig vgp_config() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(dump_config(c)) reproduces c exactly.
std::string dump_config(const RunConfig& config);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace sgdrf
