#pragma once

#include <cstddef>
#include <vector>

#include "sgdrf/inference.hpp"
#include "sgdrf/latent_model.hpp"
#include "sgdrf/variational.hpp"

namespace sgdrf {

// Baseline: one sparse variational GP regression per observation category,
// fit offline to relative abundances with a Gaussian likelihood. Shares the
// whitened inducing prior (kernel, grid, gp_mean) of the S-GDRF model.
struct VgpState {
  std::vector<GaussianVarParams> categories;
  std::vector<double> noise_var;

  int W() const { return static_cast<int>(categories.size()); }
  Eigen::Index m() const { return categories.empty() ? 0 : categories.front().dim(); }
};

struct VgpConfig {
  double noise_var = 0.01;
  int iterations = 1000;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8};

  void validate() const;
};

// Prior state: mean 0, identity covariance in whitened coordinates.
VgpState vgp_prior_state(int W, Eigen::Index m, double noise_var);

// Records with zero total count are skipped with a diagnostic on stderr.
VgpState vgp_fit(const std::vector<ObservationRecord>& records,
                 const GdrfModel& model, const VgpConfig& config);

// Exact sparse variational ELBO of one category's regression, for tests and
// diagnostics.
double vgp_elbo(const GaussianVarParams& q, const std::vector<ObservationRecord>& records,
                int category, const GdrfModel& model, double noise_var);

// Posterior means clamped at 1e-6 and renormalized across categories.
// `theta` is left with zero columns.
PredictiveDistribution vgp_predict(const VgpState& state,
                                   const std::vector<Location>& queries,
                                   const GdrfModel& model);

inline constexpr double kVgpFloor = 1e-6;

std::size_t vgp_parameter_count(int W, Eigen::Index m);
std::size_t sgdrf_parameter_count(int K, int W, Eigen::Index m);

}  // namespace sgdrf
