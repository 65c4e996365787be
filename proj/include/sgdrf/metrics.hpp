#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "sgdrf/geometry.hpp"
#include "sgdrf/model_types.hpp"

namespace sgdrf {

inline constexpr double kDefaultKlEpsilon = 1e-3;

// Predictive KL summary at one checkpoint: median and quartiles of the
// per-location divergence between the model forecast and what was later
// observed there.
struct PklSummary {
  std::size_t checkpoint_t = 0;
  std::vector<double> per_location_kl;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double coverage_fraction = 0.0;
};

// KL(p || q) in nats after smoothing both as (x + eps) / (1 + W eps).
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                     double epsilon = kDefaultKlEpsilon);

// Linear-interpolation quantile of unsorted values, prob in [0, 1].
double quantile(std::vector<double> values, double prob);

// KL(model row || empirical frequencies) per future record.
PklSummary pkl_checkpoint(const PredictiveDistribution& predictions,
                          std::span<const ObservationRecord> future_records,
                          double epsilon = kDefaultKlEpsilon);

// Fraction of unobserved points within scaled distance 1 of an observed point.
double coverage_fraction(const std::vector<Location>& observed,
                         const std::vector<Location>& unobserved,
                         std::span<const double> lengthscales);

}  // namespace sgdrf
