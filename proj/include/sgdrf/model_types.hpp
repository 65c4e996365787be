#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "sgdrf/geometry.hpp"
#include "sgdrf/gp_algebra.hpp"

namespace sgdrf {

struct CategoryCount {
  int category = 0;
  std::int64_t count = 0;

  bool operator==(const CategoryCount&) const = default;
};

// One multinomial sample event: a location and its category counts. Counts
// are stored sparsely (nonzero entries only, ascending category) so that
// records stay small when the category count W is in the tens of thousands.
struct ObservationRecord {
  Location location;
  int num_categories = 0;
  std::vector<CategoryCount> counts;

  static ObservationRecord from_dense(const Location& location,
                                      std::span<const std::int64_t> dense);

  std::int64_t total() const;
  std::int64_t count(int category) const;
  std::vector<std::int64_t> dense() const;
  // counts / total; all zeros when total is zero.
  Eigen::VectorXd frequencies() const;

  bool operator==(const ObservationRecord&) const = default;
};

// K x W matrix whose rows lie on the probability simplex.
class PhiMatrix {
 public:
  PhiMatrix() = default;
  explicit PhiMatrix(Eigen::MatrixXd rows);

  const Eigen::MatrixXd& rows() const { return rows_; }
  Eigen::Index communities() const { return rows_.rows(); }
  Eigen::Index categories() const { return rows_.cols(); }

 private:
  Eigen::MatrixXd rows_;
};

// One joint draw of the latents. `u` holds whitened inducing deviations, one
// row per community; the GP prior on them is standard normal.
struct PosteriorSample {
  Eigen::MatrixXd u;
  PhiMatrix phi;
};

// Per-query community weights and observation distributions. `theta` has
// zero columns for models without community structure.
struct PredictiveDistribution {
  std::vector<Location> locations;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd p_obs;
};

struct ModelHyperparams {
  int K = 1;
  int W = 2;
  Eigen::VectorXd beta;  // length W
  double gp_mean = 0.0;
  KernelParams kernel;
  RegularGrid inducing;

  void validate() const;
};

}  // namespace sgdrf
