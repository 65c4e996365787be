#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sgdrf/geometry.hpp"

namespace sgdrf {

// Anisotropic squared-exponential kernel parameters.
struct KernelParams {
  double variance = 1.0;
  std::vector<double> lengthscales;

  void validate() const;
};

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter_used = 0.0;  // relative to the mean diagonal

  Eigen::Index size() const { return lower.rows(); }
};

inline constexpr double kDefaultJitter = 1e-6;
inline constexpr double kMaxJitter = 1e-2;

double rbf_kernel(const Location& a, const Location& b,
                  const KernelParams& params);

Eigen::MatrixXd gram(const std::vector<Location>& points_a,
                     const std::vector<Location>& points_b,
                     const KernelParams& params);

// Factor mat + jitter * mean(diag) * I, escalating jitter tenfold from
// base_jitter until the factorization succeeds or jitter exceeds kMaxJitter.
CholeskyFactor cholesky_jittered(const Eigen::MatrixXd& mat,
                                 double base_jitter = kDefaultJitter);

// A = K_XZ * K_ZZ^{-1}, one row per query.
Eigen::MatrixXd conditional_weights(const std::vector<Location>& queries,
                                    const std::vector<Location>& inducing,
                                    const KernelParams& params,
                                    const CholeskyFactor& chol_zz);

// mean_const + A * u, where u holds inducing-value deviations from the mean.
Eigen::VectorXd gp_conditional_mean(const Eigen::MatrixXd& weights,
                                    const Eigen::VectorXd& u,
                                    double mean_const);

// The fixed inducing-point prior shared by all latent fields: inducing
// locations, kernel, and the factor of their Gram matrix. Whitened inducing
// values v map to deviations u = L v.
class InducingPrior {
 public:
  InducingPrior(std::vector<Location> inducing, KernelParams kernel);

  Eigen::Index size() const { return chol_.size(); }
  const std::vector<Location>& points() const { return points_; }
  const KernelParams& kernel() const { return kernel_; }
  const CholeskyFactor& chol() const { return chol_; }

  Eigen::MatrixXd weights(const std::vector<Location>& queries) const;
  Eigen::VectorXd weight_row(const Location& query) const;
  Eigen::VectorXd unwhiten(const Eigen::VectorXd& v) const;

 private:
  std::vector<Location> points_;
  KernelParams kernel_;
  CholeskyFactor chol_;
};

}  // namespace sgdrf
