#include "sgdrf/gp_algebra.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

void KernelParams::validate() const {
  require(std::isfinite(variance) && variance > 0.0,
          "kernel variance must be positive");
  require(!lengthscales.empty(), "kernel lengthscales must not be empty");
  for (double l : lengthscales)
    require(std::isfinite(l) && l > 0.0, "kernel lengthscales must be positive");
}

double rbf_kernel(const Location& a, const Location& b,
                  const KernelParams& params) {
  const double r = scaled_distance(a, b, params.lengthscales);
  return params.variance * std::exp(-0.5 * r * r);
}

Eigen::MatrixXd gram(const std::vector<Location>& points_a,
                     const std::vector<Location>& points_b,
                     const KernelParams& params) {
  require(!points_a.empty() && !points_b.empty(), "gram: empty point list");
  const auto na = static_cast<Eigen::Index>(points_a.size());
  const auto nb = static_cast<Eigen::Index>(points_b.size());
  const std::size_t d = params.lengthscales.size();
  for (const auto& p : points_a) require(p.dim() == d, "gram: dimension mismatch");
  for (const auto& p : points_b) require(p.dim() == d, "gram: dimension mismatch");

  Eigen::MatrixXd k(na, nb);
  for (Eigen::Index j = 0; j < nb; ++j) {
    const Location& b = points_b[j];
    for (Eigen::Index i = 0; i < na; ++i) {
      const Location& a = points_a[i];
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double z = (a[c] - b[c]) / params.lengthscales[c];
        r2 += z * z;
      }
      k(i, j) = params.variance * std::exp(-0.5 * r2);
    }
  }
  return k;
}

CholeskyFactor cholesky_jittered(const Eigen::MatrixXd& mat,
                                 double base_jitter) {
  require(mat.rows() == mat.cols() && mat.rows() > 0,
          "cholesky: matrix must be square and nonempty");
  require(base_jitter >= 0.0, "cholesky: jitter must be nonnegative");
  const double scale = std::max(mat.diagonal().mean(), 0.0);
  const double sym_tol = 1e-8 * std::max(1.0, mat.cwiseAbs().maxCoeff());
  require((mat - mat.transpose()).cwiseAbs().maxCoeff() <= sym_tol,
          "cholesky: matrix is not symmetric");

  std::ostringstream tried;
  double jitter = base_jitter;
  while (true) {
    Eigen::MatrixXd a = mat;
    a.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd l = llt.matrixL();
      if ((l.diagonal().array() > 0.0).all() && l.allFinite())
        return CholeskyFactor{std::move(l), jitter};
    }
    tried << (tried.tellp() > 0 ? ", " : "") << jitter;
    const double next = std::max(jitter, 1e-12) * 10.0;
    if (next > kMaxJitter * (1.0 + 1e-9)) break;
    jitter = next;
  }
  throw NumericalError("ill-conditioned matrix: Cholesky failed with relative "
                       "jitter sequence [" + tried.str() + "]");
}

Eigen::MatrixXd conditional_weights(const std::vector<Location>& queries,
                                    const std::vector<Location>& inducing,
                                    const KernelParams& params,
                                    const CholeskyFactor& chol_zz) {
  require(static_cast<Eigen::Index>(inducing.size()) == chol_zz.size(),
          "conditional_weights: factor size does not match inducing set");
  Eigen::MatrixXd kzx = gram(inducing, queries, params);
  const auto l = chol_zz.lower.triangularView<Eigen::Lower>();
  l.solveInPlace(kzx);
  l.transpose().solveInPlace(kzx);
  return kzx.transpose();
}

Eigen::VectorXd gp_conditional_mean(const Eigen::MatrixXd& weights,
                                    const Eigen::VectorXd& u,
                                    double mean_const) {
  require(weights.cols() == u.size(),
          "gp_conditional_mean: expected " + std::to_string(weights.cols()) +
              " inducing values, got " + std::to_string(u.size()));
  Eigen::VectorXd out = weights * u;
  out.array() += mean_const;
  return out;
}

InducingPrior::InducingPrior(std::vector<Location> inducing, KernelParams kernel)
    : points_(std::move(inducing)), kernel_(std::move(kernel)) {
  kernel_.validate();
  chol_ = cholesky_jittered(gram(points_, points_, kernel_));
}

Eigen::MatrixXd InducingPrior::weights(
    const std::vector<Location>& queries) const {
  return conditional_weights(queries, points_, kernel_, chol_);
}

Eigen::VectorXd InducingPrior::weight_row(const Location& query) const {
  Eigen::VectorXd k(size());
  for (Eigen::Index j = 0; j < size(); ++j)
    k[j] = rbf_kernel(points_[j], query, kernel_);
  const auto l = chol_.lower.triangularView<Eigen::Lower>();
  l.solveInPlace(k);
  l.transpose().solveInPlace(k);
  return k;
}

Eigen::VectorXd InducingPrior::unwhiten(const Eigen::VectorXd& v) const {
  return chol_.lower.triangularView<Eigen::Lower>() * v;
}

}  // namespace sgdrf
