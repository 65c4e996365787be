#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "sgdrf/model_types.hpp"

namespace sgdrf {

using Rng = std::mt19937_64;

inline constexpr double kSimplexClamp = 1e-12;

// Full-covariance Gaussian N(mean, L L^T) in unconstrained form: the
// diagonal of L is stored as its log, the strict lower triangle row by row.
struct GaussianVarParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_diag;
  Eigen::VectorXd strict_lower;

  static GaussianVarParams isotropic(Eigen::Index m, double scale);
  static Eigen::Index param_count(Eigen::Index m) {
    return m + m * (m + 1) / 2;
  }

  Eigen::Index dim() const { return mean.size(); }
  Eigen::MatrixXd chol() const;

  void pack(double* out) const;
  static GaussianVarParams unpack(const double* in, Eigen::Index m);
};

// Dirichlet(gamma) stored as log gamma.
struct DirichletVarParams {
  Eigen::VectorXd log_gamma;

  static DirichletVarParams from_gamma(const Eigen::VectorXd& gamma);
  Eigen::VectorXd gamma() const { return log_gamma.array().exp(); }
  Eigen::VectorXd mean() const;
  Eigen::Index dim() const { return log_gamma.size(); }
};

// Precomputed factor of a Gaussian variational family, shared across the
// samples drawn in one gradient estimate.
class GaussianDensity {
 public:
  explicit GaussianDensity(const GaussianVarParams& params);

  Eigen::VectorXd sample(Rng& rng) const;
  double log_q(const Eigen::VectorXd& x) const;
  // Gradient of log q w.r.t. (mean, log_diag, strict_lower), written into
  // out[0 .. param_count).
  void score(const Eigen::VectorXd& x, double* out) const;

  // x = mean + L eps. The noise-based forms take eps directly and are exact
  // even when L is ill-conditioned.
  Eigen::VectorXd draw_noise(Rng& rng) const;
  Eigen::VectorXd point(const Eigen::VectorXd& eps) const;
  double log_q_noise(const Eigen::VectorXd& eps) const;
  void score_noise(const Eigen::VectorXd& eps, double* out) const;

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::MatrixXd& chol() const { return chol_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;

  void score_whitened(const Eigen::VectorXd& r, double* out) const;
};

class DirichletDensity {
 public:
  explicit DirichletDensity(const DirichletVarParams& params);

  // Normalized Gamma draws, clamped to [kSimplexClamp, 1 - kSimplexClamp]
  // and renormalized.
  Eigen::VectorXd sample(Rng& rng) const;
  double log_q(const Eigen::VectorXd& x) const;
  // Gradient of log q w.r.t. log gamma.
  void score(const Eigen::VectorXd& x, double* out) const;

  Eigen::Index dim() const { return gamma_.size(); }

 private:
  Eigen::VectorXd gamma_;
  Eigen::VectorXd digamma_;
  double digamma_sum_ = 0.0;
  double log_norm_ = 0.0;
};

Eigen::VectorXd sample_gaussian(const GaussianVarParams& params, Rng& rng);
double log_q_gaussian(const GaussianVarParams& params, const Eigen::VectorXd& x);
Eigen::VectorXd score_q_gaussian(const GaussianVarParams& params,
                                 const Eigen::VectorXd& x);

Eigen::VectorXd sample_dirichlet(const DirichletVarParams& params, Rng& rng);
double log_q_dirichlet(const DirichletVarParams& params,
                       const Eigen::VectorXd& x);
Eigen::VectorXd score_q_dirichlet(const DirichletVarParams& params,
                                  const Eigen::VectorXd& x);

// Mean-field posterior over K whitened inducing fields and K rows of Phi.
// Flat layout: K Gaussian blocks, then K Dirichlet blocks.
struct VariationalState {
  std::vector<GaussianVarParams> gp;
  std::vector<DirichletVarParams> phi;
  std::uint64_t step_count = 0;

  static inline constexpr double kInitScale = 0.1;

  // Means 0, chol_cov = 0.1 I, gamma = beta.
  static VariationalState initial(int K, Eigen::Index m,
                                  const Eigen::VectorXd& beta);

  int K() const { return static_cast<int>(gp.size()); }
  Eigen::Index m() const { return gp.empty() ? 0 : gp.front().dim(); }
  Eigen::Index W() const { return phi.empty() ? 0 : phi.front().dim(); }

  static Eigen::Index param_count(int K, Eigen::Index m, Eigen::Index W) {
    return K * GaussianVarParams::param_count(m) + K * W;
  }
  Eigen::Index param_count() const { return param_count(K(), m(), W()); }
  Eigen::Index gaussian_offset(int k) const {
    return k * GaussianVarParams::param_count(m());
  }
  Eigen::Index dirichlet_offset(int k) const {
    return K() * GaussianVarParams::param_count(m()) + k * W();
  }

  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& params);
};

// A joint sample together with the standard-normal noise of each Gaussian block.
struct JointDraw {
  PosteriorSample sample;
  std::vector<Eigen::VectorXd> noise;
};

// The K + K component densities of a state, built once per gradient step.
class JointDensity {
 public:
  explicit JointDensity(const VariationalState& state);

  PosteriorSample sample(Rng& rng) const;
  Eigen::VectorXd log_q_gaussian_blocks(const PosteriorSample& s) const;
  Eigen::VectorXd log_q_dirichlet_blocks(const PosteriorSample& s) const;
  double log_q(const PosteriorSample& s) const;
  void score(const PosteriorSample& s, double* out) const;

  JointDraw draw(Rng& rng) const;
  Eigen::VectorXd log_q_gaussian_blocks(const JointDraw& d) const;
  void score(const JointDraw& d, double* out) const;

  int K() const { return static_cast<int>(gaussians_.size()); }
  Eigen::Index m() const { return gaussians_.front().dim(); }
  Eigen::Index W() const { return dirichlets_.front().dim(); }

 private:
  std::vector<GaussianDensity> gaussians_;
  std::vector<DirichletDensity> dirichlets_;
};

PosteriorSample sample_joint(const VariationalState& state, Rng& rng);
double log_q_joint(const VariationalState& state, const PosteriorSample& sample);
Eigen::VectorXd score_q_joint(const VariationalState& state,
                              const PosteriorSample& sample);

}  // namespace sgdrf
