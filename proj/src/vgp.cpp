#include "sgdrf/vgp.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

namespace {

// Rows b(x) = L^-1 k_Z(x): the whitened projection of each location.
Eigen::MatrixXd whitened_rows(const std::vector<Location>& xs,
                              const GdrfModel& model) {
  const InducingPrior& prior = model.prior();
  Eigen::MatrixXd kzx = gram(prior.points(), xs, prior.kernel());
  prior.chol().lower.triangularView<Eigen::Lower>().solveInPlace(kzx);
  return kzx.transpose();
}

struct RegressionData {
  std::vector<Location> locations;
  Eigen::MatrixXd rows;     // n x m
  Eigen::MatrixXd targets;  // n x W, relative abundances minus gp_mean
  Eigen::VectorXd residual_var;
};

RegressionData regression_data(const std::vector<ObservationRecord>& records,
                               const GdrfModel& model, bool report) {
  RegressionData d;
  std::vector<const ObservationRecord*> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(records[i].num_categories == model.W(),
            "vgp: record " + std::to_string(i + 1) + " has the wrong category count");
    if (records[i].total() == 0) {
      if (report)
        std::cerr << "vgp: record " << i + 1 << " has zero total count; excluded\n";
      continue;
    }
    kept.push_back(&records[i]);
    d.locations.push_back(records[i].location);
  }
  require(!kept.empty(), "vgp_fit needs at least one record with positive counts");
  d.rows = whitened_rows(d.locations, model);
  d.targets.resize(static_cast<Eigen::Index>(kept.size()), model.W());
  for (std::size_t i = 0; i < kept.size(); ++i)
    d.targets.row(static_cast<Eigen::Index>(i)) = kept[i]->frequencies().transpose();
  d.targets.array() -= model.hyper().gp_mean;
  d.residual_var = (model.hyper().kernel.variance -
                    d.rows.rowwise().squaredNorm().array())
                       .cwiseMax(0.0)
                       .matrix();
  return d;
}

}  // namespace

void VgpConfig::validate() const {
  require(noise_var > 0.0 && std::isfinite(noise_var), "vgp.noise_var must be positive");
  require(iterations >= 0, "vgp.iterations must be >= 0");
  adam.validate();
}

VgpState vgp_prior_state(int W, Eigen::Index m, double noise_var) {
  VgpState s;
  for (int c = 0; c < W; ++c) {
    s.categories.push_back(GaussianVarParams::isotropic(m, 1.0));
    s.noise_var.push_back(noise_var);
  }
  return s;
}

VgpState vgp_fit(const std::vector<ObservationRecord>& records,
                 const GdrfModel& model, const VgpConfig& config) {
  config.validate();
  require(!records.empty(), "vgp_fit needs at least one record");
  const RegressionData data = regression_data(records, model, true);
  const Eigen::Index m = model.m();
  VgpState state = vgp_prior_state(model.W(), m, config.noise_var);
  if (config.iterations == 0) return state;

  const Eigen::MatrixXd gram_rows = data.rows.transpose() * data.rows;  // G
  const Eigen::MatrixXd proj = data.rows.transpose() * data.targets;    // m x W
  const double inv_noise = 1.0 / config.noise_var;
  const Eigen::Index P = GaussianVarParams::param_count(m);

  for (int c = 0; c < model.W(); ++c) {
    Eigen::VectorXd params(P);
    state.categories[static_cast<std::size_t>(c)].pack(params.data());
    OptimizerState opt = OptimizerState::zeros(P, config.adam);
    Eigen::VectorXd grad(P);
    for (int it = 0; it < config.iterations; ++it) {
      const GaussianVarParams q = GaussianVarParams::unpack(params.data(), m);
      const Eigen::MatrixXd chol = q.chol();
      // d/dmean = (r - G mean) / noise - mean
      grad.head(m) = inv_noise * (proj.col(c) - gram_rows * q.mean) - q.mean;
      // d/dC = tril(-G C / noise - C) + diag(1 / C_ii)
      const Eigen::MatrixXd dchol =
          -inv_noise * (gram_rows * chol.triangularView<Eigen::Lower>()) - chol;
      Eigen::Index idx = 2 * m;
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) grad[idx++] = dchol(i, j);
        grad[m + i] = chol(i, i) * dchol(i, i) + 1.0;
      }
      optimizer_step(opt, params, grad);
    }
    state.categories[static_cast<std::size_t>(c)] = GaussianVarParams::unpack(params.data(), m);
  }
  return state;
}

double vgp_elbo(const GaussianVarParams& q, const std::vector<ObservationRecord>& records,
                int category, const GdrfModel& model, double noise_var) {
  const RegressionData data = regression_data(records, model, false);
  const auto n = static_cast<double>(data.rows.rows());
  const Eigen::MatrixXd chol = q.chol();
  const Eigen::MatrixXd proj_cov = data.rows * chol;  // rows of b_i^T C
  const Eigen::VectorXd resid = data.targets.col(category) - data.rows * q.mean;
  const double expected_sq =
      resid.squaredNorm() + proj_cov.squaredNorm() + data.residual_var.sum();
  const double m = static_cast<double>(q.dim());
  const double kl = 0.5 * (chol.squaredNorm() + q.mean.squaredNorm() - m) -
                    q.log_diag.sum();
  return -0.5 * n * std::log(2.0 * std::numbers::pi * noise_var) -
         0.5 * expected_sq / noise_var - kl;
}

PredictiveDistribution vgp_predict(const VgpState& state,
                                   const std::vector<Location>& queries,
                                   const GdrfModel& model) {
  require(state.W() == model.W() && state.m() == model.m(),
          "vgp_predict: state dimensions do not match the model");
  PredictiveDistribution out;
  out.locations = queries;
  out.theta.resize(static_cast<Eigen::Index>(queries.size()), 0);
  out.p_obs.resize(static_cast<Eigen::Index>(queries.size()), model.W());
  if (queries.empty()) return out;
  const Eigen::MatrixXd rows = whitened_rows(queries, model);
  for (int c = 0; c < model.W(); ++c)
    out.p_obs.col(c) = rows * state.categories[static_cast<std::size_t>(c)].mean;
  out.p_obs.array() += model.hyper().gp_mean;
  out.p_obs = out.p_obs.cwiseMax(kVgpFloor);
  for (Eigen::Index i = 0; i < out.p_obs.rows(); ++i)
    out.p_obs.row(i) /= out.p_obs.row(i).sum();
  return out;
}

std::size_t vgp_parameter_count(int W, Eigen::Index m) {
  return static_cast<std::size_t>(W) *
             static_cast<std::size_t>(GaussianVarParams::param_count(m)) +
         static_cast<std::size_t>(W);
}

std::size_t sgdrf_parameter_count(int K, int W, Eigen::Index m) {
  return static_cast<std::size_t>(VariationalState::param_count(K, m, W));
}

}  // namespace sgdrf
