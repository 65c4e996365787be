#include "sgdrf/variational.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <numbers>

#include "sgdrf/error.hpp"

namespace sgdrf {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double digamma(double x) { return boost::math::digamma(x); }

}  // namespace

GaussianVarParams GaussianVarParams::isotropic(Eigen::Index m, double scale) {
  GaussianVarParams p;
  p.mean = Eigen::VectorXd::Zero(m);
  p.log_diag = Eigen::VectorXd::Constant(m, std::log(scale));
  p.strict_lower = Eigen::VectorXd::Zero(m * (m - 1) / 2);
  return p;
}

Eigen::MatrixXd GaussianVarParams::chol() const {
  const Eigen::Index m = dim();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) l(i, j) = strict_lower[idx++];
    l(i, i) = std::exp(log_diag[i]);
  }
  return l;
}

void GaussianVarParams::pack(double* out) const {
  const Eigen::Index m = dim();
  Eigen::Map<Eigen::VectorXd>(out, m) = mean;
  Eigen::Map<Eigen::VectorXd>(out + m, m) = log_diag;
  Eigen::Map<Eigen::VectorXd>(out + 2 * m, strict_lower.size()) = strict_lower;
}

GaussianVarParams GaussianVarParams::unpack(const double* in, Eigen::Index m) {
  GaussianVarParams p;
  p.mean = Eigen::Map<const Eigen::VectorXd>(in, m);
  p.log_diag = Eigen::Map<const Eigen::VectorXd>(in + m, m);
  p.strict_lower = Eigen::Map<const Eigen::VectorXd>(in + 2 * m, m * (m - 1) / 2);
  return p;
}

DirichletVarParams DirichletVarParams::from_gamma(const Eigen::VectorXd& gamma) {
  require((gamma.array() > 0.0).all(), "Dirichlet parameters must be positive");
  return DirichletVarParams{gamma.array().log().matrix()};
}

Eigen::VectorXd DirichletVarParams::mean() const {
  Eigen::VectorXd g = gamma();
  return g / g.sum();
}

GaussianDensity::GaussianDensity(const GaussianVarParams& params)
    : mean_(params.mean), chol_(params.chol()), log_det_(params.log_diag.sum()) {}

Eigen::VectorXd GaussianDensity::sample(Rng& rng) const {
  return point(draw_noise(rng));
}

Eigen::VectorXd GaussianDensity::draw_noise(Rng& rng) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) eps[i] = normal(rng);
  return eps;
}

Eigen::VectorXd GaussianDensity::point(const Eigen::VectorXd& eps) const {
  return mean_ + chol_.triangularView<Eigen::Lower>() * eps;
}

double GaussianDensity::log_q_noise(const Eigen::VectorXd& eps) const {
  return -0.5 * static_cast<double>(dim()) * kLog2Pi - log_det_ -
         0.5 * eps.squaredNorm();
}

void GaussianDensity::score_noise(const Eigen::VectorXd& eps, double* out) const {
  score_whitened(eps, out);
}

double GaussianDensity::log_q(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r = x - mean_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(r);
  return -0.5 * static_cast<double>(dim()) * kLog2Pi - log_det_ -
         0.5 * r.squaredNorm();
}

void GaussianDensity::score(const Eigen::VectorXd& x, double* out) const {
  Eigen::VectorXd r = x - mean_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(r);
  score_whitened(r, out);
}

void GaussianDensity::score_whitened(const Eigen::VectorXd& r, double* out) const {
  // With r = L^-1 (x - mean) and s = L^-T r:
  //   d/dmean = s,  d/dL = tril(s r^T) - diag(1 / L_ii).
  const Eigen::Index m = dim();
  Eigen::VectorXd s = r;
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(s);

  Eigen::Map<Eigen::VectorXd>(out, m) = s;
  double* diag = out + m;
  double* lower = out + 2 * m;
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double si = s[i];
    for (Eigen::Index j = 0; j < i; ++j) lower[idx++] = si * r[j];
    diag[i] = si * r[i] * chol_(i, i) - 1.0;
  }
}

DirichletDensity::DirichletDensity(const DirichletVarParams& params)
    : gamma_(params.gamma()) {
  const double total = gamma_.sum();
  digamma_.resize(gamma_.size());
  double lgamma_sum = 0.0;
  for (Eigen::Index w = 0; w < gamma_.size(); ++w) {
    digamma_[w] = digamma(gamma_[w]);
    lgamma_sum += std::lgamma(gamma_[w]);
  }
  digamma_sum_ = digamma(total);
  log_norm_ = std::lgamma(total) - lgamma_sum;
}

Eigen::VectorXd DirichletDensity::sample(Rng& rng) const {
  Eigen::VectorXd x(dim());
  for (Eigen::Index w = 0; w < dim(); ++w) {
    std::gamma_distribution<double> g(gamma_[w], 1.0);
    x[w] = g(rng);
  }
  double total = x.sum();
  if (!(total > 0.0)) {
    x.setConstant(1.0);
    total = static_cast<double>(dim());
  }
  x /= total;
  x = x.cwiseMax(kSimplexClamp).cwiseMin(1.0 - kSimplexClamp);
  return x / x.sum();
}

double DirichletDensity::log_q(const Eigen::VectorXd& x) const {
  return log_norm_ +
         ((gamma_.array() - 1.0) * x.array().log()).sum();
}

void DirichletDensity::score(const Eigen::VectorXd& x, double* out) const {
  for (Eigen::Index w = 0; w < dim(); ++w)
    out[w] = gamma_[w] * (digamma_sum_ - digamma_[w] + std::log(x[w]));
}

Eigen::VectorXd sample_gaussian(const GaussianVarParams& params, Rng& rng) {
  return GaussianDensity(params).sample(rng);
}

double log_q_gaussian(const GaussianVarParams& params, const Eigen::VectorXd& x) {
  require(x.size() == params.dim(), "log_q_gaussian: dimension mismatch");
  return GaussianDensity(params).log_q(x);
}

Eigen::VectorXd score_q_gaussian(const GaussianVarParams& params,
                                 const Eigen::VectorXd& x) {
  require(x.size() == params.dim(), "score_q_gaussian: dimension mismatch");
  Eigen::VectorXd out(GaussianVarParams::param_count(params.dim()));
  GaussianDensity(params).score(x, out.data());
  return out;
}

Eigen::VectorXd sample_dirichlet(const DirichletVarParams& params, Rng& rng) {
  return DirichletDensity(params).sample(rng);
}

double log_q_dirichlet(const DirichletVarParams& params,
                       const Eigen::VectorXd& x) {
  require(x.size() == params.dim(), "log_q_dirichlet: dimension mismatch");
  return DirichletDensity(params).log_q(x);
}

Eigen::VectorXd score_q_dirichlet(const DirichletVarParams& params,
                                  const Eigen::VectorXd& x) {
  require(x.size() == params.dim(), "score_q_dirichlet: dimension mismatch");
  Eigen::VectorXd out(params.dim());
  DirichletDensity(params).score(x, out.data());
  return out;
}

VariationalState VariationalState::initial(int K, Eigen::Index m,
                                           const Eigen::VectorXd& beta) {
  require(K >= 1 && m >= 1 && beta.size() >= 2,
          "variational state: invalid dimensions");
  VariationalState s;
  for (int k = 0; k < K; ++k) {
    s.gp.push_back(GaussianVarParams::isotropic(m, kInitScale));
    s.phi.push_back(DirichletVarParams::from_gamma(beta));
  }
  return s;
}

Eigen::VectorXd VariationalState::flat() const {
  Eigen::VectorXd out(param_count());
  for (int k = 0; k < K(); ++k) gp[k].pack(out.data() + gaussian_offset(k));
  for (int k = 0; k < K(); ++k)
    out.segment(dirichlet_offset(k), W()) = phi[k].log_gamma;
  return out;
}

void VariationalState::set_flat(const Eigen::VectorXd& params) {
  require(params.size() == param_count(),
          "variational state: parameter vector has length " +
              std::to_string(params.size()) + ", expected " +
              std::to_string(param_count()));
  const Eigen::Index m_ = m();
  for (int k = 0; k < K(); ++k)
    gp[k] = GaussianVarParams::unpack(params.data() + gaussian_offset(k), m_);
  for (int k = 0; k < K(); ++k)
    phi[k].log_gamma = params.segment(dirichlet_offset(k), W());
}

JointDensity::JointDensity(const VariationalState& state) {
  gaussians_.reserve(state.gp.size());
  dirichlets_.reserve(state.phi.size());
  for (const auto& g : state.gp) gaussians_.emplace_back(g);
  for (const auto& d : state.phi) dirichlets_.emplace_back(d);
}

PosteriorSample JointDensity::sample(Rng& rng) const {
  return draw(rng).sample;
}

JointDraw JointDensity::draw(Rng& rng) const {
  std::vector<Eigen::VectorXd> noise;
  noise.reserve(gaussians_.size());
  Eigen::MatrixXd u(K(), m());
  for (int k = 0; k < K(); ++k) {
    noise.push_back(gaussians_[k].draw_noise(rng));
    u.row(k) = gaussians_[k].point(noise.back()).transpose();
  }
  Eigen::MatrixXd phi(K(), W());
  for (int k = 0; k < K(); ++k) phi.row(k) = dirichlets_[k].sample(rng).transpose();
  return JointDraw{PosteriorSample{std::move(u), PhiMatrix(std::move(phi))},
                   std::move(noise)};
}

Eigen::VectorXd JointDensity::log_q_gaussian_blocks(const JointDraw& d) const {
  Eigen::VectorXd out(K());
  for (int k = 0; k < K(); ++k) out[k] = gaussians_[k].log_q_noise(d.noise[k]);
  return out;
}

void JointDensity::score(const JointDraw& d, double* out) const {
  const Eigen::Index gsize = GaussianVarParams::param_count(m());
  for (int k = 0; k < K(); ++k)
    gaussians_[k].score_noise(d.noise[k], out + k * gsize);
  double* dir = out + K() * gsize;
  for (int k = 0; k < K(); ++k)
    dirichlets_[k].score(d.sample.phi.rows().row(k).transpose(), dir + k * W());
}

Eigen::VectorXd JointDensity::log_q_gaussian_blocks(
    const PosteriorSample& s) const {
  Eigen::VectorXd out(K());
  for (int k = 0; k < K(); ++k)
    out[k] = gaussians_[k].log_q(s.u.row(k).transpose());
  return out;
}

Eigen::VectorXd JointDensity::log_q_dirichlet_blocks(
    const PosteriorSample& s) const {
  Eigen::VectorXd out(K());
  for (int k = 0; k < K(); ++k)
    out[k] = dirichlets_[k].log_q(s.phi.rows().row(k).transpose());
  return out;
}

double JointDensity::log_q(const PosteriorSample& s) const {
  return log_q_gaussian_blocks(s).sum() + log_q_dirichlet_blocks(s).sum();
}

void JointDensity::score(const PosteriorSample& s, double* out) const {
  const Eigen::Index gsize = GaussianVarParams::param_count(m());
  for (int k = 0; k < K(); ++k)
    gaussians_[k].score(s.u.row(k).transpose(), out + k * gsize);
  double* dir = out + K() * gsize;
  for (int k = 0; k < K(); ++k)
    dirichlets_[k].score(s.phi.rows().row(k).transpose(), dir + k * W());
}

PosteriorSample sample_joint(const VariationalState& state, Rng& rng) {
  return JointDensity(state).sample(rng);
}

double log_q_joint(const VariationalState& state, const PosteriorSample& sample) {
  require(sample.u.rows() == state.K() && sample.u.cols() == state.m() &&
              sample.phi.categories() == state.W(),
          "log_q_joint: sample dimensions do not match state");
  return JointDensity(state).log_q(sample);
}

Eigen::VectorXd score_q_joint(const VariationalState& state,
                              const PosteriorSample& sample) {
  require(sample.u.rows() == state.K() && sample.u.cols() == state.m() &&
              sample.phi.categories() == state.W(),
          "score_q_joint: sample dimensions do not match state");
  Eigen::VectorXd out(state.param_count());
  JointDensity(state).score(sample, out.data());
  return out;
}

}  // namespace sgdrf
