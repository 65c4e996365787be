#include "sgdrf/latent_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Row-wise softmax of mean_const + rows * U^T for whitened fields u (K x m).
Eigen::MatrixXd community_weights(const Eigen::MatrixXd& rows,
                                  const Eigen::MatrixXd& u_whitened,
                                  const GdrfModel& model) {
  const Eigen::MatrixXd& l = model.prior().chol().lower;
  const Eigen::MatrixXd u = u_whitened * l.triangularView<Eigen::Lower>().transpose();
  Eigen::MatrixXd mu = rows * u.transpose();
  mu.array() += model.hyper().gp_mean;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    const double top = mu.row(i).maxCoeff();
    mu.row(i) = (mu.row(i).array() - top).exp();
    mu.row(i) /= mu.row(i).sum();
  }
  return mu;
}

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (s > 0.0) m.row(i) /= s;
  }
}

}  // namespace

ObservationRecord ObservationRecord::from_dense(
    const Location& location, std::span<const std::int64_t> dense) {
  ObservationRecord r;
  r.location = location;
  r.num_categories = static_cast<int>(dense.size());
  for (std::size_t w = 0; w < dense.size(); ++w) {
    require(dense[w] >= 0, "negative count in category " + std::to_string(w));
    if (dense[w] > 0) r.counts.push_back({static_cast<int>(w), dense[w]});
  }
  return r;
}

std::int64_t ObservationRecord::total() const {
  std::int64_t t = 0;
  for (const auto& c : counts) t += c.count;
  return t;
}

std::int64_t ObservationRecord::count(int category) const {
  auto it = std::lower_bound(
      counts.begin(), counts.end(), category,
      [](const CategoryCount& c, int w) { return c.category < w; });
  return it != counts.end() && it->category == category ? it->count : 0;
}

std::vector<std::int64_t> ObservationRecord::dense() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(num_categories), 0);
  for (const auto& c : counts) out[static_cast<std::size_t>(c.category)] = c.count;
  return out;
}

Eigen::VectorXd ObservationRecord::frequencies() const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_categories);
  const std::int64_t t = total();
  if (t == 0) return f;
  for (const auto& c : counts)
    f[c.category] = static_cast<double>(c.count) / static_cast<double>(t);
  return f;
}

PhiMatrix::PhiMatrix(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  for (Eigen::Index k = 0; k < rows_.rows(); ++k) {
    require((rows_.row(k).array() >= 0.0).all() && rows_.row(k).allFinite(),
            "Phi row " + std::to_string(k) + " has negative or non-finite entries");
    require(std::abs(rows_.row(k).sum() - 1.0) <= 1e-9,
            "Phi row " + std::to_string(k) + " does not sum to 1");
  }
}

void ModelHyperparams::validate() const {
  require(K >= 1, "model.K must be >= 1, got " + std::to_string(K));
  require(W >= 2, "model.W must be >= 2, got " + std::to_string(W));
  require(beta.size() == W, "model.beta must have W = " + std::to_string(W) +
                                " entries, got " + std::to_string(beta.size()));
  require((beta.array() > 0.0).all() && beta.allFinite(),
          "model.beta entries must be positive");
  require(std::isfinite(gp_mean), "model.gp_mean must be finite");
  kernel.validate();
  require(kernel.lengthscales.size() == inducing.dim(),
          "kernel.lengthscales must have one entry per world dimension");
  require(inducing.size() >= 1, "inducing grid is empty");
}

GdrfModel::GdrfModel(ModelHyperparams hyper)
    : hyper_((hyper.validate(), std::move(hyper))),
      prior_(hyper_.inducing.points, hyper_.kernel) {}

WeightedBatch make_batch(const std::vector<ObservationRecord>& records,
                         const GdrfModel& model,
                         const Eigen::VectorXd& weights) {
  require(static_cast<Eigen::Index>(records.size()) == weights.size(),
          "make_batch: one weight per record required");
  WeightedBatch b;
  b.weights = weights;
  b.weight_rows.resize(static_cast<Eigen::Index>(records.size()), model.m());
  for (std::size_t i = 0; i < records.size(); ++i) {
    b.records.push_back(&records[i]);
    b.weight_rows.row(static_cast<Eigen::Index>(i)) =
        model.prior().weight_row(records[i].location).transpose();
  }
  return b;
}

Eigen::VectorXd link_softmax(const Eigen::VectorXd& mu) {
  require(mu.size() >= 1 && mu.allFinite(), "link_softmax: non-finite input");
  Eigen::VectorXd e = (mu.array() - mu.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd observation_distribution(const Eigen::VectorXd& theta,
                                         const PhiMatrix& phi) {
  require(theta.size() == phi.communities(),
          "observation_distribution: theta has " + std::to_string(theta.size()) +
              " entries, Phi has " + std::to_string(phi.communities()) + " rows");
  return phi.rows().transpose() * theta;
}

double dirichlet_log_density(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& alpha) {
  double out = std::lgamma(alpha.sum());
  for (Eigen::Index w = 0; w < alpha.size(); ++w)
    out += -std::lgamma(alpha[w]) + (alpha[w] - 1.0) * std::log(x[w]);
  return out;
}

LogJointTerms log_joint_terms(const PosteriorSample& sample,
                              const WeightedBatch& batch,
                              const GdrfModel& model) {
  const int K = model.K();
  const Eigen::Index m = model.m();
  require(sample.u.rows() == K && sample.u.cols() == m,
          "log_joint: u must be " + std::to_string(K) + " x " + std::to_string(m));
  require(sample.phi.communities() == K && sample.phi.categories() == model.W(),
          "log_joint: Phi dimensions do not match the model");
  require(batch.weight_rows.rows() == static_cast<Eigen::Index>(batch.size()) &&
              batch.weights.size() == static_cast<Eigen::Index>(batch.size()),
          "log_joint: batch weights do not match batch records");
  require(batch.size() == 0 || batch.weight_rows.cols() == m,
          "log_joint: weight rows have the wrong width");

  LogJointTerms t;
  t.log_prior_u.resize(K);
  t.log_prior_phi.resize(K);
  const Eigen::MatrixXd& phi = sample.phi.rows();
  for (int k = 0; k < K; ++k) {
    t.log_prior_u[k] = -0.5 * static_cast<double>(m) * kLog2Pi -
                       0.5 * sample.u.row(k).squaredNorm();
    t.log_prior_phi[k] =
        dirichlet_log_density(phi.row(k).transpose(), model.hyper().beta);
  }
  if (batch.size() == 0) return t;

  const Eigen::MatrixXd theta =
      community_weights(batch.weight_rows, sample.u, model);
  const double log_floor = std::log(kProbabilityFloor);
  double ll = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double weight = batch.weights[static_cast<Eigen::Index>(i)];
    require(weight >= 0.0, "log_joint: negative batch weight");
    const ObservationRecord& rec = *batch.records[i];
    require(rec.num_categories == model.W(),
            "log_joint: record has " + std::to_string(rec.num_categories) +
                " categories, model has " + std::to_string(model.W()));
    double rec_ll = 0.0;
    for (const auto& c : rec.counts) {
      require(c.count >= 0, "log_joint: negative count");
      const double p = theta.row(static_cast<Eigen::Index>(i)).dot(phi.col(c.category));
      rec_ll += static_cast<double>(c.count) *
                (p > kProbabilityFloor ? std::log(p) : log_floor);
    }
    ll += weight * rec_ll;
  }
  t.log_likelihood = ll;
  return t;
}

double log_joint(const PosteriorSample& sample, const WeightedBatch& batch,
                 const GdrfModel& model) {
  return log_joint_terms(sample, batch, model).total();
}

PredictiveDistribution predict(const VariationalState& state,
                               const std::vector<Location>& queries,
                               const GdrfModel& model, const PredictMode& mode) {
  require(state.K() == model.K() && state.m() == model.m() &&
              state.W() == model.W(),
          "predict: state dimensions do not match the model");
  PredictiveDistribution out;
  out.locations = queries;
  if (queries.empty()) {
    out.theta.resize(0, model.K());
    out.p_obs.resize(0, model.W());
    return out;
  }
  const Eigen::MatrixXd rows = model.prior().weights(queries);

  if (std::holds_alternative<PlugIn>(mode)) {
    Eigen::MatrixXd u(model.K(), model.m());
    Eigen::MatrixXd phi(model.K(), model.W());
    for (int k = 0; k < model.K(); ++k) {
      u.row(k) = state.gp[k].mean.transpose();
      phi.row(k) = state.phi[k].mean().transpose();
    }
    out.theta = community_weights(rows, u, model);
    out.p_obs = out.theta * phi;
  } else {
    const auto& mc = std::get<MonteCarlo>(mode);
    require(mc.samples >= 1, "predict: Monte Carlo mode needs at least one sample");
    Rng rng(mc.seed);
    const JointDensity q(state);
    out.theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(queries.size()), model.K());
    out.p_obs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(queries.size()), model.W());
    for (int s = 0; s < mc.samples; ++s) {
      const PosteriorSample draw = q.sample(rng);
      const Eigen::MatrixXd theta = community_weights(rows, draw.u, model);
      out.theta += theta;
      out.p_obs += theta * draw.phi.rows();
    }
    out.theta /= mc.samples;
    out.p_obs /= mc.samples;
  }
  normalize_rows(out.theta);
  normalize_rows(out.p_obs);
  return out;
}

SyntheticData generate_synthetic(const ModelHyperparams& hyper,
                                 const std::vector<Location>& locations,
                                 std::int64_t count_per_location,
                                 std::uint64_t seed) {
  hyper.validate();
  require(!locations.empty(), "generate: no sample locations");
  require(count_per_location >= 1, "generate: count per location must be positive");
  for (const auto& x : locations)
    require(hyper.inducing.bounds.contains(x), "generate: location outside world bounds");

  Rng rng(seed);
  std::normal_distribution<double> normal;
  const auto q = static_cast<Eigen::Index>(locations.size());
  const CholeskyFactor chol =
      cholesky_jittered(gram(locations, locations, hyper.kernel));
  Eigen::MatrixXd eps(q, hyper.K);
  for (int k = 0; k < hyper.K; ++k)
    for (Eigen::Index i = 0; i < q; ++i) eps(i, k) = normal(rng);
  Eigen::MatrixXd f = chol.lower.triangularView<Eigen::Lower>() * eps;
  f.array() += hyper.gp_mean;

  Eigen::MatrixXd theta(q, hyper.K);
  for (Eigen::Index i = 0; i < q; ++i)
    theta.row(i) = link_softmax(f.row(i).transpose()).transpose();

  const DirichletDensity prior_phi(DirichletVarParams::from_gamma(hyper.beta));
  Eigen::MatrixXd phi(hyper.K, hyper.W);
  for (int k = 0; k < hyper.K; ++k) phi.row(k) = prior_phi.sample(rng).transpose();

  SyntheticData data;
  data.phi = PhiMatrix(phi);
  data.truth.locations = locations;
  data.truth.theta = theta;
  data.truth.p_obs = theta * phi;
  normalize_rows(data.truth.p_obs);

  data.records.reserve(locations.size());
  for (Eigen::Index i = 0; i < q; ++i) {
    ObservationRecord rec;
    rec.location = locations[static_cast<std::size_t>(i)];
    rec.num_categories = hyper.W;
    std::int64_t remaining = count_per_location;
    double mass = 1.0;
    for (int w = 0; w < hyper.W && remaining > 0; ++w) {
      const double p = data.truth.p_obs(i, w);
      std::int64_t n = remaining;
      if (w + 1 < hyper.W) {
        const double prob = mass > 0.0 ? std::clamp(p / mass, 0.0, 1.0) : 1.0;
        std::binomial_distribution<std::int64_t> binom(remaining, prob);
        n = binom(rng);
      }
      mass -= p;
      if (n > 0) rec.counts.push_back({w, n});
      remaining -= n;
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

CommunityMap ml_community_map(const PredictiveDistribution& pred,
                              const RegularGrid& grid) {
  require(pred.locations.size() == grid.size() &&
              static_cast<std::size_t>(pred.theta.rows()) == grid.size(),
          "community map: prediction has " + std::to_string(pred.locations.size()) +
              " locations, grid has " + std::to_string(grid.size()));
  require(pred.theta.cols() >= 1, "community map: prediction has no community weights");
  CommunityMap map;
  map.counts = grid.counts;
  map.labels.resize(grid.size());
  for (Eigen::Index i = 0; i < pred.theta.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < pred.theta.cols(); ++k)
      if (pred.theta(i, k) > pred.theta(i, best)) best = static_cast<int>(k);
    map.labels[static_cast<std::size_t>(i)] = best;
  }
  return map;
}

}  // namespace sgdrf
