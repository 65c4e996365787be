#include "sgdrf/inference.hpp"

#include <cmath>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

void SubsamplerConfig::validate() const {
  require(n_s >= 1, "inference.n_s must be >= 1, got " + std::to_string(n_s));
  require(decay > 0.0 && decay <= 1.0,
          "inference.decay must lie in (0, 1], got " + std::to_string(decay));
}

double subsample_probability(std::size_t i, std::size_t t,
                             const SubsamplerConfig& cfg) {
  require(t >= 1 && i < t, "subsample_probability: index out of range");
  const double td = static_cast<double>(t);
  if (cfg.decay == 1.0) return 1.0 / td;
  const double log_rho = std::log(cfg.decay);
  const double age = static_cast<double>(t - 1 - i);
  // rho^age (1 - rho) / (1 - rho^t)
  return std::exp(age * log_rho) * (-std::expm1(log_rho)) /
         (-std::expm1(td * log_rho));
}

std::vector<double> subsample_distribution(std::size_t t,
                                           const SubsamplerConfig& cfg) {
  require(t >= 1, "subsample_distribution: t must be >= 1");
  std::vector<double> p(t);
  for (std::size_t i = 0; i < t; ++i) p[i] = subsample_probability(i, t, cfg);
  return p;
}

SubsampleDraw subsample_indices(std::size_t t, const SubsamplerConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  require(t >= 1, "subsample_indices: t must be >= 1");
  SubsampleDraw d;
  d.indices.reserve(static_cast<std::size_t>(cfg.n_s));
  d.probabilities.reserve(static_cast<std::size_t>(cfg.n_s));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_rho = cfg.decay < 1.0 ? std::log(cfg.decay) : 0.0;
  // 1 - rho^t, the normalizer of the truncated geometric over ages.
  const double mass = cfg.decay < 1.0
                          ? -std::expm1(static_cast<double>(t) * log_rho)
                          : 1.0;
  for (int s = 0; s < cfg.n_s; ++s) {
    const double u = unif(rng);
    std::size_t age;
    if (cfg.decay == 1.0) {
      age = static_cast<std::size_t>(u * static_cast<double>(t));
    } else {
      // Smallest age a with 1 - rho^(a+1) > u (1 - rho^t).
      const double a = std::floor(std::log1p(-u * mass) / log_rho);
      age = std::isfinite(a) && a > 0.0 ? static_cast<std::size_t>(a) : 0;
    }
    if (age >= t) age = t - 1;
    const std::size_t idx = t - 1 - age;
    d.indices.push_back(idx);
    d.probabilities.push_back(subsample_probability(idx, t, cfg));
  }
  return d;
}

Eigen::VectorXd batch_weights(const SubsampleDraw& drawn, std::size_t t,
                              const SubsamplerConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(drawn.indices.size());
  Eigen::VectorXd w(n);
  const double ns = static_cast<double>(cfg.n_s);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cfg.correct_bias) {
      const double p = drawn.probabilities[static_cast<std::size_t>(i)];
      require(p > 0.0, "batch_weights: zero-probability draw");
      w[i] = 1.0 / (ns * p);
    } else {
      w[i] = static_cast<double>(t) / ns;
    }
  }
  return w;
}

void ObservationBuffer::append(ObservationRecord record,
                               Eigen::VectorXd weight_row) {
  entries_.push_back(Entry{std::move(record), std::move(weight_row)});
}

WeightedBatch ObservationBuffer::gather(std::span<const std::size_t> indices,
                                        const Eigen::VectorXd& weights) const {
  require(static_cast<Eigen::Index>(indices.size()) == weights.size(),
          "gather: one weight per index required");
  WeightedBatch b;
  b.weights = weights;
  const Eigen::Index m = empty() ? 0 : entries_.front().row.size();
  b.weight_rows.resize(static_cast<Eigen::Index>(indices.size()), m);
  b.records.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Entry& e = entries_.at(indices[i]);
    b.records.push_back(&e.record);
    b.weight_rows.row(static_cast<Eigen::Index>(i)) = e.row.transpose();
  }
  return b;
}

WeightedBatch ObservationBuffer::all(double weight) const {
  std::vector<std::size_t> idx(size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return gather(idx, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size()), weight));
}

std::size_t ObservationBuffer::memory_bytes() const {
  std::size_t bytes = 0;
  for (const auto& e : entries_) {
    bytes += sizeof(Entry);
    bytes += e.record.counts.capacity() * sizeof(CategoryCount);
    bytes += static_cast<std::size_t>(e.row.size()) * sizeof(double);
  }
  return bytes;
}

void AdamConfig::validate() const {
  require(learning_rate > 0.0, "inference.lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "moment decays must lie in [0, 1)");
  require(epsilon > 0.0, "optimizer epsilon must be positive");
}

OptimizerState OptimizerState::zeros(Eigen::Index n, const AdamConfig& cfg) {
  cfg.validate();
  OptimizerState s;
  s.config = cfg;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  return s;
}

bool optimizer_step(OptimizerState& opt, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grad) {
  require(params.size() == grad.size() && grad.size() == opt.first_moment.size(),
          "optimizer_step: length mismatch (params " + std::to_string(params.size()) +
              ", grad " + std::to_string(grad.size()) + ", moments " +
              std::to_string(opt.first_moment.size()) + ")");
  if (!grad.allFinite()) {
    ++opt.skipped;
    return false;
  }
  const AdamConfig& c = opt.config;
  ++opt.step;
  opt.first_moment = c.beta1 * opt.first_moment + (1.0 - c.beta1) * grad;
  opt.second_moment =
      c.beta2 * opt.second_moment + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double step = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(c.beta1, step);
  const double bc2 = 1.0 - std::pow(c.beta2, step);
  params.array() += c.learning_rate * (opt.first_moment.array() / bc1) /
                    ((opt.second_moment.array() / bc2).sqrt() + c.epsilon);
  return true;
}

double elbo_estimate(const VariationalState& state, const PosteriorSample& sample,
                     const WeightedBatch& batch, const GdrfModel& model) {
  return log_joint(sample, batch, model) - log_q_joint(state, sample);
}

GradientEstimate bbvi_gradient(const VariationalState& state,
                               const WeightedBatch& batch,
                               const GdrfModel& model, Rng& rng,
                               const GradientOptions& options) {
  const int S = options.samples;
  require(S >= 1, "bbvi_gradient: sample count must be positive");
  require(!options.control_variates || S >= 2,
          "bbvi_gradient: control variates need at least 2 samples");
  const int K = state.K();
  const Eigen::Index P = state.param_count();
  const Eigen::Index gsize = GaussianVarParams::param_count(state.m());

  const JointDensity q(state);
  Eigen::MatrixXd scores(P, S);
  // Rows 0..K-1: Gaussian blocks, rows K..2K-1: Dirichlet blocks.
  Eigen::MatrixXd f(2 * K, S);
  double elbo = 0.0;
  for (int s = 0; s < S; ++s) {
    const JointDraw draw = q.draw(rng);
    const LogJointTerms terms = log_joint_terms(draw.sample, batch, model);
    const Eigen::VectorXd lq_g = q.log_q_gaussian_blocks(draw);
    const Eigen::VectorXd lq_d = q.log_q_dirichlet_blocks(draw.sample);
    for (int k = 0; k < K; ++k) {
      f(k, s) = terms.log_likelihood + terms.log_prior_u[k] - lq_g[k];
      f(K + k, s) = terms.log_likelihood + terms.log_prior_phi[k] - lq_d[k];
    }
    elbo += terms.total() - lq_g.sum() - lq_d.sum();
    q.score(draw, scores.col(s).data());
  }

  GradientEstimate out;
  out.elbo = elbo / S;
  out.gradient.resize(P);

  auto block_of = [&](Eigen::Index d) -> Eigen::Index {
    if (d < K * gsize) return d / gsize;
    return K + (d - K * gsize) / state.W();
  };

  if (!options.control_variates) {
    for (Eigen::Index d = 0; d < P; ++d) {
      const Eigen::Index b = block_of(d);
      out.gradient[d] = scores.row(d).dot(f.row(b)) / S;
    }
    return out;
  }

  // The control-variate estimator is invariant to shifting f by a constant,
  // so center each block for numerical stability.
  for (Eigen::Index b = 0; b < f.rows(); ++b) f.row(b).array() -= f.row(b).mean();

  const double n = static_cast<double>(S - 1);
  for (Eigen::Index d = 0; d < P; ++d) {
    const Eigen::Index b = block_of(d);
    double sum_h = 0.0, sum_hh = 0.0, sum_hhf = 0.0, sum_hf = 0.0;
    for (int s = 0; s < S; ++s) {
      const double h = scores(d, s);
      const double fs = f(b, s);
      sum_h += h;
      sum_hh += h * h;
      sum_hhf += h * h * fs;
      sum_hf += h * fs;
    }
    double g = 0.0;
    for (int s = 0; s < S; ++s) {
      const double h = scores(d, s);
      const double fs = f(b, s);
      const double mean_h = (sum_h - h) / n;
      const double var_h = (sum_hh - h * h) / n - mean_h * mean_h;
      const double mean_hf = (sum_hf - h * fs) / n;
      const double cov = (sum_hhf - h * h * fs) / n - mean_hf * mean_h;
      const double a = var_h > 1e-300 * (sum_hh + 1.0) && std::isfinite(var_h)
                           ? cov / var_h
                           : 0.0;
      g += h * (fs - a);
    }
    out.gradient[d] = g / S;
  }
  return out;
}

void EngineConfig::validate() const {
  subsampler.validate();
  adam.validate();
  require(gradient.samples >= 1, "inference.samples must be >= 1");
  require(!gradient.control_variates || gradient.samples >= 2,
          "inference.samples must be >= 2 with control variates");
  require(iters_per_obs >= 0, "inference.iters_per_obs must be >= 0");
}

StreamingEngine::StreamingEngine(const GdrfModel& model, EngineConfig config)
    : StreamingEngine(model, config,
                      VariationalState::initial(model.K(), model.m(),
                                                model.hyper().beta),
                      OptimizerState::zeros(
                          VariationalState::param_count(model.K(), model.m(),
                                                        model.W()),
                          config.adam)) {}

StreamingEngine::StreamingEngine(const GdrfModel& model, EngineConfig config,
                                 VariationalState state,
                                 OptimizerState optimizer)
    : model_(model),
      config_(std::move(config)),
      state_(std::move(state)),
      optimizer_(std::move(optimizer)),
      rng_(config_.seed) {
  config_.validate();
  require(state_.K() == model.K() && state_.m() == model.m() &&
              state_.W() == model.W(),
          "engine: state dimensions do not match the model");
  require(optimizer_.first_moment.size() == state_.param_count(),
          "engine: optimizer moments do not match the parameter count");
  params_ = state_.flat();
}

void StreamingEngine::observe(ObservationRecord record) {
  const auto& bounds = model_.hyper().inducing.bounds;
  require(record.location.dim() == bounds.dim(),
          "record " + std::to_string(t() + 1) + " has " +
              std::to_string(record.location.dim()) +
              " coordinates, world has " + std::to_string(bounds.dim()));
  require(bounds.contains(record.location),
          "record " + std::to_string(t() + 1) + " lies outside the world bounds");
  require(record.num_categories == model_.W(),
          "record " + std::to_string(t() + 1) + " has " +
              std::to_string(record.num_categories) + " categories, model has " +
              std::to_string(model_.W()));
  Eigen::VectorXd row = model_.prior().weight_row(record.location);
  buffer_.append(std::move(record), std::move(row));
}

double StreamingEngine::train_step() {
  WeightedBatch batch;
  if (!buffer_.empty()) {
    const SubsampleDraw draw = subsample_indices(t(), config_.subsampler, rng_);
    batch = buffer_.gather(draw.indices, batch_weights(draw, t(), config_.subsampler));
  } else {
    batch.weight_rows.resize(0, model_.m());
    batch.weights.resize(0);
  }
  const GradientEstimate est =
      bbvi_gradient(state_, batch, model_, rng_, config_.gradient);
  if (optimizer_step(optimizer_, params_, est.gradient)) state_.set_flat(params_);
  ++state_.step_count;
  return est.elbo;
}

VariationalState streaming_fit(std::span<const ObservationRecord> stream,
                               const GdrfModel& model, const EngineConfig& config,
                               const StreamCallbacks& callbacks) {
  StreamingEngine engine(model, config);
  std::uint64_t iteration = 0;
  for (const auto& record : stream) {
    engine.observe(record);
    for (int i = 0; i < config.iters_per_obs; ++i) {
      const double elbo = engine.train_step();
      ++iteration;
      if (callbacks.on_iteration)
        callbacks.on_iteration(ProgressEvent{engine.t(), iteration, elbo});
    }
    if (callbacks.on_observation) callbacks.on_observation(engine.t(), engine);
  }
  return engine.state();
}

}  // namespace sgdrf
