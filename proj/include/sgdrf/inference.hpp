#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "sgdrf/latent_model.hpp"
#include "sgdrf/variational.hpp"

namespace sgdrf {

// Recency-biased subsampling distribution pi_t(i) ∝ decay^(t-1-i) over the
// first t buffered records.
struct SubsamplerConfig {
  int n_s = 64;
  double decay = 0.9;
  bool correct_bias = false;

  void validate() const;
};

struct SubsampleDraw {
  std::vector<std::size_t> indices;
  std::vector<double> probabilities;
};

// Exact probability of index i under pi_t. O(1).
double subsample_probability(std::size_t i, std::size_t t,
                             const SubsamplerConfig& cfg);

// The whole distribution pi_t, O(t). Reference for tests and diagnostics.
std::vector<double> subsample_distribution(std::size_t t,
                                           const SubsamplerConfig& cfg);

// n_s i.i.d. draws with replacement by inverting the truncated geometric
// CDF, so the cost does not depend on t.
SubsampleDraw subsample_indices(std::size_t t, const SubsamplerConfig& cfg,
                                Rng& rng);

// Likelihood weights: 1/(n_s pi_t(i)) when correcting bias, t/n_s otherwise.
Eigen::VectorXd batch_weights(const SubsampleDraw& drawn, std::size_t t,
                              const SubsamplerConfig& cfg);

// Append-only record store with each record's conditional-weight row cached
// at insertion. Chunked storage keeps memory linear in the record count.
class ObservationBuffer {
 public:
  void append(ObservationRecord record, Eigen::VectorXd weight_row);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ObservationRecord& record(std::size_t i) const { return entries_[i].record; }
  const Eigen::VectorXd& weight_row(std::size_t i) const { return entries_[i].row; }

  WeightedBatch gather(std::span<const std::size_t> indices,
                       const Eigen::VectorXd& weights) const;
  WeightedBatch all(double weight = 1.0) const;

  // Heap bytes held by records and cached rows.
  std::size_t memory_bytes() const;

 private:
  struct Entry {
    ObservationRecord record;
    Eigen::VectorXd row;
  };
  std::deque<Entry> entries_;
};

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct OptimizerState {
  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;

  static OptimizerState zeros(Eigen::Index n, const AdamConfig& cfg);
};

// Bias-corrected adaptive-moment ascent step. A non-finite gradient leaves
// everything untouched except the skip counter and returns false.
bool optimizer_step(OptimizerState& opt, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grad);

struct GradientOptions {
  int samples = 8;
  bool control_variates = true;
};

struct GradientEstimate {
  Eigen::VectorXd gradient;
  double elbo = 0.0;  // mean of log p - log q over the samples
};

double elbo_estimate(const VariationalState& state, const PosteriorSample& sample,
                     const WeightedBatch& batch, const GdrfModel& model);

// Score-function estimator of the ELBO gradient. Each parameter block
// (one Gaussian or one Dirichlet) is weighted only by the log-joint terms
// that depend on its latent plus its own log q; the dropped terms are
// independent of the block under the mean-field family and contribute zero
// in expectation. With control variates, each coordinate subtracts
// a_d = Cov(h f, h) / Var(h) estimated from the other S - 1 samples.
GradientEstimate bbvi_gradient(const VariationalState& state,
                               const WeightedBatch& batch,
                               const GdrfModel& model, Rng& rng,
                               const GradientOptions& options = {});

struct EngineConfig {
  SubsamplerConfig subsampler;
  GradientOptions gradient;
  AdamConfig adam;
  int iters_per_obs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProgressEvent {
  std::size_t t = 0;
  std::uint64_t iteration = 0;
  double elbo = 0.0;
};

class StreamingEngine;

struct StreamCallbacks {
  std::function<void(const ProgressEvent&)> on_iteration;
  // Called after each record has been ingested and trained on.
  std::function<void(std::size_t t, const StreamingEngine&)> on_observation;
};

// Single-writer streaming trainer over (state, buffer, optimizer).
class StreamingEngine {
 public:
  StreamingEngine(const GdrfModel& model, EngineConfig config);
  StreamingEngine(const GdrfModel& model, EngineConfig config,
                  VariationalState state, OptimizerState optimizer);

  // Validates and buffers a record, caching its weight row. O(m^2).
  void observe(ObservationRecord record);
  // One BBVI step on a fresh subsample; returns the ELBO estimate.
  double train_step();

  const VariationalState& state() const { return state_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  const ObservationBuffer& buffer() const { return buffer_; }
  const EngineConfig& config() const { return config_; }
  std::size_t t() const { return buffer_.size(); }

 private:
  const GdrfModel& model_;
  EngineConfig config_;
  VariationalState state_;
  OptimizerState optimizer_;
  ObservationBuffer buffer_;
  Rng rng_;
  Eigen::VectorXd params_;
};

// Replays records as a stream: ingest each, then run iters_per_obs steps.
VariationalState streaming_fit(std::span<const ObservationRecord> stream,
                               const GdrfModel& model, const EngineConfig& config,
                               const StreamCallbacks& callbacks = {});

}  // namespace sgdrf
