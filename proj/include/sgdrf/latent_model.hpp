#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "sgdrf/gp_algebra.hpp"
#include "sgdrf/model_types.hpp"
#include "sgdrf/variational.hpp"

namespace sgdrf {

inline constexpr double kProbabilityFloor = 1e-12;

// Hyperparameters bound to the factored inducing prior they imply.
class GdrfModel {
 public:
  explicit GdrfModel(ModelHyperparams hyper);

  const ModelHyperparams& hyper() const { return hyper_; }
  const InducingPrior& prior() const { return prior_; }
  int K() const { return hyper_.K; }
  int W() const { return hyper_.W; }
  Eigen::Index m() const { return prior_.size(); }

 private:
  ModelHyperparams hyper_;
  InducingPrior prior_;
};

// A subsampled likelihood batch: records, their cached conditional-weight
// rows (one row of K_XZ K_ZZ^-1 per record), and likelihood weights.
struct WeightedBatch {
  std::vector<const ObservationRecord*> records;
  Eigen::MatrixXd weight_rows;
  Eigen::VectorXd weights;

  std::size_t size() const { return records.size(); }
};

WeightedBatch make_batch(const std::vector<ObservationRecord>& records,
                         const GdrfModel& model,
                         const Eigen::VectorXd& weights);

// Prior and likelihood pieces of the log joint, kept separate so gradient
// estimators can use only the terms that touch each latent block.
struct LogJointTerms {
  Eigen::VectorXd log_prior_u;    // per community
  Eigen::VectorXd log_prior_phi;  // per community
  double log_likelihood = 0.0;

  double total() const {
    return log_prior_u.sum() + log_prior_phi.sum() + log_likelihood;
  }
};

Eigen::VectorXd link_softmax(const Eigen::VectorXd& mu);

Eigen::VectorXd observation_distribution(const Eigen::VectorXd& theta,
                                         const PhiMatrix& phi);

double dirichlet_log_density(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& alpha);

LogJointTerms log_joint_terms(const PosteriorSample& sample,
                              const WeightedBatch& batch,
                              const GdrfModel& model);

double log_joint(const PosteriorSample& sample, const WeightedBatch& batch,
                 const GdrfModel& model);

struct PlugIn {};
struct MonteCarlo {
  int samples = 1000;
  std::uint64_t seed = 0;
};
using PredictMode = std::variant<PlugIn, MonteCarlo>;

PredictiveDistribution predict(const VariationalState& state,
                               const std::vector<Location>& queries,
                               const GdrfModel& model,
                               const PredictMode& mode = PlugIn{});

struct SyntheticData {
  std::vector<ObservationRecord> records;
  PredictiveDistribution truth;
  PhiMatrix phi;
};

// Forward sampler on the full location set using a dense Cholesky of the
// q x q Gram matrix. Practical up to a few thousand locations.
SyntheticData generate_synthetic(const ModelHyperparams& hyper,
                                 const std::vector<Location>& locations,
                                 std::int64_t count_per_location,
                                 std::uint64_t seed);

struct CommunityMap {
  std::vector<int> counts;
  std::vector<int> labels;  // grid order
};

CommunityMap ml_community_map(const PredictiveDistribution& pred,
                              const RegularGrid& grid);

}  // namespace sgdrf
