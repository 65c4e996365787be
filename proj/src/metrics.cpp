#include "sgdrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                     double epsilon) {
  require(p.size() == q.size() && p.size() >= 1,
          "kl_divergence: distributions have different lengths");
  require(epsilon >= 0.0, "kl_divergence: epsilon must be nonnegative");
  const double norm = 1.0 + static_cast<double>(p.size()) * epsilon;
  double kl = 0.0;
  for (Eigen::Index w = 0; w < p.size(); ++w) {
    const double pw = (p[w] + epsilon) / norm;
    if (pw <= 0.0) continue;
    const double qw = (q[w] + epsilon) / norm;
    kl += pw * std::log(pw / qw);
  }
  return std::max(kl, 0.0);
}

double quantile(std::vector<double> values, double prob) {
  require(!values.empty(), "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PklSummary pkl_checkpoint(const PredictiveDistribution& predictions,
                          std::span<const ObservationRecord> future_records,
                          double epsilon) {
  require(!future_records.empty(), "pkl_checkpoint: no future records");
  require(static_cast<std::size_t>(predictions.p_obs.rows()) == future_records.size(),
          "pkl_checkpoint: " + std::to_string(predictions.p_obs.rows()) +
              " predictions for " + std::to_string(future_records.size()) +
              " future records");
  PklSummary s;
  s.per_location_kl.reserve(future_records.size());
  for (std::size_t i = 0; i < future_records.size(); ++i) {
    const ObservationRecord& rec = future_records[i];
    require(rec.num_categories == predictions.p_obs.cols(),
            "pkl_checkpoint: category count mismatch");
    if (i < predictions.locations.size())
      require(predictions.locations[i] == rec.location,
              "pkl_checkpoint: prediction " + std::to_string(i) +
                  " is not at the future record's location");
    const Eigen::VectorXd model = predictions.p_obs.row(static_cast<Eigen::Index>(i)).transpose();
    s.per_location_kl.push_back(kl_divergence(model, rec.frequencies(), epsilon));
  }
  s.q25 = quantile(s.per_location_kl, 0.25);
  s.median = quantile(s.per_location_kl, 0.5);
  s.q75 = quantile(s.per_location_kl, 0.75);
  return s;
}

double coverage_fraction(const std::vector<Location>& observed,
                         const std::vector<Location>& unobserved,
                         std::span<const double> lengthscales) {
  require(!unobserved.empty(), "coverage_fraction: no unobserved points");
  for (double l : lengthscales) require(l > 0.0, "lengthscales must be positive");
  if (observed.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& x : unobserved) {
    for (const auto& o : observed) {
      if (scaled_distance(x, o, lengthscales) <= 1.0) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(unobserved.size());
}

}  // namespace sgdrf
