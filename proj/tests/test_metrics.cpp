#include <doctest.h>

#include <cmath>
#include <random>

#include "metric_fixtures.hpp"
#include "oracles.hpp"
#include "sgdrf/error.hpp"
#include "sgdrf/metrics.hpp"
#include "test_support.hpp"

using namespace sgdrf;
using sgdrf::testing::random_simplex;

TEST_CASE("kl_divergence examples") {
  const Eigen::VectorXd p = Eigen::Vector3d(0.2, 0.3, 0.5);
  CHECK(kl_divergence(p, p) == 0.0);

  const Eigen::VectorXd a = Eigen::Vector2d(0.5, 0.5);
  const Eigen::VectorXd b = Eigen::Vector2d(0.25, 0.75);
  // Frozen from 0.5 ln 2 + 0.5 ln(2/3).
  CHECK(kl_divergence(a, b, 0.0) == doctest::Approx(0.14384103622589045).epsilon(1e-14));

  const Eigen::VectorXd z = Eigen::Vector2d(1.0, 0.0);
  const double finite = kl_divergence(a, z, 1e-3);
  CHECK(std::isfinite(finite));
  CHECK(finite > 0.0);

  // Model first: the constructed pair has different divergences each way.
  const Eigen::VectorXd model = Eigen::Vector3d(0.7, 0.2, 0.1);
  const Eigen::VectorXd emp = Eigen::Vector3d(0.1, 0.1, 0.8);
  const double forward = kl_divergence(model, emp, 0.0);
  const double backward = kl_divergence(emp, model, 0.0);
  CHECK(forward == doctest::Approx(0.7 * std::log(7.0) + 0.2 * std::log(2.0) + 0.1 * std::log(0.125)));
  CHECK(std::abs(forward - backward) > 0.1);
}

TEST_CASE("kl_divergence is nonnegative and zero only for equal smoothed inputs") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const int W = 2 + i % 10;
    const Eigen::VectorXd p = random_simplex(W, rng), q = random_simplex(W, rng);
    const double d = kl_divergence(p, q, 1e-3);
    CHECK(d >= 0.0);
    CHECK(d > 0.0);
    CHECK(kl_divergence(p, p, 1e-3) == 0.0);
  }
}

TEST_CASE("quantile interpolates linearly") {
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({7.0}, 0.75) == 7.0);
  CHECK(quantile({1.0, 2.0}, 1.0) == 2.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
}

TEST_CASE("pkl_checkpoint examples") {
  std::vector<ObservationRecord> recs{
      ObservationRecord::from_dense(Location(0.1), std::vector<std::int64_t>{1, 3}),
      ObservationRecord::from_dense(Location(0.2), std::vector<std::int64_t>{2, 2})};
  PredictiveDistribution pred;
  pred.locations = {Location(0.1), Location(0.2)};
  pred.p_obs.resize(2, 2);
  pred.p_obs << 0.25, 0.75, 0.5, 0.5;
  const PklSummary exact = pkl_checkpoint(pred, recs);
  CHECK(exact.median == 0.0);
  CHECK(exact.q75 == 0.0);

  const std::vector<ObservationRecord> one{recs[0]};
  PredictiveDistribution p1;
  p1.locations = {Location(0.1)};
  p1.p_obs = Eigen::RowVector2d(0.6, 0.4);
  const PklSummary s = pkl_checkpoint(p1, one);
  CHECK(s.median == s.q25);
  CHECK(s.q75 == s.per_location_kl[0]);

  CHECK_THROWS_AS(pkl_checkpoint(pred, std::span<const ObservationRecord>()), ValidationError);
  pred.locations[1] = Location(0.3);
  CHECK_THROWS_AS(pkl_checkpoint(pred, recs), ValidationError);
}

TEST_CASE("pkl_checkpoint on five hand-built records matches the scalar oracle") {
  const std::vector<std::vector<std::int64_t>> counts{
      {5, 0, 0}, {1, 1, 1}, {0, 2, 8}, {3, 3, 0}, {10, 0, 1}};
  const std::vector<double> row{0.5, 0.3, 0.2};
  std::vector<ObservationRecord> recs;
  PredictiveDistribution pred;
  pred.p_obs.resize(5, 3);
  for (int i = 0; i < 5; ++i) {
    recs.push_back(ObservationRecord::from_dense(Location(i * 0.1), counts[static_cast<std::size_t>(i)]));
    pred.locations.push_back(Location(i * 0.1));
    pred.p_obs.row(i) << 0.5, 0.3, 0.2;
  }
  const PklSummary s = pkl_checkpoint(pred, recs, 1e-3);
  const auto ref = oracle::pkl(std::vector<std::vector<double>>(5, row), counts, 1e-3);
  for (int i = 0; i < 5; ++i)
    CHECK(s.per_location_kl[static_cast<std::size_t>(i)] == doctest::Approx(ref.kls[static_cast<std::size_t>(i)]).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(ref.median).epsilon(1e-12));
  CHECK(s.q25 == doctest::Approx(ref.q25).epsilon(1e-12));
  CHECK(s.q75 == doctest::Approx(ref.q75).epsilon(1e-12));
  CHECK(s.q25 <= s.median);
  CHECK(s.median <= s.q75);
}

TEST_CASE("coverage_fraction examples") {
  const double l[1] = {0.5};
  const std::vector<Location> pts{Location(0.0), Location(0.4), Location(2.0)};
  CHECK(coverage_fraction({}, pts, l) == 0.0);
  CHECK(coverage_fraction(pts, pts, l) == 1.0);
  CHECK(coverage_fraction({Location(0.0)}, {Location(0.5), Location(0.51)}, l) == 0.5);
  CHECK_THROWS_AS(coverage_fraction(pts, {}, l), ValidationError);
}

TEST_CASE("coverage_fraction on 10 points with 3 observed matches all-pairs oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Location> obs, unobs;
    std::vector<std::vector<double>> ov, uv;
    for (int i = 0; i < 10; ++i) {
      const double x = u(rng), y = u(rng);
      (i < 3 ? obs : unobs).emplace_back(x, y);
      (i < 3 ? ov : uv).push_back({x, y});
    }
    const std::vector<double> ls{0.3, 0.2};
    CHECK(coverage_fraction(obs, unobs, ls) == oracle::coverage(ov, uv, ls));
  }
}

TEST_CASE("coverage_fraction never decreases as observations are added") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ls[2] = {0.1, 0.15};
  std::vector<Location> unobs;
  for (int i = 0; i < 50; ++i) unobs.emplace_back(u(rng), u(rng));
  std::vector<Location> obs;
  double prev = 0.0;
  for (int i = 0; i < 60; ++i) {
    obs.emplace_back(u(rng), u(rng));
    const double c = coverage_fraction(obs, unobs, ls);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("metrics agree with brute-force oracles on random fixtures") {
  const auto worst = sgdrf::testing::compare_metrics_to_oracles(100, 2024);
  CHECK(worst.kl <= 1e-10);
  CHECK(worst.pkl <= 1e-10);
  CHECK(worst.coverage <= 1e-10);
}
