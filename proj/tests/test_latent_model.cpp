#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "sgdrf/error.hpp"
#include "sgdrf/latent_model.hpp"
#include "test_support.hpp"

using namespace sgdrf;
using sgdrf::testing::random_simplex;
using sgdrf::testing::tiny_hyper;

namespace {

PosteriorSample random_sample(const GdrfModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  PosteriorSample s;
  s.u.resize(model.K(), model.m());
  for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u.data()[i] = n(rng);
  Eigen::MatrixXd phi(model.K(), model.W());
  for (int k = 0; k < model.K(); ++k)
    phi.row(k) = random_simplex(model.W(), rng).transpose();
  s.phi = PhiMatrix(phi);
  return s;
}

ObservationRecord record(double x, std::vector<std::int64_t> counts) {
  return ObservationRecord::from_dense(Location(x), counts);
}

}  // namespace

TEST_CASE("link_softmax examples") {
  const Eigen::VectorXd a = link_softmax(Eigen::VectorXd::Zero(3));
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Eigen::VectorXd mu(3);
  mu << std::log(2.0), 0.0, 0.0;
  const Eigen::VectorXd b = link_softmax(mu);
  CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(b[2] == doctest::Approx(0.25).epsilon(1e-15));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd m(5);
    for (int i = 0; i < 5; ++i) m[i] = n(rng);
    const Eigen::VectorXd s = link_softmax(m);
    CHECK(std::abs(s.sum() - 1.0) < 1e-15);
    const Eigen::VectorXd shifted = link_softmax((m.array() + n(rng) * 100).matrix());
    CHECK((s - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("observation_distribution examples") {
  Eigen::MatrixXd rows(2, 3);
  rows << 0.2, 0.3, 0.5, 0.6, 0.4, 0.0;
  const PhiMatrix phi(rows);
  const Eigen::VectorXd one_hot = Eigen::Vector2d(0.0, 1.0);
  CHECK((observation_distribution(one_hot, phi) - rows.row(1).transpose()).cwiseAbs().maxCoeff() == 0.0);

  const PhiMatrix identity(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd th = Eigen::Vector3d(0.2, 0.5, 0.3);
  CHECK((observation_distribution(th, identity) - th).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd sym(2, 2);
  sym << 0.8, 0.2, 0.2, 0.8;
  const Eigen::VectorXd p = observation_distribution(Eigen::Vector2d(0.5, 0.5), PhiMatrix(sym));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  CHECK_THROWS_AS(observation_distribution(Eigen::Vector3d(1, 0, 0), phi), ValidationError);
}

TEST_CASE("PhiMatrix rejects rows off the simplex") {
  Eigen::MatrixXd bad(1, 2);
  bad << 0.5, 0.6;
  CHECK_THROWS_AS(PhiMatrix{bad}, ValidationError);
  bad << 1.1, -0.1;
  CHECK_THROWS_AS(PhiMatrix{bad}, ValidationError);
}

TEST_CASE("log_joint of an empty batch is the prior") {
  std::mt19937_64 rng(2);
  const GdrfModel model(tiny_hyper(2, 3, 2));
  const PosteriorSample s = random_sample(model, rng);
  const WeightedBatch empty = make_batch({}, model, Eigen::VectorXd(0));
  const LogJointTerms t = log_joint_terms(s, empty, model);
  CHECK(t.log_likelihood == 0.0);
  CHECK(log_joint(s, empty, model) == doctest::Approx(t.log_prior_u.sum() + t.log_prior_phi.sum()));
}

TEST_CASE("K=1 likelihood collapses to counts times log Phi") {
  std::mt19937_64 rng(3);
  const GdrfModel model(tiny_hyper(1, 4, 3));
  const PosteriorSample s = random_sample(model, rng);
  const std::vector<ObservationRecord> recs{record(0.1, {1, 0, 3, 2}), record(0.8, {0, 5, 0, 1})};
  const Eigen::VectorXd w = Eigen::Vector2d(0.7, 2.5);
  const LogJointTerms t = log_joint_terms(s, make_batch(recs, model, w), model);
  double expected = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (int c = 0; c < 4; ++c)
      expected += w[static_cast<Eigen::Index>(i)] * static_cast<double>(recs[i].count(c)) *
                  std::log(s.phi.rows()(0, c));
  CHECK(t.log_likelihood == doctest::Approx(expected).epsilon(1e-13));
}

// Straight-line recomputation of the whole chain for K=2, W=3, m=2 with the
// 2x2 factor, inverse and kernel worked out by hand.
TEST_CASE("log_joint matches an independent scalar-loop oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    ModelHyperparams h = tiny_hyper(2, 3, 2, 0.7, 0.6, 1.8);
    h.gp_mean = 0.3;
    h.beta << 0.5, 1.5, 2.0;
    const GdrfModel model(h);
    const PosteriorSample s = random_sample(model, rng);
    const std::vector<ObservationRecord> recs{record(0.25, {2, 0, 5}), record(0.9, {1, 1, 0})};
    const double wts[2] = {1.5, 0.4};
    const double lj = log_joint(s, make_batch(recs, model, Eigen::Vector2d(wts[0], wts[1])), model);

    const double var = 1.8, ell = 0.6;
    const double z[2] = {0.0, 1.0};
    auto k = [&](double a, double b) { return var * std::exp(-0.5 * (a - b) * (a - b) / (ell * ell)); };
    const double jitter = model.prior().chol().jitter_used * var;
    const double k00 = k(z[0], z[0]) + jitter, k01 = k(z[0], z[1]), k11 = k(z[1], z[1]) + jitter;
    const double l00 = std::sqrt(k00), l10 = k01 / l00, l11 = std::sqrt(k11 - l10 * l10);
    const double det = k00 * k11 - k01 * k01;
    const double i00 = k11 / det, i01 = -k01 / det, i11 = k00 / det;

    double expected = 0.0;
    for (int c = 0; c < 2; ++c) {
      const double v0 = s.u(c, 0), v1 = s.u(c, 1);
      expected += -std::log(2.0 * std::numbers::pi) - 0.5 * (v0 * v0 + v1 * v1);
      double lp = std::lgamma(0.5 + 1.5 + 2.0);
      const double beta[3] = {0.5, 1.5, 2.0};
      for (int w = 0; w < 3; ++w)
        lp += -std::lgamma(beta[w]) + (beta[w] - 1.0) * std::log(s.phi.rows()(c, w));
      expected += lp;
    }
    for (int i = 0; i < 2; ++i) {
      const double x = recs[static_cast<std::size_t>(i)].location[0];
      const double kx0 = k(x, z[0]), kx1 = k(x, z[1]);
      const double a0 = kx0 * i00 + kx1 * i01, a1 = kx0 * i01 + kx1 * i11;
      double mu[2];
      for (int c = 0; c < 2; ++c) {
        const double u0 = l00 * s.u(c, 0);
        const double u1 = l10 * s.u(c, 0) + l11 * s.u(c, 1);
        mu[c] = 0.3 + a0 * u0 + a1 * u1;
      }
      const double e0 = std::exp(mu[0]), e1 = std::exp(mu[1]);
      const double th0 = e0 / (e0 + e1), th1 = e1 / (e0 + e1);
      for (int w = 0; w < 3; ++w) {
        const double p = th0 * s.phi.rows()(0, w) + th1 * s.phi.rows()(1, w);
        expected += wts[i] * static_cast<double>(recs[static_cast<std::size_t>(i)].count(w)) *
                    std::log(std::max(p, 1e-12));
      }
    }
    CHECK(lj == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("log_joint is additive over batch partitions and linear in counts") {
  std::mt19937_64 rng(5);
  const GdrfModel model(tiny_hyper(3, 4, 4));
  const PosteriorSample s = random_sample(model, rng);
  const std::vector<ObservationRecord> a{record(0.1, {1, 2, 0, 0}), record(0.4, {0, 0, 3, 1})};
  const std::vector<ObservationRecord> b{record(0.7, {2, 2, 2, 2})};
  std::vector<ObservationRecord> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());

  const auto prior = log_joint(s, make_batch({}, model, Eigen::VectorXd(0)), model);
  const auto ja = log_joint(s, make_batch(a, model, Eigen::VectorXd::Ones(2)), model);
  const auto jb = log_joint(s, make_batch(b, model, Eigen::VectorXd::Ones(1)), model);
  const auto jab = log_joint(s, make_batch(ab, model, Eigen::VectorXd::Ones(3)), model);
  CHECK(jab - prior == doctest::Approx((ja - prior) + (jb - prior)).epsilon(1e-12));

  const std::vector<ObservationRecord> tripled{record(0.7, {6, 6, 6, 6})};
  const double l1 = log_joint_terms(s, make_batch(b, model, Eigen::VectorXd::Ones(1)), model).log_likelihood;
  const double l3 = log_joint_terms(s, make_batch(tripled, model, Eigen::VectorXd::Ones(1)), model).log_likelihood;
  CHECK(l3 == doctest::Approx(3.0 * l1).epsilon(1e-14));
}

TEST_CASE("log_joint rejects dimension mismatches and negative weights") {
  std::mt19937_64 rng(6);
  const GdrfModel model(tiny_hyper(2, 3, 2));
  PosteriorSample s = random_sample(model, rng);
  const std::vector<ObservationRecord> wrong_w{record(0.1, {1, 2})};
  CHECK_THROWS_AS(log_joint(s, make_batch(wrong_w, model, Eigen::VectorXd::Ones(1)), model),
                  ValidationError);
  const std::vector<ObservationRecord> ok{record(0.1, {1, 2, 0})};
  CHECK_THROWS_AS(log_joint(s, make_batch(ok, model, -Eigen::VectorXd::Ones(1)), model),
                  ValidationError);
  s.u = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(log_joint(s, make_batch(ok, model, Eigen::VectorXd::Ones(1)), model),
                  ValidationError);
}

TEST_CASE("predict with K=1 returns the Dirichlet mean everywhere") {
  const GdrfModel model(tiny_hyper(1, 4, 3));
  VariationalState st = VariationalState::initial(1, model.m(), model.hyper().beta);
  st.phi[0] = DirichletVarParams::from_gamma(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
  const std::vector<Location> q{Location(0.0), Location(0.33), Location(1.0)};
  const PredictiveDistribution p = predict(st, q, model);
  for (int i = 0; i < 3; ++i) {
    for (int w = 0; w < 4; ++w) CHECK(p.p_obs(i, w) == doctest::Approx((w + 1) / 10.0).epsilon(1e-12));
    CHECK(p.theta(i, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("plug-in and Monte Carlo predictions agree on a tiny model") {
  std::mt19937_64 rng(7);
  const GdrfModel model(tiny_hyper(2, 3, 3, 1.0, 0.4));
  VariationalState st = VariationalState::initial(2, model.m(), model.hyper().beta);
  std::normal_distribution<double> n;
  for (int k = 0; k < 2; ++k) {
    for (Eigen::Index j = 0; j < model.m(); ++j) st.gp[k].mean[j] = n(rng);
    st.phi[k] = DirichletVarParams::from_gamma(20.0 * (Eigen::Vector3d::Random().array() + 1.5).matrix());
  }
  std::vector<Location> q;
  for (int i = 0; i <= 10; ++i) q.emplace_back(i / 10.0);
  const PredictiveDistribution plug = predict(st, q, model);
  const PredictiveDistribution mc = predict(st, q, model, MonteCarlo{10000, 42});
  const double diff = (plug.p_obs - mc.p_obs).cwiseAbs().maxCoeff();
  MESSAGE("max |plug-in - MC| = " << diff);
  CHECK(diff < 0.05);
  for (const auto* p : {&plug, &mc})
    for (Eigen::Index i = 0; i < p->p_obs.rows(); ++i) {
      CHECK(std::abs(p->p_obs.row(i).sum() - 1.0) < 1e-9);
      CHECK(std::abs(p->theta.row(i).sum() - 1.0) < 1e-9);
      CHECK((p->p_obs.row(i).array() >= 0).all());
    }
  CHECK_THROWS_AS(predict(st, q, model, MonteCarlo{0, 1}), ValidationError);
}

TEST_CASE("predict is equivariant to query permutation") {
  std::mt19937_64 rng(8);
  const GdrfModel model(tiny_hyper(3, 5, 4, 1.0, 0.3));
  VariationalState st = VariationalState::initial(3, model.m(), model.hyper().beta);
  std::normal_distribution<double> n;
  for (auto& g : st.gp)
    for (Eigen::Index j = 0; j < model.m(); ++j) g.mean[j] = n(rng);
  std::vector<Location> q;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 12; ++i) q.emplace_back(u(rng));
  std::vector<std::size_t> perm(q.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Location> qp;
  for (auto i : perm) qp.push_back(q[i]);
  const auto a = predict(st, q, model);
  const auto b = predict(st, qp, model);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i), o = static_cast<Eigen::Index>(perm[i]);
    CHECK((b.p_obs.row(r) - a.p_obs.row(o)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.theta.row(r) - a.theta.row(o)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("generate_synthetic: totals, law of large numbers, determinism") {
  const ModelHyperparams h = tiny_hyper(3, 6, 5, 0.5, 0.2);
  std::vector<Location> locs;
  for (int i = 0; i < 40; ++i) locs.emplace_back(i / 39.0);
  const SyntheticData d = generate_synthetic(h, locs, 250, 17);
  REQUIRE(d.records.size() == 40);
  for (const auto& r : d.records) {
    CHECK(r.total() == 250);
    CHECK(r.num_categories == 6);
  }
  for (Eigen::Index i = 0; i < d.truth.p_obs.rows(); ++i)
    CHECK(std::abs(d.truth.p_obs.row(i).sum() - 1.0) < 1e-9);
  const SyntheticData again = generate_synthetic(h, locs, 250, 17);
  CHECK(again.records == d.records);

  const std::vector<Location> one{Location(0.5)};
  const SyntheticData big = generate_synthetic(h, one, 1000000, 23);
  const Eigen::VectorXd freq = big.records[0].frequencies();
  const double tv = 0.5 * (freq - big.truth.p_obs.row(0).transpose()).cwiseAbs().sum();
  CHECK(tv < 0.01);
}

TEST_CASE("generate_synthetic: huge beta gives uniform Phi rows") {
  ModelHyperparams h = tiny_hyper(3, 7, 3, 1e6);
  const SyntheticData d = generate_synthetic(h, {Location(0.2)}, 10, 5);
  CHECK((d.phi.rows().array() - 1.0 / 7.0).abs().maxCoeff() < 0.01);
}

TEST_CASE("generate_synthetic: shorter lengthscale gives rougher theta") {
  std::vector<Location> locs;
  for (int i = 0; i < 200; ++i) locs.emplace_back(i / 199.0);
  auto roughness = [&](double ell) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SyntheticData d = generate_synthetic(tiny_hyper(3, 4, 3, 1.0, ell, 4.0), locs, 1, seed);
      for (Eigen::Index i = 1; i < d.truth.theta.rows(); ++i)
        total += (d.truth.theta.row(i) - d.truth.theta.row(i - 1)).cwiseAbs().mean();
    }
    return total;
  };
  CHECK(roughness(0.01) > roughness(1.0));
}

TEST_CASE("ml_community_map: K=1, ties and a scan oracle") {
  const int c3[2] = {3, 3};
  const RegularGrid g = make_grid(WorldBounds({0.0, 0.0}, {1.0, 1.0}), c3);
  PredictiveDistribution p;
  p.locations = g.points;
  p.theta = Eigen::MatrixXd::Ones(9, 1);
  for (int l : ml_community_map(p, g).labels) CHECK(l == 0);

  p.theta = Eigen::MatrixXd::Constant(9, 2, 0.5);
  for (int l : ml_community_map(p, g).labels) CHECK(l == 0);

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    p.theta.resize(9, 4);
    for (int i = 0; i < 9; ++i) p.theta.row(i) = random_simplex(4, rng).transpose();
    const CommunityMap m = ml_community_map(p, g);
    CHECK(m.counts == std::vector<int>{3, 3});
    for (int i = 0; i < 9; ++i) {
      int best = 0;
      double bv = -1.0;
      for (int k = 0; k < 4; ++k)
        if (p.theta(i, k) > bv) {
          bv = p.theta(i, k);
          best = k;
        }
      CHECK(m.labels[static_cast<std::size_t>(i)] == best);
    }
  }
  p.locations.pop_back();
  CHECK_THROWS_AS(ml_community_map(p, g), ValidationError);
}
