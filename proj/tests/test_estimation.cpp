#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "rayreg/bfgs.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/rayleigh.hpp"

using namespace rayreg;

namespace {

ModelSpec spec_of(const oracle::Instance& in, LinkFunction link = {}) {
  return ModelSpec(DesignMatrix(in.x), in.y, link);
}

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(Bfgs, MinimizesRosenbrock) {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  BfgsOptions opt;
  opt.max_iter = 2000;
  opt.grad_tol = 1e-9;
  const BfgsResult r = bfgs_minimize(f, Eigen::Vector2d(-1.2, 1.0), opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
  EXPECT_NEAR(r.x(1), 1.0, 1e-6);
}

TEST(Bfgs, TraceIsNonIncreasing) {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x.cwiseProduct(Eigen::Vector3d(1.0, 10.0, 100.0));
    return x.cwiseProduct(x).dot(Eigen::Vector3d(1.0, 10.0, 100.0));
  };
  const BfgsResult r = bfgs_minimize(f, Eigen::Vector3d(1.0, -2.0, 0.5), BfgsOptions{});
  EXPECT_TRUE(r.converged);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST(WeightedLoglik, KnownValues) {
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(3, 1)), Eigen::VectorXd::Ones(3));
  EXPECT_EQ(weighted_loglik(s, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(3)), 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  w(0) = 1.0;
  EXPECT_NEAR(weighted_loglik(s, Eigen::VectorXd::Zero(1), w), -0.333815458107993445, 1e-15);
}

TEST(WeightedLoglik, UnitWeightsGiveSumOfLogDensities) {
  std::mt19937_64 gen(5);
  const auto in = oracle::random_instance(gen, 40, 3);
  const ModelSpec s = spec_of(in);
  const Eigen::VectorXd mu = predict_mean(s, in.beta);
  double expected = 0.0;
  for (int i = 0; i < 40; ++i) expected += log_pdf(RayleighMean(mu(i)), in.y(i));
  EXPECT_NEAR(weighted_loglik(s, in.beta, Eigen::VectorXd::Ones(40)), expected, 1e-11 * std::abs(expected));
}

TEST(Score, ZeroAtStationaryObservation) {
  const double mu = 1.7;
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(2, 1)),
                    Eigen::VectorXd::Constant(2, 2.0 * mu / std::sqrt(std::numbers::pi)));
  EXPECT_NEAR(score(s, Eigen::VectorXd::Constant(1, std::log(mu)), Eigen::VectorXd::Ones(2))(0), 0.0, 1e-13);
}

TEST(Score, MatchesCentralFiniteDifferences) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> wu(0.0, 1.0), shift(-0.3, 0.3);
  for (int t = 0; t < 50; ++t) {
    const int k = 1 + t % 4;
    const auto in = oracle::random_instance(gen, 60 + t, k);
    for (LinkFunction link : {LinkFunction{LinkKind::log}, LinkFunction{LinkKind::identity}}) {
      oracle::Instance inst = in;
      Eigen::VectorXd beta = in.beta;
      for (int j = 0; j < k; ++j) beta(j) += shift(gen);
      if (link.kind() == LinkKind::identity) {
        // keep every mean comfortably positive
        beta(0) = 2.0 + std::abs(beta(0));
        for (int j = 1; j < k; ++j) beta(j) = 0.3 * std::abs(beta(j));
      }
      const ModelSpec s = spec_of(inst, link);
      Eigen::VectorXd w(s.observations());
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = wu(gen) < 0.2 ? wu(gen) : 1.0;
      const Eigen::VectorXd g = score(s, beta, w);
      for (int j = 0; j < k; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(beta(j)));
        Eigen::VectorXd bp = beta, bm = beta;
        bp(j) += h;
        bm(j) -= h;
        const double fd = (weighted_loglik(s, bp, w) - weighted_loglik(s, bm, w)) / (2.0 * h);
        EXPECT_NEAR(g(j), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "instance " << t << " coef " << j;
      }
    }
  }
}

TEST(Weights, Branches) {
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(3, 1)),
                    (Eigen::VectorXd(3) << quantile(RayleighMean(1.0), 0.5), quantile(RayleighMean(1.0), 0.0005),
                     quantile(RayleighMean(1.0), 1.0 - 0.00025))
                        .finished());
  const Eigen::VectorXd w = compute_weights(s, Eigen::VectorXd::Ones(3), 0.001);
  EXPECT_EQ(w(0), 1.0);
  EXPECT_NEAR(w(1), 0.5, 1e-9);
  EXPECT_NEAR(w(2), 0.25, 1e-6);
}

TEST(Weights, FarUpperTailTendsToZero) {
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(2, 1)), Eigen::Vector2d(20.0, 1.0));
  const Eigen::VectorXd w = compute_weights(s, Eigen::VectorXd::Ones(2), 0.001);
  EXPECT_LT(w(0), 1e-100);
  EXPECT_GE(w(0), 0.0);
}

TEST(Weights, AlwaysWithinUnitInterval) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 20; ++t) {
    auto in = oracle::random_instance(gen, 100, 2);
    for (int i = 0; i < 5; ++i) in.y(static_cast<Eigen::Index>(gen() % 100)) = 10.0;
    const ModelSpec s = spec_of(in);
    const FitResult f = fit_wmle(s);
    EXPECT_TRUE((f.weights.array() >= 0.0).all() && (f.weights.array() <= 1.0).all());
  }
}

TEST(Weights, RejectInvalidDelta) {
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(2, 1)), Eigen::Vector2d(1.0, 1.0));
  EXPECT_THROW(compute_weights(s, Eigen::VectorXd::Ones(2), 0.0), DomainError);
  EXPECT_THROW(compute_weights(s, Eigen::VectorXd::Ones(2), 0.5), DomainError);
  RobustConfig c;
  c.delta = 0.7;
  EXPECT_THROW(fit_wmle(s, c), DomainError);
}

TEST(Fit, ScoreVanishesAtOptimum) {
  std::mt19937_64 gen(101);
  for (int t = 0; t < 50; ++t) {
    auto in = oracle::random_instance(gen, 50 + 10 * t, 1 + t % 4);
    if (t % 3 == 0) in.y(0) = 15.0;
    const FitPair p = fit_both(spec_of(in));
    for (const FitResult* f : {&p.mle, &p.wmle}) {
      ASSERT_TRUE(f->converged) << "instance " << t;
      EXPECT_LE(f->score.cwiseAbs().maxCoeff(), 1e-6);
      const ModelSpec s = spec_of(in);
      EXPECT_TRUE(score(s, f->beta_hat, f->weights).isApprox(f->score, 1e-8) ||
                  (score(s, f->beta_hat, f->weights) - f->score).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST(Fit, InterceptOnlyClosedForm) {
  std::mt19937_64 gen(4242);
  for (int t = 0; t < 20; ++t) {
    const auto in = oracle::random_instance(gen, 20 + 37 * t, 1, 2.0);
    const FitResult f = fit_mle(spec_of(in));
    const double closed = std::log(std::sqrt(std::numbers::pi * in.y.squaredNorm() / (4.0 * in.y.size())));
    ASSERT_TRUE(f.converged);
    EXPECT_NEAR(f.beta_hat(0), closed, 1e-8);
  }
}

TEST(Fit, ConstantResponseClosedForm) {
  const double c = 3.25;
  const ModelSpec s(DesignMatrix(Eigen::MatrixXd::Ones(10, 1)), Eigen::VectorXd::Constant(10, c));
  EXPECT_NEAR(fit_mle(s).beta_hat(0), std::log(c * std::sqrt(std::numbers::pi) / 2.0), 1e-8);
}

TEST(Fit, IdentityLinkInterceptOnly) {
  std::mt19937_64 gen(9);
  const auto in = oracle::random_instance(gen, 200, 1, 1.0);
  const FitResult f = fit_mle(spec_of(in, LinkFunction{LinkKind::identity}));
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.beta_hat(0), std::sqrt(std::numbers::pi * in.y.squaredNorm() / (4.0 * in.y.size())), 1e-8);
}

TEST(Fit, IdentityLinkWithSlope) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(400, 2);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    x.row(i) << 1.0, u(gen);
    const double mu = 1.0 + 2.0 * x(i, 1);
    y(i) = 2.0 * mu * std::sqrt(-std::log(1.0 - u(gen)) / std::numbers::pi);
  }
  const FitPair p = fit_both(ModelSpec(DesignMatrix(x), y, LinkFunction{LinkKind::identity}));
  EXPECT_TRUE(p.mle.converged);
  EXPECT_TRUE(p.wmle.converged);
  EXPECT_NEAR(p.mle.beta_hat(0), 1.0, 0.3);
  EXPECT_NEAR(p.mle.beta_hat(1), 2.0, 0.6);
  EXPECT_TRUE(((x * p.mle.beta_hat).array() > 0.0).all());
}

TEST(Fit, MleHasUnitWeights) {
  std::mt19937_64 gen(11);
  const auto in = oracle::random_instance(gen, 80, 2);
  const FitResult f = fit_mle(spec_of(in));
  EXPECT_EQ(f.method, Method::mle);
  EXPECT_TRUE((f.weights.array() == 1.0).all());
  EXPECT_EQ(f.downweighted(), 0u);
}

TEST(Fit, StdErrorsFromInverseInformation) {
  std::mt19937_64 gen(12);
  const auto in = oracle::random_instance(gen, 120, 3);
  const FitResult f = fit_wmle(spec_of(in));
  const Eigen::MatrixXd inv = f.fisher_info.inverse();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(f.std_errors(j), std::sqrt(inv(j, j)), 1e-12 * f.std_errors(j));
  EXPECT_TRUE(f.fisher_info.isApprox(f.fisher_info.transpose()));
  EXPECT_GT(f.fisher_info.llt().matrixL().determinant(), 0.0);
}

TEST(Fit, LoglikNondecreasingAlongTrace) {
  std::mt19937_64 gen(13);
  for (int t = 0; t < 10; ++t) {
    const auto in = oracle::random_instance(gen, 300, 3);
    for (const FitResult& f : {fit_mle(spec_of(in)), fit_wmle(spec_of(in))}) {
      ASSERT_GE(f.loglik_trace.size(), 1u);
      for (std::size_t i = 1; i < f.loglik_trace.size(); ++i) {
        const double prev = f.loglik_trace[i - 1];
        EXPECT_GE(f.loglik_trace[i], prev - 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(prev)));
      }
      EXPECT_NEAR(f.loglik_trace.back(), f.loglik, 1e-9 * std::abs(f.loglik));
    }
  }
}

TEST(Fit, ZeroReweightIterationsIsBitwiseMle) {
  std::mt19937_64 gen(14);
  for (int t = 0; t < 10; ++t) {
    auto in = oracle::random_instance(gen, 150, 2);
    in.y(3) = 12.0;
    RobustConfig c;
    c.reweight_iterations = 0;
    const FitResult a = fit_mle(spec_of(in), c);
    const FitResult b = fit_wmle(spec_of(in), c);
    EXPECT_TRUE(bitwise_equal(a.beta_hat, b.beta_hat));
    EXPECT_TRUE(bitwise_equal(a.weights, b.weights));
    EXPECT_TRUE(bitwise_equal(a.std_errors, b.std_errors));
    EXPECT_TRUE(bitwise_equal(a.covariance, b.covariance));
    EXPECT_EQ(std::memcmp(&a.loglik, &b.loglik, sizeof(double)), 0);
    EXPECT_EQ(a.iterations, b.iterations);
    const FitPair p = fit_both(spec_of(in), c);
    EXPECT_TRUE(bitwise_equal(p.mle.beta_hat, p.wmle.beta_hat));
  }
}

TEST(Fit, WideDeltaFreeDataGivesMleExactly) {
  // with no observation in either delta tail every weight is 1
  std::mt19937_64 gen(15);
  const auto in = oracle::random_instance(gen, 60, 2);
  RobustConfig c;
  c.delta = 1e-12;
  const ModelSpec s = spec_of(in);
  const FitResult m = fit_mle(s, c);
  const FitResult w = fit_wmle(s, c);
  ASSERT_EQ(w.downweighted(), 0u);
  EXPECT_TRUE((m.beta_hat - w.beta_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST(Fit, PermutationInvariance) {
  std::mt19937_64 gen(16);
  for (int t = 0; t < 10; ++t) {
    auto in = oracle::random_instance(gen, 200, 3);
    for (int i = 0; i < 10; ++i) in.y(static_cast<Eigen::Index>(gen() % 200)) = 10.0;
    std::vector<int> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    oracle::Instance shuffled = in;
    for (int i = 0; i < 200; ++i) {
      shuffled.x.row(i) = in.x.row(perm[static_cast<std::size_t>(i)]);
      shuffled.y(i) = in.y(perm[static_cast<std::size_t>(i)]);
    }
    const FitPair a = fit_both(spec_of(in));
    const FitPair b = fit_both(spec_of(shuffled));
    EXPECT_LT((a.mle.beta_hat - b.mle.beta_hat).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((a.wmle.beta_hat - b.wmle.beta_hat).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Fit, StartingPointIndependence) {
  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> off(-0.5, 0.5);
  const auto in = oracle::random_instance(gen, 400, 3);
  const ModelSpec s = spec_of(in);
  const FitResult ref = fit_mle(s);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(400);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd start = ref.beta_hat;
    for (int j = 0; j < 3; ++j) start(j) += off(gen);
    const FitResult f = fit_with_weights(s, ones, start, RobustConfig{});
    ASSERT_TRUE(f.converged);
    EXPECT_LT((f.beta_hat - ref.beta_hat).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Fit, RankDeficientDesignRejected) {
  Eigen::MatrixXd x(10, 2);
  x.col(0).setOnes();
  x.col(1).setConstant(2.0);
  EXPECT_THROW(fit_mle(ModelSpec(DesignMatrix(x), Eigen::VectorXd::Ones(10))), RankDeficientError);
}

TEST(Fit, RobustAgainstGrossOutliers) {
  std::mt19937_64 gen(19);
  auto in = oracle::random_instance(gen, 500, 2);
  in.beta << 0.5, 0.15;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double mu = std::exp(in.x.row(i).dot(in.beta));
    in.y(i) = 2.0 * mu * std::sqrt(-std::log(1.0 - u(gen)) / std::numbers::pi);
  }
  for (int i = 0; i < 25; ++i) in.y(i * 20) = 10.0;
  const FitPair p = fit_both(spec_of(in));
  EXPECT_GT(p.wmle.downweighted(), 20u);
  EXPECT_LT(std::abs(p.wmle.beta_hat(0) - 0.5), 0.1);
  EXPECT_GT(p.mle.beta_hat(0) - 0.5, 0.25);
}
