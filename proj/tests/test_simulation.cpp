#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rayreg/random.hpp"
#include "rayreg/simulation.hpp"

using namespace rayreg;

namespace {

ScenarioConfig small(std::size_t n, double eps, int reps) {
  ScenarioConfig c;
  c.n = n;
  c.epsilon = eps;
  c.replications = reps;
  return c;
}

}  // namespace

TEST(Seeds, DerivedStreamsDifferAndRepeat) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(2021, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Seeds, UniformOpenInterval) {
  Rng rng = make_rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform_open01(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Seeds, UniformIndexCoversRangeEvenly) {
  Rng rng = make_rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Seeds, SampleWithoutReplacementDistinct) {
  Rng rng = make_rng(3);
  const auto s = sample_without_replacement(rng, 50, 50);
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 50u);
  EXPECT_THROW(sample_without_replacement(rng, 5, 6), DomainError);
}

TEST(Signal, NoOutliersWithoutContamination) {
  EXPECT_TRUE(simulate_signal(small(100, 0.0, 1), 0).outliers.empty());
}

TEST(Signal, FivePercentOfHundred) {
  const ScenarioConfig c = small(100, 0.05, 1);
  const SimulatedSignal s = simulate_signal(c, 4);
  ASSERT_EQ(s.outliers.size(), 5u);
  EXPECT_EQ(std::set<std::size_t>(s.outliers.begin(), s.outliers.end()).size(), 5u);
  for (std::size_t p : s.outliers) EXPECT_EQ(s.y(static_cast<Eigen::Index>(p)), 10.0);
}

TEST(Signal, FloorOfEpsilonN) {
  EXPECT_EQ(small(750, 0.01, 1).outlier_count(), 7u);
  EXPECT_EQ(small(500, 0.05, 1).outlier_count(), 25u);
  EXPECT_EQ(small(99, 0.05, 1).outlier_count(), 4u);
}

TEST(Signal, DeterministicPerReplication) {
  const ScenarioConfig c = small(200, 0.05, 1);
  const SimulatedSignal a = simulate_signal(c, 17), b = simulate_signal(c, 17), d = simulate_signal(c, 18);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.outliers, b.outliers);
  EXPECT_NE(a.y, d.y);
}

TEST(Signal, OutlierPositionsNestAcrossCounts) {
  const ScenarioConfig c = small(300, 0.0, 1);
  const DesignMatrix d = scenario_design(c);
  const Eigen::VectorXd mu = scenario_means(c, d);
  const auto big = simulate_signal(c, mu, 5, 40).outliers;
  for (std::size_t m = 0; m < 40; ++m) {
    const auto part = simulate_signal(c, mu, 5, m).outliers;
    EXPECT_TRUE(std::equal(part.begin(), part.end(), big.begin()));
  }
}

TEST(Scenario, CovariatesFixedAndUniform) {
  const ScenarioConfig c = small(500, 0.0, 1);
  const DesignMatrix a = scenario_design(c), b = scenario_design(c);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_TRUE((a.matrix().col(0).array() == 1.0).all());
  EXPECT_TRUE((a.matrix().col(1).array() >= 0.0).all() && (a.matrix().col(1).array() < 1.0).all());
  EXPECT_NEAR(a.matrix().col(1).mean(), 0.5, 0.05);
}

TEST(Scenario, Validation) {
  ScenarioConfig c;
  c.epsilon = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = ScenarioConfig{};
  c.replications = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = ScenarioConfig{};
  c.n = 2;
  EXPECT_THROW(c.validate(), DomainError);
  c = ScenarioConfig{};
  c.outlier_value = -1.0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Summary, TotalsAreColumnSums) {
  const CellReport r = run_cell(small(100, 0.05, 40));
  for (const MonteCarloReport* m : {&r.mle, &r.wmle}) {
    EXPECT_NEAR(m->absolute_total_rb, m->relative_bias_pct.cwiseAbs().sum(), 1e-12);
    EXPECT_NEAR(m->absolute_total_mse, m->mse.sum(), 1e-12);
    EXPECT_EQ(m->replications + m->convergence_failures, 40);
  }
}

TEST(Summary, OrderIndependent) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::Vector2d truth(0.5, 0.15);
  std::vector<std::optional<Eigen::VectorXd>> est;
  for (int i = 0; i < 500; ++i) {
    if (i % 97 == 0)
      est.emplace_back(std::nullopt);
    else
      est.emplace_back(Eigen::VectorXd(truth + Eigen::Vector2d(0.1 * z(gen), 0.2 * z(gen))));
  }
  const MonteCarloReport a = summarize(Method::mle, truth, est);
  std::shuffle(est.begin(), est.end(), gen);
  const MonteCarloReport b = summarize(Method::mle, truth, est);
  EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.mse - b.mse).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.convergence_failures, 6);
}

TEST(Summary, KnownMoments) {
  const Eigen::Vector2d truth(1.0, 2.0);
  std::vector<std::optional<Eigen::VectorXd>> est{Eigen::VectorXd(Eigen::Vector2d(1.0, 2.0)),
                                                  Eigen::VectorXd(Eigen::Vector2d(1.2, 1.0)), std::nullopt};
  const MonteCarloReport r = summarize(Method::wmle, truth, est);
  EXPECT_NEAR(r.mean(0), 1.1, 1e-15);
  EXPECT_NEAR(r.relative_bias_pct(0), 10.0, 1e-12);
  EXPECT_NEAR(r.relative_bias_pct(1), -25.0, 1e-12);
  EXPECT_NEAR(r.mse(0), 0.02, 1e-15);
  EXPECT_NEAR(r.mse(1), 0.5, 1e-15);
  EXPECT_NEAR(r.absolute_total_rb, 35.0, 1e-12);
  EXPECT_EQ(r.convergence_failures, 1);
}

TEST(Cell, ReproducibleAndThreadIndependent) {
  const ScenarioConfig c = small(150, 0.05, 30);
  const CellReport a = run_cell(c, 1), b = run_cell(c, 1), d = run_cell(c, 4);
  EXPECT_EQ(a.mle.mean, b.mle.mean);
  EXPECT_EQ(a.wmle.mse, b.wmle.mse);
  EXPECT_EQ(a.mle.mean, d.mle.mean);
  EXPECT_EQ(a.wmle.mean, d.wmle.mean);
}

TEST(Cell, ZeroReweightingMakesColumnsIdentical) {
  ScenarioConfig c = small(100, 0.0, 25);
  c.robust.reweight_iterations = 0;
  const CellReport r = run_cell(c);
  EXPECT_EQ(r.mle.mean, r.wmle.mean);
  EXPECT_EQ(r.mle.mse, r.wmle.mse);
  EXPECT_EQ(r.mle.absolute_total_rb, r.wmle.absolute_total_rb);
}

TEST(Cell, MleBiasedWmleNotUnderContamination) {
  const CellReport r = run_cell(small(500, 0.05, 60));
  EXPECT_GT(r.mle.relative_bias_pct(0), 50.0);
  EXPECT_LT(std::abs(r.wmle.relative_bias_pct(0)), 10.0);
}

TEST(Breakdown, ZeroCountMatchesCleanCell) {
  const ScenarioConfig c = small(200, 0.0, 30);
  const auto curve = breakdown_curve(c, {0, 5});
  const CellReport clean = run_cell(c);
  EXPECT_EQ(curve[0].mle, clean.mle.absolute_total_rb);
  EXPECT_EQ(curve[0].wmle, clean.wmle.absolute_total_rb);
  EXPECT_EQ(curve[0].x, 0.0);
  EXPECT_EQ(curve[1].x, 5.0);
  EXPECT_THROW(breakdown_curve(c, {200}), DomainError);
}

TEST(Breakdown, MleGrowsWithContamination) {
  const auto curve = breakdown_curve(small(500, 0.0, 40), {0, 5, 10, 20, 40});
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GT(curve[i].mle, curve[i - 1].mle);
  EXPECT_LT(curve[2].wmle, curve[2].mle);
}

TEST(Sensitivity, ModelLikeOutlierHasSmallEffect) {
  const ScenarioConfig c = small(500, 0.05, 30);
  const auto curve = sensitivity_curve(c, {1.8}, SensitivityMode::single_outlier);
  EXPECT_LT(curve[0].mle, 5.0);
  EXPECT_LT(curve[0].wmle, 5.0);
  EXPECT_EQ(curve[0].mle_failures, 0);
}

TEST(Sensitivity, GrossOutlierSeparatesEstimators) {
  const ScenarioConfig c = small(500, 0.05, 30);
  for (SensitivityMode m : {SensitivityMode::single_outlier, SensitivityMode::contaminated_fraction}) {
    const auto curve = sensitivity_curve(c, {15.0}, m);
    EXPECT_GT(curve[0].mle, 5.0 * curve[0].wmle) << to_string(m);
  }
}

TEST(Sensitivity, Reproducible) {
  const ScenarioConfig c = small(200, 0.05, 10);
  const auto a = sensitivity_curve(c, {2.0, 8.0}, SensitivityMode::single_outlier, 1);
  const auto b = sensitivity_curve(c, {2.0, 8.0}, SensitivityMode::single_outlier, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mle, b[i].mle);
    EXPECT_EQ(a[i].wmle, b[i].wmle);
  }
}

TEST(Sensitivity, RejectsBadInput) {
  EXPECT_THROW(sensitivity_curve(small(200, 0.05, 2), {-1.0}), DomainError);
  EXPECT_THROW(sensitivity_curve(small(200, 0.0, 2), {3.0}, SensitivityMode::contaminated_fraction), DomainError);
  EXPECT_EQ(parse_sensitivity_mode("fraction"), SensitivityMode::contaminated_fraction);
  EXPECT_THROW(parse_sensitivity_mode("all"), DomainError);
}
