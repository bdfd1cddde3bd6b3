#pragma once

// Monte Carlo evaluation of the MLE and WMLE on contaminated Rayleigh
// regression signals: bias/MSE tables, breakdown curves and sensitivity
// curves. Every replication draws from its own stream derived from the master
// seed, so results are reproducible and independent of thread scheduling.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rayreg/errors.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/parallel.hpp"
#include "rayreg/random.hpp"
#include "rayreg/rayleigh.hpp"
#include "rayreg/regression.hpp"

namespace rayreg {

struct ScenarioConfig {
  Eigen::VectorXd beta_true = (Eigen::VectorXd(2) << 0.5, 0.15).finished();
  std::size_t n = 500;
  double epsilon = 0.0;
  double outlier_value = 10.0;
  int replications = 1000;
  std::uint64_t master_seed = 2021;
  LinkFunction link{};
  RobustConfig robust{};

  std::size_t outlier_count() const { return static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n))); }

  void validate() const {
    if (beta_true.size() < 1) throw DomainError("scenario: beta_true must be non-empty");
    if (!beta_true.allFinite()) throw DomainError("scenario: beta_true must be finite");
    if (n <= static_cast<std::size_t>(beta_true.size())) throw DomainError("scenario: N must exceed the number of coefficients");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("scenario: epsilon must lie in [0,1)");
    if (!(outlier_value > 0.0) || !std::isfinite(outlier_value)) throw DomainError("scenario: outlier_value must be positive");
    if (replications <= 0) throw DomainError("scenario: replications must be positive");
    robust.validate();
  }
};

// Stream index reserved for the covariate draw; replication streams use the
// replication index itself.
inline constexpr std::uint64_t kCovariateStream = 0x8000000000000000ULL;

// Intercept plus k-1 covariates drawn once from uniform(0,1) and held fixed
// across replications.
inline DesignMatrix scenario_design(const ScenarioConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(cfg.beta_true.size());
  const auto n = static_cast<Eigen::Index>(cfg.n);
  Rng rng = make_rng(derive_seed(cfg.master_seed, kCovariateStream));
  Eigen::MatrixXd x(n, k);
  x.col(0).setOnes();
  for (Eigen::Index j = 1; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = uniform_open01(rng);
  std::vector<std::string> names{"beta1"};
  for (Eigen::Index j = 1; j < k; ++j) names.push_back("beta" + std::to_string(j + 1));
  return DesignMatrix(std::move(x), std::move(names));
}

inline Eigen::VectorXd scenario_means(const ScenarioConfig& cfg, const DesignMatrix& design) {
  const Eigen::VectorXd eta = design.matrix() * cfg.beta_true;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    mu(i) = cfg.link.inverse(eta(i));
    if (!(mu(i) > 0.0)) throw NonPositiveMeanError(static_cast<std::size_t>(i));
  }
  return mu;
}

struct SimulatedSignal {
  Eigen::VectorXd y;
  std::vector<std::size_t> outliers;
};

// Inversion-sampled signal for one replication, then `outlier_count`
// positions (without replacement) overwritten with the outlier value. The
// positions for count m are a prefix of those for count m+1.
inline SimulatedSignal simulate_signal(const ScenarioConfig& cfg, const Eigen::VectorXd& mu, std::size_t replication,
                                       std::size_t outlier_count) {
  Rng rng = make_rng(derive_seed(cfg.master_seed, replication));
  SimulatedSignal s;
  s.y.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) s.y(i) = sample(RayleighMean(mu(i)), rng);
  s.outliers = sample_without_replacement(rng, static_cast<std::size_t>(mu.size()), outlier_count);
  for (std::size_t p : s.outliers) s.y(static_cast<Eigen::Index>(p)) = cfg.outlier_value;
  return s;
}

inline SimulatedSignal simulate_signal(const ScenarioConfig& cfg, std::size_t replication) {
  cfg.validate();
  const DesignMatrix design = scenario_design(cfg);
  return simulate_signal(cfg, scenario_means(cfg, design), replication, cfg.outlier_count());
}

struct MonteCarloReport {
  Method method = Method::mle;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd truth;
  Eigen::VectorXd mean;
  Eigen::VectorXd relative_bias_pct;  // 100 (mean - truth) / truth
  Eigen::VectorXd mse;
  double absolute_total_rb = 0.0;
  double absolute_total_mse = 0.0;
  int replications = 0;
  int convergence_failures = 0;
};

// Moments over the successful replications, accumulated in index order.
inline MonteCarloReport summarize(Method method, const Eigen::VectorXd& truth,
                                  const std::vector<std::optional<Eigen::VectorXd>>& estimates,
                                  std::vector<std::string> names = {}) {
  MonteCarloReport rep;
  rep.method = method;
  rep.truth = truth;
  rep.parameter_names = std::move(names);
  const auto k = truth.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(k);
  int used = 0;
  for (const auto& e : estimates) {
    if (!e) {
      ++rep.convergence_failures;
      continue;
    }
    sum += *e;
    sq += (*e - truth).cwiseAbs2();
    ++used;
  }
  rep.replications = used;
  if (used == 0) {
    rep.mean = rep.relative_bias_pct = rep.mse = Eigen::VectorXd::Constant(k, std::nan(""));
    rep.absolute_total_rb = rep.absolute_total_mse = std::nan("");
    return rep;
  }
  rep.mean = sum / used;
  rep.mse = sq / used;
  rep.relative_bias_pct = 100.0 * (rep.mean - truth).cwiseQuotient(truth);
  rep.absolute_total_rb = rep.relative_bias_pct.cwiseAbs().sum();
  rep.absolute_total_mse = rep.mse.cwiseAbs().sum();
  return rep;
}

struct CellReport {
  ScenarioConfig scenario;
  MonteCarloReport wmle;
  MonteCarloReport mle;
};

namespace detail {

struct PairedEstimates {
  std::optional<Eigen::VectorXd> mle;
  std::optional<Eigen::VectorXd> wmle;
};

inline PairedEstimates fit_paired(const ModelSpec& spec, const RobustConfig& cfg) {
  PairedEstimates out;
  try {
    const FitPair p = fit_both(spec, cfg);
    if (p.mle.converged) out.mle = p.mle.beta_hat;
    if (p.wmle.converged) out.wmle = p.wmle.beta_hat;
  } catch (const Error&) {
    // counted as a failure for both arms
  }
  return out;
}

inline std::vector<PairedEstimates> run_replications(const ScenarioConfig& cfg, const DesignMatrix& design,
                                                     const Eigen::VectorXd& mu, std::size_t outlier_count,
                                                     unsigned threads) {
  std::vector<PairedEstimates> results(static_cast<std::size_t>(cfg.replications));
  parallel_for(results.size(), threads, [&](std::size_t r) {
    SimulatedSignal s = simulate_signal(cfg, mu, r, outlier_count);
    const ModelSpec spec(design, std::move(s.y), cfg.link);
    results[r] = fit_paired(spec, cfg.robust);
  });
  return results;
}

inline std::pair<MonteCarloReport, MonteCarloReport> summarize_pairs(const ScenarioConfig& cfg,
                                                                      const DesignMatrix& design,
                                                                      const std::vector<PairedEstimates>& res) {
  std::vector<std::optional<Eigen::VectorXd>> mle, wmle;
  mle.reserve(res.size());
  wmle.reserve(res.size());
  for (const auto& r : res) {
    mle.push_back(r.mle);
    wmle.push_back(r.wmle);
  }
  return {summarize(Method::mle, cfg.beta_true, mle, design.column_names()),
          summarize(Method::wmle, cfg.beta_true, wmle, design.column_names())};
}

}  // namespace detail

// One table cell: both estimators on identical signals.
inline CellReport run_cell(const ScenarioConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const DesignMatrix design = scenario_design(cfg);
  const Eigen::VectorXd mu = scenario_means(cfg, design);
  const auto res = detail::run_replications(cfg, design, mu, cfg.outlier_count(), threads);
  auto [mle, wmle] = detail::summarize_pairs(cfg, design, res);
  return CellReport{cfg, std::move(wmle), std::move(mle)};
}

inline std::vector<CellReport> run_table(const std::vector<ScenarioConfig>& grid, unsigned threads = 1) {
  if (grid.empty()) throw DomainError("run_table: empty scenario grid");
  std::vector<CellReport> out;
  out.reserve(grid.size());
  for (const auto& cfg : grid) out.push_back(run_cell(cfg, threads));
  return out;
}

struct CurvePoint {
  double x = 0.0;
  double mle = 0.0;
  double wmle = 0.0;
  int mle_failures = 0;
  int wmle_failures = 0;
};

// Total relative bias sum_i |RB%_i| against the number of outliers. The
// scenario's epsilon is ignored; each count reuses the same replication
// streams (common random numbers).
inline std::vector<CurvePoint> breakdown_curve(const ScenarioConfig& cfg, const std::vector<std::size_t>& outlier_counts,
                                               unsigned threads = 1) {
  cfg.validate();
  const DesignMatrix design = scenario_design(cfg);
  const Eigen::VectorXd mu = scenario_means(cfg, design);
  std::vector<CurvePoint> curve;
  curve.reserve(outlier_counts.size());
  for (std::size_t count : outlier_counts) {
    if (count >= cfg.n) throw DomainError("breakdown_curve: outlier count must be below N");
    const auto res = detail::run_replications(cfg, design, mu, count, threads);
    const auto [mle, wmle] = detail::summarize_pairs(cfg, design, res);
    curve.push_back(CurvePoint{static_cast<double>(count), mle.absolute_total_rb, wmle.absolute_total_rb,
                               mle.convergence_failures, wmle.convergence_failures});
  }
  return curve;
}

enum class SensitivityMode {
  // One observation at a random position replaced by y_out; the reference
  // estimate omits that observation.
  single_outlier,
  // floor(epsilon N) positions replaced by y_out; the reference estimate uses
  // the uncontaminated signal.
  contaminated_fraction,
};

inline std::string_view to_string(SensitivityMode m) {
  return m == SensitivityMode::single_outlier ? "single" : "fraction";
}

inline SensitivityMode parse_sensitivity_mode(std::string_view s) {
  if (s == "single") return SensitivityMode::single_outlier;
  if (s == "fraction") return SensitivityMode::contaminated_fraction;
  throw DomainError("unknown sensitivity mode '" + std::string(s) + "' (expected single or fraction)");
}

// Mean absolute sensitivity curve: SC = N (beta_hat(contaminated) -
// beta_hat(reference)), averaged in absolute value over the coefficients and
// then over replications in which all four fits converged.
inline std::vector<CurvePoint> sensitivity_curve(const ScenarioConfig& cfg, const std::vector<double>& outlier_values,
                                                 SensitivityMode mode = SensitivityMode::single_outlier,
                                                 unsigned threads = 1) {
  cfg.validate();
  for (double v : outlier_values)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("sensitivity_curve: outlier values must be positive");
  const DesignMatrix design = scenario_design(cfg);
  const Eigen::VectorXd mu = scenario_means(cfg, design);
  const auto reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t nv = outlier_values.size();
  const double n = static_cast<double>(cfg.n);
  const std::size_t count = mode == SensitivityMode::single_outlier ? 0 : cfg.outlier_count();
  if (mode == SensitivityMode::contaminated_fraction && count == 0)
    throw DomainError("sensitivity_curve: epsilon * N must give at least one outlier in fraction mode");

  // [rep * nv + v] -> MASC of that replication, or nullopt on failure
  std::vector<std::optional<double>> mle(reps * nv), wmle(reps * nv);

  parallel_for(reps, threads, [&](std::size_t r) {
    SimulatedSignal s = simulate_signal(cfg, mu, r, count);
    std::vector<std::size_t> positions = s.outliers;
    Eigen::VectorXd clean = s.y;
    std::optional<FitPair> ref;
    try {
      if (mode == SensitivityMode::single_outlier) {
        Rng pick = make_rng(derive_seed(cfg.master_seed ^ 0x5c5c5c5c5c5c5c5cULL, r));
        const auto j = static_cast<Eigen::Index>(uniform_index(pick, cfg.n));
        positions = {static_cast<std::size_t>(j)};
        const auto rows = static_cast<Eigen::Index>(cfg.n);
        Eigen::MatrixXd xr(rows - 1, design.matrix().cols());
        Eigen::VectorXd yr(rows - 1);
        for (Eigen::Index i = 0, o = 0; i < rows; ++i) {
          if (i == j) continue;
          xr.row(o) = design.matrix().row(i);
          yr(o++) = clean(i);
        }
        ref = fit_both(ModelSpec(DesignMatrix(std::move(xr), design.column_names()), std::move(yr), cfg.link),
                       cfg.robust);
      } else {
        // s.y already carries the outliers; rebuild the clean signal
        Rng rng = make_rng(derive_seed(cfg.master_seed, r));
        for (Eigen::Index i = 0; i < mu.size(); ++i) clean(i) = sample(RayleighMean(mu(i)), rng);
        ref = fit_both(ModelSpec(design, clean, cfg.link), cfg.robust);
      }
    } catch (const Error&) {
      ref.reset();
    }
    if (!ref) return;

    for (std::size_t v = 0; v < nv; ++v) {
      Eigen::VectorXd y = clean;
      for (std::size_t p : positions) y(static_cast<Eigen::Index>(p)) = outlier_values[v];
      try {
        const FitPair c = fit_both(ModelSpec(design, std::move(y), cfg.link), cfg.robust);
        if (ref->mle.converged && c.mle.converged)
          mle[r * nv + v] = (n * (c.mle.beta_hat - ref->mle.beta_hat)).cwiseAbs().mean();
        if (ref->wmle.converged && c.wmle.converged)
          wmle[r * nv + v] = (n * (c.wmle.beta_hat - ref->wmle.beta_hat)).cwiseAbs().mean();
      } catch (const Error&) {
      }
    }
  });

  std::vector<CurvePoint> curve(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    double sm = 0.0, sw = 0.0;
    int um = 0, uw = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      if (const auto& m = mle[r * nv + v]) {
        sm += *m;
        ++um;
      }
      if (const auto& w = wmle[r * nv + v]) {
        sw += *w;
        ++uw;
      }
    }
    curve[v].x = outlier_values[v];
    curve[v].mle = um ? sm / um : std::nan("");
    curve[v].wmle = uw ? sw / uw : std::nan("");
    curve[v].mle_failures = static_cast<int>(reps) - um;
    curve[v].wmle_failures = static_cast<int>(reps) - uw;
  }
  return curve;
}

}  // namespace rayreg
