// One contaminated sample, fitted both ways.

#include <cstdio>

#include "rayreg/rayreg.hpp"

int main() {
  rayreg::ScenarioConfig cfg;
  cfg.n = 500;
  cfg.epsilon = 0.05;

  const rayreg::DesignMatrix design = rayreg::scenario_design(cfg);
  const Eigen::VectorXd mu = rayreg::scenario_means(cfg, design);
  const rayreg::SimulatedSignal s = rayreg::simulate_signal(cfg, mu, 0, cfg.outlier_count());
  const rayreg::ModelSpec spec(design, s.y);
  const rayreg::FitPair fits = rayreg::fit_both(spec, cfg.robust);

  std::printf("%zu of %zu observations set to %g\n", s.outliers.size(), cfg.n, cfg.outlier_value);
  std::printf("%-6s %10s %10s %12s\n", "", "beta1", "beta2", "downweighted");
  std::printf("%-6s %10.4f %10.4f\n", "truth", cfg.beta_true(0), cfg.beta_true(1));
  for (const rayreg::FitResult* f : {&fits.mle, &fits.wmle})
    std::printf("%-6s %10.4f %10.4f %12zu\n", std::string(rayreg::to_string(f->method)).c_str(), f->beta_hat(0),
                f->beta_hat(1), f->downweighted());
}
