#pragma once

// Serialization of fits, tests, Monte Carlo tables, curves and detections.
// Uses the single-header nlohmann/json from vendor/.

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rayreg/detection.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/image_io.hpp"
#include "rayreg/inference.hpp"
#include "rayreg/morphology.hpp"
#include "rayreg/simulation.hpp"

namespace rayreg::report {

using nlohmann::ordered_json;

inline ordered_json to_array(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ordered_json to_json(const WaldReport& w) {
  ordered_json j;
  j["interest"] = w.interest;
  j["estimate"] = to_array(w.estimate);
  j["null_value"] = to_array(w.null_value);
  j["statistic"] = w.statistic;
  j["dof"] = w.dof;
  j["p_value"] = w.p_value;
  j["threshold"] = w.threshold;
  j["pfa"] = w.pfa;
  j["reject_null"] = w.reject_null;
  return j;
}

// Coefficient table with one single-coefficient Wald test (beta_i = 0) per row.
inline ordered_json to_json(const FitResult& f, LinkFunction link, double pfa = 0.05) {
  ordered_json j;
  j["method"] = std::string(to_string(f.method));
  j["link"] = std::string(link.name());
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["loglik"] = f.loglik;
  j["observations"] = f.weights.size();
  j["downweighted"] = f.downweighted();
  j["score_max_abs"] = f.score.size() ? f.score.cwiseAbs().maxCoeff() : 0.0;
  ordered_json coefs = ordered_json::array();
  for (Eigen::Index i = 0; i < f.beta_hat.size(); ++i) {
    ordered_json c;
    c["name"] = i < static_cast<Eigen::Index>(f.column_names.size()) ? f.column_names[static_cast<std::size_t>(i)]
                                                                     : "b" + std::to_string(i + 1);
    c["estimate"] = f.beta_hat(i);
    c["std_error"] = f.std_errors(i);
    if (f.converged) {
      const WaldReport w = wald_test(f, {static_cast<std::size_t>(i)}, Eigen::VectorXd::Zero(1), pfa);
      c["wald_statistic"] = w.statistic;
      c["p_value"] = w.p_value;
    } else {
      c["wald_statistic"] = nullptr;
      c["p_value"] = nullptr;
    }
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);
  return j;
}

inline ordered_json to_json(const MonteCarloReport& r) {
  ordered_json j;
  j["method"] = std::string(to_string(r.method));
  j["parameters"] = r.parameter_names;
  j["truth"] = to_array(r.truth);
  j["mean"] = to_array(r.mean);
  j["relative_bias_pct"] = to_array(r.relative_bias_pct);
  j["mse"] = to_array(r.mse);
  j["absolute_total_rb"] = r.absolute_total_rb;
  j["absolute_total_mse"] = r.absolute_total_mse;
  j["replications"] = r.replications;
  j["convergence_failures"] = r.convergence_failures;
  return j;
}

inline ordered_json to_json(const CellReport& c) {
  ordered_json j;
  j["N"] = c.scenario.n;
  j["epsilon"] = c.scenario.epsilon;
  j["outliers"] = c.scenario.outlier_count();
  j["outlier_value"] = c.scenario.outlier_value;
  j["replications"] = c.scenario.replications;
  j["seed"] = c.scenario.master_seed;
  j["delta"] = c.scenario.robust.delta;
  j["WMLE"] = to_json(c.wmle);
  j["MLE"] = to_json(c.mle);
  return j;
}

inline ordered_json to_json(const std::vector<CellReport>& cells) {
  ordered_json a = ordered_json::array();
  for (const auto& c : cells) a.push_back(to_json(c));
  return a;
}

inline ordered_json to_json(const std::vector<CurvePoint>& curve) {
  ordered_json a = ordered_json::array();
  for (const auto& p : curve)
    a.push_back({{"x", p.x}, {"mle_value", p.mle}, {"wmle_value", p.wmle},
                 {"mle_failures", p.mle_failures}, {"wmle_failures", p.wmle_failures}});
  return a;
}

inline ordered_json to_json(const std::vector<Cluster>& clusters) {
  ordered_json a = ordered_json::array();
  for (const auto& c : clusters) a.push_back({{"row", c.row}, {"col", c.col}, {"pixels", c.pixels}});
  return a;
}

inline ordered_json to_json(const DetectionScore& s) {
  return {{"hits", s.hits}, {"false_alarms", s.false_alarms}, {"missed", s.missed}};
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "x,mle_value,wmle_value\n";
  for (const auto& p : curve)
    out += io::format_double(p.x) + "," + io::format_double(p.mle) + "," + io::format_double(p.wmle) + "\n";
  return out;
}

namespace detail {
inline std::string cell(double v, int width, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
  return buf;
}
inline std::string cell(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : std::string(static_cast<std::size_t>(width) - s.size(), ' ') + s;
}
}  // namespace detail

// Aligned table: one block per cell with Mean, RB(%) and MSE rows; per-parameter
// columns then the absolute total, WMLE on the left and MLE on the right.
inline std::string text_table(const std::vector<CellReport>& cells) {
  constexpr int w = 12;
  std::string out;
  for (const auto& c : cells) {
    const auto& names = c.wmle.parameter_names;
    char head[128];
    std::snprintf(head, sizeof head, "N = %zu, epsilon = %g%% (%zu outlier%s at %g), %d replications\n", c.scenario.n,
                  100.0 * c.scenario.epsilon, c.scenario.outlier_count(), c.scenario.outlier_count() == 1 ? "" : "s",
                  c.scenario.outlier_value,
                  c.scenario.replications);
    out += head;
    std::string hdr = detail::cell("", 8);
    for (const char* m : {"WMLE", "MLE"}) {
      for (const auto& n : names) hdr += detail::cell(std::string(m) + " " + n, w + 4);
      hdr += detail::cell(std::string(m) + " Abs.Total", w + 6);
    }
    out += hdr + "\n";
    // total < 0 leaves the absolute-total column blank
    auto row = [&](const char* label, auto values, auto total) {
      std::string line = detail::cell(label, 8);
      for (const MonteCarloReport* r : {&c.wmle, &c.mle}) {
        const Eigen::VectorXd v = values(*r);
        for (Eigen::Index i = 0; i < v.size(); ++i) line += detail::cell(v(i), w + 4, 4);
        const double t = total(*r);
        line += t < 0.0 ? detail::cell("", w + 6) : detail::cell(t, w + 6, 4);
      }
      out += line + "\n";
    };
    row("Mean", [](const MonteCarloReport& r) { return r.mean; }, [](const MonteCarloReport&) { return -1.0; });
    row("RB(%)", [](const MonteCarloReport& r) { return r.relative_bias_pct; },
        [](const MonteCarloReport& r) { return r.absolute_total_rb; });
    row("MSE", [](const MonteCarloReport& r) { return r.mse; }, [](const MonteCarloReport& r) { return r.absolute_total_mse; });
    if (c.wmle.convergence_failures || c.mle.convergence_failures) {
      char foot[128];
      std::snprintf(foot, sizeof foot, "  excluded non-converged fits: WMLE %d, MLE %d\n", c.wmle.convergence_failures,
                    c.mle.convergence_failures);
      out += foot;
    }
    out += "\n";
  }
  return out;
}

}  // namespace rayreg::report
