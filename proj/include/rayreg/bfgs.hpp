#pragma once

// Quasi-Newton (BFGS) minimizer with analytic gradients and a backtracking
// line search that also serves as a feasibility guard: the objective may
// return +inf (or NaN) outside its domain and the step is halved until a
// finite value is obtained.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "rayreg/errors.hpp"

namespace rayreg {

struct BfgsOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;   // stop when ||grad||_inf <= grad_tol
  double rel_tol = 1e-9;    // stagnation threshold on |df| / max(1, |f|)
  int max_backtracks = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // objective after each accepted step, starting point first
};

// `objective(x, grad)` returns f(x) and writes the gradient into grad. A
// non-finite return marks x as infeasible.
template <class Objective>
BfgsResult bfgs_minimize(Objective&& objective, Eigen::VectorXd x0, const BfgsOptions& opt) {
  const Eigen::Index k = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(k);
  double f = objective(res.x, res.gradient);
  if (!std::isfinite(f)) throw DomainError("bfgs: objective is not finite at the starting point");
  res.trace.push_back(f);

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k);
  bool h_is_identity = true;
  bool scaled = false;
  int stagnant = 0;
  Eigen::VectorXd g_new(k);
  Eigen::VectorXd x_new(k);

  constexpr double c1 = 1e-4;
  const double eps = std::numeric_limits<double>::epsilon();

  while (res.iterations < opt.max_iter) {
    const Eigen::VectorXd& g = res.gradient;
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd p = -h * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h.setIdentity();
      h_is_identity = true;
      p = -g;
      slope = g.dot(p);
    }
    // An unscaled identity step can be wildly out of scale; cap it.
    double alpha = h_is_identity && !scaled ? std::min(1.0, 1.0 / p.lpNorm<Eigen::Infinity>()) : 1.0;

    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, alpha *= 0.5) {
      x_new = res.x + alpha * p;
      f_new = objective(x_new, g_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new <= f + c1 * alpha * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the decrease drops below the rounding level of f;
      // accept then if f did not rise beyond rounding and the gradient shrank.
      const double noise = 16.0 * eps * (1.0 + std::abs(f));
      if (f_new <= f + noise && g_new.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!h_is_identity) {
        h.setIdentity();
        h_is_identity = true;
        scaled = false;
        continue;
      }
      break;
    }

    ++res.iterations;
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (h_is_identity) {
        h *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * yv;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      h += rho * ((1.0 + rho * yv.dot(hy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()));
      h_is_identity = false;
    }

    const double rel_change = std::abs(f - f_new) / std::max(1.0, std::abs(f));
    stagnant = rel_change <= opt.rel_tol ? stagnant + 1 : 0;

    res.x = x_new;
    res.gradient = g_new;
    f = f_new;
    res.trace.push_back(f);

    if (stagnant >= 5 && res.gradient.lpNorm<Eigen::Infinity>() > opt.grad_tol) {
      // No measurable progress in the objective: restart the curvature model
      // once, then give up.
      if (!h_is_identity) {
        h.setIdentity();
        h_is_identity = true;
        scaled = false;
        stagnant = 0;
      } else {
        break;
      }
    }
  }
  if (!res.converged && res.gradient.lpNorm<Eigen::Infinity>() <= opt.grad_tol) res.converged = true;
  res.value = f;
  return res;
}

}  // namespace rayreg
