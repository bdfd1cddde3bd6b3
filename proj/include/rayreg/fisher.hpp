#pragma once

#include <Eigen/Dense>

#include "rayreg/errors.hpp"
#include "rayreg/regression.hpp"

namespace rayreg {

// Expected information I(beta) = X^T diag(FisherWeight) X, FisherWeight[n] =
// 4/mu[n]^2 (d mu/d eta)^2. Not to be confused with the robustness weights of
// the weighted likelihood, which never enter this matrix.
inline Eigen::MatrixXd fisher_information(const ModelSpec& spec, const Eigen::VectorXd& mu) {
  if (static_cast<std::size_t>(mu.size()) != spec.observations())
    throw DomainError("fisher_information: mean vector length mismatch");
  const LinkFunction link = spec.link();
  Eigen::VectorXd fisher_weight(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu(i) > 0.0)) throw NonPositiveMeanError(static_cast<std::size_t>(i));
    fisher_weight(i) = link.fisher_weight(mu(i));
  }
  const auto& x = spec.x();
  Eigen::MatrixXd info = x.transpose() * fisher_weight.asDiagonal() * x;
  return 0.5 * (info + info.transpose());
}

// Inverse of a symmetric positive-definite information matrix; throws when
// the matrix is singular or not positive definite.
inline Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) throw RankDeficientError("Fisher information is not positive definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return 0.5 * (cov + cov.transpose());
}

}  // namespace rayreg
