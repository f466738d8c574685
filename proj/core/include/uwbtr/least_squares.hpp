#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "uwbtr/errors.hpp"

namespace uwbtr {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Whitened residual vector and its Jacobian w.r.t. the local perturbation.
struct LinearSystem {
  Eigen::VectorXd residual;
  SparseMatrix jacobian;
};

struct SolverOptions {
  int max_iterations = 50;
  double relative_cost_tol = 1e-9;
  double step_tol = 1e-10;  ///< on the Jacobi-scaled step
  double gradient_tol = 1e-8;  ///< on the Jacobi-scaled gradient
  double initial_damping = 0.0;
};

struct SolverReport {
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double scaled_gradient_norm = 0.0;
  std::vector<double> accepted_costs;
};

/// Damped, Jacobi-scaled normal-equation step: solves (S H S + mu I) y = -S g and
/// returns dx = S y. `scaled_norm` receives |y|.
Eigen::VectorXd damped_step(const LinearSystem& sys, double mu, double* scaled_norm = nullptr);

/// Gradient J^T r scaled by 1/sqrt(diag(J^T J)).
double scaled_gradient_norm(const LinearSystem& sys);

/// Columns `indices` of (J^T J)^{-1}, restricted to the same rows.
Eigen::MatrixXd marginal_covariance(const SparseMatrix& jacobian, const std::vector<int>& indices);

/// W with W^T W = cov^{-1}, computed on the correlation-scaled matrix.
Eigen::MatrixXd whitening_matrix(const Eigen::MatrixXd& covariance);

/// Appends the nonzero entries of `block` at (row, col).
void add_block(Triplets& triplets, int row, int col, const Eigen::MatrixXd& block);

/// Gauss-Newton with a Levenberg-Marquardt fallback when a step increases the
/// cost; the damping then follows the gain ratio of actual to predicted
/// decrease. `evaluate(x, with_jacobian)` returns whitened residuals;
/// `retract(x, dx)` applies a perturbation. Throws NonConvergence at the
/// iteration cap.
template <class Params>
SolverReport minimize(Params& x,
                      const std::function<LinearSystem(const Params&, bool)>& evaluate,
                      const std::function<Params(const Params&, const Eigen::VectorXd&)>& retract,
                      const SolverOptions& options = {}) {
  SolverReport report;
  LinearSystem sys = evaluate(x, true);
  double cost = 0.5 * sys.residual.squaredNorm();
  report.initial_cost = cost;
  report.accepted_costs.push_back(cost);
  double mu = options.initial_damping;
  double nu = 2.0;

  for (int it = 0; it < options.max_iterations; ++it) {
    report.iterations = it + 1;
    if (scaled_gradient_norm(sys) < options.gradient_tol) {
      report.converged = true;
      break;
    }
    double step_norm = 0.0;
    const Eigen::VectorXd dx = damped_step(sys, mu, &step_norm);
    if (!dx.allFinite()) throw NonConvergence("non-finite least-squares step");
    if (step_norm < options.step_tol) {
      report.converged = true;
      break;
    }
    const Eigen::VectorXd jdx = sys.jacobian * dx;
    const double predicted = -sys.residual.dot(jdx) - 0.5 * jdx.squaredNorm();
    Params candidate = retract(x, dx);
    const double new_cost = 0.5 * evaluate(candidate, false).residual.squaredNorm();
    if (std::isfinite(new_cost) && new_cost <= cost) {
      const double decrease = cost - new_cost;
      const double mu_used = mu;
      x = std::move(candidate);
      sys = evaluate(x, true);
      const double old_cost = cost;
      cost = 0.5 * sys.residual.squaredNorm();
      report.accepted_costs.push_back(cost);
      if (mu > 0.0) {
        const double rho = predicted > 0.0 ? decrease / predicted : 0.0;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        if (mu < 1e-12) mu = 0.0;
      }
      if (mu_used < 1.0 && decrease <= options.relative_cost_tol * old_cost) {
        report.converged = true;
        break;
      }
    } else {
      mu = mu > 0.0 ? mu * nu : 1e-3;
      nu *= 2.0;
      if (mu > 1e12) {
        // no descent left at this precision
        report.converged = true;
        break;
      }
    }
  }
  report.final_cost = cost;
  report.scaled_gradient_norm = scaled_gradient_norm(sys);
  if (!report.converged) throw NonConvergence("least-squares solve hit the iteration cap");
  return report;
}

}  // namespace uwbtr
