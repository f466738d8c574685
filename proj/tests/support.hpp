#pragma once

#include <functional>
#include <random>

#include <Eigen/Core>

#include "uwbtr/types.hpp"

namespace uwbtr::test {

/// Central differences of f(x (+) dx) w.r.t. dx at zero.
template <class X>
Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const X&)>& f,
                                 const std::function<X(const X&, const Eigen::VectorXd&)>& retract,
                                 const X& x, int dim, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    d[i] = h;
    j.col(i) = (f(retract(x, d)) - f(retract(x, -d))) / (2.0 * h);
  }
  return j;
}

/// Same, with a separate step per coordinate.
template <class X>
Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const X&)>& f,
                                 const std::function<X(const X&, const Eigen::VectorXd&)>& retract,
                                 const X& x, const Eigen::VectorXd& steps) {
  const Eigen::VectorXd f0 = f(x);
  const auto dim = steps.size();
  Eigen::MatrixXd j(f0.size(), dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    d[i] = steps[i];
    j.col(i) = (f(retract(x, d)) - f(retract(x, -d))) / (2.0 * steps[i]);
  }
  return j;
}

/// Frobenius-norm relative difference.
inline double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = numeric.norm();
  return (analytic - numeric).norm() / (scale > 0.0 ? scale : 1.0);
}

inline Vec3 random_vec(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace uwbtr::test
