#include "uwbtr/least_squares.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

namespace uwbtr {

namespace {

Eigen::VectorXd jacobi_scale(const SparseMatrix& h) {
  Eigen::VectorXd s(h.cols());
  const Eigen::VectorXd d = h.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) s[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 1.0;
  return s;
}

}  // namespace

Eigen::VectorXd damped_step(const LinearSystem& sys, double mu, double* scaled_norm) {
  const SparseMatrix& j = sys.jacobian;
  const SparseMatrix h = SparseMatrix(j.transpose()) * j;
  const Eigen::VectorXd s = jacobi_scale(h);
  SparseMatrix hs = s.asDiagonal() * h * s.asDiagonal();
  if (mu > 0.0) {
    SparseMatrix eye(hs.rows(), hs.cols());
    eye.setIdentity();
    hs += mu * eye;
  }
  const Eigen::VectorXd rhs = -(s.asDiagonal() * (j.transpose() * sys.residual));
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(hs);
  if (ldlt.info() != Eigen::Success) {
    return Eigen::VectorXd::Constant(h.cols(), std::numeric_limits<double>::quiet_NaN());
  }
  const Eigen::VectorXd y = ldlt.solve(rhs);
  if (scaled_norm) *scaled_norm = y.norm();
  return s.asDiagonal() * y;
}

double scaled_gradient_norm(const LinearSystem& sys) {
  const SparseMatrix h = SparseMatrix(sys.jacobian.transpose()) * sys.jacobian;
  const Eigen::VectorXd g = sys.jacobian.transpose() * sys.residual;
  return jacobi_scale(h).cwiseProduct(g).norm();
}

Eigen::MatrixXd marginal_covariance(const SparseMatrix& jacobian, const std::vector<int>& indices) {
  const SparseMatrix h = SparseMatrix(jacobian.transpose()) * jacobian;
  const Eigen::VectorXd s = jacobi_scale(h);
  const SparseMatrix hs = s.asDiagonal() * h * s.asDiagonal();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(hs);
  if (ldlt.info() != Eigen::Success) throw NonConvergence("information matrix is singular");
  const int n = static_cast<int>(indices.size());
  Eigen::MatrixXd out(n, n);
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(h.cols());
    e[indices[c]] = s[indices[c]];
    const Eigen::VectorXd col = s.asDiagonal() * ldlt.solve(e);
    for (int r = 0; r < n; ++r) out(r, c) = col[indices[r]];
  }
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd whitening_matrix(const Eigen::MatrixXd& covariance) {
  const Eigen::VectorXd d = covariance.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = d.asDiagonal() * covariance * d.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    corr.diagonal().array() += 1e-12;
    llt.compute(corr);
    if (llt.info() != Eigen::Success) throw NonConvergence("covariance is not positive definite");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(corr.rows(), corr.cols());
  return llt.matrixL().solve(eye) * d.asDiagonal();
}

void add_block(Triplets& triplets, int row, int col, const Eigen::MatrixXd& block) {
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      if (block(r, c) != 0.0) triplets.emplace_back(row + r, col + c, block(r, c));
    }
  }
}

}  // namespace uwbtr
