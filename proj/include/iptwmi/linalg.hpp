#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "iptwmi/errors.hpp"
#include "iptwmi/rng.hpp"

namespace iptwmi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Symmetric positive semi-definite matrix (parameter covariances, Sigma).
using CovMatrix = Eigen::MatrixXd;

inline double expit(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline Vector expit(const Vector& eta) { return eta.unaryExpr([](double v) { return expit(v); }); }

// A square factor L with L * L^T == cov.
//
// Uses the Cholesky factor when it exists. With `repair` set, a matrix that is
// only positive semi-definite (or slightly indefinite from rounding) is factored
// through its eigendecomposition with negative eigenvalues clipped to zero;
// otherwise a failed Cholesky raises ParameterError.
inline Matrix covariance_factor(const CovMatrix& cov, bool repair = true) {
  if (cov.rows() != cov.cols()) {
    throw ParameterError("covariance_factor: matrix is not square");
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) {
    Matrix l = llt.matrixL();
    if (l.allFinite()) {
      return l;
    }
  }
  if (!repair) {
    throw ParameterError("covariance_factor: matrix is not positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  if (eig.info() != Eigen::Success) {
    throw ParameterError("covariance_factor: eigendecomposition failed");
  }
  Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

// dim x dim matrix with unit diagonal and `rho` off the diagonal.
inline CovMatrix equicorrelation(std::size_t dim, double rho) {
  CovMatrix s = CovMatrix::Constant(dim, dim, rho);
  s.diagonal().setOnes();
  return s;
}

// n iid rows from N_3(0, Sigma) with Sigma_ii = 1, Sigma_ij = rho.
inline Matrix mvn_sample(RngStream& rng, std::size_t n, double rho) {
  if (!(rho > -0.5 && rho < 1.0)) {
    throw ParameterError("mvn_sample: rho must lie in (-0.5, 1) for a 3x3 equicorrelation matrix");
  }
  Eigen::LLT<Matrix> llt(equicorrelation(3, rho));
  if (llt.info() != Eigen::Success) {
    throw ParameterError("mvn_sample: Cholesky of the correlation matrix failed");
  }
  Matrix l = llt.matrixL();
  Matrix out(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    double e0 = rng.normal();
    double e1 = rng.normal();
    double e2 = rng.normal();
    out(i, 0) = l(0, 0) * e0;
    out(i, 1) = l(1, 0) * e0 + l(1, 1) * e1;
    out(i, 2) = l(2, 0) * e0 + l(2, 1) * e1 + l(2, 2) * e2;
  }
  return out;
}

// Draw from N(mean, cov) given a precomputed factor of cov.
inline Vector mvn_draw(RngStream& rng, const Vector& mean, const Matrix& factor) {
  Vector e(factor.cols());
  for (Eigen::Index j = 0; j < e.size(); ++j) {
    e(j) = rng.normal();
  }
  return mean + factor * e;
}

}  // namespace iptwmi
