#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's estimators.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "iptwmi/linalg.hpp"
#include "iptwmi/rng.hpp"

namespace testsupport {

using Mat = std::vector<std::vector<double>>;

// Gauss-Jordan inverse with partial pivoting.
inline Mat gauss_jordan_inverse(Mat a) {
  const std::size_t n = a.size();
  Mat inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    inv[i][i] = 1.0;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) {
        piv = r;
      }
    }
    if (std::abs(a[piv][c]) < 1e-300) {
      throw std::runtime_error("singular");
    }
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) {
        continue;
      }
      double f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

struct NewtonResult {
  std::vector<double> beta;
  Mat inverse_information;
};

// Plain Newton-Raphson on the logistic log-likelihood.
inline NewtonResult newton_logistic(const Mat& x, const std::vector<double>& y, int iters = 100) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<double> beta(p, 0.0);
  Mat info_inv;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> score(p, 0.0);
    Mat info(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        eta += x[i][j] * beta[j];
      }
      double pr = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t j = 0; j < p; ++j) {
        score[j] += x[i][j] * (y[i] - pr);
        for (std::size_t k = 0; k < p; ++k) {
          info[j][k] += x[i][j] * x[i][k] * pr * (1.0 - pr);
        }
      }
    }
    info_inv = gauss_jordan_inverse(info);
    double step = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        d += info_inv[j][k] * score[k];
      }
      beta[j] += d;
      step = std::max(step, std::abs(d));
    }
    if (step < 1e-13) {
      break;
    }
  }
  return {beta, info_inv};
}

inline Mat to_mat(const iptwmi::Matrix& m) {
  Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return out;
}

inline std::vector<double> to_std(const iptwmi::Vector& v) { return {v.data(), v.data() + v.size()}; }

// Random logistic problem: intercept plus p-1 standard normal columns.
struct LogisticProblem {
  iptwmi::Matrix x;
  iptwmi::Vector y;
  iptwmi::Vector alpha;
};

inline LogisticProblem random_logistic(iptwmi::RngStream& rng, int n, int p, double scale = 0.8) {
  LogisticProblem pr;
  pr.x.resize(n, p);
  pr.alpha.resize(p);
  for (int j = 0; j < p; ++j) {
    pr.alpha(j) = scale * (2.0 * rng.uniform() - 1.0);
  }
  pr.y.resize(n);
  for (int i = 0; i < n; ++i) {
    pr.x(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) {
      pr.x(i, j) = rng.normal();
    }
    pr.y(i) = rng.bernoulli(iptwmi::expit(pr.x.row(i).dot(pr.alpha))) ? 1.0 : 0.0;
  }
  return pr;
}

// Direct evaluation of the uncorrected IPTW variance display, term by term.
inline double direct_v_un(const std::vector<double>& y, const std::vector<double>& z, const std::vector<double>& e,
                          double k1, double k0) {
  double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s1 += z[i] / e[i];
    s0 += (1 - z[i]) / (1 - e[i]);
    n1 += z[i] * y[i] / e[i];
    n0 += (1 - z[i]) * y[i] / (1 - e[i]);
  }
  double mu1 = n1 / s1, mu0 = n0 / s0;
  double a = 0, b = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a += std::pow(y[i] - mu1, 2) * z[i] / (e[i] * e[i]);
    b += std::pow(y[i] - mu0, 2) * (1 - z[i]) / ((1 - e[i]) * (1 - e[i]));
  }
  return k1 * k1 * a / (s1 * s1) + k0 * k0 * b / (s0 * s0);
}

}  // namespace testsupport
