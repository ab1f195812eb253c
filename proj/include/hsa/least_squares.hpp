#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include <Eigen/Dense>

#include "hsa/error.hpp"

namespace hsa {

/// Ordinary least squares via column-pivoted QR. Throws
/// DegenerateDesignMatrix when the columns are not linearly independent.
inline Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  if (design.rows() != y.size()) throw Error(Errc::LengthMismatch, "design matrix and data differ in length");
  if (design.rows() < design.cols())
    throw Error(Errc::DegenerateDesignMatrix, "fewer observations than parameters");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) throw Error(Errc::DegenerateDesignMatrix, "design matrix is rank deficient");
  return qr.solve(y);
}

/// Coefficient of determination about the observed mean. Constant data
/// scores 1 when reproduced exactly and 0 otherwise.
inline double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty())
    throw Error(Errc::LengthMismatch, "observed and predicted must have equal nonzero length");
  const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / observed.size();
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

inline double r_squared(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  return r_squared(std::span<const double>(observed.data(), static_cast<std::size_t>(observed.size())),
                   std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())));
}

struct LmOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-15;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = 0;  // 0.5 * sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with a central-difference Jacobian. `residuals` maps
/// a parameter vector to the residual vector.
template <class Residuals>
LmResult levenberg_marquardt(Residuals&& residuals, Eigen::VectorXd x, const LmOptions& opt = {}) {
  const auto cost_of = [](const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); };
  Eigen::VectorXd r = residuals(x);
  double cost = cost_of(r);
  LmResult out;
  if (!std::isfinite(cost)) {
    out.params = x;
    out.cost = cost;
    return out;
  }
  const Eigen::Index n = x.size();
  double lambda = -1;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd jac(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * (1.0 + std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (residuals(xp) - residuals(xm)) / (2 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    if (lambda < 0) lambda = 1e-3 * std::max(jtj.diagonal().maxCoeff(), 1e-12);

    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < n; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd candidate = x + step;
      const Eigen::VectorXd rc = residuals(candidate);
      const double cc = cost_of(rc);
      if (std::isfinite(cc) && cc < cost) {
        const double drop = cost - cc;
        x = candidate;
        r = rc;
        cost = cc;
        lambda = std::max(lambda / 3.0, 1e-15);
        improved = true;
        if (drop <= opt.relative_tolerance * std::max(cost, 1e-300) ||
            step.norm() <= 1e-13 * (1.0 + x.norm())) {
          out.converged = true;
        }
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved) {
      // No descent direction left: at a (local) minimum to working precision.
      out.converged = true;
    }
    if (out.converged) break;
  }
  out.params = x;
  out.cost = cost;
  return out;
}

}  // namespace hsa
