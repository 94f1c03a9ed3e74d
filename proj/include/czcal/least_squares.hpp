// Copyright 2026 The czcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small bounded Levenberg-Marquardt solver for the curve fits in the library
// (decay fits, LZS fits, cryoscope exponentials, power laws). Problems here
// have a handful of parameters, so the Jacobian is taken by finite
// differences and the normal equations are solved densely.

#ifndef CZCAL_LEAST_SQUARES_HPP_
#define CZCAL_LEAST_SQUARES_HPP_

#include <limits>
#include <optional>

#include "czcal/common.hpp"

namespace czcal {

struct LsqOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-12;
  double step_tol = 1e-12;
  double cost_tol = 1e-15;  // relative
  double initial_lambda = 1e-3;
  std::optional<VectorXd> lower;
  std::optional<VectorXd> upper;
};

struct LsqResult {
  VectorXd x;
  VectorXd residual;
  MatrixXd jacobian;
  double cost = 0.0;  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;

  // Parameter covariance sigma^2 (J^T J)^{-1} with sigma^2 from the residual.
  MatrixXd covariance() const {
    const auto m = static_cast<double>(residual.size());
    const auto n = static_cast<double>(x.size());
    const double s2 = m > n ? residual.squaredNorm() / (m - n) : 0.0;
    const MatrixXd jtj = jacobian.transpose() * jacobian;
    return s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  }
  double rms() const {
    return residual.size() ? std::sqrt(residual.squaredNorm() / residual.size()) : 0.0;
  }
};

namespace detail {

inline void clamp_to(VectorXd& x, const LsqOptions& o) {
  if (o.lower) x = x.cwiseMax(*o.lower);
  if (o.upper) x = x.cwiseMin(*o.upper);
}

template <typename Fn>
MatrixXd numeric_jacobian(Fn& f, const VectorXd& x, const VectorXd& r0,
                          const LsqOptions& o) {
  MatrixXd j(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double h = 1.5e-8 * (x(k) != 0.0 ? std::abs(x(k)) : 1.0);
    VectorXd xp = x;
    xp(k) += h;
    if (o.upper && xp(k) > (*o.upper)(k)) {
      h = -h;
      xp(k) = x(k) + h;
    }
    const VectorXd rp = f(xp);
    j.col(k) = (rp - r0) / h;
  }
  return j;
}

}  // namespace detail

// Minimizes 0.5 |f(x)|^2; f maps an n-vector to an m-vector of residuals.
template <typename Fn>
LsqResult levenberg_marquardt(Fn&& f, VectorXd x0, const LsqOptions& o = {}) {
  detail::clamp_to(x0, o);
  LsqResult res;
  res.x = std::move(x0);
  res.residual = f(res.x);
  if (!res.residual.allFinite())
    throw NumericalError("levenberg_marquardt: non-finite residual at start");
  res.cost = 0.5 * res.residual.squaredNorm();
  double lambda = o.initial_lambda;
  for (res.iterations = 0; res.iterations < o.max_iterations; ++res.iterations) {
    res.jacobian = detail::numeric_jacobian(f, res.x, res.residual, o);
    const MatrixXd jtj = res.jacobian.transpose() * res.jacobian;
    const VectorXd g = res.jacobian.transpose() * res.residual;
    if (g.lpNorm<Eigen::Infinity>() < o.gradient_tol) {
      res.converged = true;
      break;
    }
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      MatrixXd a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const VectorXd step = a.ldlt().solve(-g);
      VectorXd x = res.x + step;
      detail::clamp_to(x, o);
      const VectorXd r = f(x);
      const double c = r.allFinite() ? 0.5 * r.squaredNorm()
                                     : std::numeric_limits<double>::infinity();
      if (c < res.cost) {
        const double dc = res.cost - c;
        const double dx = ((x - res.x).array().abs() /
                           (res.x.array().abs() + o.step_tol)).maxCoeff();
        res.x = x;
        res.residual = r;
        res.cost = c;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (dc <= o.cost_tol * std::max(c, 1e-300) ||
            dx <= o.step_tol)
          res.converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) {
      res.converged = true;  // no descent direction left at machine precision
      break;
    }
    if (res.converged) break;
  }
  res.jacobian = detail::numeric_jacobian(f, res.x, res.residual, o);
  return res;
}

}  // namespace czcal

#endif  // CZCAL_LEAST_SQUARES_HPP_
