#pragma once

// BFGS with a backtracking Armijo line search, for smooth objectives with an
// analytic gradient.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace proxcausal {

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;  // infinity norm at x
  int iterations = 0;
  bool converged = false;
};

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x, double grad_tol = 1e-6, int max_iter = 500) {
  const auto p = x.size();
  Eigen::VectorXd g(p), g_new(p);
  double fx = f(x, g);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);  // inverse Hessian estimate
  MinimizeResult out;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    if (!std::isfinite(fx)) break;
    if (g.lpNorm<Eigen::Infinity>() < grad_tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // lost descent: reset to steepest descent
      h.setIdentity();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = fx;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = x + step * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_rsy = Eigen::MatrixXd::Identity(p, p) - rho * s * y.transpose();
      h = i_rsy * h * i_rsy.transpose() + rho * s * s.transpose();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  out.x = x;
  out.value = fx;
  out.gradient_norm = g.lpNorm<Eigen::Infinity>();
  if (out.gradient_norm < grad_tol) out.converged = true;
  return out;
}

}  // namespace proxcausal
