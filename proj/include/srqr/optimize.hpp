// Compact L-BFGS (two-loop recursion, Armijo backtracking) for the path
// transcription solver.  Deterministic: no global state, no randomness.
#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>

#include "srqr/core.hpp"

namespace srqr {

using Objective = std::function<double(const Eigen::VectorXd&)>;

inline Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                                   double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    const double fp = f(xp);
    xp[i] = x[i] - step;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2 * step);
  }
  return g;
}

struct LbfgsOptions {
  int max_iterations = 120;
  int history = 8;
  double grad_tol = 1e-8;
  double step_tol = 1e-12;
  double fd_step = 1e-6;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

inline LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0,
                                  const LbfgsOptions& opt = {}) {
  LbfgsResult out;
  Eigen::VectorXd x = std::move(x0);
  double fx = f(x);
  Eigen::VectorXd g = fd_gradient(f, x, opt.fd_step);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.norm() <= opt.grad_tol * std::max(1.0, x.norm())) {
      out.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = int(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (slope >= 0) {  // fallback to steepest descent
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    const double c1 = 1e-4;
    double fn = fx;
    Eigen::VectorXd xn;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + step * d;
      fn = f(xn);
      if (fn <= fx + c1 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok || step * d.norm() <= opt.step_tol * std::max(1.0, x.norm())) {
      out.converged = ok;
      break;
    }
    Eigen::VectorXd gn = fd_gradient(f, xn, opt.fd_step);
    Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (int(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(xn);
    fx = fn;
    g = std::move(gn);
    out.iterations = it + 1;
  }
  out.x = std::move(x);
  out.value = fx;
  return out;
}

}  // namespace srqr
