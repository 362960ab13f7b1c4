// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseLU>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

void check_problem(const OdeProblem& p) {
  require(static_cast<bool>(p.rhs), "ode: rhs is required");
  require(p.t_end > p.t_begin, "ode: t_end must exceed t_begin");
  require(p.abstol > 0.0 && p.reltol > 0.0, "ode: tolerances must be positive");
  require(p.dt0 >= 0.0, "ode: dt0 must be nonnegative");
}

double wrms(const Vector& e, const Vector& y0, const Vector& y1, double atol, double rtol) {
  if (e.size() == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = e[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(e.size()));
}

bool finite(const Vector& v) { return v.allFinite(); }

struct Clock {
  double t, t_end, span;
  bool done() const { return t_end - t <= 1e-12 * span; }
  double clip(double h) const {
    const double rest = t_end - t;
    return h >= rest * (1.0 - 1e-10) ? rest : h;
  }
};

[[noreturn]] void inadmissible_failure(const OdeProblem& p, double t) {
  if (p.on_inadmissible_failure) p.on_inadmissible_failure();
  throw Error(ErrorCode::StepUnderflow, "ode: repeated inadmissible states near t = " + std::to_string(t));
}

void underflow(double h, const Clock& c) {
  if (h < 1e-14 * c.span)
    throw Error(ErrorCode::StepUnderflow, "ode: step size underflow at t = " + std::to_string(c.t));
}

}  // namespace

double step_factor(double err_norm) {
  if (err_norm <= 0.0) return 5.0;
  return std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
}

OdeSolution integrate_explicit(const OdeProblem& p) {
  check_problem(p);
  // Dormand-Prince 5(4)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeSolution sol;
  Vector y = p.y0;
  const auto n = y.size();
  Clock clk{p.t_begin, p.t_end, p.t_end - p.t_begin};
  double h = p.dt0 > 0.0 ? p.dt0 : clk.span / 10.0;
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n), err(n);
  p.rhs(clk.t, y, k1);
  ++sol.nfev;
  int bad = 0;
  while (!clk.done()) {
    if (static_cast<int>(sol.steps.size()) >= p.max_steps)
      throw Error(ErrorCode::StepUnderflow, "ode: too many steps");
    h = clk.clip(h);
    underflow(h, clk);
    const double t = clk.t;
    yt = y + h * a21 * k1;
    p.rhs(t + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    p.rhs(t + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    p.rhs(t + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    p.rhs(t + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    p.rhs(t + h, yt, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    p.rhs(t + h, ynew, k7);
    sol.nfev += 6;
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const bool ok_values = finite(ynew) && finite(k7) && finite(err);
    const bool ok_state = ok_values && (!p.admissible || p.admissible(t + h, ynew));
    if (!ok_state) {
      ++sol.rejected;
      if (++bad > p.max_inadmissible) inadmissible_failure(p, t);
      h *= 0.5;
      continue;
    }
    bad = 0;
    const double en = wrms(err, y, ynew, p.abstol, p.reltol);
    if (en > 1.0) {
      ++sol.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }
    clk.t = h == clk.t_end - t ? clk.t_end : t + h;
    y = ynew;
    k1 = k7;
    sol.steps.push_back({clk.t, h, en});
    if (p.observer) p.observer(clk.t, y);
    h *= step_factor(en);
  }
  sol.y = y;
  return sol;
}

std::vector<int> color_columns(const std::vector<std::vector<Index>>& pattern, std::size_t nrows) {
  std::vector<int> color(pattern.size(), -1);
  int ncolors = 0;
  std::vector<std::vector<char>> used;  // rows touched per color
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    int c = 0;
    for (; c < ncolors; ++c) {
      bool clash = false;
      for (Index r : pattern[j])
        if (used[c][r]) {
          clash = true;
          break;
        }
      if (!clash) break;
    }
    if (c == ncolors) {
      used.emplace_back(nrows, 0);
      ++ncolors;
    }
    for (Index r : pattern[j]) used[c][r] = 1;
    color[j] = c;
  }
  return color;
}

namespace {

/// Finite-difference Jacobian of rhs at (t, y) with f0 = rhs(t, y).
class FdJacobian {
 public:
  FdJacobian(const OdeProblem& p, std::size_t n) : p_(p), n_(n) {
    if (!p.jac_pattern.empty()) {
      require(p.jac_pattern.size() == n, "ode: jac_pattern must have one entry per column");
      color_ = color_columns(p.jac_pattern, n);
      ncolors_ = color_.empty() ? 0 : *std::max_element(color_.begin(), color_.end()) + 1;
    }
  }

  SparseMatrix operator()(double t, const Vector& y, const Vector& f0, long& nfev) const {
    const auto n = static_cast<Eigen::Index>(n_);
    std::vector<Eigen::Triplet<double>> trip;
    Vector yp = y, f1(n);
    const double sq = std::sqrt(std::numeric_limits<double>::epsilon());
    if (p_.jac_pattern.empty()) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double dj = sq * std::max(1.0, std::abs(y[j]));
        yp[j] = y[j] + dj;
        p_.rhs(t, yp, f1);
        ++nfev;
        yp[j] = y[j];
        for (Eigen::Index i = 0; i < n; ++i) {
          const double v = (f1[i] - f0[i]) / dj;
          if (v != 0.0) trip.emplace_back(i, j, v);
        }
      }
    } else {
      Vector delta(n);
      for (int c = 0; c < ncolors_; ++c) {
        yp = y;
        for (Eigen::Index j = 0; j < n; ++j)
          if (color_[j] == c) {
            delta[j] = sq * std::max(1.0, std::abs(y[j]));
            yp[j] += delta[j];
          }
        p_.rhs(t, yp, f1);
        ++nfev;
        for (Eigen::Index j = 0; j < n; ++j)
          if (color_[j] == c)
            for (Index i : p_.jac_pattern[j]) trip.emplace_back(i, j, (f1[i] - f0[i]) / delta[j]);
      }
    }
    SparseMatrix J(n, n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  }

 private:
  const OdeProblem& p_;
  std::size_t n_;
  std::vector<int> color_;
  int ncolors_ = 0;
};

}  // namespace

OdeSolution integrate_stiff(const OdeProblem& p) {
  check_problem(p);
  OdeSolution sol;
  const auto n = p.y0.size();
  Vector y = p.y0;
  Clock clk{p.t_begin, p.t_end, p.t_end - p.t_begin};
  double h = p.dt0 > 0.0 ? p.dt0 : clk.span / 10.0;
  FdJacobian fdjac(p, static_cast<std::size_t>(n));

  // history: y_{n-1}, y_{n-2} and step sizes
  Vector y1, y2;
  double h1 = 0.0, h2 = 0.0;
  int nhist = 0;
  Vector f0(n), f(n), psi(n), yc(n), yp(n), res(n), dy(n);
  int bad_state = 0, bad_newton = 0;
  SparseMatrix I(n, n);
  I.setIdentity();

  while (!clk.done()) {
    if (static_cast<int>(sol.steps.size()) >= p.max_steps) throw Error(ErrorCode::StepUnderflow, "ode: too many steps");
    h = clk.clip(h);
    underflow(h, clk);
    const double t = clk.t;
    p.rhs(t, y, f0);
    ++sol.nfev;
    if (!finite(f0)) throw Error(ErrorCode::NonFinite, "ode: non-finite right-hand side at t = " + std::to_string(t));
    const SparseMatrix J = fdjac(t, y, f0, sol.nfev);

    bool retry = true;
    while (retry) {
      retry = false;
      h = clk.clip(h);
      underflow(h, clk);
      const int order = nhist >= 2 ? 2 : 1;
      double gamma = 1.0;
      if (order == 1) {
        psi = y;
        yp = y + h * f0;
      } else {
        const double w = h / h1;
        gamma = (1.0 + w) / (1.0 + 2.0 * w);
        psi = ((1.0 + w) * (1.0 + w) / (1.0 + 2.0 * w)) * y - (w * w / (1.0 + 2.0 * w)) * y1;
        // quadratic through (t-h1-h2, y2), (t-h1, y1), (t, y) at t + h
        const double s0 = 0.0, s1 = -h1, s2 = -h1 - h2, s = h;
        const double l0 = (s - s1) * (s - s2) / ((s0 - s1) * (s0 - s2));
        const double l1 = (s - s0) * (s - s2) / ((s1 - s0) * (s1 - s2));
        const double l2 = (s - s0) * (s - s1) / ((s2 - s0) * (s2 - s1));
        yp = l0 * y + l1 * y1 + l2 * y2;
      }
      SparseMatrix A = I - (gamma * h) * J;
      Eigen::SparseLU<SparseMatrix> lu;
      lu.compute(A);
      bool conv = lu.info() == Eigen::Success;
      bool nonfinite = false;
      yc = yp;
      double prev_norm = 0.0;
      for (int it = 0; conv && it < 6; ++it) {
        p.rhs(t + h, yc, f);
        ++sol.nfev;
        if (!finite(f)) {
          nonfinite = true;
          conv = false;
          break;
        }
        res = yc - psi - (gamma * h) * f;
        dy = lu.solve(res);
        yc -= dy;
        const double dn = wrms(dy, y, yc, p.abstol, p.reltol);
        if (!std::isfinite(dn)) {
          nonfinite = true;
          conv = false;
          break;
        }
        if (dn <= 1e-2) break;
        if (it > 0 && dn > 0.9 * prev_norm) {
          conv = false;
          break;
        }
        if (it == 5) conv = false;
        prev_norm = dn;
      }
      if (!conv) {
        ++sol.rejected;
        if (nonfinite) {
          if (++bad_state > p.max_inadmissible) inadmissible_failure(p, t);
        } else if (++bad_newton > 20) {
          throw Error(ErrorCode::ConvergenceFailure, "ode: Newton iteration failed near t = " + std::to_string(t));
        }
        h *= 0.5;
        retry = true;
        continue;
      }
      if (p.admissible && !p.admissible(t + h, yc)) {
        ++sol.rejected;
        if (++bad_state > p.max_inadmissible) inadmissible_failure(p, t);
        h *= 0.5;
        retry = true;
        continue;
      }
      const double cerr = order == 1 ? 0.5 : 2.0 / 11.0;
      const double en = wrms(cerr * (yc - yp), y, yc, p.abstol, p.reltol);
      if (en > 1.0) {
        ++sol.rejected;
        h *= std::max(0.2, 0.9 * std::pow(en, -1.0 / (order + 1)));
        retry = true;
        continue;
      }
      bad_state = 0;
      bad_newton = 0;
      y2 = y1;
      h2 = h1;
      y1 = y;
      h1 = h;
      ++nhist;
      y = yc;
      clk.t = h == clk.t_end - t ? clk.t_end : t + h;
      sol.steps.push_back({clk.t, h, en});
      if (p.observer) p.observer(clk.t, y);
      const double fac = en > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -1.0 / (order + 1)))) : 5.0;
      h *= fac;
      // keep the BDF2 step ratio in its zero-stable range
      h = std::min(h, 2.0 * h1);
    }
  }
  sol.y = y;
  return sol;
}

}  // namespace mmpde
