// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "mmpde/error.hpp"
#include "mmpde/odeint.hpp"
#include "mmpde/smallmat.hpp"

namespace mmpde {

const RadauTableau& RadauTableau::get() {
  static const RadauTableau tab = [] {
    const double s6 = std::sqrt(6.0);
    RadauTableau r;
    r.c = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
    r.A = {{{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
            {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
            {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}}};
    SmallMat a(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = r.A[i][j];
    const SmallMat w = inverse(a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.W[i][j] = w(i, j);
    return r;
  }();
  return tab;
}

namespace {

class StageSolver {
 public:
  StageSolver(const SparseMatrix& jy, const SparseMatrix& jyp, double h, bool direct) : direct_(direct) {
    const auto& tab = RadauTableau::get();
    const Eigen::Index n = jy.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * jy.nonZeros() + 9 * jyp.nonZeros());
    for (int bi = 0; bi < 3; ++bi) {
      for (Eigen::Index k = 0; k < jy.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(jy, k); it; ++it)
          trip.emplace_back(bi * n + it.row(), bi * n + it.col(), it.value());
      for (int bj = 0; bj < 3; ++bj) {
        const double w = tab.W[bi][bj] / h;
        for (Eigen::Index k = 0; k < jyp.outerSize(); ++k)
          for (SparseMatrix::InnerIterator it(jyp, k); it; ++it)
            trip.emplace_back(bi * n + it.row(), bj * n + it.col(), w * it.value());
      }
    }
    A_.resize(3 * n, 3 * n);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();
    if (direct_) {
      lu_.analyzePattern(A_);
      lu_.factorize(A_);
      ok_ = lu_.info() == Eigen::Success;
    } else {
      it_.preconditioner().setDroptol(1e-6);
      it_.preconditioner().setFillfactor(20);
      it_.setTolerance(1e-12);
      it_.setMaxIterations(1000);
      it_.compute(A_);
      ok_ = it_.info() == Eigen::Success;
    }
  }

  bool ok() const { return ok_; }

  bool solve(const Vector& b, Vector& x) {
    if (direct_) {
      x = lu_.solve(b);
      return lu_.info() == Eigen::Success;
    }
    x = it_.solve(b);
    return it_.info() == Eigen::Success || (x.allFinite() && (A_ * x - b).norm() <= 1e-8 * (1.0 + b.norm()));
  }

 private:
  bool direct_;
  bool ok_ = false;
  SparseMatrix A_;
  Eigen::SparseLU<SparseMatrix> lu_;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it_;
};

double scaled_norm(const Vector& dz, const Vector& y, double atol, double rtol) {
  const Eigen::Index n = y.size();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index k = 0; k < dz.size(); ++k) {
    const double r = dz[k] / (atol + rtol * std::abs(y[k % n]));
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(dz.size()));
}

}  // namespace

RadauStep radau_step(const ImplicitSystem& sys, double t, const Vector& y_n, const Vector& yp_n, double h,
                     const RadauOptions& opt) {
  const auto& tab = RadauTableau::get();
  const Eigen::Index n = y_n.size();
  RadauStep out;
  SparseMatrix jy, jyp;
  sys.jacobian(t, y_n, yp_n, jy, jyp);
  auto solver = std::make_unique<StageSolver>(jy, jyp, h, opt.direct_ls);
  if (!solver->ok()) return out;

  Vector Z(3 * n), res(3 * n), dZ(3 * n), ri(n);
  for (int i = 0; i < 3; ++i) Z.segment(i * n, n) = (tab.c[i] * h) * yp_n;
  auto stage_derivs = [&]() {
    for (int i = 0; i < 3; ++i) {
      out.Yp[i] = Vector::Zero(n);
      for (int j = 0; j < 3; ++j) out.Yp[i] += (tab.W[i][j] / h) * Z.segment(j * n, n);
      out.Y[i] = y_n + Z.segment(i * n, n);
    }
  };
  double prev = 0.0;
  bool refreshed = false;
  for (int it = 0; it < opt.max_newton; ++it) {
    stage_derivs();
    for (int i = 0; i < 3; ++i) {
      sys.residual(t + tab.c[i] * h, out.Y[i], out.Yp[i], ri);
      res.segment(i * n, n) = ri;
    }
    if (!res.allFinite()) return out;
    if (!solver->solve(-res, dZ) || !dZ.allFinite()) return out;
    Z += dZ;
    out.newton_iterations = it + 1;
    const double nrm = scaled_norm(dZ, y_n, opt.abstol, opt.reltol);
    const double floor = 1e-13 * (1.0 + Z.lpNorm<Eigen::Infinity>());
    if (nrm <= opt.newton_tol || dZ.lpNorm<Eigen::Infinity>() <= floor) {
      stage_derivs();
      out.converged = true;
      return out;
    }
    if (it > 0) {
      const double theta = nrm / prev;
      if (theta >= 1.0 && refreshed) return out;
      if (theta > 0.5 && !refreshed) {
        refreshed = true;
        stage_derivs();
        sys.jacobian(t + h, out.Y[2], out.Yp[2], jy, jyp);
        solver = std::make_unique<StageSolver>(jy, jyp, h, opt.direct_ls);
        if (!solver->ok()) return out;
      } else if (theta * nrm / (1.0 - std::min(theta, 0.99)) <= opt.newton_tol) {
        stage_derivs();
        out.converged = true;
        return out;
      }
    }
    prev = nrm;
  }
  return out;
}

ImplicitSystem explicit_ode_system(const RhsFunction& f, std::size_t n) {
  ImplicitSystem sys;
  sys.size = n;
  sys.residual = [f](double t, const Vector& y, const Vector& yp, Vector& res) {
    Vector fy(y.size());
    f(t, y, fy);
    res = yp - fy;
  };
  sys.jacobian = [f](double t, const Vector& y, const Vector&, SparseMatrix& jy, SparseMatrix& jyp) {
    const Eigen::Index m = y.size();
    Vector f0(m), f1(m), yp = y;
    f(t, y, f0);
    std::vector<Eigen::Triplet<double>> trip;
    const double sq = std::sqrt(std::numeric_limits<double>::epsilon());
    for (Eigen::Index j = 0; j < m; ++j) {
      const double dj = sq * std::max(1.0, std::abs(y[j]));
      yp[j] = y[j] + dj;
      f(t, yp, f1);
      yp[j] = y[j];
      for (Eigen::Index i = 0; i < m; ++i) {
        const double v = -(f1[i] - f0[i]) / dj;
        if (v != 0.0) trip.emplace_back(i, j, v);
      }
    }
    jy.resize(m, m);
    jy.setFromTriplets(trip.begin(), trip.end());
    jyp.resize(m, m);
    jyp.setIdentity();
  };
  return sys;
}

RadauStep radau_step(const RhsFunction& f, double t, const Vector& y_n, double h, const RadauOptions& opt) {
  Vector f0(y_n.size());
  f(t, y_n, f0);
  return radau_step(explicit_ode_system(f, y_n.size()), t, y_n, f0, h, opt);
}

Vector two_step_error(const std::optional<PrevStep>& prev, const Vector& y_n, const RadauStep& cur, double h) {
  const auto& tab = RadauTableau::get();
  std::vector<double> s;
  std::vector<const Vector*> v;
  if (prev) {
    s.push_back(-prev->h / h);
    v.push_back(&prev->y);
  }
  s.push_back(0.0);
  v.push_back(&y_n);
  s.push_back(tab.c[0]);
  v.push_back(&cur.Y[0]);
  s.push_back(tab.c[1]);
  v.push_back(&cur.Y[1]);
  Vector p = Vector::Zero(y_n.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j != i) l *= (1.0 - s[j]) / (s[i] - s[j]);
    p += l * *v[i];
  }
  return cur.Y[2] - p;
}

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double abstol, double reltol,
                  const std::vector<double>& weights) {
  const Eigen::Index n = err.size();
  require(weights.empty() || weights.size() == static_cast<std::size_t>(n), "error_norm: weight size mismatch");
  double s = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const double sc = abstol + reltol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = w * err[i] / sc;
    s += r * r;
    ++count;
  }
  return count ? std::sqrt(s / static_cast<double>(count)) : 0.0;
}

Vector integrate_radau_fixed(const RhsFunction& f, const Vector& y0, double t0, double t1, int nsteps) {
  require(nsteps > 0, "integrate_radau_fixed: nsteps must be positive");
  RadauOptions opt;
  opt.abstol = 1e-12;
  opt.reltol = 1e-12;
  opt.max_newton = 20;
  const double h = (t1 - t0) / nsteps;
  Vector y = y0;
  for (int k = 0; k < nsteps; ++k) {
    const RadauStep st = radau_step(f, t0 + k * h, y, h, opt);
    if (!st.converged) throw Error(ErrorCode::ConvergenceFailure, "radau: Newton failed at step " + std::to_string(k));
    y = st.Y[2];
  }
  return y;
}

OdeSolution integrate_radau(const OdeProblem& p) {
  require(p.t_end > p.t_begin, "ode: t_end must exceed t_begin");
  OdeSolution sol;
  RadauOptions opt;
  opt.abstol = p.abstol;
  opt.reltol = p.reltol;
  const double span = p.t_end - p.t_begin;
  double t = p.t_begin, h = p.dt0 > 0.0 ? p.dt0 : span / 10.0;
  Vector y = p.y0, f0(y.size());
  std::optional<PrevStep> prev;
  while (p.t_end - t > 1e-12 * span) {
    if (static_cast<int>(sol.steps.size()) >= p.max_steps) throw Error(ErrorCode::StepUnderflow, "ode: too many steps");
    const double rest = p.t_end - t;
    if (h >= rest * (1.0 - 1e-10)) h = rest;
    if (h < 1e-14 * span) throw Error(ErrorCode::StepUnderflow, "radau: step size underflow");
    p.rhs(t, y, f0);
    const RadauStep st = radau_step(explicit_ode_system(p.rhs, y.size()), t, y, f0, h, opt);
    ++sol.nfev;
    if (!st.converged) {
      ++sol.rejected;
      h *= 0.5;
      continue;
    }
    const Vector err = two_step_error(prev, y, st, h);
    const double en = error_norm(err, y, st.Y[2], p.abstol, p.reltol);
    if (en > 1.0) {
      ++sol.rejected;
      h *= step_factor(en);
      continue;
    }
    prev = PrevStep{y, h};
    t = h == rest ? p.t_end : t + h;
    y = st.Y[2];
    sol.steps.push_back({t, h, en});
    if (p.observer) p.observer(t, y);
    h *= step_factor(en);
  }
  sol.y = y;
  return sol;
}

}  // namespace mmpde
