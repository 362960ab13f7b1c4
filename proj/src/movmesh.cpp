// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/movmesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmpde/error.hpp"
#include "mmpde/odeint.hpp"
#include "mmpde/parallel.hpp"
#include "mmpde/quality.hpp"

namespace mmpde {

void MmpdeParams::validate() const {
  require(p > 1.0, "mmpde: p must exceed 1");
  require(theta > 0.0 && theta <= 0.5, "mmpde: theta must be in (0, 1/2]");
  require(tau > 0.0, "mmpde: tau must be positive");
  require(!dt0 || *dt0 > 0.0, "mmpde: dt0 must be positive");
  require(!abstol || *abstol > 0.0, "mmpde: abstol must be positive");
  require(!reltol || *reltol > 0.0, "mmpde: reltol must be positive");
}

double MmpdeParams::abstol_or_default() const {
  if (abstol) return *abstol;
  return integrator == MeshIntegrator::Stiff ? 1e-6 : 1e-8;
}

double MmpdeParams::reltol_or_default() const {
  if (reltol) return *reltol;
  return integrator == MeshIntegrator::Stiff ? 1e-3 : 1e-6;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Functional {
  int d;
  double p, theta, q, dq;

  Functional(int dim, const MmpdeParams& prm)
      : d(dim), p(prm.p), theta(prm.theta), q(dim * prm.p / 2.0), dq(std::pow(dim, dim * prm.p / 2.0)) {}
};

struct ElementMetric {
  std::vector<SmallMat> minv;
  std::vector<double> sqrt_det, det_pow;  // sqrt(det M_K), det(M_K)^{-p/2}
};

void element_metric(const Mesh& m, const std::vector<SmallMat>& Mv, double p, ElementMetric& em) {
  const std::size_t n = m.num_elements();
  em.minv.resize(n);
  em.sqrt_det.resize(n);
  em.det_pow.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    SmallMat mk(m.dim);
    for (int a = 0; a <= m.dim; ++a) mk = mk + Mv[m.tri(k, a)];
    mk = (1.0 / (m.dim + 1)) * mk;
    const double dm = det(mk);
    require(dm > 0.0, "metric is not positive definite", ErrorCode::NotSpd);
    em.minv[k] = inverse(mk, dm);
    em.sqrt_det[k] = std::sqrt(dm);
    em.det_pow[k] = std::pow(dm, -p / 2.0);
  }
}

std::vector<SmallMat> vertex_metrics(const Mesh& m, const MetricField& M) {
  require(M.size() == m.num_vertices() && M.dim() == m.dim, "metric size does not match the mesh");
  std::vector<SmallMat> v(M.size());
  for (std::size_t i = 0; i < M.size(); ++i) v[i] = M.get(i);
  return v;
}

struct ElemEval {
  double e = 0.0;
  SmallMat g;  // derivative w.r.t. E (x mode) or Ehat (xi mode)
};

/// Returns false for inverted or degenerate physical/computational elements.
bool eval_element(const Functional& f, const SmallMat& E, const SmallMat& Eh, const SmallMat& minv, double sqdet,
                  double detpow, int want, ElemEval& out) {
  const double dE = det(E), dEh = det(Eh);
  if (!(dE > 0.0) || !(dEh > 0.0)) return false;
  const int d = f.d;
  const SmallMat einv = inverse(E, dE);
  const SmallMat J = Eh * einv;
  const double dJ = dEh / dE;
  const SmallMat JA = J * minv;
  const double tr = trace(JA * transpose(J));
  const double c2 = (1.0 - 2.0 * f.theta) * f.dq * detpow;
  const double dJp = std::pow(dJ, f.p);
  const double G = sqdet * (f.theta * std::pow(tr, f.q) + c2 * dJp);
  const double vol = dE / factorial(d);
  out.e = vol * G;
  if (want == 0) return true;
  // J^{-T} = (E Ehat^{-1})^T
  const SmallMat jinvt = transpose(E * inverse(Eh, dEh));
  const SmallMat GJ = sqdet * ((f.theta * f.q * std::pow(tr, f.q - 1.0) * 2.0) * JA + (c2 * f.p * dJp) * jinvt);
  const SmallMat einvt = transpose(einv);
  if (want == 1) {
    out.g = vol * ((G * SmallMat::identity(d) - transpose(J) * GJ) * einvt);
  } else {
    out.g = vol * (GJ * einvt);
  }
  return true;
}

/// Energy and gradient of a mesh state. In x mode the state is the
/// physical coordinates and Ehat is fixed; in xi mode the state is the
/// computational coordinates and E is fixed.
class MeshFlow {
 public:
  MeshFlow(const Mesh& m, const MetricField& M, const MmpdeParams& prm, bool xi_mode, const RealTable* xi_ref)
      : m_(m), f_(m.dim, prm), xi_mode_(xi_mode), tau_(prm.tau) {
    if (xi_mode) {
      fixed_.resize(m.num_elements());
      for (std::size_t k = 0; k < m.num_elements(); ++k) fixed_[k] = edge_matrix(m, k);
    } else {
      fixed_ = computational_edges(m, xi_ref);
    }
    const auto mv = vertex_metrics(m, M);
    element_metric(m, mv, prm.p, em_);
    balance_.resize(mv.size());
    for (std::size_t v = 0; v < mv.size(); ++v) balance_[v] = std::pow(det(mv[v]), (prm.p - 1.0) / 2.0);
  }

  /// Returns false if any element is inverted.
  bool evaluate(const double* y, double* energy, double* grad) const {
    const int d = m_.dim;
    const std::size_t n = m_.num_elements();
    const int want = grad ? (xi_mode_ ? 2 : 1) : 0;
    std::vector<ElemEval> ev(n);
    std::vector<char> ok(n, 1);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const SmallMat var = state_edges(y, k);
        const SmallMat& E = xi_mode_ ? fixed_[k] : var;
        const SmallMat& Eh = xi_mode_ ? var : fixed_[k];
        ok[k] = eval_element(f_, E, Eh, em_.minv[k], em_.sqrt_det[k], em_.det_pow[k], want, ev[k]);
      }
    });
    if (std::find(ok.begin(), ok.end(), 0) != ok.end()) return false;
    if (energy) {
      double s = 0.0;
      for (const auto& x : ev) s += x.e;
      *energy = s;
    }
    if (grad) {
      std::fill(grad, grad + m_.num_vertices() * d, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const Index v0 = m_.tri(k, 0);
        for (int j = 0; j < d; ++j) {
          const Index vj = m_.tri(k, j + 1);
          for (int i = 0; i < d; ++i) {
            grad[vj * d + i] += ev[k].g(i, j);
            grad[v0 * d + i] -= ev[k].g(i, j);
          }
        }
      }
    }
    return true;
  }

  /// -(P_i/tau) dI/dy_i, NaN when the state is inverted.
  void velocity(const double* y, double* v) const {
    const int d = m_.dim;
    if (!evaluate(y, nullptr, v)) {
      std::fill(v, v + m_.num_vertices() * d, kNaN);
      return;
    }
    for (std::size_t i = 0; i < m_.num_vertices(); ++i)
      for (int a = 0; a < d; ++a) v[i * d + a] *= -balance_[i] / tau_;
  }

  bool admissible(const double* y) const {
    for (std::size_t k = 0; k < m_.num_elements(); ++k)
      if (!(det(state_edges(y, k)) > 0.0)) return false;
    return true;
  }

 private:
  SmallMat state_edges(const double* y, std::size_t k) const {
    const int d = m_.dim;
    SmallMat e(d);
    const Index v0 = m_.tri(k, 0);
    for (int j = 0; j < d; ++j) {
      const Index vj = m_.tri(k, j + 1);
      for (int i = 0; i < d; ++i) e(i, j) = y[vj * d + i] - y[v0 * d + i];
    }
    return e;
  }

  const Mesh& m_;
  Functional f_;
  ElementMetric em_;
  bool xi_mode_;
  double tau_;
  std::vector<SmallMat> fixed_;
  std::vector<double> balance_;
};

void require_valid_mesh(const Mesh& m) {
  require(m.dim >= 1 && m.dim <= 3 && !m.empty(), "mmpde: empty or invalid mesh");
  for (std::size_t k = 0; k < m.num_elements(); ++k)
    if (!(signed_volume(m.X, m.tri, k) > 0.0))
      throw Error(ErrorCode::DegenerateElement, "mmpde: degenerate or inverted element " + std::to_string(k));
}

std::vector<std::vector<Index>> jacobian_pattern(const Mesh& m) {
  const int d = m.dim;
  const auto nb = vertex_neighbors(m);
  std::vector<std::vector<Index>> pat(m.num_vertices() * d);
  for (std::size_t v = 0; v < nb.size(); ++v) {
    std::vector<Index> rows;
    rows.reserve(nb[v].size() * d);
    for (Index u : nb[v])
      for (int b = 0; b < d; ++b) rows.push_back(u * d + b);
    for (int a = 0; a < d; ++a) pat[v * d + a] = rows;
  }
  return pat;
}

struct FlowRun {
  Vector y;
  int steps = 0;
};

FlowRun run_flow(std::array<double, 2> tspan, const Mesh& m, const MeshFlow& flow, const BoundaryConstraints& bc,
                 const MmpdeParams& prm, const RealTable& y0, const EnergyObserver& observer) {
  require(tspan[1] > tspan[0], "mmpde: tspan must be increasing");
  OdeProblem p;
  p.y0 = Eigen::Map<const Vector>(y0.data().data(), static_cast<Eigen::Index>(y0.size()));
  p.t_begin = tspan[0];
  p.t_end = tspan[1];
  p.abstol = prm.abstol_or_default();
  p.reltol = prm.reltol_or_default();
  p.dt0 = prm.dt0 ? *prm.dt0 : (tspan[1] - tspan[0]) / 10.0;
  p.rhs = [&](double, const Vector& y, Vector& dy) {
    dy.resize(y.size());
    flow.velocity(y.data(), dy.data());
    if (dy.allFinite()) bc.project({dy.data(), static_cast<std::size_t>(dy.size())});
  };
  p.admissible = [&](double, const Vector& y) { return flow.admissible(y.data()); };
  p.on_inadmissible_failure = [] { throw MeshTangledError("mmpde: mesh tangled after 20 consecutive step reductions"); };
  if (observer)
    p.observer = [&](double t, const Vector& y) {
      double e = 0.0;
      flow.evaluate(y.data(), &e, nullptr);
      observer(t, e);
    };
  OdeSolution sol;
  if (prm.integrator == MeshIntegrator::Stiff) {
    p.jac_pattern = jacobian_pattern(m);
    sol = integrate_stiff(p);
  } else {
    sol = integrate_explicit(p);
  }
  Vector y = sol.y;
  const int d = m.dim;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (bc.is_fixed(v))
      for (int a = 0; a < d; ++a) y[v * d + a] = p.y0[v * d + a];
  return {y, static_cast<int>(sol.steps.size())};
}

RealTable to_table(const Vector& y, std::size_t rows, int d) {
  return RealTable(rows, d, std::vector<double>(y.data(), y.data() + y.size()));
}

}  // namespace

// ---- energy and gradients ---------------------------------------------------

double energy(const Mesh& m, const MetricField& M, const RealTable* xi_ref, const MmpdeParams& params) {
  params.validate();
  require_valid_mesh(m);
  MeshFlow flow(m, M, params, false, xi_ref);
  double e = 0.0;
  if (!flow.evaluate(m.X.data().data(), &e, nullptr))
    throw Error(ErrorCode::DegenerateElement, "energy: inverted computational element");
  return e;
}

RealTable energy_grad(const Mesh& m, const MetricField& M, const RealTable* xi_ref, const MmpdeParams& params) {
  params.validate();
  require_valid_mesh(m);
  MeshFlow flow(m, M, params, false, xi_ref);
  RealTable g(m.num_vertices(), m.dim);
  if (!flow.evaluate(m.X.data().data(), nullptr, g.data().data()))
    throw Error(ErrorCode::DegenerateElement, "energy_grad: inverted computational element");
  return g;
}

RealTable energy_grad_xi(const Mesh& m, const MetricField& M, const RealTable& xi, const MmpdeParams& params) {
  params.validate();
  require_valid_mesh(m);
  require(xi.rows() == m.num_vertices() && xi.cols() == static_cast<std::size_t>(m.dim),
          "energy_grad_xi: xi must match the mesh vertices");
  MeshFlow flow(m, M, params, true, nullptr);
  RealTable g(m.num_vertices(), m.dim);
  if (!flow.evaluate(xi.data().data(), nullptr, g.data().data()))
    throw Error(ErrorCode::DegenerateElement, "energy_grad_xi: inverted computational element");
  return g;
}

// ---- boundary constraints ---------------------------------------------------

BoundaryConstraints::BoundaryConstraints(const Mesh& m, std::span<const Index> nodes_fixed) : dim_(m.dim) {
  const std::size_t nv = m.num_vertices();
  const int d = m.dim;
  proj_.assign(nv, SmallMat::identity(d));
  fixed_.assign(nv, 0);
  free_.assign(nv, 1);
  for (Index v : nodes_fixed) {
    require(v >= 0 && static_cast<std::size_t>(v) < nv, "nodes_fixed: vertex id out of range");
    fixed_[v] = 1;
  }
  if (m.num_boundary_facets() == 0) {
    for (std::size_t v = 0; v < nv; ++v)
      if (fixed_[v]) {
        free_[v] = 0;
        proj_[v] = SmallMat(d);
      }
    return;
  }
  const RealTable fn = face_normals(m);
  const RealTable vn = vertex_normals(m);
  std::vector<std::vector<std::array<double, 3>>> normals(nv);
  for (std::size_t f = 0; f < m.num_boundary_facets(); ++f) {
    std::array<double, 3> n{};
    for (int i = 0; i < d; ++i) n[i] = fn(f, i);
    for (int a = 0; a < d; ++a) normals[m.tri_bf(f, a)].push_back(n);
  }
  auto dot = [d](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
  };
  auto groups = [&](const std::vector<std::array<double, 3>>& ns, double cos_tol) {
    std::vector<std::array<double, 3>> reps;
    for (const auto& n : ns) {
      bool found = false;
      for (const auto& r : reps)
        if (dot(n, r) >= cos_tol) {
          found = true;
          break;
        }
      if (!found) reps.push_back(n);
    }
    return reps;
  };
  const double cos_corner = std::cos(30.0 * 3.14159265358979323846 / 180.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (normals[v].empty() && !fixed_[v]) continue;
    free_[v] = 0;
    SmallMat P(d);
    if (fixed_[v] || d == 1) {
      fixed_[v] = 1;
      proj_[v] = P;
      continue;
    }
    const auto tight = groups(normals[v], 1.0 - 1e-8);
    const auto coarse = groups(normals[v], cos_corner);
    if (static_cast<int>(coarse.size()) >= d) {
      fixed_[v] = 1;
      proj_[v] = P;
      continue;
    }
    if (tight.size() == 2 && d == 3) {
      const auto& a = tight[0];
      const auto& b = tight[1];
      std::array<double, 3> t = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
      const double len = std::sqrt(dot(t, t));
      for (auto& x : t) x /= len;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) P(i, j) = t[i] * t[j];
      proj_[v] = P;
      continue;
    }
    std::array<double, 3> n{};
    if (tight.size() == 1) {
      n = tight[0];
    } else {
      for (int i = 0; i < d; ++i) n[i] = vn(v, i);
    }
    P = SmallMat::identity(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) P(i, j) -= n[i] * n[j];
    proj_[v] = P;
  }
}

void BoundaryConstraints::project(std::span<double> v) const {
  const int d = dim_;
  for (std::size_t i = 0; i < proj_.size(); ++i) {
    if (free_[i]) continue;
    double* x = v.data() + i * d;
    if (fixed_[i]) {
      std::fill(x, x + d, 0.0);
      continue;
    }
    std::array<double, 3> r{};
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) r[a] += proj_[i](a, b) * x[b];
    std::copy(r.begin(), r.begin() + d, x);
  }
}

// ---- drivers ----------------------------------------------------------------

RealTable mesh_velocity_x(const Mesh& m, const MetricField& M, const MmpdeParams& params,
                          std::span<const Index> nodes_fixed, const RealTable* xi_ref) {
  params.validate();
  require_valid_mesh(m);
  MeshFlow flow(m, M, params, false, xi_ref);
  BoundaryConstraints bc(m, nodes_fixed);
  RealTable v(m.num_vertices(), m.dim);
  flow.velocity(m.X.data().data(), v.data().data());
  bc.project(v.data());
  return v;
}

MoveResult move_x_metric(std::array<double, 2> tspan, const Mesh& m, const MetricField& M, const MmpdeParams& params,
                         std::span<const Index> nodes_fixed, const RealTable* xi_ref, const EnergyObserver& observer) {
  params.validate();
  require_valid_mesh(m);
  check_spd(M, "move_x_metric");
  MeshFlow flow(m, M, params, false, xi_ref);
  BoundaryConstraints bc(m, nodes_fixed);
  const FlowRun run = run_flow(tspan, m, flow, bc, params, m.X, observer);
  MoveResult r;
  r.Xnew = to_table(run.y, m.num_vertices(), m.dim);
  r.steps = run.steps;
  r.Kmin = min_signed_volume(r.Xnew, m.tri);
  if (!(r.Kmin > 0.0)) throw MeshTangledError("move_x_metric: inverted element in the result");
  flow.evaluate(run.y.data(), &r.Ih, nullptr);
  return r;
}

MoveResult move_x(std::array<double, 2> tspan, const Mesh& m, const MmpdeParams& params,
                  std::span<const Index> nodes_fixed, const RealTable* xi_ref, const EnergyObserver& observer) {
  return move_x_metric(tspan, m, MetricField::identity(m.dim, m.num_vertices()), params, nodes_fixed, xi_ref,
                       observer);
}

MoveResult move_xi(std::array<double, 2> tspan, const RealTable& xi_ref, const Mesh& m, const MetricField& M,
                   const MmpdeParams& params, std::span<const Index> nodes_fixed, const EnergyObserver& observer) {
  params.validate();
  require_valid_mesh(m);
  check_spd(M, "move_xi");
  require(xi_ref.rows() == m.num_vertices() && xi_ref.cols() == static_cast<std::size_t>(m.dim),
          "move_xi: xi_ref must match the mesh vertices");
  Mesh comp = m;
  comp.X = xi_ref;
  require_valid_mesh(comp);
  MeshFlow flow(m, M, params, true, nullptr);
  BoundaryConstraints bc(comp, nodes_fixed);
  const FlowRun run = run_flow(tspan, m, flow, bc, params, xi_ref, observer);
  MoveResult r;
  r.steps = run.steps;
  Mesh moved = m;
  moved.X = to_table(run.y, m.num_vertices(), m.dim);
  // x as a P1 function over the moved computational mesh, sampled at xi_ref
  r.Xnew = lin_interp(m.X, moved, xi_ref);
  r.Kmin = min_signed_volume(r.Xnew, m.tri);
  if (!(r.Kmin > 0.0)) throw MeshTangledError("move_xi: inverted element in the interpolated mesh");
  flow.evaluate(run.y.data(), &r.Ih, nullptr);
  return r;
}

}  // namespace mmpde
