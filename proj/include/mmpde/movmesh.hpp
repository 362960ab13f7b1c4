// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmpde/mesh.hpp"
#include "mmpde/metric.hpp"

namespace mmpde {

enum class MeshIntegrator { Stiff, Explicit };

/// Moving-mesh controls. dt0 falls back to (tspan length)/10, abstol to
/// 1e-6 (stiff) / 1e-8 (explicit) and reltol to 1e-3 (stiff) / 1e-6
/// (explicit) when unset.
struct MmpdeParams {
  double p = 1.5;
  double theta = 1.0 / 3.0;
  double tau = 1e-2;
  MeshIntegrator integrator = MeshIntegrator::Stiff;
  std::optional<double> dt0;
  std::optional<double> abstol;
  std::optional<double> reltol;

  void validate() const;
  double abstol_or_default() const;
  double reltol_or_default() const;
};

struct MoveResult {
  RealTable Xnew;
  double Ih = 0.0;
  double Kmin = 0.0;
  int steps = 0;
};

/// Called at every accepted integrator step with the time and the value of
/// the meshing functional.
using EnergyObserver = std::function<void(double t, double energy)>;

/// Meshing functional
///   I_h = sum_K |K| sqrt(det M_K) [ theta tr(J M_K^{-1} J^T)^{dp/2}
///          + (1 - 2 theta) d^{dp/2} (det J / sqrt(det M_K))^p ],
/// J = Ehat_K E_K^{-1}, M_K the vertex mean of M.
double energy(const Mesh& m, const MetricField& M, const RealTable* xi_ref, const MmpdeParams& params);

/// dI_h/dx (N_v x d) with M and the computational mesh held fixed.
RealTable energy_grad(const Mesh& m, const MetricField& M, const RealTable* xi_ref,
                      const MmpdeParams& params);

/// dI_h/dxi (N_v x d): gradient with respect to the computational
/// coordinates xi, physical mesh m held fixed.
RealTable energy_grad_xi(const Mesh& m, const MetricField& M, const RealTable& xi,
                         const MmpdeParams& params);

/// Per-vertex motion constraints: interior vertices are free, vertices on
/// flat boundary pieces slide in their plane, vertices on 3D edges slide
/// along the edge, corners and listed nodes are fixed.
class BoundaryConstraints {
 public:
  BoundaryConstraints(const Mesh& m, std::span<const Index> nodes_fixed);
  /// Projects a velocity field (N_v x d, flattened row-major) in place.
  void project(std::span<double> v) const;
  bool is_fixed(std::size_t vertex) const { return fixed_[vertex] != 0; }

 private:
  int dim_;
  std::vector<SmallMat> proj_;
  std::vector<char> fixed_;
  std::vector<char> free_;
};

/// Nodal velocity of the x-formulation mesh equation at the given mesh:
/// -(P_i/tau) dI_h/dx_i, P_i = det(M_i)^{(p-1)/2}, constraints applied.
RealTable mesh_velocity_x(const Mesh& m, const MetricField& M, const MmpdeParams& params,
                          std::span<const Index> nodes_fixed, const RealTable* xi_ref = nullptr);

/// x-formulation with a metric; each vertex keeps its metric value while it
/// moves.
MoveResult move_x_metric(std::array<double, 2> tspan, const Mesh& m, const MetricField& M,
                         const MmpdeParams& params, std::span<const Index> nodes_fixed,
                         const RealTable* xi_ref = nullptr, const EnergyObserver& observer = {});

/// x-formulation with M = I.
MoveResult move_x(std::array<double, 2> tspan, const Mesh& m, const MmpdeParams& params,
                  std::span<const Index> nodes_fixed, const RealTable* xi_ref = nullptr,
                  const EnergyObserver& observer = {});

/// xi-formulation: the computational mesh starts at xi_ref and flows on the
/// fixed physical mesh m; the new physical mesh is the P1 image of xi_ref.
MoveResult move_xi(std::array<double, 2> tspan, const RealTable& xi_ref, const Mesh& m,
                   const MetricField& M, const MmpdeParams& params,
                   std::span<const Index> nodes_fixed, const EnergyObserver& observer = {});

}  // namespace mmpde
