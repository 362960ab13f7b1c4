// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mmpde/mesh.hpp"
#include "mmpde/smallmat.hpp"

namespace mmpde {

struct QualityReport {
  double qgeo = 1.0;
  double qeq = 1.0;
  double qali = 1.0;
};

struct CombinedQuality {
  double qmax = 1.0;
  double ql2 = 1.0;
};

/// Per-element measures, before aggregation.
struct ElementQuality {
  std::vector<double> geo, eq, ali;
  std::vector<double> comp_volume;  // |K_c|, the aggregation weights
};

/// Computational edge matrices for every element: from xi_ref when given,
/// otherwise a regular simplex scaled so the computational domain has unit
/// volume.
std::vector<SmallMat> computational_edges(const Mesh& m, const RealTable* xi_ref);

ElementQuality element_quality(const Mesh& m, const MatBatch& M, const RealTable* xi_ref);

/// Geometric, equidistribution and alignment measures aggregated in the
/// max norm (linf) or the L2 norm over the computational domain.
QualityReport quality_measures(const Mesh& m, const MatBatch& M, bool linf = true,
                               const RealTable* xi_ref = nullptr);

/// Combined measure Q_ali^{dp/2} * max(Q_eq, 1/Q_eq)^p, max and L2.
CombinedQuality quality_measure2(const Mesh& m, const MatBatch& M,
                                 const RealTable* xi_ref = nullptr, double p = 1.5);

}  // namespace mmpde
