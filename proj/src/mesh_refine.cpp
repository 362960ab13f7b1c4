// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <utility>

#include "mmpde/error.hpp"
#include "mmpde/mesh.hpp"

namespace mmpde {

namespace {

struct MidpointCache {
  RealTable& X;
  std::map<std::pair<Index, Index>, Index> ids;

  Index get(Index a, Index b) {
    const auto key = std::minmax(a, b);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    const Index id = static_cast<Index>(X.rows());
    std::vector<double> mid(X.cols());
    for (std::size_t i = 0; i < X.cols(); ++i) mid[i] = 0.5 * (X(a, i) + X(b, i));
    X.append_row(mid);
    ids.emplace(key, id);
    return id;
  }
};

double dist2(const RealTable& X, Index a, Index b) {
  double s = 0.0;
  for (std::size_t i = 0; i < X.cols(); ++i) s += (X(a, i) - X(b, i)) * (X(a, i) - X(b, i));
  return s;
}

RefinedMesh refine_once(const Mesh& m) {
  const int d = m.dim;
  RealTable X = m.X;
  MidpointCache mid{X, {}};
  IndexTable tri(0, d + 1);
  std::vector<Index> parent;
  auto emit = [&](std::initializer_list<Index> t, std::size_t k) {
    tri.append_row(std::span<const Index>(t.begin(), t.size()));
    parent.push_back(static_cast<Index>(k));
  };
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    const auto v = m.tri.row(k);
    if (d == 1) {
      const Index c = mid.get(v[0], v[1]);
      emit({v[0], c}, k);
      emit({c, v[1]}, k);
    } else if (d == 2) {
      const Index m01 = mid.get(v[0], v[1]), m12 = mid.get(v[1], v[2]), m02 = mid.get(v[0], v[2]);
      emit({v[0], m01, m02}, k);
      emit({m01, v[1], m12}, k);
      emit({m02, m12, v[2]}, k);
      emit({m01, m12, m02}, k);
    } else {
      const Index m01 = mid.get(v[0], v[1]), m02 = mid.get(v[0], v[2]), m03 = mid.get(v[0], v[3]);
      const Index m12 = mid.get(v[1], v[2]), m13 = mid.get(v[1], v[3]), m23 = mid.get(v[2], v[3]);
      emit({v[0], m01, m02, m03}, k);
      emit({m01, v[1], m12, m13}, k);
      emit({m02, m12, v[2], m23}, k);
      emit({m03, m13, m23, v[3]}, k);
      // Central octahedron: split along its shortest diagonal.
      const double l0 = dist2(X, m01, m23), l1 = dist2(X, m02, m13), l2 = dist2(X, m03, m12);
      Index p, q;
      std::array<Index, 4> ring{};
      if (l0 <= l1 && l0 <= l2) {
        p = m01, q = m23, ring = {m02, m03, m13, m12};
      } else if (l1 <= l2) {
        p = m02, q = m13, ring = {m01, m03, m23, m12};
      } else {
        p = m03, q = m12, ring = {m01, m02, m23, m13};
      }
      for (int i = 0; i < 4; ++i) emit({p, q, ring[i], ring[(i + 1) % 4]}, k);
    }
  }
  RefinedMesh r;
  r.fine = make_mesh(d, std::move(X), std::move(tri));
  r.parent = std::move(parent);
  return r;
}

}  // namespace

RefinedMesh uniform_refine(const Mesh& m, int level) {
  require(level >= 0, "uniform_refine: level must be non-negative");
  RefinedMesh r{m, {}};
  r.parent.resize(m.num_elements());
  for (std::size_t k = 0; k < m.num_elements(); ++k) r.parent[k] = static_cast<Index>(k);
  for (int l = 0; l < level; ++l) {
    RefinedMesh next = refine_once(r.fine);
    for (auto& p : next.parent) p = r.parent[p];
    r = std::move(next);
  }
  return r;
}

}  // namespace mmpde
