// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

// Bowyer-Watson insertion on slightly jittered coordinates; the jitter
// breaks the co-circular/co-spherical ties of structured point sets.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "mmpde/error.hpp"
#include "mmpde/mesh.hpp"

namespace mmpde {

namespace {

using Simplex = std::array<Index, 4>;

class BowyerWatson {
 public:
  BowyerWatson(int dim, RealTable pts) : d_(dim), P_(std::move(pts)) {}

  IndexTable run(std::size_t n_real) {
    n_real_ = n_real;
    add_super();
    std::vector<Index> order(n_real);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(12345u);
    std::shuffle(order.begin(), order.end(), rng);
    for (Index p : order) insert(p);
    IndexTable out(0, d_ + 1);
    for (std::size_t e = 0; e < el_.size(); ++e) {
      if (!alive_[e]) continue;
      bool real = true;
      for (int a = 0; a <= d_; ++a) real = real && static_cast<std::size_t>(el_[e][a]) < n_real_;
      if (real) out.append_row(std::span<const Index>(el_[e].data(), d_ + 1));
    }
    return out;
  }

 private:
  void add_super() {
    std::vector<double> lo(d_), hi(d_);
    for (int i = 0; i < d_; ++i) {
      lo[i] = hi[i] = P_(0, i);
      for (std::size_t v = 0; v < n_real_; ++v) {
        lo[i] = std::min(lo[i], P_(v, i));
        hi[i] = std::max(hi[i], P_(v, i));
      }
    }
    double r = 0.0;
    std::vector<double> c(d_);
    for (int i = 0; i < d_; ++i) {
      c[i] = 0.5 * (lo[i] + hi[i]);
      r += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    }
    r = std::max(std::sqrt(r), 1e-300);
    const double rho = 50.0 * r;
    Simplex s{};
    const SmallMat eq = equilateral_edge_matrix(d_);
    // Regular simplex vertices: 0 and the edge-matrix columns, recentred.
    std::vector<std::vector<double>> verts(d_ + 1, std::vector<double>(d_, 0.0));
    for (int j = 0; j < d_; ++j)
      for (int i = 0; i < d_; ++i) verts[j + 1][i] = eq(i, j);
    std::vector<double> cen(d_, 0.0);
    for (auto& v : verts)
      for (int i = 0; i < d_; ++i) cen[i] += v[i] / (d_ + 1);
    double circ = 0.0;
    for (int i = 0; i < d_; ++i) circ += (verts[0][i] - cen[i]) * (verts[0][i] - cen[i]);
    circ = std::sqrt(circ);
    for (int a = 0; a <= d_; ++a) {
      std::vector<double> p(d_);
      for (int i = 0; i < d_; ++i) p[i] = c[i] + rho * (verts[a][i] - cen[i]) / circ;
      s[a] = static_cast<Index>(P_.rows());
      P_.append_row(p);
    }
    Simplex nb;
    nb.fill(-1);
    push(s, nb);
  }

  double orient(const Simplex& s) const {
    SmallMat e(d_);
    for (int j = 0; j < d_; ++j)
      for (int i = 0; i < d_; ++i) e(i, j) = P_(s[j + 1], i) - P_(s[0], i);
    return det(e);
  }

  void circumsphere(const Simplex& s, std::array<double, 3>& c, double& r2) const {
    SmallMat a(d_);
    std::array<double, 3> rhs{};
    for (int j = 0; j < d_; ++j) {
      double n0 = 0.0, nj = 0.0;
      for (int i = 0; i < d_; ++i) {
        a(j, i) = 2.0 * (P_(s[j + 1], i) - P_(s[0], i));
        n0 += P_(s[0], i) * P_(s[0], i);
        nj += P_(s[j + 1], i) * P_(s[j + 1], i);
      }
      rhs[j] = nj - n0;
    }
    const SmallMat inv = inverse(a);
    r2 = 0.0;
    for (int i = 0; i < d_; ++i) {
      double ci = 0.0;
      for (int j = 0; j < d_; ++j) ci += inv(i, j) * rhs[j];
      c[i] = ci;
      r2 += (ci - P_(s[0], i)) * (ci - P_(s[0], i));
    }
  }

  Index push(Simplex s, const Simplex& nb) {
    if (orient(s) < 0.0) std::swap(s[0], s[1]);
    const Simplex n = nb;
    const Index id = static_cast<Index>(el_.size());
    el_.push_back(s);
    nb_.push_back(n);
    alive_.push_back(1);
    std::array<double, 3> c{};
    double r2 = 0.0;
    circumsphere(s, c, r2);
    cc_.push_back(c);
    r2_.push_back(r2);
    return id;
  }

  bool in_sphere(Index e, Index p) const {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += (P_(p, i) - cc_[e][i]) * (P_(p, i) - cc_[e][i]);
    return s < r2_[e] * (1.0 - 1e-13);
  }

  bool contains(Index e, Index p) const {
    // Point inside when replacing any vertex by p keeps orientation >= 0.
    for (int a = 0; a <= d_; ++a) {
      Simplex s = el_[e];
      s[a] = p;
      if (orient(s) < 0.0) return false;
    }
    return true;
  }

  Index find_start(Index p) const {
    Index e = last_;
    for (std::size_t steps = 0; e >= 0 && steps < el_.size(); ++steps) {
      if (!alive_[e]) break;
      int out = -1;
      for (int a = 0; a <= d_; ++a) {
        Simplex s = el_[e];
        s[a] = p;
        if (orient(s) < 0.0) {
          out = a;
          break;
        }
      }
      if (out < 0) return e;
      e = nb_[e][out];
    }
    for (std::size_t k = 0; k < el_.size(); ++k)
      if (alive_[k] && contains(static_cast<Index>(k), p)) return static_cast<Index>(k);
    for (std::size_t k = 0; k < el_.size(); ++k)
      if (alive_[k] && in_sphere(static_cast<Index>(k), p)) return static_cast<Index>(k);
    return -1;
  }

  void insert(Index p) {
    const Index start = find_start(p);
    if (start < 0) return;
    std::vector<Index> bad{start};
    std::vector<char> mark(el_.size(), 0);
    mark[start] = 1;
    for (std::size_t i = 0; i < bad.size(); ++i) {
      for (int a = 0; a <= d_; ++a) {
        const Index n = nb_[bad[i]][a];
        if (n < 0 || mark[n]) continue;
        if (in_sphere(n, p)) {
          mark[n] = 1;
          bad.push_back(n);
        }
      }
    }
    // Cavity boundary faces; each becomes a new simplex with apex p.
    struct Face {
      Simplex verts;
      Index outside;
      Index old;
    };
    std::vector<Face> faces;
    for (Index b : bad) {
      for (int a = 0; a <= d_; ++a) {
        const Index n = nb_[b][a];
        if (n >= 0 && mark[n]) continue;
        Face f{el_[b], n, b};
        f.verts[a] = p;  // apex replaces the vertex opposite the face
        faces.push_back(f);
      }
    }
    for (Index b : bad) alive_[b] = 0;
    std::map<std::array<Index, 3>, std::pair<Index, int>> ridge;
    for (const Face& f : faces) {
      Simplex nb;
      nb.fill(-1);
      Simplex s = f.verts;
      const Index id = static_cast<Index>(el_.size());
      if (orient(s) < 0.0) std::swap(s[0], s[1]);
      el_.push_back(s);
      alive_.push_back(1);
      std::array<double, 3> c{};
      double r2 = 0.0;
      circumsphere(s, c, r2);
      cc_.push_back(c);
      r2_.push_back(r2);
      // face opposite p
      int ap = 0;
      for (int a = 0; a <= d_; ++a)
        if (s[a] == p) ap = a;
      nb[ap] = f.outside;
      nb_.push_back(nb);
      if (f.outside >= 0)
        for (int a = 0; a <= d_; ++a)
          if (nb_[f.outside][a] == f.old) nb_[f.outside][a] = id;
      // faces containing p: match by the opposite-vertex-free key
      for (int a = 0; a <= d_; ++a) {
        if (a == ap) continue;
        std::array<Index, 3> key{-1, -1, -1};
        int c2 = 0;
        for (int b = 0; b <= d_; ++b)
          if (b != a) key[c2++] = s[b];
        std::sort(key.begin(), key.begin() + d_);
        auto it = ridge.find(key);
        if (it == ridge.end()) {
          ridge.emplace(key, std::make_pair(id, a));
        } else {
          nb_[id][a] = it->second.first;
          nb_[it->second.first][it->second.second] = id;
          ridge.erase(it);
        }
      }
      last_ = id;
    }
  }

  int d_;
  RealTable P_;
  std::size_t n_real_ = 0;
  std::vector<Simplex> el_;
  std::vector<Simplex> nb_;
  std::vector<char> alive_;
  std::vector<std::array<double, 3>> cc_;
  std::vector<double> r2_;
  Index last_ = 0;
};

}  // namespace

IndexTable delaunay(int dim, const RealTable& X) {
  require(dim >= 1 && dim <= 3, "delaunay: dimension must be 1, 2 or 3");
  require(X.rows() >= static_cast<std::size_t>(dim + 1), "delaunay: not enough points");
  if (dim == 1) {
    std::vector<Index> order(X.rows());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return X(a, 0) < X(b, 0); });
    IndexTable tri(0, 2);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      if (X(order[i + 1], 0) > X(order[i], 0))
        tri.append_row(std::array<Index, 2>{order[i], order[i + 1]});
    return tri;
  }
  const double h = std::max(bounding_diameter(X), 1e-300);
  RealTable J = X;
  std::mt19937 rng(2024u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : J.data()) v += 1e-9 * h * u(rng);
  BowyerWatson bw(dim, std::move(J));
  IndexTable tri = bw.run(X.rows());
  for (std::size_t k = 0; k < tri.rows(); ++k)
    if (signed_volume(X, tri, k) < 0.0) std::swap(tri(k, 0), tri(k, 1));
  return tri;
}

}  // namespace mmpde
