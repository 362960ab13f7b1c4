// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mmpde/smallmat.hpp"
#include "mmpde/table.hpp"

namespace mmpde {

/// Simplicial mesh (X, tri, tri_bf) in 1, 2 or 3 dimensions.
///
/// X is N_v x d, tri is N x (d+1), tri_bf is N_bf x d. Elements produced by
/// the library are positively oriented (det of the edge matrix > 0) and
/// boundary facets are ordered so their right-hand normal points outward.
struct Mesh {
  int dim = 0;
  RealTable X;
  IndexTable tri;
  IndexTable tri_bf;

  std::size_t num_vertices() const noexcept { return X.rows(); }
  std::size_t num_elements() const noexcept { return tri.rows(); }
  std::size_t num_boundary_facets() const noexcept { return tri_bf.rows(); }
  bool empty() const noexcept { return tri.rows() == 0; }
};

/// Validates indices, flips negatively oriented elements and computes the
/// boundary facets.
Mesh make_mesh(int dim, RealTable X, IndexTable tri);

// ---- element geometry --------------------------------------------------

/// d x d matrix whose columns are x_j - x_0 (j = 1..d) for element k.
SmallMat edge_matrix(const RealTable& X, const IndexTable& tri, std::size_t k);
inline SmallMat edge_matrix(const Mesh& m, std::size_t k) { return edge_matrix(m.X, m.tri, k); }

/// d! as a double.
double factorial(int d);

/// Signed volume det(E_K)/d!.
double signed_volume(const RealTable& X, const IndexTable& tri, std::size_t k);
/// |K| for every element.
std::vector<double> element_volumes(const Mesh& m);
/// Sum of element volumes.
double total_volume(const Mesh& m);
/// Smallest signed element volume.
double min_signed_volume(const RealTable& X, const IndexTable& tri);
/// Bounding-box diagonal length.
double bounding_diameter(const RealTable& X);

/// Edge matrix of the regular simplex with unit edge length, positively
/// oriented.
SmallMat equilateral_edge_matrix(int d);

// ---- topology ------------------------------------------------------------

/// Facets belonging to exactly one element, outward oriented.
IndexTable free_boundary(int dim, const RealTable& X, const IndexTable& tri);
inline IndexTable free_boundary(const Mesh& m) { return free_boundary(m.dim, m.X, m.tri); }

/// Elements incident to each vertex (CSR-like: offsets then element ids).
struct VertexStar {
  std::vector<Index> offsets;
  std::vector<Index> elements;
  std::span<const Index> of(std::size_t v) const {
    return {elements.data() + offsets[v], static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
  }
};
VertexStar vertex_elements(std::size_t num_vertices, const IndexTable& tri);

/// For element k and local vertex a, the element sharing the facet
/// opposite a, or -1 on the boundary.
IndexTable element_neighbors(const IndexTable& tri, int dim);

/// For each boundary facet, the element that owns it.
std::vector<Index> boundary_facet_elements(const Mesh& m);

/// Sorted vertex ids adjacent (sharing an element) to each vertex,
/// including the vertex itself.
std::vector<std::vector<Index>> vertex_neighbors(const Mesh& m);

// ---- generators ----------------------------------------------------------

/// 1D mesh from strictly increasing nodes.
Mesh line_mesh(std::span<const double> x);
/// Rectangle grid split into triangles: job 1 -> 4 per cell (centroid
/// vertex), job 2 -> 2 per cell along the (i,j)-(i+1,j+1) diagonal, job 3 ->
/// 2 per cell along the other diagonal.
Mesh rect2tri(std::span<const double> x, std::span<const double> y, int job);
/// Cuboid grid split into 6 tetrahedra per cell.
Mesh cube2tet(std::span<const double> x, std::span<const double> y, std::span<const double> z);
/// Unit disk from jmax concentric rings, ring j carrying 6j vertices.
Mesh circle2tri(int jmax);
/// n+1 equally spaced points on [a, b].
std::vector<double> linspace(double a, double b, std::size_t n_intervals);

// ---- normals ---------------------------------------------------------------

/// Unit outward normal per boundary facet (N_bf x d).
RealTable face_normals(const Mesh& m);
/// Facet-measure weighted, normalised average of adjacent facet normals;
/// interior vertices get [1,...,1]/sqrt(d).
RealTable vertex_normals(const Mesh& m);
/// Measure (length / area, 1 for points) of boundary facet f.
double facet_measure(const Mesh& m, std::size_t f);

/// Boundary vertices where adjacent facet normals differ by more than
/// angle_deg degrees (2D corners; in 3D, vertices touching three or more
/// distinct face planes).
std::vector<Index> find_corners(const Mesh& m, double angle_deg = 10.0);

// ---- editing ----------------------------------------------------------------

/// Union of two non-overlapping meshes; coincident vertices (within
/// 1e-10 x bounding diameter) are unified.
Mesh mesh_merge(const Mesh& a, const Mesh& b);
/// Removes the listed vertices, every incident element, and vertices left
/// without elements. Remaining vertices are compactly renumbered.
Mesh mesh_remove_nodes(const Mesh& m, std::span<const Index> ids);

struct RefinedMesh {
  Mesh fine;
  std::vector<Index> parent;  // fine element -> coarse element
};
/// Splits every element into 2^d children, level times.
RefinedMesh uniform_refine(const Mesh& m, int level);

// ---- interpolation ------------------------------------------------------------

/// Result of locating a point in a triangulation.
struct Location {
  Index element = -1;
  std::array<double, 4> bary{};
  bool inside = false;
};

/// Walk-based point location with exhaustive fallback. Keeps references to
/// X and tri.
class PointLocator {
 public:
  PointLocator(int dim, const RealTable& X, const IndexTable& tri);
  Location locate(std::span<const double> p) const;
  /// As locate, starting the walk at element `hint` when it is valid.
  Location locate(std::span<const double> p, Index hint) const;

 private:
  std::array<double, 4> barycentric(std::size_t k, std::span<const double> p) const;
  Index nearest_vertex(std::span<const double> p) const;

  int dim_;
  const RealTable& X_;
  const IndexTable& tri_;
  IndexTable neighbors_;
  VertexStar star_;
  std::vector<char> degenerate_;
};

/// Delaunay triangulation of a point cloud (d = 1, 2, 3), positively
/// oriented.
IndexTable delaunay(int dim, const RealTable& X);

/// P1 interpolation of vertex data f (N_v x k) at query points qp (Q x d).
RealTable lin_interp(const RealTable& f, const Mesh& m, const RealTable& qp,
                     bool use_delaunay = false);

}  // namespace mmpde
