// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "mmpde/error.hpp"

namespace mmpde {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  os << std::setprecision(17);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return is;
}

template <class T>
T next(std::istream& is, const std::string& path) {
  T v;
  if (!(is >> v)) throw Error(ErrorCode::Io, "malformed file '" + path + "'");
  return v;
}

int vtk_cell_type(int dim) { return dim == 1 ? 3 : dim == 2 ? 5 : 10; }

}  // namespace

void write_mesh_text(const std::string& path, const Mesh& m) {
  auto os = open_out(path);
  os << m.dim << ' ' << m.num_vertices() << ' ' << m.num_elements() << ' ' << m.num_boundary_facets()
     << '\n';
  auto rows = [&os](const auto& t, auto shift) {
    for (std::size_t i = 0; i < t.rows(); ++i) {
      for (std::size_t j = 0; j < t.cols(); ++j) os << (j ? " " : "") << t(i, j) + shift;
      os << '\n';
    }
  };
  rows(m.X, 0.0);
  rows(m.tri, 1);
  rows(m.tri_bf, 1);
  if (!os) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

Mesh read_mesh_text(const std::string& path) {
  auto is = open_in(path);
  const int d = next<int>(is, path);
  const auto nv = next<std::size_t>(is, path);
  const auto ne = next<std::size_t>(is, path);
  const auto nbf = next<std::size_t>(is, path);
  if (d < 1 || d > 3) throw Error(ErrorCode::Io, "bad dimension in '" + path + "'");
  RealTable X(nv, d);
  for (auto& v : X.data()) v = next<double>(is, path);
  IndexTable tri(ne, d + 1);
  for (auto& v : tri.data()) v = next<Index>(is, path) - 1;
  IndexTable bf(nbf, d);
  for (auto& v : bf.data()) v = next<Index>(is, path) - 1;
  Mesh m = make_mesh(d, std::move(X), std::move(tri));
  // make_mesh recomputes the boundary; keep the file's facets only if they agree.
  if (nbf > 0 && nbf != m.num_boundary_facets())
    throw Error(ErrorCode::Io, "boundary facets in '" + path + "' do not match the triangulation");
  return m;
}

void write_vtk(const std::string& path, const Mesh& m, const std::vector<NamedField>& fields) {
  auto os = open_out(path);
  const int d = m.dim;
  os << "# vtk DataFile Version 3.0\nmmpde\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << m.num_vertices() << " double\n";
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    for (int j = 0; j < 3; ++j) os << (j ? " " : "") << (j < d ? m.X(i, j) : 0.0);
    os << '\n';
  }
  os << "CELLS " << m.num_elements() << ' ' << m.num_elements() * (d + 2) << '\n';
  for (std::size_t k = 0; k < m.num_elements(); ++k) {
    os << d + 1;
    for (int a = 0; a <= d; ++a) os << ' ' << m.tri(k, a);
    os << '\n';
  }
  os << "CELL_TYPES " << m.num_elements() << '\n';
  for (std::size_t k = 0; k < m.num_elements(); ++k) os << vtk_cell_type(d) << '\n';
  if (!fields.empty()) {
    os << "POINT_DATA " << m.num_vertices() << '\n';
    for (const auto& f : fields) {
      require(f.values.rows() == m.num_vertices(), "field '" + f.name + "' has the wrong length");
      os << "SCALARS " << f.name << " double " << f.values.cols() << "\nLOOKUP_TABLE default\n";
      for (std::size_t i = 0; i < f.values.rows(); ++i) {
        for (std::size_t j = 0; j < f.values.cols(); ++j) os << (j ? " " : "") << f.values(i, j);
        os << '\n';
      }
    }
  }
  if (!os) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

VtkData read_vtk(const std::string& path) {
  auto is = open_in(path);
  std::string line;
  for (int i = 0; i < 3; ++i) std::getline(is, line);
  if (line.rfind("ASCII", 0) != 0) throw Error(ErrorCode::Io, "'" + path + "' is not ASCII VTK");
  std::string word;
  std::size_t nv = 0;
  std::vector<double> pts;
  std::vector<std::vector<Index>> cells;
  std::vector<int> types;
  VtkData out;
  while (is >> word) {
    if (word == "DATASET") {
      if (next<std::string>(is, path) != "UNSTRUCTURED_GRID")
        throw Error(ErrorCode::Io, "'" + path + "' is not an unstructured grid");
    } else if (word == "POINTS") {
      nv = next<std::size_t>(is, path);
      next<std::string>(is, path);
      pts.resize(3 * nv);
      for (auto& v : pts) v = next<double>(is, path);
    } else if (word == "CELLS") {
      const auto nc = next<std::size_t>(is, path);
      next<std::size_t>(is, path);
      cells.resize(nc);
      for (auto& c : cells) {
        c.resize(next<std::size_t>(is, path));
        for (auto& v : c) v = next<Index>(is, path);
      }
    } else if (word == "CELL_TYPES") {
      types.resize(next<std::size_t>(is, path));
      for (auto& t : types) t = next<int>(is, path);
    } else if (word == "POINT_DATA") {
      if (next<std::size_t>(is, path) != nv) throw Error(ErrorCode::Io, "bad POINT_DATA in '" + path + "'");
    } else if (word == "SCALARS") {
      NamedField f;
      f.name = next<std::string>(is, path);
      next<std::string>(is, path);
      std::getline(is, line);
      std::istringstream rest(line);
      std::size_t nc = 1;
      rest >> nc;
      if (next<std::string>(is, path) != "LOOKUP_TABLE") throw Error(ErrorCode::Io, "bad SCALARS in '" + path + "'");
      next<std::string>(is, path);
      f.values.resize(nv, nc);
      for (auto& v : f.values.data()) v = next<double>(is, path);
      out.fields.push_back(std::move(f));
    } else {
      throw Error(ErrorCode::Io, "unsupported VTK keyword '" + word + "' in '" + path + "'");
    }
  }
  if (cells.empty() || types.size() != cells.size()) throw Error(ErrorCode::Io, "no cells in '" + path + "'");
  const int d = types[0] == 3 ? 1 : types[0] == 5 ? 2 : types[0] == 10 ? 3 : 0;
  if (d == 0) throw Error(ErrorCode::Io, "unsupported cell type in '" + path + "'");
  RealTable X(nv, d);
  for (std::size_t i = 0; i < nv; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = pts[3 * i + j];
  IndexTable tri(cells.size(), d + 1);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (types[k] != vtk_cell_type(d) || cells[k].size() != static_cast<std::size_t>(d + 1))
      throw Error(ErrorCode::Io, "mixed cell types in '" + path + "'");
    for (int a = 0; a <= d; ++a) tri(k, a) = cells[k][a];
  }
  out.mesh = make_mesh(d, std::move(X), std::move(tri));
  return out;
}

}  // namespace mmpde
