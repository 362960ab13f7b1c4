// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmpde/mesh.hpp"

namespace mmpde {

/// Text format: "d N_v N N_bf", then N_v coordinate lines, N connectivity
/// lines and N_bf facet lines. Indices are 1-based on disk.
void write_mesh_text(const std::string& path, const Mesh& m);
/// Reads the text format. Elements are re-oriented and, when N_bf = 0, the
/// boundary is recomputed.
Mesh read_mesh_text(const std::string& path);

struct NamedField {
  std::string name;
  RealTable values;  // N_v x k
};

/// Legacy ASCII VTK unstructured grid with point data.
void write_vtk(const std::string& path, const Mesh& m, const std::vector<NamedField>& fields);

struct VtkData {
  Mesh mesh;
  std::vector<NamedField> fields;
};
/// Reads files produced by write_vtk (SCALARS and FIELD point data).
VtkData read_vtk(const std::string& path);

}  // namespace mmpde
