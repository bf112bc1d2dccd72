#pragma once

#include <array>
#include <vector>

#include "gmsurf/errors.hpp"

namespace gmsurf {

using Vec3 = std::array<double, 3>;

// Triangulated closed surface embedded in 3-space. Generated meshes live on
// the unit sphere; base_points keep each vertex's pre-projection position on
// the cube surface so that uniform refinement reproduces the generator's
// vertex placement exactly (chordal midpoints of projected points would not).
struct SurfaceMesh {
  std::vector<Vec3> vertices;                 // on the unit sphere
  std::vector<Vec3> base_points;              // pre-projection anchors
  std::vector<std::array<int, 3>> triangles;  // CCW seen from outside
  std::vector<std::array<int, 2>> edges;      // unique, i < j, sorted
  std::vector<std::vector<int>> vertex_stencils;  // sorted edge-neighbors
  int refinement_level = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  // Checks: unit-sphere vertices (1e-12), every edge shared by exactly two
  // consistently oriented triangles, Euler formula V - E + F = 2, and (if
  // expect_cubed_sphere_counts) V = 2 + 6*4^k, E = 18*4^k, F = 12*4^k.
  void check_invariants(bool expect_cubed_sphere_counts = false) const;
};

// Cubed-sphere generator: each cube face is an equidistant (2^level)^2 quad
// grid under the gnomonic map, every quad is split along its lower-left ->
// upper-right diagonal (in face (s,t) coordinates), and all grid points are
// radially projected onto the unit sphere.
// Vertex order: the 8 cube corners first (lexicographic in (x,y,z)), then
// faces +x,-x,+y,-y,+z,-z each scanned lexicographically in (i,j), appending
// vertices not already owned by an earlier face.
// Throws ConfigError for level > 8 (memory guard).
SurfaceMesh build_cubed_sphere(int level);

// Uniform refinement: each triangle split into four by edge midpoints,
// midpoints computed on the base (cube) surface and projected to the sphere.
// refine(build_cubed_sphere(k)) equals build_cubed_sphere(k+1) up to vertex
// ordering. Existing vertices keep their indices; midpoints are appended in
// the (sorted) edge order of the input mesh.
SurfaceMesh refine(const SurfaceMesh& mesh);

// Sum of flat-triangle areas. Throws MeshError on degenerate triangles.
double surface_area(const SurfaceMesh& mesh);

double max_edge_length(const SurfaceMesh& mesh);

// Small helpers shared by assembly and tests.
inline Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline double dot3(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace gmsurf
