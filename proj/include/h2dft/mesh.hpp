#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace h2dft {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  bool operator==(const Vec3&) const = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

using Tet = std::array<int, 4>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshConfig {
  double half_extent = 25.0;
  int initial_cells_per_axis = 2;
  int local_refine_rounds = 8;
  int global_refine_rounds = 2;
  std::vector<Vec3> nucleus_positions;
  double h_min_floor = 1e-4;
  std::size_t max_vertices = 4'000'000;

  /// Two nuclei at +-R e1.
  static MeshConfig for_molecule(double R, int local_rounds = 8, int global_rounds = 2);

  void validate() const;
};

/// Conforming tetrahedral mesh of the cube [-L, L]^3.
///
/// Vertices are only ever appended: a refinement round creates new vertices
/// at edge midpoints, and `parents` records the edge each one bisects. The
/// vertex counts after every round are kept in `level_vertex_counts`, which
/// is all the multigrid hierarchy needs to rebuild nested P1 transfers.
struct Mesh {
  double half_extent = 0;
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  std::vector<char> on_boundary;                   // per vertex
  std::vector<std::pair<int, int>> parents;        // (-1,-1) for base vertices
  std::vector<int> level_vertex_counts;            // one entry per refinement level
  std::vector<int> refinement_level;               // per cell: rounds that touched its ancestry

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_tets() const { return tets.size(); }
  std::vector<int> boundary_vertices() const;

  double signed_volume(std::size_t cell) const;
  double diameter(std::size_t cell) const;
  double total_volume() const;
  double min_diameter() const;
  /// Smallest diameter among cells that have `p` in their closure.
  double diameter_at(const Vec3& p) const;
  /// Cells whose closure contains `p`, ascending index.
  std::vector<int> cells_containing(const Vec3& p, double tol = 1e-12) const;

  /// FNV-1a over the vertex and cell tables.
  std::uint64_t hash() const;

  void save(std::ostream& os) const;
  static Mesh load(std::istream& is);
  void write_vtk(std::ostream& os, const std::vector<std::pair<std::string, const std::vector<double>*>>&
                                       point_fields = {}) const;
};

Mesh build_box_mesh(const MeshConfig& config);

Mesh refine_near_points(const Mesh& mesh, const std::vector<Vec3>& points, int rounds,
                        double h_min_floor = 1e-4);

Mesh refine_uniform(const Mesh& mesh, int rounds, std::size_t max_vertices = 4'000'000);

/// build_box_mesh + local rounds at the nuclei + global rounds.
Mesh build_molecule_mesh(const MeshConfig& config);

/// Point location by bucketing cell bounding boxes on a uniform grid.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh, int buckets_per_axis = 0);
  /// Index of a cell containing `p` (lowest index on ties) or -1 outside.
  int locate(const Vec3& p, std::array<double, 4>* bary = nullptr) const;
  /// P1 interpolation of a nodal field; points outside the mesh give `outside`.
  double evaluate(const std::vector<double>& field, const Vec3& p, double outside = 0.0) const;

 private:
  int bucket(double x) const;
  const Mesh& mesh_;
  int nb_;
  double lo_, width_;
  std::vector<int> ptr_, cells_;
};

/// Permutation of vertex indices induced by x -> -x; throws if the mesh is
/// not point-symmetric.
std::vector<int> reflection_permutation(const Mesh& mesh);

}  // namespace h2dft
