#include "h2dft/mesh.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace h2dft {

namespace {

constexpr int kTetEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

// Total order on edges used for every "longest edge" decision. Ties in length
// are broken by the edge direction (up to sign) and then by the distance of the
// midpoint from the origin; all three are invariant under x -> -x, which keeps
// refinement of a point-symmetric mesh point-symmetric. Vertex indices are the
// last resort.
class EdgeOrder {
 public:
  explicit EdgeOrder(const std::vector<Vec3>& v) : v_(v) {}

  bool longer(int a, int b, int c, int d) const {
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const Vec3 e1 = canonical(v_[b] - v_[a]);
    const Vec3 e2 = canonical(v_[d] - v_[c]);
    const double l1 = dot(e1, e1), l2 = dot(e2, e2);
    if (l1 != l2) return l1 > l2;
    if (e1.x != e2.x) return e1.x > e2.x;
    if (e1.y != e2.y) return e1.y > e2.y;
    if (e1.z != e2.z) return e1.z > e2.z;
    const Vec3 m1 = v_[a] + v_[b], m2 = v_[c] + v_[d];
    const double r1 = dot(m1, m1), r2 = dot(m2, m2);
    if (r1 != r2) return r1 > r2;
    return edge_key(a, b) > edge_key(c, d);
  }

 private:
  static Vec3 canonical(Vec3 e) {
    const bool flip = e.x < 0 || (e.x == 0 && (e.y < 0 || (e.y == 0 && e.z < 0)));
    return flip ? -e : e;
  }
  const std::vector<Vec3>& v_;
};

class Refiner {
 public:
  explicit Refiner(Mesh& mesh) : mesh_(mesh), order_(mesh.vertices) {}

  void mark_cell(const Tet& t) {
    for (const auto& e : kTetEdges) marked_.insert(edge_key(t[e[0]], t[e[1]]));
  }

  void close() {
    // Any cell with a marked edge gets its longest edge marked, and so does any
    // face with a marked edge. Together these make the per-face split order
    // depend on the face alone, which is what keeps neighbours conforming.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Tet& t : mesh_.tets) {
        bool any = false;
        for (const auto& e : kTetEdges) any = any || marked_.count(edge_key(t[e[0]], t[e[1]]));
        if (!any) continue;
        changed |= ensure_longest(t, std::array<int, 4>{0, 1, 2, 3});
        for (const auto& f : kTetFaces) {
          bool face_any = false;
          for (int i = 0; i < 3; ++i) {
            face_any = face_any || marked_.count(edge_key(t[f[i]], t[f[(i + 1) % 3]]));
          }
          if (face_any) changed |= ensure_longest(t, std::array<int, 3>{f[0], f[1], f[2]});
        }
      }
    }
  }

  void split_all() {
    std::vector<Tet> out;
    std::vector<int> out_level;
    out.reserve(mesh_.tets.size() * 2);
    for (std::size_t c = 0; c < mesh_.tets.size(); ++c) {
      const int level = mesh_.refinement_level[c];
      const std::size_t before = out.size();
      split(mesh_.tets[c], out);
      const int child_level = out.size() - before > 1 ? level + 1 : level;
      out_level.insert(out_level.end(), out.size() - before, child_level);
    }
    mesh_.tets = std::move(out);
    mesh_.refinement_level = std::move(out_level);
    mesh_.level_vertex_counts.push_back(static_cast<int>(mesh_.vertices.size()));
  }

 private:
  template <std::size_t N>
  bool ensure_longest(const Tet& t, const std::array<int, N>& local) {
    int ba = -1, bb = -1;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = i + 1; j < N; ++j) {
        const int a = t[local[i]], b = t[local[j]];
        if (ba < 0 || order_.longer(a, b, ba, bb)) {
          ba = a;
          bb = b;
        }
      }
    }
    return marked_.insert(edge_key(ba, bb)).second;
  }

  int midpoint(int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoints_.find(key);
    if (it != midpoints_.end()) return it->second;
    const int id = static_cast<int>(mesh_.vertices.size());
    const Vec3 m = (mesh_.vertices[a] + mesh_.vertices[b]) * 0.5;
    mesh_.vertices.push_back(m);
    mesh_.parents.emplace_back(std::min(a, b), std::max(a, b));
    const double L = mesh_.half_extent;
    mesh_.on_boundary.push_back(std::abs(m.x) == L || std::abs(m.y) == L || std::abs(m.z) == L);
    midpoints_.emplace(key, id);
    return id;
  }

  void split(const Tet& t, std::vector<Tet>& out) {
    int best = -1;
    for (int e = 0; e < 6; ++e) {
      const int a = t[kTetEdges[e][0]], b = t[kTetEdges[e][1]];
      if (!marked_.count(edge_key(a, b))) continue;
      if (best < 0 || order_.longer(a, b, t[kTetEdges[best][0]], t[kTetEdges[best][1]])) best = e;
    }
    if (best < 0) {
      out.push_back(t);
      return;
    }
    const int i = kTetEdges[best][0], j = kTetEdges[best][1];
    const int m = midpoint(t[i], t[j]);
    Tet left = t, right = t;
    left[j] = m;   // replacing one endpoint by the midpoint keeps orientation
    right[i] = m;
    split(left, out);
    split(right, out);
  }

  Mesh& mesh_;
  EdgeOrder order_;
  std::unordered_set<std::uint64_t> marked_;
  std::unordered_map<std::uint64_t, int> midpoints_;
};

std::size_t count_edges(const Mesh& mesh) {
  std::unordered_set<std::uint64_t> edges;
  edges.reserve(mesh.tets.size() * 2);
  for (const Tet& t : mesh.tets) {
    for (const auto& e : kTetEdges) edges.insert(edge_key(t[e[0]], t[e[1]]));
  }
  return edges.size();
}

std::size_t count_faces(const Mesh& mesh) {
  std::size_t boundary = 0;
  std::map<std::array<int, 3>, int> faces;
  for (const Tet& t : mesh.tets) {
    for (const auto& f : kTetFaces) {
      std::array<int, 3> k{t[f[0]], t[f[1]], t[f[2]]};
      std::sort(k.begin(), k.end());
      ++faces[k];
    }
  }
  for (const auto& [k, n] : faces) boundary += (n == 1);
  (void)boundary;
  return faces.size();
}

}  // namespace

MeshConfig MeshConfig::for_molecule(double R, int local_rounds, int global_rounds) {
  MeshConfig c;
  c.local_refine_rounds = local_rounds;
  c.global_refine_rounds = global_rounds;
  c.nucleus_positions = {{R, 0, 0}, {-R, 0, 0}};
  return c;
}

void MeshConfig::validate() const {
  if (!(half_extent > 0)) throw MeshError("half_extent must be positive");
  if (initial_cells_per_axis < 1) throw MeshError("initial_cells_per_axis must be >= 1");
  if (local_refine_rounds < 0 || global_refine_rounds < 0) {
    throw MeshError("refinement rounds must be non-negative");
  }
  for (const Vec3& p : nucleus_positions) {
    if (norm(p) + 1.0 >= half_extent) {
      throw MeshError("nucleus too close to the domain boundary (need L > R + 1)");
    }
  }
}

std::vector<int> Mesh::boundary_vertices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < on_boundary.size(); ++i) {
    if (on_boundary[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

double Mesh::signed_volume(std::size_t cell) const {
  const Tet& t = tets[cell];
  return h2dft::signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
}

double Mesh::diameter(std::size_t cell) const {
  const Tet& t = tets[cell];
  double d = 0;
  for (const auto& e : kTetEdges) d = std::max(d, norm(vertices[t[e[0]]] - vertices[t[e[1]]]));
  return d;
}

double Mesh::total_volume() const {
  double v = 0;
  for (std::size_t c = 0; c < tets.size(); ++c) v += signed_volume(c);
  return v;
}

double Mesh::min_diameter() const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < tets.size(); ++c) d = std::min(d, diameter(c));
  return d;
}

std::vector<int> Mesh::cells_containing(const Vec3& p, double tol) const {
  std::vector<int> out;
  for (std::size_t c = 0; c < tets.size(); ++c) {
    const Tet& t = tets[c];
    const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &cc = vertices[t[2]], &d = vertices[t[3]];
    const double vol = h2dft::signed_volume(a, b, cc, d);
    const double l0 = h2dft::signed_volume(p, b, cc, d) / vol;
    const double l1 = h2dft::signed_volume(a, p, cc, d) / vol;
    const double l2 = h2dft::signed_volume(a, b, p, d) / vol;
    const double l3 = 1.0 - l0 - l1 - l2;
    if (l0 >= -tol && l1 >= -tol && l2 >= -tol && l3 >= -tol) out.push_back(static_cast<int>(c));
  }
  return out;
}

double Mesh::diameter_at(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (int c : cells_containing(p)) d = std::min(d, diameter(c));
  return d;
}

std::uint64_t Mesh::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  mix(vertices.data(), vertices.size() * sizeof(Vec3));
  mix(tets.data(), tets.size() * sizeof(Tet));
  return h;
}

void Mesh::save(std::ostream& os) const {
  os << "h2dft-mesh 1\n";
  os << "half_extent " << std::hexfloat << half_extent << std::defaultfloat << "\n";
  os << "vertices " << vertices.size() << "\n";
  os << std::hexfloat;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    os << vertices[i].x << ' ' << vertices[i].y << ' ' << vertices[i].z << ' ' << parents[i].first
       << ' ' << parents[i].second << '\n';
  }
  os << std::defaultfloat;
  os << "cells " << tets.size() << "\n";
  for (std::size_t c = 0; c < tets.size(); ++c) {
    os << tets[c][0] << ' ' << tets[c][1] << ' ' << tets[c][2] << ' ' << tets[c][3] << ' '
       << refinement_level[c] << '\n';
  }
  os << "levels " << level_vertex_counts.size();
  for (int n : level_vertex_counts) os << ' ' << n;
  os << '\n';
}

namespace {
double read_hexfloat(std::istream& is) {
  std::string tok;
  is >> tok;
  return std::strtod(tok.c_str(), nullptr);
}
void expect(std::istream& is, const std::string& word) {
  std::string tok;
  is >> tok;
  if (tok != word) throw MeshError("mesh file: expected '" + word + "', got '" + tok + "'");
}
}  // namespace

Mesh Mesh::load(std::istream& is) {
  Mesh m;
  expect(is, "h2dft-mesh");
  int version = 0;
  is >> version;
  if (version != 1) throw MeshError("mesh file: unsupported version");
  expect(is, "half_extent");
  m.half_extent = read_hexfloat(is);
  expect(is, "vertices");
  std::size_t nv = 0;
  is >> nv;
  m.vertices.resize(nv);
  m.parents.resize(nv);
  m.on_boundary.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    m.vertices[i].x = read_hexfloat(is);
    m.vertices[i].y = read_hexfloat(is);
    m.vertices[i].z = read_hexfloat(is);
    is >> m.parents[i].first >> m.parents[i].second;
    const Vec3& v = m.vertices[i];
    const double L = m.half_extent;
    m.on_boundary[i] = std::abs(v.x) == L || std::abs(v.y) == L || std::abs(v.z) == L;
  }
  expect(is, "cells");
  std::size_t nc = 0;
  is >> nc;
  m.tets.resize(nc);
  m.refinement_level.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    is >> m.tets[c][0] >> m.tets[c][1] >> m.tets[c][2] >> m.tets[c][3] >> m.refinement_level[c];
  }
  expect(is, "levels");
  std::size_t nl = 0;
  is >> nl;
  m.level_vertex_counts.resize(nl);
  for (auto& n : m.level_vertex_counts) is >> n;
  if (!is) throw MeshError("mesh file: truncated");
  return m;
}

void Mesh::write_vtk(std::ostream& os,
                     const std::vector<std::pair<std::string, const std::vector<double>*>>& point_fields) const {
  os << "# vtk DataFile Version 3.0\nh2dft mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << vertices.size() << " double\n" << std::setprecision(17);
  for (const Vec3& v : vertices) os << v.x << ' ' << v.y << ' ' << v.z << '\n';
  os << "CELLS " << tets.size() << ' ' << tets.size() * 5 << '\n';
  for (const Tet& t : tets) os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  os << "CELL_TYPES " << tets.size() << '\n';
  for (std::size_t c = 0; c < tets.size(); ++c) os << "10\n";
  if (!point_fields.empty()) {
    os << "POINT_DATA " << vertices.size() << '\n';
    for (const auto& [name, field] : point_fields) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double x : *field) os << x << '\n';
    }
  }
}

Mesh build_box_mesh(const MeshConfig& config) {
  config.validate();
  const int n = config.initial_cells_per_axis;
  const double L = config.half_extent;
  Mesh m;
  m.half_extent = L;
  const int np = n + 1;
  auto vid = [np](int i, int j, int k) { return i + np * (j + np * k); };
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        auto coord = [&](int a) { return a == n ? L : -L + (2.0 * L * a) / n; };
        m.vertices.push_back({coord(i), coord(j), coord(k)});
        m.on_boundary.push_back(i == 0 || j == 0 || k == 0 || i == n || j == n || k == n);
        m.parents.emplace_back(-1, -1);
      }
    }
  }
  // Kuhn subdivision: six tetrahedra sharing the main diagonal of each cube.
  constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          Tet t;
          t[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[s + 1] = vid(c[0], c[1], c[2]);
          }
          if (signed_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]) < 0) {
            std::swap(t[2], t[3]);
          }
          m.tets.push_back(t);
        }
      }
    }
  }
  m.refinement_level.assign(m.tets.size(), 0);
  m.level_vertex_counts.push_back(static_cast<int>(m.vertices.size()));
  return m;
}

Mesh refine_near_points(const Mesh& mesh, const std::vector<Vec3>& points, int rounds, double h_min_floor) {
  if (rounds < 0) throw MeshError("rounds must be non-negative");
  const double L = mesh.half_extent;
  for (const Vec3& p : points) {
    if (!(std::abs(p.x) < L && std::abs(p.y) < L && std::abs(p.z) < L)) {
      throw MeshError("refinement point outside the domain");
    }
  }
  Mesh out = mesh;
  for (int r = 0; r < rounds; ++r) {
    Refiner refiner(out);
    for (const Vec3& p : points) {
      auto cells = out.cells_containing(p);
      if (cells.empty()) {
        // nearest centroid, lowest index on ties
        double best = std::numeric_limits<double>::infinity();
        int best_cell = 0;
        for (std::size_t c = 0; c < out.tets.size(); ++c) {
          const Tet& t = out.tets[c];
          const Vec3 centroid =
              (out.vertices[t[0]] + out.vertices[t[1]] + out.vertices[t[2]] + out.vertices[t[3]]) * 0.25;
          const double d = norm(centroid - p);
          if (d < best) {
            best = d;
            best_cell = static_cast<int>(c);
          }
        }
        cells = {best_cell};
      }
      for (int c : cells) refiner.mark_cell(out.tets[c]);
    }
    refiner.close();
    refiner.split_all();
    const double hmin = out.min_diameter();
    if (hmin < h_min_floor) {
      std::ostringstream msg;
      msg << "local refinement round " << r + 1 << " produced cell diameter " << hmin
          << " below h_min_floor " << h_min_floor;
      throw MeshError(msg.str());
    }
  }
  return out;
}

Mesh refine_uniform(const Mesh& mesh, int rounds, std::size_t max_vertices) {
  if (rounds < 0) throw MeshError("rounds must be non-negative");
  if (rounds == 0) return mesh;
  // Predict the final size from the lattice counts of an 8-way split:
  // T' = 8T, F' = 4F + 8T, V' = V + E, and Euler (V - E + F - T = 1) for E'.
  double V = static_cast<double>(mesh.vertices.size());
  double E = static_cast<double>(count_edges(mesh));
  double F = static_cast<double>(count_faces(mesh));
  double T = static_cast<double>(mesh.tets.size());
  for (int r = 0; r < rounds; ++r) {
    const double V2 = V + E, F2 = 4 * F + 8 * T, T2 = 8 * T;
    E = V2 + F2 - T2 - 1;
    V = V2;
    F = F2;
    T = T2;
  }
  if (V > static_cast<double>(max_vertices)) {
    std::ostringstream msg;
    msg << "uniform refinement would create " << static_cast<std::size_t>(V) << " vertices (limit "
        << max_vertices << ")";
    throw MeshError(msg.str());
  }
  Mesh out = mesh;
  for (int r = 0; r < rounds; ++r) {
    Refiner refiner(out);
    for (const Tet& t : out.tets) refiner.mark_cell(t);
    refiner.split_all();
  }
  return out;
}

Mesh build_molecule_mesh(const MeshConfig& config) {
  config.validate();
  Mesh m = build_box_mesh(config);
  m = refine_near_points(m, config.nucleus_positions, config.local_refine_rounds, config.h_min_floor);
  return refine_uniform(m, config.global_refine_rounds, config.max_vertices);
}

std::vector<int> reflection_permutation(const Mesh& mesh) {
  auto key = [](const Vec3& v) { return std::array<double, 3>{v.x, v.y, v.z}; };
  std::map<std::array<double, 3>, int> index;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) index.emplace(key(mesh.vertices[i]), static_cast<int>(i));
  std::vector<int> perm(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto it = index.find(key(-mesh.vertices[i]));
    if (it == index.end()) throw MeshError("mesh is not symmetric under x -> -x");
    perm[i] = it->second;
  }
  return perm;
}

}  // namespace h2dft

namespace h2dft {

namespace {

std::array<double, 4> barycentric(const Mesh& m, const Tet& t, const Vec3& p) {
  const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]], &d = m.vertices[t[3]];
  const double v = dot(b - a, cross(c - a, d - a));
  const double l1 = dot(p - a, cross(c - a, d - a)) / v;
  const double l2 = dot(b - a, cross(p - a, d - a)) / v;
  const double l3 = dot(b - a, cross(c - a, p - a)) / v;
  return {1 - l1 - l2 - l3, l1, l2, l3};
}

}  // namespace

PointLocator::PointLocator(const Mesh& mesh, int buckets_per_axis) : mesh_(mesh) {
  nb_ = buckets_per_axis > 0
            ? buckets_per_axis
            : std::clamp(static_cast<int>(std::cbrt(static_cast<double>(mesh.num_tets()) / 4)), 1, 128);
  lo_ = -mesh.half_extent;
  width_ = 2 * mesh.half_extent / nb_;
  const std::size_t nbuckets = static_cast<std::size_t>(nb_) * nb_ * nb_;
  std::vector<std::array<int, 6>> boxes(mesh.num_tets());
  ptr_.assign(nbuckets + 1, 0);
  for (std::size_t c = 0; c < mesh.num_tets(); ++c) {
    Vec3 mn = mesh.vertices[mesh.tets[c][0]], mx = mn;
    for (int v : mesh.tets[c]) {
      const Vec3& p = mesh.vertices[v];
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    boxes[c] = {bucket(mn.x), bucket(mx.x), bucket(mn.y), bucket(mx.y), bucket(mn.z), bucket(mx.z)};
    const auto& b = boxes[c];
    for (int i = b[0]; i <= b[1]; ++i)
      for (int j = b[2]; j <= b[3]; ++j)
        for (int k = b[4]; k <= b[5]; ++k) ++ptr_[(static_cast<std::size_t>(k) * nb_ + j) * nb_ + i + 1];
  }
  for (std::size_t q = 0; q < nbuckets; ++q) ptr_[q + 1] += ptr_[q];
  cells_.resize(ptr_.back());
  std::vector<int> fill(ptr_.begin(), ptr_.end() - 1);
  for (std::size_t c = 0; c < mesh.num_tets(); ++c) {
    const auto& b = boxes[c];
    for (int i = b[0]; i <= b[1]; ++i)
      for (int j = b[2]; j <= b[3]; ++j)
        for (int k = b[4]; k <= b[5]; ++k) cells_[fill[(static_cast<std::size_t>(k) * nb_ + j) * nb_ + i]++] = static_cast<int>(c);
  }
}

int PointLocator::bucket(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - lo_) / width_)), 0, nb_ - 1);
}

int PointLocator::locate(const Vec3& p, std::array<double, 4>* bary) const {
  const double L = mesh_.half_extent;
  if (std::abs(p.x) > L || std::abs(p.y) > L || std::abs(p.z) > L) return -1;
  const std::size_t q = (static_cast<std::size_t>(bucket(p.z)) * nb_ + bucket(p.y)) * nb_ + bucket(p.x);
  // cells are stored in ascending order per bucket; accept the first with all
  // barycentric coordinates above a small negative tolerance
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<double, 4> best_l{};
  for (int k = ptr_[q]; k < ptr_[q + 1]; ++k) {
    const auto l = barycentric(mesh_, mesh_.tets[cells_[k]], p);
    const double m = std::min(std::min(l[0], l[1]), std::min(l[2], l[3]));
    if (m >= -1e-12) {
      if (bary) *bary = l;
      return cells_[k];
    }
    if (m > best_min) {
      best_min = m;
      best = cells_[k];
      best_l = l;
    }
  }
  if (best >= 0 && best_min > -1e-9) {
    if (bary) *bary = best_l;
    return best;
  }
  return -1;
}

double PointLocator::evaluate(const std::vector<double>& field, const Vec3& p, double outside) const {
  std::array<double, 4> l{};
  const int c = locate(p, &l);
  if (c < 0) return outside;
  const Tet& t = mesh_.tets[c];
  return l[0] * field[t[0]] + l[1] * field[t[1]] + l[2] * field[t[2]] + l[3] * field[t[3]];
}

}  // namespace h2dft
