#include "h2dft/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace h2dft {

namespace {

constexpr int kFaceLocal[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

// Gradients of the barycentric coordinates; rows of the inverse Jacobian.
std::array<Vec3, 4> barycentric_gradients(const std::array<Vec3, 4>& x, double& volume) {
  const Vec3 e1 = x[1] - x[0], e2 = x[2] - x[0], e3 = x[3] - x[0];
  const double det = dot(e1, cross(e2, e3));
  volume = det / 6.0;
  std::array<Vec3, 4> g;
  g[1] = cross(e2, e3) * (1.0 / det);
  g[2] = cross(e3, e1) * (1.0 / det);
  g[3] = cross(e1, e2) * (1.0 / det);
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

std::array<Vec3, 4> cell_points(const Mesh& m, std::size_t c) {
  const Tet& t = m.tets[c];
  return {m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]};
}

// Exact integral of eta_a * w_h * eta_b over a simplex of measure `measure`
// in dimension d, for w_h linear with vertex values w (sum W). `denom` is
// (d+3)!/d! which is 120 for tetrahedra and 60 for triangles.
inline double weighted_pair(double measure, double denom, double W, double wa, double wb, bool same) {
  return measure / denom * ((same ? 2.0 : 1.0) * W + (wa + wb) + (same ? 2.0 * wa : 0.0));
}

template <typename CellValue>
SparseOperator gather_assemble(const FeSpace& space, CellValue&& value) {
  const auto& ptr = space.contribution_ptr();
  const auto& contrib = space.contributions();
  const std::ptrdiff_t nnz = static_cast<std::ptrdiff_t>(space.pattern()->nnz());
  Vector vals(nnz);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < nnz; ++k) {
    double s = 0;
    for (int q = ptr[k]; q < ptr[k + 1]; ++q) s += value(contrib[q].cell, contrib[q].a, contrib[q].b);
    vals[k] = s;
  }
  return {space.pattern(), std::move(vals)};
}

}  // namespace

double default_nuclear_delta(const Mesh& mesh, double R) {
  const double h = std::min(mesh.diameter_at({R, 0, 0}), mesh.diameter_at({-R, 0, 0}));
  return std::clamp(0.5 * h, 1e-4, 1e-2);
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  const std::size_t nc = m.num_tets();
  const int n = static_cast<int>(m.num_vertices());
  volume_.resize(nc);
  grad_.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto x = cell_points(m, c);
    grad_[c] = barycentric_gradients(x, volume_[c]);
    const double d = m.diameter(c);
    if (!(volume_[c] > 1e-12 * d * d * d)) {
      std::ostringstream msg;
      msg << "degenerate cell " << c << " (volume " << volume_[c] << ")";
      throw AssemblyError(msg.str());
    }
  }

  // vertex -> (cell, local) in ascending cell order
  vc_ptr_.assign(n + 1, 0);
  for (const Tet& t : m.tets) {
    for (int v : t) ++vc_ptr_[v + 1];
  }
  for (int i = 0; i < n; ++i) vc_ptr_[i + 1] += vc_ptr_[i];
  vc_.resize(vc_ptr_[n]);
  {
    std::vector<int> fill(vc_ptr_.begin(), vc_ptr_.end() - 1);
    for (std::size_t c = 0; c < nc; ++c) {
      for (int a = 0; a < 4; ++a) vc_[fill[m.tets[c][a]]++] = {static_cast<int>(c), a};
    }
  }

  auto pattern = std::make_shared<SparsityPattern>();
  pattern->n = n;
  pattern->row_ptr.assign(n + 1, 0);
  std::vector<int> row;
  for (int i = 0; i < n; ++i) {
    row.clear();
    for (int q = vc_ptr_[i]; q < vc_ptr_[i + 1]; ++q) {
      for (int v : m.tets[vc_[q].first]) row.push_back(v);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    pattern->cols.insert(pattern->cols.end(), row.begin(), row.end());
    pattern->row_ptr[i + 1] = static_cast<int>(pattern->cols.size());
  }

  // Per-entry contribution lists; rows are visited cell-ascending so each list
  // ends up in ascending cell order.
  contrib_ptr_.assign(pattern->nnz() + 1, 0);
  std::vector<int> slot(vc_.size() * 4);
  for (int i = 0; i < n; ++i) {
    for (int q = vc_ptr_[i]; q < vc_ptr_[i + 1]; ++q) {
      const Tet& t = m.tets[vc_[q].first];
      for (int b = 0; b < 4; ++b) {
        const int k = pattern->find(i, t[b]);
        slot[q * 4 + b] = k;
        ++contrib_ptr_[k + 1];
      }
    }
  }
  for (std::size_t k = 0; k < pattern->nnz(); ++k) contrib_ptr_[k + 1] += contrib_ptr_[k];
  contrib_.resize(contrib_ptr_.back());
  {
    std::vector<int> fill(contrib_ptr_.begin(), contrib_ptr_.end() - 1);
    for (int i = 0; i < n; ++i) {
      for (int q = vc_ptr_[i]; q < vc_ptr_[i + 1]; ++q) {
        const auto [cell, a] = vc_[q];
        for (int b = 0; b < 4; ++b) {
          contrib_[fill[slot[q * 4 + b]]++] = {cell, static_cast<unsigned char>(a), static_cast<unsigned char>(b)};
        }
      }
    }
  }
  pattern_ = std::move(pattern);

  lumped_.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int q = vc_ptr_[i]; q < vc_ptr_[i + 1]; ++q) s += volume_[vc_[q].first] * 0.25;
    lumped_[i] = s;
  }
}

Vector FeSpace::product_load(std::span<const double> u, std::span<const double> v) const {
  const Mesh& m = *mesh_;
  const std::ptrdiff_t n = size();
  Vector b(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0;
    for (int q = vc_ptr_[i]; q < vc_ptr_[i + 1]; ++q) {
      const Tet& t = m.tets[vc_[q].first];
      double U = 0, V = 0, UV = 0;
      for (int a = 0; a < 4; ++a) {
        U += u[t[a]];
        V += v[t[a]];
        UV += u[t[a]] * v[t[a]];
      }
      s += volume_[vc_[q].first] / 120.0 * (U * V + u[i] * V + v[i] * U + UV + 2.0 * u[i] * v[i]);
    }
    b[i] = s;
  }
  return b;
}

Vector FeSpace::product_load_reference(std::span<const double> u, std::span<const double> v) const {
  const Mesh& m = *mesh_;
  Vector b(size(), 0.0);
  for (std::size_t c = 0; c < m.num_tets(); ++c) {
    const Tet& t = m.tets[c];
    double U = 0, V = 0, UV = 0;
    for (int a = 0; a < 4; ++a) {
      U += u[t[a]];
      V += v[t[a]];
      UV += u[t[a]] * v[t[a]];
    }
    for (int a = 0; a < 4; ++a) {
      const int i = t[a];
      b[i] += volume_[c] / 120.0 * (U * V + u[i] * V + v[i] * U + UV + 2.0 * u[i] * v[i]);
    }
  }
  return b;
}

std::array<std::array<double, 4>, 4> element_stiffness(const std::array<Vec3, 4>& x) {
  double vol = 0;
  const auto g = barycentric_gradients(x, vol);
  std::array<std::array<double, 4>, 4> K{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) K[a][b] = 0.5 * vol * dot(g[a], g[b]);
  }
  return K;
}

std::array<std::array<double, 4>, 4> element_mass(double volume) {
  std::array<std::array<double, 4>, 4> M{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) M[a][b] = volume / 120.0 * (a == b ? 12.0 : 6.0);
  }
  return M;
}

SparseOperator assemble_stiffness(const FeSpace& space) {
  return gather_assemble(space, [&space](int c, int a, int b) {
    const auto& g = space.cell_gradients(c);
    return 0.5 * space.cell_volume(c) * dot(g[a], g[b]);
  });
}

SparseOperator assemble_mass(const FeSpace& space) {
  return gather_assemble(space, [&space](int c, int a, int b) {
    // same arithmetic as a unit-weighted mass, so the two agree bit for bit
    return space.cell_volume(c) / 120.0 * (a == b ? 12.0 : 6.0);
  });
}

SparseOperator assemble_weighted_mass(const FeSpace& space, std::span<const double> w) {
  for (double x : w) {
    if (std::isnan(x)) throw AssemblyError("weighted mass: NaN in weight field");
  }
  const Mesh& m = space.mesh();
  return gather_assemble(space, [&](int c, int a, int b) {
    const Tet& t = m.tets[c];
    const double W = w[t[0]] + w[t[1]] + w[t[2]] + w[t[3]];
    return weighted_pair(space.cell_volume(c), 120.0, W, w[t[a]], w[t[b]], a == b);
  });
}

SparseOperator assemble_weighted_mass_reference(const FeSpace& space, std::span<const double> w) {
  for (double x : w) {
    if (std::isnan(x)) throw AssemblyError("weighted mass: NaN in weight field");
  }
  const Mesh& m = space.mesh();
  const auto& p = *space.pattern();
  Vector vals(p.nnz(), 0.0);
  for (std::size_t c = 0; c < m.num_tets(); ++c) {
    const Tet& t = m.tets[c];
    const double W = w[t[0]] + w[t[1]] + w[t[2]] + w[t[3]];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        vals[p.find(t[a], t[b])] += weighted_pair(space.cell_volume(c), 120.0, W, w[t[a]], w[t[b]], a == b);
      }
    }
  }
  return {space.pattern(), std::move(vals)};
}

SparseOperator assemble_farfield_boundary(const FeSpace& space) {
  const Mesh& m = space.mesh();
  const auto& p = *space.pattern();
  const double L = m.half_extent;
  Vector vals(p.nnz(), 0.0);
  for (std::size_t c = 0; c < m.num_tets(); ++c) {
    const Tet& t = m.tets[c];
    for (const auto& f : kFaceLocal) {
      const Vec3 &x0 = m.vertices[t[f[0]]], &x1 = m.vertices[t[f[1]]], &x2 = m.vertices[t[f[2]]];
      // a boundary face lies in one of the six planes |x_k| = L
      int axis = -1;
      double side = 0;
      const double c0[3] = {x0.x, x0.y, x0.z}, c1[3] = {x1.x, x1.y, x1.z}, c2[3] = {x2.x, x2.y, x2.z};
      for (int k = 0; k < 3; ++k) {
        if (std::abs(c0[k]) == L && c1[k] == c0[k] && c2[k] == c0[k]) {
          axis = k;
          side = c0[k] > 0 ? 1.0 : -1.0;
        }
      }
      if (axis < 0) continue;
      const double area = 0.5 * norm(cross(x1 - x0, x2 - x0));
      std::array<double, 3> beta;
      const Vec3* xs[3] = {&x0, &x1, &x2};
      for (int a = 0; a < 3; ++a) {
        const double cx[3] = {xs[a]->x, xs[a]->y, xs[a]->z};
        beta[a] = side * cx[axis] / dot(*xs[a], *xs[a]);
      }
      const double B = beta[0] + beta[1] + beta[2];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          vals[p.find(t[f[a]], t[f[b]])] += weighted_pair(area, 60.0, B, beta[a], beta[b], a == b);
        }
      }
    }
  }
  return {space.pattern(), std::move(vals)};
}

NodalField point_charge_field(const Mesh& mesh, const Vec3& center, double charge, double delta) {
  NodalField f(mesh.num_vertices());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = -charge / (norm(mesh.vertices[i] - center) + delta);
  return f;
}

NodalField nuclear_field(const Mesh& mesh, const NuclearPotentialSpec& spec) {
  spec.validate();
  if (spec.single_center) return point_charge_field(mesh, {}, 1.0, spec.delta);
  const Vec3 a{spec.R, 0, 0}, b{-spec.R, 0, 0};
  NodalField f(mesh.num_vertices());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& x = mesh.vertices[i];
    f[i] = -1.0 / (norm(x - a) + spec.delta) - 1.0 / (norm(x - b) + spec.delta);
  }
  return f;
}

NodalField interpolate(const Mesh& mesh, const std::function<double(const Vec3&)>& f) {
  NodalField out(mesh.num_vertices());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(mesh.vertices[i]);
  return out;
}

double mass_inner(const SparseOperator& S, std::span<const double> u, std::span<const double> v) {
  Vector Sv(u.size());
  S.apply(v, Sv);
  return kernels::dot(u, Sv);
}

}  // namespace h2dft
