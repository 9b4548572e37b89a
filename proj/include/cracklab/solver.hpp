#pragma once

// P1 Galerkin solver for lambda*u - div(A grad u) = f on the slit disk:
// Dirichlet data on the outer circle, natural (zero-flux) condition on both
// crack faces, assembled into a CSR system and solved with diagonally
// preconditioned conjugate gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "cracklab/core.hpp"
#include "cracklab/geometry.hpp"
#include "cracklab/mesh.hpp"

namespace cracklab {

using ScalarField = std::function<double(Vec2)>;
using MatrixField = std::function<Mat2(Vec2)>;

// ---------------------------------------------------------------------------
// Coefficient field
// ---------------------------------------------------------------------------

struct CoefficientField {
  MatrixField eval;
  double holder_exponent = 1.0;   // alpha in (0,1]
  double holder_constant = 0.0;
  double coercivity = 1.0;        // gamma
  double upper_bound = 1.0;       // Lambda
  bool constant = false;          // evaluation shortcut and exactness hint

  static CoefficientField identity() {
    CoefficientField A;
    A.eval = [](Vec2) { return Mat2::identity(); };
    A.constant = true;
    return A;
  }
  static CoefficientField constant_matrix(Mat2 M) {
    if (!M.is_symmetric(1e-12)) throw Error("coefficient matrix must be symmetric");
    const auto ev = M.sym_eigenvalues();
    if (!(ev[0] > 0)) throw Error("coefficient matrix must be positive definite");
    CoefficientField A;
    A.eval = [M](Vec2) { return M; };
    A.coercivity = ev[0];
    A.upper_bound = ev[1];
    A.constant = true;
    return A;
  }
  // A(x) = Id + delta |x - x0|^alpha M with symmetric M
  static CoefficientField holder_field(double delta, double alpha, Mat2 M, Vec2 x0,
                                       double domain_radius) {
    if (!M.is_symmetric(1e-12)) throw Error("holder field: M must be symmetric");
    if (!(alpha > 0) || alpha > 1) throw Error("holder field: alpha must be in (0,1]");
    const auto ev = M.sym_eigenvalues();
    const double reach = std::pow(2.0 * domain_radius, alpha) * std::abs(delta) *
                         std::max(std::abs(ev[0]), std::abs(ev[1]));
    if (1.0 - reach < 0.1) throw Error("holder field: delta too large for coercivity 0.1");
    CoefficientField A;
    A.eval = [delta, alpha, M, x0](Vec2 p) {
      const double w = delta * std::pow(dist(p, x0), alpha);
      return Mat2{1.0 + w * M.a, w * M.b, w * M.c, 1.0 + w * M.d};
    };
    A.holder_exponent = alpha;
    A.holder_constant = std::abs(delta) * std::max(std::abs(ev[0]), std::abs(ev[1]));
    A.coercivity = 1.0 - reach;
    A.upper_bound = 1.0 + reach;
    return A;
  }

  // Sampled invariants: symmetry, eigenvalue bounds, Hölder modulus.
  void check_sampled(const BallSpec& domain, int samples = 64) const {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec2> pts;
    for (int i = 0; i < samples; ++i) {
      Vec2 p{u(rng), u(rng)};
      if (p.norm() > 1) { --i; continue; }
      pts.push_back(domain.center + p * domain.radius);
    }
    for (const Vec2& p : pts) {
      const Mat2 M = eval(p);
      if (!M.is_symmetric(1e-12)) throw Error("coefficient field: non-symmetric value");
      const auto ev = M.sym_eigenvalues();
      if (ev[0] < coercivity - 1e-9 || ev[1] > upper_bound + 1e-9)
        throw Error("coefficient field: eigenvalues leave [gamma, Lambda]");
    }
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
      const Mat2 Mi = eval(pts[i]), Mj = eval(pts[i + 1]);
      const double diff = std::max({std::abs(Mi.a - Mj.a), std::abs(Mi.b - Mj.b),
                                    std::abs(Mi.d - Mj.d)});
      const double bound = holder_constant * std::pow(dist(pts[i], pts[i + 1]), holder_exponent);
      if (diff > bound + 1e-9) throw Error("coefficient field: Hölder modulus violated");
    }
  }
};

struct ProblemSpec {
  BallSpec domain{{0, 0}, 1.0};
  CrackSet crack;
  CoefficientField A = CoefficientField::identity();
  double lambda = 0.0;
  ScalarField f;  // empty when lambda = 0
  ScalarField g = [](Vec2) { return 0.0; };

  void check() const {
    if (lambda < 0) throw Error("problem: lambda must be nonnegative");
    if (lambda == 0 && f) throw Error("problem: lambda = 0 requires f = 0");
  }
  double f_at(Vec2 p) const { return f ? f(p) : 0.0; }
};

// ---------------------------------------------------------------------------
// Sparse CSR + preconditioned CG
// ---------------------------------------------------------------------------

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr, col;
  std::vector<double> val;

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  }
  std::vector<double> diagonal() const {
    std::vector<double> d(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        if (col[k] == i) d[i] = val[k];
    return d;
  }
};

inline CsrMatrix csr_from_triplets(int n, std::vector<std::tuple<int, int, double>>& trip) {
  std::sort(trip.begin(), trip.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  CsrMatrix M;
  M.n = n;
  M.row_ptr.assign(n + 1, 0);
  for (std::size_t k = 0; k < trip.size();) {
    std::size_t j = k;
    double s = 0;
    while (j < trip.size() && std::get<0>(trip[j]) == std::get<0>(trip[k]) &&
           std::get<1>(trip[j]) == std::get<1>(trip[k])) {
      s += std::get<2>(trip[j]);
      ++j;
    }
    M.col.push_back(std::get<1>(trip[k]));
    M.val.push_back(s);
    M.row_ptr[std::get<0>(trip[k]) + 1]++;
    k = j;
  }
  for (int i = 0; i < n; ++i) M.row_ptr[i + 1] += M.row_ptr[i];
  return M;
}

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

inline CgStats jacobi_cg(const CsrMatrix& A, const std::vector<double>& b,
                         std::vector<double>& x, double tol, int max_iter) {
  const int n = A.n;
  x.assign(n, 0.0);
  const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  CgStats stats;
  if (bnorm == 0) return stats;
  std::vector<double> d = A.diagonal();
  for (double& v : d) {
    if (v <= 0) throw Error("solver: non-positive diagonal (system not SPD)");
    v = 1.0 / v;
  }
  std::vector<double> r = b, z(n), p(n), q(n);
  for (int i = 0; i < n; ++i) z[i] = d[i] * r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (int it = 1; it <= max_iter; ++it) {
    A.multiply(p, q);
    const double pq = std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    if (pq <= 0) throw Error("solver: indefinite direction (system not SPD)");
    const double alpha = rz / pq;
    double rnorm2 = 0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rnorm2 += r[i] * r[i];
    }
    stats.iterations = it;
    stats.relative_residual = std::sqrt(rnorm2) / bnorm;
    if (stats.relative_residual <= tol) return stats;
    double rz_new = 0;
    for (int i = 0; i < n; ++i) {
      z[i] = d[i] * r[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw Error("solver: iteration cap exceeded (residual " +
              format_double(stats.relative_residual) + ")");
}

// ---------------------------------------------------------------------------
// Point location
// ---------------------------------------------------------------------------

class MeshLocator {
 public:
  explicit MeshLocator(const Triangulation& T) : mesh_(&T) {
    lo_ = hi_ = T.vertices.at(0);
    for (const Vec2& v : T.vertices) {
      lo_.x = std::min(lo_.x, v.x);
      lo_.y = std::min(lo_.y, v.y);
      hi_.x = std::max(hi_.x, v.x);
      hi_.y = std::max(hi_.y, v.y);
    }
    cells_ = std::clamp(static_cast<int>(std::sqrt(T.triangles.size() / 2.0)), 8, 1024);
    grid_.resize(static_cast<std::size_t>(cells_) * cells_);
    for (int t = 0; t < static_cast<int>(T.triangles.size()); ++t) {
      Vec2 tlo = T.vertices[T.triangles[t][0]], thi = tlo;
      for (int i = 1; i < 3; ++i) {
        const Vec2 v = T.vertices[T.triangles[t][i]];
        tlo.x = std::min(tlo.x, v.x);
        tlo.y = std::min(tlo.y, v.y);
        thi.x = std::max(thi.x, v.x);
        thi.y = std::max(thi.y, v.y);
      }
      const auto [i0, j0] = cell_of(tlo);
      const auto [i1, j1] = cell_of(thi);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) grid_[static_cast<std::size_t>(j) * cells_ + i].push_back(t);
    }
  }

  // Containing triangle and barycentric coordinates; the triangle with the
  // largest minimal coordinate wins so points on the slit resolve to one
  // side deterministically. Returns -1 if outside the mesh.
  int locate(Vec2 p, std::array<double, 3>* bary = nullptr) const {
    const auto [ci, cj] = cell_of(p);
    int best = -1;
    double best_min = -1e300;
    std::array<double, 3> best_b{};
    for (int t : grid_[static_cast<std::size_t>(cj) * cells_ + ci]) {
      const auto& tr = mesh_->triangles[t];
      const Vec2 a = mesh_->vertices[tr[0]], b = mesh_->vertices[tr[1]], c = mesh_->vertices[tr[2]];
      const double area2 = (b - a).cross(c - a);
      if (area2 <= 0) continue;
      const std::array<double, 3> w{(b - p).cross(c - p) / area2, (c - p).cross(a - p) / area2,
                                    (a - p).cross(b - p) / area2};
      const double mn = std::min({w[0], w[1], w[2]});
      if (mn > best_min) {
        best_min = mn;
        best = t;
        best_b = w;
      }
    }
    if (best < 0 || best_min < -1e-10) return -1;
    if (bary) *bary = best_b;
    return best;
  }

 private:
  std::pair<int, int> cell_of(Vec2 p) const {
    const double fx = (p.x - lo_.x) / std::max(hi_.x - lo_.x, 1e-300);
    const double fy = (p.y - lo_.y) / std::max(hi_.y - lo_.y, 1e-300);
    return {std::clamp(static_cast<int>(fx * cells_), 0, cells_ - 1),
            std::clamp(static_cast<int>(fy * cells_), 0, cells_ - 1)};
  }
  const Triangulation* mesh_;
  Vec2 lo_, hi_;
  int cells_ = 8;
  std::vector<std::vector<int>> grid_;
};

// ---------------------------------------------------------------------------
// Discrete solution
// ---------------------------------------------------------------------------

struct DiscreteSolution {
  std::shared_ptr<const Triangulation> mesh;
  std::vector<double> nodal_values;
  std::vector<Vec2> element_gradients;
  CgStats stats;

  Vec2 gradient_of_element(std::size_t t) const {
    const auto& tr = mesh->triangles[t];
    const Vec2 a = mesh->vertices[tr[0]], b = mesh->vertices[tr[1]], c = mesh->vertices[tr[2]];
    const double area2 = (b - a).cross(c - a);
    const double u0 = nodal_values[tr[0]], u1 = nodal_values[tr[1]], u2 = nodal_values[tr[2]];
    // grad of barycentric basis: rotate opposite edges
    const Vec2 g0 = (c - b).rot90() / area2;
    const Vec2 g1 = (a - c).rot90() / area2;
    const Vec2 g2 = (b - a).rot90() / area2;
    return g0 * u0 + g1 * u1 + g2 * u2;
  }

  double value_on_element(std::size_t t, const std::array<double, 3>& bary) const {
    const auto& tr = mesh->triangles[t];
    return bary[0] * nodal_values[tr[0]] + bary[1] * nodal_values[tr[1]] +
           bary[2] * nodal_values[tr[2]];
  }

  double max_gradient_recompute_error() const {
    double worst = 0;
    for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
      const Vec2 d = gradient_of_element(t) - element_gradients[t];
      worst = std::max(worst, std::max(std::abs(d.x), std::abs(d.y)));
    }
    return worst;
  }
};

namespace detail {

// Outward nudge into the adjacent sector for slit-duplicated Dirichlet
// vertices, so jump data picks the correct branch.
inline std::vector<Vec2> dirichlet_points(const Triangulation& T) {
  std::vector<char> is_dup(T.vertices.size(), 0);
  for (const auto& [l, r] : T.slit_pairs) {
    is_dup[l] = 1;
    is_dup[r] = 1;
  }
  std::vector<Vec2> pull(T.vertices.size(), Vec2{0, 0});
  std::vector<int> cnt(T.vertices.size(), 0);
  for (std::size_t t = 0; t < T.triangles.size(); ++t)
    for (int i = 0; i < 3; ++i) {
      const int v = T.triangles[t][i];
      if (!is_dup[v]) continue;
      pull[v] += T.centroid(t) - T.vertices[v];
      cnt[v] += 1;
    }
  std::vector<Vec2> out(T.vertices.size());
  for (std::size_t v = 0; v < T.vertices.size(); ++v) {
    out[v] = T.vertices[v];
    if (cnt[v] > 0) {
      const Vec2 dir = (pull[v] / cnt[v]);
      out[v] += dir.normalized() * (1e-7 * T.domain.radius);
    }
  }
  return out;
}

}  // namespace detail

inline DiscreteSolution assemble_and_solve(const ProblemSpec& spec, const Triangulation& mesh,
                                           double solver_tol = 1e-10) {
  spec.check();
  // mesh/crack consistency: every crack-edge endpoint must lie on K
  if (!spec.crack.empty()) {
    for (std::size_t k = 0; k < mesh.crack_edges.size(); k += std::max<std::size_t>(1, mesh.crack_edges.size() / 16)) {
      const Vec2 p = mesh.vertices[mesh.crack_edges[k][0]];
      if (point_to_crack_distance(spec.crack, p) > 1e-9 * spec.domain.radius)
        throw Error("solver: mesh crack does not match the problem crack");
    }
  } else if (!mesh.crack_edges.empty()) {
    throw Error("solver: mesh has a slit but the problem has no crack");
  }

  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<char> is_bc(n, 0);
  for (int v : mesh.outer_vertices) is_bc[v] = 1;

  std::vector<double> bc_value(n, 0.0);
  {
    const auto pts = detail::dirichlet_points(mesh);
    for (int v : mesh.outer_vertices) bc_value[v] = spec.g(pts[v]);
  }

  // lambda = 0: ground any component that touches no Dirichlet node
  std::vector<char> grounded(n, 0);
  if (spec.lambda == 0.0) {
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> vtx_adj;  // union-find instead
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& tr : mesh.triangles) {
      parent[find(tr[0])] = find(tr[1]);
      parent[find(tr[1])] = find(tr[2]);
    }
    std::vector<char> root_has_bc(n, 0);
    for (int v = 0; v < n; ++v)
      if (is_bc[v]) root_has_bc[find(v)] = 1;
    std::vector<char> root_grounded(n, 0);
    for (int v = 0; v < n; ++v) {
      const int r = find(v);
      if (!root_has_bc[r] && !root_grounded[r]) {
        root_grounded[r] = 1;
        grounded[v] = 1;  // pin this vertex to zero
      }
    }
  }

  std::vector<int> unknown_of(n, -1);
  int nu = 0;
  for (int v = 0; v < n; ++v)
    if (!is_bc[v] && !grounded[v]) unknown_of[v] = nu++;

  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(mesh.triangles.size() * 9);
  std::vector<double> rhs(nu, 0.0);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tr = mesh.triangles[t];
    const Vec2 a = mesh.vertices[tr[0]], b = mesh.vertices[tr[1]], c = mesh.vertices[tr[2]];
    const double area2 = (b - a).cross(c - a);
    const double area = 0.5 * area2;
    const Vec2 grads[3] = {(c - b).rot90() / area2, (a - c).rot90() / area2,
                           (b - a).rot90() / area2};
    const Vec2 cent = (a + b + c) / 3.0;
    const Mat2 Ac = spec.A.eval(cent);

    double ke[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ke[i][j] = area * Ac.apply(grads[j]).dot(grads[i]);
    if (spec.lambda > 0) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          ke[i][j] += spec.lambda * area / 12.0 * (i == j ? 2.0 : 1.0);
    }

    // load by the edge-midpoint rule (exact for quadratics)
    double fe[3] = {0, 0, 0};
    if (spec.f) {
      const Vec2 m01 = (a + b) / 2.0, m12 = (b + c) / 2.0, m20 = (c + a) / 2.0;
      const double f01 = spec.f(m01), f12 = spec.f(m12), f20 = spec.f(m20);
      fe[0] = area / 3.0 * 0.5 * (f01 + f20);
      fe[1] = area / 3.0 * 0.5 * (f01 + f12);
      fe[2] = area / 3.0 * 0.5 * (f12 + f20);
    }

    for (int i = 0; i < 3; ++i) {
      const int vi = tr[i];
      const int ui = unknown_of[vi];
      if (ui < 0) continue;
      rhs[ui] += fe[i];
      for (int j = 0; j < 3; ++j) {
        const int vj = tr[j];
        const int uj = unknown_of[vj];
        if (uj >= 0)
          trip.emplace_back(ui, uj, ke[i][j]);
        else if (is_bc[vj])
          rhs[ui] -= ke[i][j] * bc_value[vj];
      }
    }
  }

  const CsrMatrix K = csr_from_triplets(nu, trip);
  std::vector<double> x;
  const int cap = std::max(200, static_cast<int>(50.0 * std::sqrt(static_cast<double>(nu))));
  const CgStats stats = jacobi_cg(K, rhs, x, solver_tol, cap);

  DiscreteSolution sol;
  sol.mesh = std::make_shared<Triangulation>(mesh);
  sol.nodal_values.assign(n, 0.0);
  for (int v = 0; v < n; ++v) {
    if (is_bc[v])
      sol.nodal_values[v] = bc_value[v];
    else if (!grounded[v])
      sol.nodal_values[v] = x[unknown_of[v]];
  }
  sol.stats = stats;
  sol.element_gradients.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    sol.element_gradients[t] = sol.gradient_of_element(t);
  return sol;
}

// Randomized positive-definiteness probe of the assembled operator.
inline bool spd_probe(const ProblemSpec& spec, const Triangulation& mesh, int vectors = 20) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < vectors; ++k) {
    std::vector<double> w(n);
    for (double& v : w) v = u(rng);
    // Rayleigh quotient of the bilinear form, computed elementwise
    double q = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tr = mesh.triangles[t];
      const Vec2 a = mesh.vertices[tr[0]], b = mesh.vertices[tr[1]], c = mesh.vertices[tr[2]];
      const double area2 = (b - a).cross(c - a);
      const double area = 0.5 * area2;
      const Vec2 grads[3] = {(c - b).rot90() / area2, (a - c).rot90() / area2,
                             (b - a).rot90() / area2};
      Vec2 gw{0, 0};
      for (int i = 0; i < 3; ++i) gw += grads[i] * w[tr[i]];
      const Mat2 Ac = spec.A.eval((a + b + c) / 3.0);
      q += area * Ac.apply(gw).dot(gw);
      if (spec.lambda > 0) {
        const double wm = (w[tr[0]] + w[tr[1]] + w[tr[2]]) / 3.0;
        double mass = 0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            mass += w[tr[i]] * w[tr[j]] * (i == j ? 2.0 : 1.0) * area / 12.0;
        (void)wm;
        q += spec.lambda * mass;
      }
    }
    if (q < 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Weak residual and sup bound
// ---------------------------------------------------------------------------

struct TestField {
  ScalarField value;
  std::function<Vec2(Vec2)> gradient;
};

// integral of (A grad u) . grad phi - (f - lambda u) phi over the mesh
inline double weak_residual(const DiscreteSolution& sol, const ProblemSpec& spec,
                            const TestField& phi) {
  const Triangulation& T = *sol.mesh;
  for (int v : T.outer_vertices)
    if (std::abs(phi.value(T.vertices[v])) > 1e-12)
      throw Error("weak_residual: test field does not vanish on the outer boundary");
  double res = 0;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
    const double area = 0.5 * (b - a).cross(c - a);
    const Vec2 cent = (a + b + c) / 3.0;
    const Mat2 Ac = spec.A.eval(cent);
    const Vec2 flux = Ac.apply(sol.element_gradients[t]);
    const Vec2 mids[3] = {(a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0};
    const double u_mid[3] = {
        0.5 * (sol.nodal_values[tr[0]] + sol.nodal_values[tr[1]]),
        0.5 * (sol.nodal_values[tr[1]] + sol.nodal_values[tr[2]]),
        0.5 * (sol.nodal_values[tr[2]] + sol.nodal_values[tr[0]])};
    for (int m = 0; m < 3; ++m) {
      // nudge into the element so piecewise test fields are single-valued
      const Vec2 q = mids[m] + (cent - mids[m]) * 1e-9;
      res += area / 3.0 * flux.dot(phi.gradient(q));
      res -= area / 3.0 * (spec.f_at(mids[m]) - spec.lambda * u_mid[m]) * phi.value(q);
    }
  }
  return res;
}

struct SupBoundReport {
  bool pass = false;
  double bound = 0;
  double max_abs = 0;
  double margin = 0;
};

inline SupBoundReport sup_bound_check(const DiscreteSolution& sol, const ProblemSpec& spec) {
  const Triangulation& T = *sol.mesh;
  double f_inf = 0, g_inf = 0;
  const auto pts = detail::dirichlet_points(T);
  for (int v : T.outer_vertices) g_inf = std::max(g_inf, std::abs(spec.g(pts[v])));
  if (spec.f)
    for (std::size_t t = 0; t < T.triangles.size(); ++t) f_inf = std::max(f_inf, std::abs(spec.f(T.centroid(t))));
  SupBoundReport rep;
  rep.bound = spec.lambda > 0 ? std::max(f_inf, g_inf) / std::min(1.0, spec.lambda) : g_inf;
  for (double v : sol.nodal_values) rep.max_abs = std::max(rep.max_abs, std::abs(v));
  rep.margin = rep.bound + 1e-6 - rep.max_abs;
  rep.pass = rep.margin >= 0;
  return rep;
}

// Discrete value of the minimized functional, for stationarity tests.
inline double discrete_functional(const DiscreteSolution& sol, const ProblemSpec& spec,
                                  const std::vector<double>& values) {
  const Triangulation& T = *sol.mesh;
  double F = 0;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
    const double area2 = (b - a).cross(c - a);
    const double area = 0.5 * area2;
    const Vec2 grads[3] = {(c - b).rot90() / area2, (a - c).rot90() / area2,
                           (b - a).rot90() / area2};
    Vec2 gu{0, 0};
    for (int i = 0; i < 3; ++i) gu += grads[i] * values[tr[i]];
    const Mat2 Ac = spec.A.eval((a + b + c) / 3.0);
    F += area * Ac.apply(gu).dot(gu);
    if (spec.lambda > 0) {
      const Vec2 mids[3] = {(a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0};
      const double um[3] = {0.5 * (values[tr[0]] + values[tr[1]]),
                            0.5 * (values[tr[1]] + values[tr[2]]),
                            0.5 * (values[tr[2]] + values[tr[0]])};
      for (int m = 0; m < 3; ++m) {
        const double dev = spec.lambda * um[m] - spec.f_at(mids[m]);
        F += area / 3.0 * dev * dev / spec.lambda;
      }
    }
  }
  return F;
}

}  // namespace cracklab
