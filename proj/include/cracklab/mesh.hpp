#pragma once

// Crack-conforming triangulations of a disk minus a polyline crack. The
// crack becomes a true topological cut: after a constrained Delaunay
// triangulation with tip-graded Ruppert refinement, vertices along the slit
// are duplicated per fan sector so the two faces carry independent degrees
// of freedom. Everything is deterministic: same crack + config gives a
// byte-identical mesh.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "cracklab/core.hpp"
#include "cracklab/geometry.hpp"

namespace cracklab {

struct MeshConfig {
  double target_h = 0.05;
  double tip_grading_beta = 0.5;   // element size ~ target_h * (dist/R)^beta
  double min_h = 0.0;              // 0 -> target_h / 64
  BallSpec domain{{0, 0}, 1.0};
  double boundary_h = 0.0;         // outer circle chord length; 0 -> target_h

  double effective_min_h() const { return min_h > 0 ? min_h : target_h / 64.0; }
  // boundary chords slightly finer than the interior: the inscribed-polygon
  // area deficit (chord/R)^2/6 stays below 1e-3 relative at target_h = 0.1 R
  double effective_boundary_h() const { return boundary_h > 0 ? boundary_h : 0.7 * target_h; }

  void check() const {
    if (!(target_h > 0)) throw Error("MeshConfig: target_h must be positive");
    if (!(effective_min_h() <= target_h)) throw Error("MeshConfig: min_h must be <= target_h");
    if (tip_grading_beta < 0 || tip_grading_beta > 1)
      throw Error("MeshConfig: grading exponent must be in [0,1]");
  }
};

struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;     // positively oriented
  std::vector<int> outer_vertices;               // Dirichlet boundary
  std::vector<int> crack_left_vertices;
  std::vector<int> crack_right_vertices;
  int tip_vertex = -1;
  std::vector<std::pair<int, int>> slit_pairs;   // (left id, right id)
  std::vector<std::array<int, 2>> crack_edges;   // per slit face, oriented per triangle
  std::vector<std::array<int, 2>> boundary_edges;  // oriented per triangle (CCW hull)
  double boundary_polygon_area = 0.0;
  double tip_element_size = 0.0;                 // shortest edge at the tip
  BallSpec domain{{0, 0}, 1.0};

  double triangle_area(std::size_t t) const {
    const auto& tr = triangles[t];
    const Vec2 a = vertices[tr[0]], b = vertices[tr[1]], c = vertices[tr[2]];
    return 0.5 * (b - a).cross(c - a);
  }
  Vec2 centroid(std::size_t t) const {
    const auto& tr = triangles[t];
    return (vertices[tr[0]] + vertices[tr[1]] + vertices[tr[2]]) / 3.0;
  }
  double total_area() const {
    double s = 0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
    return s;
  }
};

namespace detail {

inline long double orient2d(Vec2 a, Vec2 b, Vec2 c) {
  const long double acx = static_cast<long double>(a.x) - c.x;
  const long double acy = static_cast<long double>(a.y) - c.y;
  const long double bcx = static_cast<long double>(b.x) - c.x;
  const long double bcy = static_cast<long double>(b.y) - c.y;
  return acx * bcy - acy * bcx;
}

inline long double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 p) {
  const long double adx = static_cast<long double>(a.x) - p.x;
  const long double ady = static_cast<long double>(a.y) - p.y;
  const long double bdx = static_cast<long double>(b.x) - p.x;
  const long double bdy = static_cast<long double>(b.y) - p.y;
  const long double cdx = static_cast<long double>(c.x) - p.x;
  const long double cdy = static_cast<long double>(c.y) - p.y;
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

inline Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * ab.cross(ac);
  if (std::abs(d) < 1e-300) return (a + b + c) / 3.0;
  const double ab2 = ab.norm2(), ac2 = ac.norm2();
  const double ux = (ac.y * ab2 - ab.y * ac2) / d;
  const double uy = (ab.x * ac2 - ac.x * ab2) / d;
  return a + Vec2{ux, uy};
}

struct BuilderTri {
  std::array<int, 3> v{-1, -1, -1};
  std::array<int, 3> nb{-1, -1, -1};          // neighbor across edge opposite v[i]
  std::array<std::uint8_t, 3> kind{0, 0, 0};  // 0 free, 1 outer boundary, 2 crack
  bool alive = true;
  bool inside = false;
};

// Incremental constrained Delaunay triangulation. Slot indices of rewritten
// triangles are recorded in `touched` so refinement can re-examine them.
class DelaunayBuilder {
 public:
  std::vector<Vec2> pts;
  std::vector<BuilderTri> tris;
  std::vector<int> touched;
  int last_tri = 0;
  double scale = 1.0;

  explicit DelaunayBuilder(const BallSpec& dom) {
    scale = dom.radius;
    const double s = 16.0 * dom.radius;
    const Vec2 o = dom.center;
    pts = {o + Vec2{-s, -s}, o + Vec2{s, -s}, o + Vec2{0, s}};
    tris.push_back({{0, 1, 2}, {-1, -1, -1}, {0, 0, 0}, true, false});
  }

  int side_of(const BuilderTri& t, int va, int vb) const {
    for (int i = 0; i < 3; ++i)
      if ((t.v[(i + 1) % 3] == va && t.v[(i + 2) % 3] == vb) ||
          (t.v[(i + 1) % 3] == vb && t.v[(i + 2) % 3] == va))
        return i;
    return -1;
  }

  void hook(int t, int va, int vb, int n) {
    if (t < 0) return;
    const int s = side_of(tris[t], va, vb);
    if (s >= 0) tris[t].nb[s] = n;
  }
  int find_nb(int t, int va, int vb) const {
    const int s = side_of(tris[t], va, vb);
    return s >= 0 ? tris[t].nb[s] : -1;
  }
  std::uint8_t kind_of(int t, int va, int vb) const {
    const int s = side_of(tris[t], va, vb);
    return s >= 0 ? tris[t].kind[s] : 0;
  }
  void set_kind(int t, int va, int vb, std::uint8_t k) {
    if (t < 0) return;
    const int s = side_of(tris[t], va, vb);
    if (s >= 0) tris[t].kind[s] = k;
  }
  void mark(int t) { touched.push_back(t); }

  // Walk toward p. Returns the containing triangle and the side index if p
  // lies (nearly) on that edge, else -1.
  std::pair<int, int> locate(Vec2 p) const {
    int t = last_tri;
    if (t < 0 || t >= static_cast<int>(tris.size()) || !tris[t].alive) t = first_alive();
    int steps = 0;
    const int max_steps = static_cast<int>(tris.size()) + 64;
    while (true) {
      if (++steps > max_steps) return locate_exhaustive(p);
      const BuilderTri& tri = tris[t];
      long double o[3];
      int move = -1;
      long double most_neg = 0;
      for (int s = 0; s < 3; ++s) {
        o[s] = orient2d(pts[tri.v[(s + 1) % 3]], pts[tri.v[(s + 2) % 3]], p);
        if (o[s] < most_neg) {
          most_neg = o[s];
          move = s;
        }
      }
      if (move >= 0) {
        const int next = tri.nb[move];
        if (next < 0) return {t, -1};
        t = next;
        continue;
      }
      return {t, on_edge_side(t, p, o)};
    }
  }

  int first_alive() const {
    for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i)
      if (tris[i].alive) return i;
    throw Error("mesh: no triangles");
  }

  int on_edge_side(int t, Vec2 p, const long double* o) const {
    int best = -1;
    long double best_rel = 1e-12L;
    for (int s = 0; s < 3; ++s) {
      const Vec2 a = pts[tris[t].v[(s + 1) % 3]], b = pts[tris[t].v[(s + 2) % 3]];
      const long double span = static_cast<long double>(dist(a, b)) *
                               (dist(a, p) + dist(b, p) + 1e-300);
      const long double rel = o[s] / span;
      if (rel <= best_rel) {
        best_rel = rel;
        best = s;
      }
    }
    return best;
  }

  std::pair<int, int> locate_exhaustive(Vec2 p) const {
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
      if (!tris[i].alive) continue;
      long double o[3];
      bool in = true;
      for (int s = 0; s < 3 && in; ++s) {
        o[s] = orient2d(pts[tris[i].v[(s + 1) % 3]], pts[tris[i].v[(s + 2) % 3]], p);
        if (o[s] < 0) in = false;
      }
      if (in) return {i, on_edge_side(i, p, o)};
    }
    throw Error("mesh: point location failed");
  }

  void legalize(int t, int side) {
    std::vector<std::pair<int, int>> stack{{t, side}};
    int guard = 0;
    while (!stack.empty()) {
      if (++guard > 1000000) throw Error("mesh: flip cascade did not terminate");
      auto [ti, si] = stack.back();
      stack.pop_back();
      if (ti < 0 || !tris[ti].alive) continue;
      if (si < 0 || si > 2) continue;
      BuilderTri& tr = tris[ti];
      const int n = tr.nb[si];
      if (n < 0 || tr.kind[si] != 0) continue;
      const int a = tr.v[(si + 1) % 3], b = tr.v[(si + 2) % 3], c = tr.v[si];
      const int ns = side_of(tris[n], a, b);
      if (ns < 0) continue;
      const int d = tris[n].v[ns];
      if (incircle(pts[a], pts[b], pts[c], pts[d]) <= 0) continue;
      flip(ti, si);
      stack.push_back({ti, side_of(tris[ti], a, d)});
      stack.push_back({n, side_of(tris[n], d, b)});
    }
  }

  // Replace diagonal (a,b) of the quad around edge `s` of `t` by (c,d).
  // Caller guarantees flippability (incircle or explicit convexity).
  void flip(int t, int s) {
    const int n = tris[t].nb[s];
    const int a = tris[t].v[(s + 1) % 3], b = tris[t].v[(s + 2) % 3], c = tris[t].v[s];
    const int ns = side_of(tris[n], a, b);
    const int d = tris[n].v[ns];
    const int n_bd = find_nb(n, d, b), n_da = find_nb(n, a, d);
    const int t_bc = find_nb(t, b, c), t_ca = find_nb(t, c, a);
    const auto kn_bd = kind_of(n, d, b), kn_da = kind_of(n, a, d);
    const auto kt_bc = kind_of(t, b, c), kt_ca = kind_of(t, c, a);
    const bool ins_t = tris[t].inside, ins_n = tris[n].inside;
    tris[t] = BuilderTri{{c, a, d}, {-1, -1, -1}, {0, 0, 0}, true, ins_t};
    tris[n] = BuilderTri{{c, d, b}, {-1, -1, -1}, {0, 0, 0}, true, ins_n};
    set_kind(t, a, d, kn_da);
    set_kind(t, c, a, kt_ca);
    set_kind(n, d, b, kn_bd);
    set_kind(n, b, c, kt_bc);
    tris[t].nb[side_of(tris[t], a, d)] = n_da;
    tris[t].nb[side_of(tris[t], c, a)] = t_ca;
    tris[t].nb[side_of(tris[t], c, d)] = n;
    tris[n].nb[side_of(tris[n], d, b)] = n_bd;
    tris[n].nb[side_of(tris[n], b, c)] = t_bc;
    tris[n].nb[side_of(tris[n], c, d)] = t;
    hook(n_da, a, d, t);
    hook(t_ca, c, a, t);
    hook(n_bd, d, b, n);
    hook(t_bc, b, c, n);
    mark(t);
    mark(n);
  }

  int insert_point(Vec2 p, double merge_tol = 0.0) {
    auto [t, on_side] = locate(p);
    for (int i = 0; i < 3; ++i)
      if (dist(pts[tris[t].v[i]], p) <= std::max(merge_tol, 1e-14 * scale)) return tris[t].v[i];
    const int vp = static_cast<int>(pts.size());
    pts.push_back(p);
    if (on_side >= 0 && tris[t].nb[on_side] >= 0)
      split_edge_at(t, on_side, vp);
    else if (on_side >= 0)
      split_hull_edge_at(t, on_side, vp);
    else
      split_interior(t, vp);
    return vp;
  }

  // Split a constrained edge at its midpoint without going through point
  // location (the midpoint is on the edge by construction).
  int split_segment_midpoint(int t, int side) {
    const int vp = static_cast<int>(pts.size());
    const Vec2 a = pts[tris[t].v[(side + 1) % 3]], b = pts[tris[t].v[(side + 2) % 3]];
    pts.push_back((a + b) / 2.0);
    if (tris[t].nb[side] >= 0)
      split_edge_at(t, side, vp);
    else
      split_hull_edge_at(t, side, vp);
    return vp;
  }

  void split_interior(int t, int vp) {
    const auto tv = tris[t].v;
    const auto tn = tris[t].nb;
    const auto tk = tris[t].kind;
    const bool ins = tris[t].inside;
    const int t1 = static_cast<int>(tris.size());
    const int t2 = t1 + 1;
    tris[t] = BuilderTri{{tv[0], tv[1], vp}, {-1, -1, -1}, {0, 0, 0}, true, ins};
    tris.push_back(BuilderTri{{tv[1], tv[2], vp}, {-1, -1, -1}, {0, 0, 0}, true, ins});
    tris.push_back(BuilderTri{{tv[2], tv[0], vp}, {-1, -1, -1}, {0, 0, 0}, true, ins});
    set_kind(t, tv[0], tv[1], tk[2]);
    set_kind(t1, tv[1], tv[2], tk[0]);
    set_kind(t2, tv[2], tv[0], tk[1]);
    tris[t].nb[side_of(tris[t], tv[0], tv[1])] = tn[2];
    tris[t].nb[side_of(tris[t], tv[1], vp)] = t1;
    tris[t].nb[side_of(tris[t], vp, tv[0])] = t2;
    tris[t1].nb[side_of(tris[t1], tv[1], tv[2])] = tn[0];
    tris[t1].nb[side_of(tris[t1], tv[2], vp)] = t2;
    tris[t1].nb[side_of(tris[t1], vp, tv[1])] = t;
    tris[t2].nb[side_of(tris[t2], tv[2], tv[0])] = tn[1];
    tris[t2].nb[side_of(tris[t2], tv[0], vp)] = t;
    tris[t2].nb[side_of(tris[t2], vp, tv[2])] = t1;
    hook(tn[2], tv[0], tv[1], t);
    hook(tn[0], tv[1], tv[2], t1);
    hook(tn[1], tv[2], tv[0], t2);
    mark(t);
    mark(t1);
    mark(t2);
    last_tri = t;
    legalize(t, side_of(tris[t], tv[0], tv[1]));
    legalize(t1, side_of(tris[t1], tv[1], tv[2]));
    legalize(t2, side_of(tris[t2], tv[2], tv[0]));
  }

  void split_edge_at(int t, int side, int vp) {
    const int n = tris[t].nb[side];
    const std::uint8_t k = tris[t].kind[side];
    const int c = tris[t].v[side];
    const int a = tris[t].v[(side + 1) % 3];
    const int b = tris[t].v[(side + 2) % 3];
    const int ns = side_of(tris[n], a, b);
    const int d = tris[n].v[ns];
    const bool ins_t = tris[t].inside, ins_n = tris[n].inside;
    const int t_bc = find_nb(t, b, c), t_ca = find_nb(t, c, a);
    const int n_ad = find_nb(n, a, d), n_db = find_nb(n, d, b);
    const auto k_bc = kind_of(t, b, c), k_ca = kind_of(t, c, a);
    const auto k_ad = kind_of(n, a, d), k_db = kind_of(n, d, b);
    const int t1 = static_cast<int>(tris.size());
    const int t2 = t1 + 1;
    tris[t] = BuilderTri{{a, vp, c}, {-1, -1, -1}, {0, 0, 0}, true, ins_t};
    tris[n] = BuilderTri{{a, d, vp}, {-1, -1, -1}, {0, 0, 0}, true, ins_n};
    tris.push_back(BuilderTri{{vp, b, c}, {-1, -1, -1}, {0, 0, 0}, true, ins_t});
    tris.push_back(BuilderTri{{d, b, vp}, {-1, -1, -1}, {0, 0, 0}, true, ins_n});
    set_kind(t, a, vp, k);
    set_kind(t1, vp, b, k);
    set_kind(n, a, vp, k);
    set_kind(t2, b, vp, k);
    set_kind(t, c, a, k_ca);
    set_kind(t1, b, c, k_bc);
    set_kind(n, a, d, k_ad);
    set_kind(t2, d, b, k_db);
    tris[t].nb[side_of(tris[t], a, vp)] = n;
    tris[t].nb[side_of(tris[t], vp, c)] = t1;
    tris[t].nb[side_of(tris[t], c, a)] = t_ca;
    tris[t1].nb[side_of(tris[t1], vp, b)] = t2;
    tris[t1].nb[side_of(tris[t1], b, c)] = t_bc;
    tris[t1].nb[side_of(tris[t1], c, vp)] = t;
    tris[n].nb[side_of(tris[n], a, d)] = n_ad;
    tris[n].nb[side_of(tris[n], d, vp)] = t2;
    tris[n].nb[side_of(tris[n], vp, a)] = t;
    tris[t2].nb[side_of(tris[t2], d, b)] = n_db;
    tris[t2].nb[side_of(tris[t2], b, vp)] = t1;
    tris[t2].nb[side_of(tris[t2], vp, d)] = n;
    hook(t_ca, c, a, t);
    hook(t_bc, b, c, t1);
    hook(n_ad, a, d, n);
    hook(n_db, d, b, t2);
    mark(t);
    mark(n);
    mark(t1);
    mark(t2);
    last_tri = t;
    legalize(t, side_of(tris[t], c, a));
    legalize(t1, side_of(tris[t1], b, c));
    legalize(n, side_of(tris[n], a, d));
    legalize(t2, side_of(tris[t2], d, b));
  }

  void split_hull_edge_at(int t, int side, int vp) {
    const std::uint8_t k = tris[t].kind[side];
    const int c = tris[t].v[side];
    const int a = tris[t].v[(side + 1) % 3];
    const int b = tris[t].v[(side + 2) % 3];
    const bool ins = tris[t].inside;
    const int t_bc = find_nb(t, b, c), t_ca = find_nb(t, c, a);
    const auto k_bc = kind_of(t, b, c), k_ca = kind_of(t, c, a);
    const int t1 = static_cast<int>(tris.size());
    tris[t] = BuilderTri{{a, vp, c}, {-1, -1, -1}, {0, 0, 0}, true, ins};
    tris.push_back(BuilderTri{{vp, b, c}, {-1, -1, -1}, {0, 0, 0}, true, ins});
    set_kind(t, a, vp, k);
    set_kind(t1, vp, b, k);
    set_kind(t, c, a, k_ca);
    set_kind(t1, b, c, k_bc);
    tris[t].nb[side_of(tris[t], a, vp)] = -1;
    tris[t].nb[side_of(tris[t], vp, c)] = t1;
    tris[t].nb[side_of(tris[t], c, a)] = t_ca;
    tris[t1].nb[side_of(tris[t1], vp, b)] = -1;
    tris[t1].nb[side_of(tris[t1], b, c)] = t_bc;
    tris[t1].nb[side_of(tris[t1], c, vp)] = t;
    hook(t_ca, c, a, t);
    hook(t_bc, b, c, t1);
    mark(t);
    mark(t1);
    last_tri = t;
    legalize(t, side_of(tris[t], c, a));
    legalize(t1, side_of(tris[t1], b, c));
  }

  bool edge_exists(int va, int vb) const {
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      if (side_of(tris[t], va, vb) >= 0) return true;
    }
    return false;
  }

  void insert_constraint(int va, int vb, std::uint8_t kind) {
    if (va == vb) return;
    int guard = 0;
    while (!edge_exists(va, vb)) {
      if (++guard > 100000) throw Error("mesh: constraint recovery did not terminate");
      const Vec2 A = pts[va], B = pts[vb];
      int cross_t = -1, cross_s = -1;
      for (int t = 0; t < static_cast<int>(tris.size()) && cross_t < 0; ++t) {
        if (!tris[t].alive) continue;
        int ia = -1;
        for (int i = 0; i < 3; ++i)
          if (tris[t].v[i] == va) ia = i;
        if (ia < 0) continue;
        const int p = tris[t].v[(ia + 1) % 3], q = tris[t].v[(ia + 2) % 3];
        const long double o1 = orient2d(A, B, pts[p]);
        const long double o2 = orient2d(A, B, pts[q]);
        if (o1 > 0 && o2 < 0 && orient2d(pts[p], pts[q], A) * orient2d(pts[p], pts[q], B) < 0) {
          cross_t = t;
          cross_s = ia;
        }
      }
      if (cross_t < 0) throw Error("mesh: constraint path not found");
      int t = cross_t, s = cross_s;
      int hops = 0;
      while (true) {
        if (++hops > 100000) throw Error("mesh: constraint corridor too long");
        const int p = tris[t].v[(s + 1) % 3], q = tris[t].v[(s + 2) % 3];
        const int n = tris[t].nb[s];
        if (n < 0) throw Error("mesh: constraint crosses the hull");
        if (tris[t].kind[s] != 0)
          throw Error("mesh: crossing constraints (crack self-intersection?)");
        const int ns = side_of(tris[n], p, q);
        const int d = tris[n].v[ns];
        const int c = tris[t].v[s];
        const bool convex =
            orient2d(pts[c], pts[d], pts[p]) < 0 && orient2d(pts[c], pts[d], pts[q]) > 0;
        if (convex) {
          flip(t, s);
          break;
        }
        const long double od = orient2d(A, B, pts[d]);
        t = n;
        s = od > 0 ? side_of(tris[n], d, q) : side_of(tris[n], p, d);
        if (s < 0) throw Error("mesh: corridor bookkeeping failed");
      }
    }
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      const int s = side_of(tris[t], va, vb);
      if (s >= 0) tris[t].kind[s] = kind;
    }
  }

  void classify_inside() {
    for (auto& t : tris)
      if (t.alive) t.inside = true;
    std::deque<int> q;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      for (int i = 0; i < 3; ++i)
        if (tris[t].v[i] < 3) {
          if (tris[t].inside) {
            tris[t].inside = false;
            q.push_back(t);
          }
          break;
        }
    }
    while (!q.empty()) {
      const int t = q.front();
      q.pop_front();
      for (int s = 0; s < 3; ++s) {
        const int n = tris[t].nb[s];
        if (n < 0 || tris[t].kind[s] == 1) continue;
        if (tris[n].alive && tris[n].inside) {
          tris[n].inside = false;
          q.push_back(n);
        }
      }
    }
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// mesh_disk_with_crack
// ---------------------------------------------------------------------------

inline Triangulation mesh_disk_with_crack(const CrackSet& crack, const MeshConfig& cfg) {
  cfg.check();
  if (!crack.empty()) validate_crack(crack);
  const Vec2 o = cfg.domain.center;
  const double R = cfg.domain.radius;
  const double min_h = cfg.effective_min_h();
  const double bnd_h = cfg.effective_boundary_h();
  const double beta = cfg.tip_grading_beta;
  const bool has_tip = crack.has_tip;
  const Vec2 tip = has_tip ? crack.tip : o;

  auto size_field = [&](Vec2 p) {
    if (!has_tip) return cfg.target_h;
    const double d = dist(p, tip);
    const double graded = cfg.target_h * std::pow(std::min(1.0, d / R), beta);
    return std::clamp(graded, min_h, cfg.target_h);
  };

  // -- input checks -----------------------------------------------------
  {
    std::vector<Vec2> cv;
    for (const auto& pl : crack.polylines)
      for (const Vec2& v : pl) cv.push_back(v);
    for (std::size_t i = 0; i < cv.size(); ++i)
      for (std::size_t j = i + 1; j < cv.size(); ++j) {
        const double d = dist(cv[i], cv[j]);
        if (d > kNodeMergeTol && d < min_h / 4.0)
          throw Error("mesh: crack vertex spacing below resolvable scale (min_h/4)");
      }
  }
  const double bnd_snap = 1e-9 * R;
  std::vector<Vec2> boundary_anchors;
  for (const auto& pl : crack.polylines) {
    for (std::size_t i = 0; i < pl.size(); ++i) {
      const double d = dist(pl[i], o);
      if (d > R + bnd_snap) throw Error("mesh: crack vertex outside the domain disk");
      if (d >= R - bnd_snap) {
        if (i != 0 && i + 1 != pl.size())
          throw Error("mesh: crack touches the outer boundary at a non-endpoint vertex");
        boundary_anchors.push_back(pl[i]);
      }
    }
  }

  // -- outer polygon ----------------------------------------------------
  std::vector<Vec2> polygon;
  {
    std::vector<std::pair<double, Vec2>> anchors;
    for (Vec2 a : boundary_anchors) anchors.push_back({std::atan2(a.y - o.y, a.x - o.x), a});
    std::sort(anchors.begin(), anchors.end(),
              [](const auto& u, const auto& v) { return u.first < v.first; });
    anchors.erase(std::unique(anchors.begin(), anchors.end(),
                              [](const auto& u, const auto& v) {
                                return std::abs(u.first - v.first) < 1e-12;
                              }),
                  anchors.end());
    if (anchors.empty()) {
      const int n = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * R / bnd_h)));
      for (int k = 0; k < n; ++k) {
        const double ang = -kPi + 2.0 * kPi * k / n;
        polygon.push_back(o + Vec2{R * std::cos(ang), R * std::sin(ang)});
      }
    } else {
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double a0 = anchors[i].first;
        const double a1 =
            (i + 1 < anchors.size()) ? anchors[i + 1].first : anchors[0].first + 2.0 * kPi;
        polygon.push_back(anchors[i].second);
        const double gap = a1 - a0;
        const int n = std::max(1, static_cast<int>(std::ceil(gap * R / bnd_h)));
        for (int k = 1; k < n; ++k) {
          const double ang = a0 + gap * k / n;
          polygon.push_back(o + Vec2{R * std::cos(ang), R * std::sin(ang)});
        }
      }
    }
  }

  // -- crack subdivision respecting the size field -----------------------
  std::vector<std::vector<Vec2>> chains;
  for (const auto& pl : crack.polylines) {
    std::vector<Vec2> chain{pl[0]};
    for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
      std::vector<Vec2> stack{pl[i + 1]};
      Vec2 cur = pl[i];
      while (!stack.empty()) {
        const Vec2 nxt = stack.back();
        const Vec2 mid = (cur + nxt) / 2.0;
        const double sz = std::min({size_field(cur), size_field(mid), size_field(nxt)});
        if (dist(cur, nxt) > sz && dist(cur, nxt) > min_h) {
          stack.push_back(mid);
        } else {
          chain.push_back(nxt);
          cur = nxt;
          stack.pop_back();
        }
      }
    }
    chains.push_back(std::move(chain));
  }

  // -- initial CDT --------------------------------------------------------
  detail::DelaunayBuilder builder(cfg.domain);
  std::vector<int> poly_ids;
  poly_ids.reserve(polygon.size());
  for (Vec2 p : polygon) poly_ids.push_back(builder.insert_point(p));
  std::vector<std::vector<int>> chain_ids(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (Vec2 p : chains[c]) chain_ids[c].push_back(builder.insert_point(p, kNodeMergeTol));

  for (std::size_t i = 0; i < poly_ids.size(); ++i)
    builder.insert_constraint(poly_ids[i], poly_ids[(i + 1) % poly_ids.size()], 1);
  for (const auto& ids : chain_ids)
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
      if (ids[i] != ids[i + 1]) builder.insert_constraint(ids[i], ids[i + 1], 2);

  builder.classify_inside();
  builder.touched.clear();

  // -- refinement ----------------------------------------------------------
  const double kRadiusEdgeBound = 1.4142135623730951;  // min angle ~20.7 deg
  const double seg_floor = 0.4 * min_h;
  const std::size_t max_vertices = 4u << 20;

  auto encroached = [&](int t, int s) -> bool {
    const int va = builder.tris[t].v[(s + 1) % 3], vb = builder.tris[t].v[(s + 2) % 3];
    const Vec2 a = builder.pts[va], b = builder.pts[vb];
    const Vec2 c = builder.pts[builder.tris[t].v[s]];
    if ((a - c).dot(b - c) < -1e-16 * (a - b).norm2()) return true;
    const int n = builder.tris[t].nb[s];
    if (n >= 0) {
      const int ns = builder.side_of(builder.tris[n], va, vb);
      if (ns >= 0) {
        const Vec2 d = builder.pts[builder.tris[n].v[ns]];
        if ((a - d).dot(b - d) < -1e-16 * (a - b).norm2()) return true;
      }
    }
    return false;
  };

  std::deque<int> work;
  for (int t = 0; t < static_cast<int>(builder.tris.size()); ++t)
    if (builder.tris[t].alive && builder.tris[t].inside) work.push_back(t);

  auto drain_touched = [&] {
    for (int id : builder.touched) work.push_back(id);
    builder.touched.clear();
  };

  long iter_guard = 0;
  while (!work.empty()) {
    if (++iter_guard > 80'000'000L) throw Error("mesh: refinement did not terminate");
    const int t = work.front();
    work.pop_front();
    if (t < 0 || t >= static_cast<int>(builder.tris.size())) continue;
    if (!builder.tris[t].alive || !builder.tris[t].inside) continue;

    // encroached constrained edges split first
    bool split = false;
    for (int s = 0; s < 3 && !split; ++s) {
      if (builder.tris[t].kind[s] == 0) continue;
      const int va = builder.tris[t].v[(s + 1) % 3], vb = builder.tris[t].v[(s + 2) % 3];
      const double len = dist(builder.pts[va], builder.pts[vb]);
      if (len <= seg_floor) continue;
      if (!encroached(t, s)) continue;
      if (builder.pts.size() >= max_vertices)
        throw Error("mesh: triangulation failure (vertex budget)");
      builder.split_segment_midpoint(t, s);
      drain_touched();
      split = true;
    }
    if (split) continue;

    const Vec2 a = builder.pts[builder.tris[t].v[0]];
    const Vec2 b = builder.pts[builder.tris[t].v[1]];
    const Vec2 c = builder.pts[builder.tris[t].v[2]];
    const double lab = dist(a, b), lbc = dist(b, c), lca = dist(c, a);
    const double shortest = std::min({lab, lbc, lca});
    const double longest = std::max({lab, lbc, lca});
    const Vec2 cent = (a + b + c) / 3.0;
    const Vec2 cc = detail::circumcenter(a, b, c);
    const double circ_r = dist(cc, a);
    const bool too_big = longest > size_field(cent);
    const bool bad_shape = circ_r / shortest > kRadiusEdgeBound && shortest > 0.9 * min_h;
    if (!too_big && !bad_shape) continue;
    if (circ_r < 0.45 * min_h) continue;
    if (builder.pts.size() >= max_vertices)
      throw Error("mesh: triangulation failure (vertex budget)");

    // walk toward the circumcenter; a constrained edge in the way gets split
    int cur = t;
    Vec2 from = cent;
    int hops = 0;
    while (true) {
      if (++hops > 100000) break;
      const auto& tr = builder.tris[cur];
      int exit_side = -1;
      for (int s = 0; s < 3; ++s) {
        const Vec2 p = builder.pts[tr.v[(s + 1) % 3]], q = builder.pts[tr.v[(s + 2) % 3]];
        if (detail::orient2d(p, q, cc) < 0 &&
            detail::orient2d(from, cc, p) * detail::orient2d(from, cc, q) < 0) {
          exit_side = s;
          break;
        }
      }
      if (exit_side < 0) {
        builder.insert_point(cc);
        drain_touched();
        break;
      }
      if (tr.kind[exit_side] != 0) {
        const int va = tr.v[(exit_side + 1) % 3], vb = tr.v[(exit_side + 2) % 3];
        if (dist(builder.pts[va], builder.pts[vb]) > seg_floor) {
          builder.split_segment_midpoint(cur, exit_side);
          drain_touched();
        }
        break;
      }
      const int n = tr.nb[exit_side];
      if (n < 0) break;
      cur = n;
    }
  }

  // -- extract the inside mesh ----------------------------------------------
  Triangulation out;
  out.domain = cfg.domain;
  std::vector<int> remap(builder.pts.size(), -1);
  for (int t = 0; t < static_cast<int>(builder.tris.size()); ++t) {
    if (!builder.tris[t].alive || !builder.tris[t].inside) continue;
    std::array<int, 3> tv{};
    for (int i = 0; i < 3; ++i) {
      const int v = builder.tris[t].v[i];
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(builder.pts[v]);
      }
      tv[i] = remap[v];
    }
    const Vec2 pa = out.vertices[tv[0]], pb = out.vertices[tv[1]], pc = out.vertices[tv[2]];
    if ((pb - pa).cross(pc - pa) < 0) std::swap(tv[1], tv[2]);
    out.triangles.push_back(tv);
  }
  if (out.triangles.empty()) throw Error("mesh: empty triangulation");

  std::map<std::pair<int, int>, std::uint8_t> edge_kind;
  for (int t = 0; t < static_cast<int>(builder.tris.size()); ++t) {
    if (!builder.tris[t].alive || !builder.tris[t].inside) continue;
    for (int s = 0; s < 3; ++s) {
      if (builder.tris[t].kind[s] == 0) continue;
      int va = remap[builder.tris[t].v[(s + 1) % 3]];
      int vb = remap[builder.tris[t].v[(s + 2) % 3]];
      if (va > vb) std::swap(va, vb);
      auto& slot = edge_kind[{va, vb}];
      slot = std::max(slot, builder.tris[t].kind[s]);
    }
  }

  // -- slit duplication --------------------------------------------------
  const int nv_before = static_cast<int>(out.vertices.size());
  auto edge_is = [&](int a, int b, std::uint8_t k) {
    if (a > b) std::swap(a, b);
    const auto it = edge_kind.find({a, b});
    return it != edge_kind.end() && it->second == k;
  };

  std::set<int> crack_vertex_set;
  for (const auto& [e, k] : edge_kind)
    if (k == 2) {
      crack_vertex_set.insert(e.first);
      crack_vertex_set.insert(e.second);
    }

  int tip_before = -1;
  if (has_tip) {
    for (int v = 0; v < nv_before; ++v)
      if (dist(out.vertices[v], crack.tip) <= kNodeMergeTol) tip_before = v;
    if (tip_before < 0) throw Error("mesh: tip vertex missing from the triangulation");
  }

  // incidence restricted to crack vertices (fans are walked there only)
  std::vector<std::vector<int>> vertex_tris_local;
  std::map<int, int> crack_local;
  {
    int idx = 0;
    for (int v : crack_vertex_set) crack_local[v] = idx++;
    vertex_tris_local.resize(crack_vertex_set.size());
    for (int t = 0; t < static_cast<int>(out.triangles.size()); ++t)
      for (int i = 0; i < 3; ++i) {
        const auto it = crack_local.find(out.triangles[t][i]);
        if (it != crack_local.end()) vertex_tris_local[it->second].push_back(t);
      }
  }
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (int t = 0; t < static_cast<int>(out.triangles.size()); ++t)
    for (int i = 0; i < 3; ++i) {
      int va = out.triangles[t][i], vb = out.triangles[t][(i + 1) % 3];
      if (!crack_local.count(va) && !crack_local.count(vb)) continue;
      if (va > vb) std::swap(va, vb);
      edge_tris[{va, vb}].push_back(t);
    }
  auto tri_across = [&](int t, int a, int b) -> int {
    if (a > b) std::swap(a, b);
    const auto it = edge_tris.find({a, b});
    if (it == edge_tris.end()) return -1;
    for (int u : it->second)
      if (u != t) return u;
    return -1;
  };

  // geodesic distance to the tip along crack edges, for left/right naming
  std::vector<double> crack_dist(nv_before, std::numeric_limits<double>::infinity());
  std::map<int, std::vector<int>> crack_adj;
  for (const auto& [e, k] : edge_kind)
    if (k == 2) {
      crack_adj[e.first].push_back(e.second);
      crack_adj[e.second].push_back(e.first);
    }
  if (tip_before >= 0) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    crack_dist[tip_before] = 0;
    pq.push({0, tip_before});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > crack_dist[u]) continue;
      for (int w : crack_adj[u]) {
        const double nd = d + dist(out.vertices[u], out.vertices[w]);
        if (nd < crack_dist[w]) {
          crack_dist[w] = nd;
          pq.push({nd, w});
        }
      }
    }
  }

  std::vector<char> is_left_marker(out.vertices.size(), 0);
  std::vector<char> is_right_marker(out.vertices.size(), 0);
  std::vector<int> base_of;  // copy id -> original id (parallel to slit_pairs)

  // two phases: plan every fan on the pristine mesh, then retarget, so one
  // vertex's duplication cannot corrupt a neighbour's fan walk
  struct SlitPlan {
    int v;
    std::vector<std::vector<int>> sectors;  // sectors[0] keeps v
  };
  std::vector<SlitPlan> plans;

  for (const auto& [v, vloc] : crack_local) {
    const auto& inc = vertex_tris_local[vloc];
    auto ccw_pair = [&](int t) {
      const auto& tr = out.triangles[t];
      int iv = 0;
      for (int i = 0; i < 3; ++i)
        if (tr[i] == v) iv = i;
      return std::pair<int, int>{tr[(iv + 1) % 3], tr[(iv + 2) % 3]};
    };
    // start at the clockwise-most triangle when the fan is open
    int start = inc.front();
    for (int t : inc) {
      const auto [a, b] = ccw_pair(t);
      if (tri_across(t, v, a) < 0) {
        start = t;
        break;
      }
    }
    std::vector<int> fan;
    int cur = start;
    while (true) {
      fan.push_back(cur);
      const auto [a, b] = ccw_pair(cur);
      const int nxt = tri_across(cur, v, b);
      if (nxt < 0 || nxt == start) break;
      bool dup = false;
      for (int f : fan)
        if (f == nxt) dup = true;
      if (dup) break;
      cur = nxt;
    }
    if (fan.size() != inc.size())
      throw Error("mesh: vertex fan is not a single cycle (non-manifold vertex)");
    const bool open_fan = [&] {
      const auto [a, b] = ccw_pair(fan.back());
      return tri_across(fan.back(), v, b) < 0;
    }();

    std::vector<std::vector<int>> sectors;
    std::vector<int> sector{fan[0]};
    for (std::size_t i = 0; i + 1 < fan.size(); ++i) {
      const auto [a, b] = ccw_pair(fan[i]);
      if (edge_is(v, b, 2)) {
        sectors.push_back(sector);
        sector.clear();
      }
      sector.push_back(fan[i + 1]);
    }
    if (open_fan) {
      sectors.push_back(sector);
    } else {
      const auto [a, b] = ccw_pair(fan.back());
      if (edge_is(v, b, 2)) {
        sectors.push_back(sector);
      } else if (!sectors.empty()) {
        sectors.front().insert(sectors.front().end(), sector.begin(), sector.end());
      } else {
        sectors.push_back(sector);
      }
    }
    sectors.erase(std::remove_if(sectors.begin(), sectors.end(),
                                 [](const std::vector<int>& s) { return s.empty(); }),
                  sectors.end());
    if (sectors.size() <= 1) continue;  // free crack endpoint: no cut here

    Vec2 toward_tip{-1, 0};
    {
      double best = std::numeric_limits<double>::infinity();
      const auto it = crack_adj.find(v);
      if (it != crack_adj.end())
        for (int w : it->second)
          if (crack_dist[w] < best) {
            best = crack_dist[w];
            toward_tip = (out.vertices[w] - out.vertices[v]).normalized();
          }
    }
    const Vec2 left_dir = toward_tip.rot90();
    std::size_t left_sector = 0;
    double best_side = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sectors.size(); ++i) {
      double sdot = 0;
      for (int t : sectors[i]) sdot += (out.centroid(t) - out.vertices[v]).dot(left_dir);
      if (sdot > best_side) {
        best_side = sdot;
        left_sector = i;
      }
    }
    if (left_sector != 0) std::swap(sectors[0], sectors[left_sector]);
    plans.push_back({v, std::move(sectors)});
  }

  for (const auto& plan : plans) {
    const int v = plan.v;
    is_left_marker[v] = 1;
    for (std::size_t si = 1; si < plan.sectors.size(); ++si) {
      const int copy = static_cast<int>(out.vertices.size());
      out.vertices.push_back(out.vertices[v]);
      is_left_marker.push_back(0);
      is_right_marker.push_back(1);
      out.slit_pairs.push_back({v, copy});
      base_of.push_back(v);
      for (int t : plan.sectors[si])
        for (int i = 0; i < 3; ++i)
          if (out.triangles[t][i] == v) out.triangles[t][i] = copy;
    }
  }

  auto base_id = [&](int v) { return v < nv_before ? v : base_of[v - nv_before]; };

  // -- final oriented edge lists and area -------------------------------
  {
    std::vector<std::uint64_t> keys;
    keys.reserve(out.triangles.size() * 3);
    auto key_of = [](int a, int b) {
      if (a > b) std::swap(a, b);
      return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (const auto& tr : out.triangles)
      for (int i = 0; i < 3; ++i) keys.push_back(key_of(tr[i], tr[(i + 1) % 3]));
    std::sort(keys.begin(), keys.end());
    auto count_of = [&](std::uint64_t k) {
      const auto lo = std::lower_bound(keys.begin(), keys.end(), k);
      const auto hi = std::upper_bound(lo, keys.end(), k);
      return static_cast<int>(hi - lo);
    };
    for (const auto& tr : out.triangles)
      for (int i = 0; i < 3; ++i) {
        const int a = tr[i], b = tr[(i + 1) % 3];
        if (count_of(key_of(a, b)) != 1) continue;
        const int ba = base_id(a), bb = base_id(b);
        if (edge_is(ba, bb, 1))
          out.boundary_edges.push_back({a, b});
        else if (edge_is(ba, bb, 2))
          out.crack_edges.push_back({a, b});
        else
          out.boundary_edges.push_back({a, b});  // dented boundary after midpoint splits
      }
  }
  {
    // enclosed area from the oriented rim; the two slit faces cancel
    double twice = 0;
    for (const auto& e : out.boundary_edges) twice += out.vertices[e[0]].cross(out.vertices[e[1]]);
    for (const auto& e : out.crack_edges) twice += out.vertices[e[0]].cross(out.vertices[e[1]]);
    out.boundary_polygon_area = 0.5 * std::abs(twice);
  }

  std::set<int> outer_set;
  for (const auto& e : out.boundary_edges) {
    outer_set.insert(e[0]);
    outer_set.insert(e[1]);
  }
  out.outer_vertices.assign(outer_set.begin(), outer_set.end());
  for (int v = 0; v < static_cast<int>(out.vertices.size()); ++v) {
    if (is_left_marker[v]) out.crack_left_vertices.push_back(v);
    if (is_right_marker[v]) out.crack_right_vertices.push_back(v);
  }
  out.tip_vertex = tip_before;

  if (out.tip_vertex >= 0) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& tr : out.triangles)
      for (int i = 0; i < 3; ++i) {
        if (base_id(tr[i]) != out.tip_vertex) continue;
        for (int j = 0; j < 3; ++j)
          if (j != i) m = std::min(m, dist(out.vertices[tr[i]], out.vertices[tr[j]]));
      }
    out.tip_element_size = m;
  } else {
    out.tip_element_size = min_h;
  }
  return out;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct MeshReport {
  bool pass = true;
  std::vector<std::string> failures;
  double area_vs_polygon_rel = 0.0;
  double area_vs_disk_rel = 0.0;
  double min_angle_deg = 180.0;

  void fail(std::string msg) {
    pass = false;
    failures.push_back(std::move(msg));
  }
};

inline MeshReport validate(const Triangulation& T) {
  MeshReport rep;
  for (std::size_t t = 0; t < T.triangles.size(); ++t)
    if (T.triangle_area(t) <= 0)
      rep.fail("triangle " + std::to_string(t) + " has non-positive orientation");

  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tr : T.triangles)
    for (int i = 0; i < 3; ++i) {
      int a = tr[i], b = tr[(i + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_count[{a, b}] += 1;
    }
  std::set<std::pair<int, int>> rim;
  for (const auto& e : T.boundary_edges) rim.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
  for (const auto& e : T.crack_edges) rim.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
  for (const auto& [e, cnt] : edge_count) {
    const bool on_rim = rim.count(e) > 0;
    if (on_rim && cnt != 1)
      rep.fail("rim edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
               ") shared by " + std::to_string(cnt) + " triangles");
    if (!on_rim && cnt != 2)
      rep.fail("interior edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
               ") shared by " + std::to_string(cnt) + " triangles (expected 2)");
  }

  for (const auto& [l, r] : T.slit_pairs)
    if (dist(T.vertices[l], T.vertices[r]) > 0)
      rep.fail("slit pair (" + std::to_string(l) + "," + std::to_string(r) + ") not coincident");

  if (T.tip_vertex >= 0) {
    int tip_faces = 0;
    for (const auto& e : T.crack_edges)
      if (e[0] == T.tip_vertex || e[1] == T.tip_vertex) ++tip_faces;
    if (tip_faces == 1)
      for (const auto& [l, r] : T.slit_pairs)
        if (l == T.tip_vertex || r == T.tip_vertex) rep.fail("degree-1 tip vertex was duplicated");
  }

  const double sum = T.total_area();
  rep.area_vs_polygon_rel = std::abs(sum - T.boundary_polygon_area) /
                            std::max(T.boundary_polygon_area, 1e-300);
  const double disk = kPi * T.domain.radius * T.domain.radius;
  rep.area_vs_disk_rel = std::abs(sum - disk) / disk;
  if (rep.area_vs_polygon_rel > 1e-8)
    rep.fail("triangle areas do not sum to the enclosed rim area");

  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const Vec2 p = T.vertices[tr[i]];
      const Vec2 q = T.vertices[tr[(i + 1) % 3]];
      const Vec2 r = T.vertices[tr[(i + 2) % 3]];
      const double ang =
          std::acos(std::clamp((q - p).normalized().dot((r - p).normalized()), -1.0, 1.0));
      rep.min_angle_deg = std::min(rep.min_angle_deg, ang * 180.0 / kPi);
    }
  }
  return rep;
}

}  // namespace cracklab
