#pragma once

// Energy profiles E(r), the normalized profile E(r)/r with its three
// correction modes, Gauss-Green and per-arc flux residuals, the Wirtinger
// inequality check, Gronwall-type corrected sequences and the stress
// intensity factor estimate.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "cracklab/core.hpp"
#include "cracklab/geometry.hpp"
#include "cracklab/mesh.hpp"
#include "cracklab/solver.hpp"

namespace cracklab {

// ---------------------------------------------------------------------------
// Quadrature over triangle intersect disk: recursive bisection with exact
// circular-segment corrections at the leaves.
// ---------------------------------------------------------------------------

namespace detail {

template <typename F>
double polygon_fan_integral(const std::vector<Vec2>& poly, F&& f) {
  double s = 0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec2 a = poly[0], b = poly[i], c = poly[i + 1];
    const double area = 0.5 * (b - a).cross(c - a);
    const Vec2 m01 = (a + b) / 2.0, m12 = (b + c) / 2.0, m20 = (c + a) / 2.0;
    s += area / 3.0 * (f(m01) + f(m12) + f(m20));
  }
  return s;
}

template <typename F>
double clip_integrate_impl(Vec2 a, Vec2 b, Vec2 c, const BallSpec& ball, F&& f, double abs_tol,
                           int depth) {
  const double r = ball.radius;
  const double r2 = r * r;
  const Vec2 o = ball.center;
  const bool ia = (a - o).norm2() <= r2, ib = (b - o).norm2() <= r2, ic = (c - o).norm2() <= r2;

  if (ia && ib && ic) {
    const double area = 0.5 * (b - a).cross(c - a);
    return area / 3.0 * (f((a + b) / 2.0) + f((b + c) / 2.0) + f((c + a) / 2.0));
  }
  if (!ia && !ib && !ic) {
    const double d = std::min({point_segment_distance(o, a, b), point_segment_distance(o, b, c),
                               point_segment_distance(o, c, a)});
    // fully outside unless the disk pokes in through an edge or contains none
    const bool center_inside = (b - a).cross(o - a) > 0 && (c - b).cross(o - b) > 0 &&
                               (a - c).cross(o - c) > 0;
    if (!center_inside && d >= r) return 0.0;
  }

  // clipped polygon in boundary order
  std::vector<Vec2> poly;
  std::vector<char> on_circle;
  const Vec2 tri[3] = {a, b, c};
  std::vector<double> params;
  for (int e = 0; e < 3; ++e) {
    const Vec2 p = tri[e], q = tri[(e + 1) % 3];
    if ((p - o).norm2() <= r2) {
      poly.push_back(p);
      on_circle.push_back(std::abs(dist(p, o) - r) <= 1e-9 * r);
    }
    segment_circle_params(p, q, ball, params);
    for (double t : params)
      if (t > 1e-14 && t < 1.0 - 1e-14) {
        poly.push_back(p + (q - p) * t);
        on_circle.push_back(1);
      }
  }
  if (poly.size() < 3) {
    // either a sliver, or the disk pokes through one edge / sits inside the
    // triangle without capturing any vertex: split until it registers
    const bool center_inside = (b - a).cross(o - a) > 0 && (c - b).cross(o - b) > 0 &&
                               (a - c).cross(o - c) > 0;
    const double d = std::min({point_segment_distance(o, a, b), point_segment_distance(o, b, c),
                               point_segment_distance(o, c, a)});
    if (!center_inside && d >= r) return 0.0;
    if (depth > 0) {
      const Vec2 mab = (a + b) / 2.0, mbc = (b + c) / 2.0, mca = (c + a) / 2.0;
      return clip_integrate_impl(a, mab, mca, ball, f, abs_tol / 4, depth - 1) +
             clip_integrate_impl(mab, b, mbc, ball, f, abs_tol / 4, depth - 1) +
             clip_integrate_impl(mca, mbc, c, ball, f, abs_tol / 4, depth - 1) +
             clip_integrate_impl(mab, mbc, mca, ball, f, abs_tol / 4, depth - 1);
    }
    return center_inside ? kPi * r2 * f(o) : 0.0;
  }

  bool needs_split = false;
  double segments = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const std::size_t j = (i + 1) % poly.size();
    if (!on_circle[i] || !on_circle[j]) continue;
    const Vec2 u = poly[i], v = poly[j];
    const double chord = dist(u, v);
    if (chord <= 1e-12 * r) continue;
    const Vec2 mid_dir = ((u + v) / 2.0 - o);
    if (mid_dir.norm() <= 1e-14 * r) continue;
    const Vec2 m = o + mid_dir.normalized() * r;
    // the bulge belongs to the triangle; otherwise the chord is a spurious
    // pairing of two crossings
    const bool m_in_tri = (b - a).cross(m - a) >= -1e-12 && (c - b).cross(m - b) >= -1e-12 &&
                          (a - c).cross(m - c) >= -1e-12;
    if (!m_in_tri) continue;
    const double theta = 2.0 * std::asin(std::clamp(chord / (2.0 * r), 0.0, 1.0));
    const double seg_area = 0.5 * r2 * (theta - std::sin(theta));
    if (theta > 0.6 && depth > 0) needs_split = true;
    segments += seg_area * f(m);
  }
  if (needs_split || (poly.size() > 6 && depth > 0)) {
    const Vec2 mab = (a + b) / 2.0, mbc = (b + c) / 2.0, mca = (c + a) / 2.0;
    return clip_integrate_impl(a, mab, mca, ball, f, abs_tol / 4, depth - 1) +
           clip_integrate_impl(mab, b, mbc, ball, f, abs_tol / 4, depth - 1) +
           clip_integrate_impl(mca, mbc, c, ball, f, abs_tol / 4, depth - 1) +
           clip_integrate_impl(mab, mbc, mca, ball, f, abs_tol / 4, depth - 1);
  }
  return polygon_fan_integral(poly, f) + segments;
}

}  // namespace detail

// Integral of f over (triangle a,b,c) intersect ball. Relative tolerance is
// interpreted against the local contribution; depth is capped at 24.
template <typename F>
double clip_integrate(Vec2 a, Vec2 b, Vec2 c, const BallSpec& ball, F&& f,
                      double rel_tol = 1e-8, int max_depth = 24) {
  const double area = std::abs(0.5 * (b - a).cross(c - a));
  const double scale = area * (std::abs(f((a + b + c) / 3.0)) + 1e-30);
  return detail::clip_integrate_impl(a, b, c, ball, f, rel_tol * scale, max_depth);
}

inline double triangle_disk_area(Vec2 a, Vec2 b, Vec2 c, const BallSpec& ball) {
  return clip_integrate(a, b, c, ball, [](Vec2) { return 1.0; });
}

// ---------------------------------------------------------------------------
// Energies in balls and ellipses
// ---------------------------------------------------------------------------

inline double energy_in_ball(const DiscreteSolution& sol, const CoefficientField& A, Vec2 x0,
                             double r) {
  const Triangulation& T = *sol.mesh;
  if (dist(x0, T.domain.center) + r > T.domain.radius + 1e-9 * T.domain.radius)
    throw Error("energy_in_ball: ball exceeds the domain");
  const BallSpec ball(x0, r);
  double E = 0;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
    const double dmin = std::min({dist(a, x0), dist(b, x0), dist(c, x0)});
    const double lmax = std::max({dist(a, b), dist(b, c), dist(c, a)});
    if (dmin - lmax > r) continue;
    const Vec2 g = sol.element_gradients[t];
    const double dens = A.eval((a + b + c) / 3.0).apply(g).dot(g);
    if (dens == 0) continue;
    E += dens * triangle_disk_area(a, b, c, ball);
  }
  return E;
}

// Energy over the ellipse x0 + sqrt(A(x0)) B(0,r), via affine pullback to a
// disk. The integrand keeps the full position-dependent norm.
inline double energy_in_ellipse(const DiscreteSolution& sol, const CoefficientField& A, Vec2 x0,
                                double r) {
  const Mat2 S = A.eval(x0).spd_sqrt();
  const Mat2 Sinv = S.inverse();
  const double detS = S.det();
  const Triangulation& T = *sol.mesh;
  // the ellipse's farthest reach from x0
  const double reach = r * std::sqrt(std::max(A.eval(x0).sym_eigenvalues()[1], 0.0));
  if (dist(x0, T.domain.center) + reach > T.domain.radius + 1e-9 * T.domain.radius)
    throw Error("energy_in_ellipse: ellipse exceeds the domain");
  const BallSpec ball({0, 0}, r);
  double E = 0;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
    const double dmin = std::min({dist(a, x0), dist(b, x0), dist(c, x0)});
    const double lmax = std::max({dist(a, b), dist(b, c), dist(c, a)});
    if (dmin - lmax > reach) continue;
    const Vec2 g = sol.element_gradients[t];
    const double dens = A.eval((a + b + c) / 3.0).apply(g).dot(g);
    if (dens == 0) continue;
    const Vec2 az = Sinv.apply(a - x0), bz = Sinv.apply(b - x0), cz = Sinv.apply(c - x0);
    E += dens * detS * std::abs(triangle_disk_area(az, bz, cz, ball));
  }
  return E;
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

struct CorrectionParams {
  enum class Mode { Harmonic, Holder, SecondMember };
  Mode mode = Mode::Harmonic;
  double C = 0.0;
  double alpha = 0.5;

  void check() const {
    if (mode != Mode::Harmonic && C < 0) throw Error("correction: constant must be nonnegative");
    if (mode == Mode::Holder && !(alpha > 0 && alpha < 1))
      throw Error("correction: alpha must be in (0,1)");
  }
};

struct EnergyProfile {
  std::vector<double> radii;      // strictly decreasing
  std::vector<double> E;
  std::vector<double> E_over_r;
  std::vector<double> corrected;
  std::vector<int> N;
  std::vector<double> P;          // primitive of N (midpoint rule)

  void check_invariants() const {
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      if (!(radii[i + 1] < radii[i])) throw Error("profile: radii must be strictly decreasing");
      if (E[i + 1] > E[i] + 1e-12 * (1.0 + E[i])) throw Error("profile: E must be nondecreasing in r");
      if (P[i + 1] > P[i] + 1e-15) throw Error("profile: P must be nondecreasing in r");
    }
    for (double e : E)
      if (e < -1e-15) throw Error("profile: negative energy");
  }
};

inline std::vector<double> geometric_schedule(double r_max, double r_min, double ratio = 0.70710678118654752) {
  if (!(r_min > 0) || !(r_min < r_max)) throw Error("schedule: need 0 < r_min < r_max");
  std::vector<double> out;
  for (double r = r_max; r >= r_min * (1.0 - 1e-12); r *= ratio) out.push_back(r);
  return out;
}

inline EnergyProfile profile(const DiscreteSolution& sol, const ProblemSpec& spec, Vec2 x0,
                             std::vector<double> schedule, const CorrectionParams& correction) {
  correction.check();
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  EnergyProfile out;
  out.radii = std::move(schedule);
  const std::size_t n = out.radii.size();
  out.E.resize(n);
  out.E_over_r.resize(n);
  out.corrected.resize(n);
  out.N.resize(n);
  out.P.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double r = out.radii[i];
    out.E[i] = correction.mode == CorrectionParams::Mode::Holder
                   ? energy_in_ellipse(sol, spec.A, x0, r)
                   : energy_in_ball(sol, spec.A, x0, r);
    out.E_over_r[i] = out.E[i] / r;
    out.N[i] = spec.crack.empty() ? 0 : circle_crossings(spec.crack, x0, r);
  }

  // P(r) by the midpoint rule on 1000 samples of N over (0, r_max]
  {
    const double rmax = out.radii.front();
    const int m = 1000;
    const double ds = rmax / m;
    std::vector<double> cumulative(m + 1, 0.0);
    for (int k = 0; k < m; ++k) {
      const double s = (k + 0.5) * ds;
      const int N = spec.crack.empty() ? 0 : circle_crossings(spec.crack, x0, s);
      cumulative[k + 1] = cumulative[k] + N * ds;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = out.radii[i];
      const int full = std::clamp(static_cast<int>(std::floor(r / ds)), 0, m);
      double P = cumulative[full];
      const double rest = r - full * ds;
      if (rest > 0 && full < m) {
        const int Nk = spec.crack.empty() ? 0 : circle_crossings(spec.crack, x0, full * ds + 0.5 * rest);
        P += Nk * rest;
      }
      out.P[i] = P;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double r = out.radii[i];
    switch (correction.mode) {
      case CorrectionParams::Mode::Harmonic:
        out.corrected[i] = out.E_over_r[i];
        break;
      case CorrectionParams::Mode::Holder:
        out.corrected[i] = out.E_over_r[i] *
                           std::pow(1.0 + correction.C * std::pow(r, correction.alpha / 2.0),
                                    2.0 / correction.alpha);
        break;
      case CorrectionParams::Mode::SecondMember:
        out.corrected[i] = out.E_over_r[i] + correction.C * out.P[i];
        break;
    }
  }
  return out;
}

// Indices (into the stored, decreasing-radius order) where the corrected
// profile increases toward r -> 0 beyond the slack.
inline std::vector<std::size_t> monotone_check(const EnergyProfile& p, double slack) {
  if (p.radii.size() < 2) throw Error("monotone_check: need at least 2 radii");
  std::vector<std::size_t> violations;
  for (std::size_t i = 0; i + 1 < p.radii.size(); ++i)
    if (p.corrected[i + 1] > p.corrected[i] * (1.0 + slack)) violations.push_back(i + 1);
  return violations;
}

struct SifEstimate {
  double C0 = 0.0;
  double lower_bound = 0.0;
  std::pair<double, double> fit_window{0, 0};
  double uncertainty = 0.0;
};

// Least-squares intercept of corrected values against r over the smallest
// admissible decade (radii at or above 5x the mesh tip size).
inline SifEstimate sif_estimate(const EnergyProfile& p, double mesh_tip_size) {
  std::vector<std::pair<double, double>> pts;  // (r, corrected), ascending r
  for (std::size_t i = p.radii.size(); i-- > 0;)
    if (p.radii[i] >= 5.0 * mesh_tip_size) pts.push_back({p.radii[i], p.corrected[i]});
  if (pts.size() < 4) throw Error("sif_estimate: need at least 4 admissible radii");
  const double r_lo = pts.front().first;
  std::vector<std::pair<double, double>> window;
  for (const auto& q : pts)
    if (q.first <= 10.0 * r_lo) window.push_back(q);
  if (window.size() < 4) window.assign(pts.begin(), pts.begin() + 4);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : window) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(window.size());
  const double denom = m * sxx - sx * sx;
  const double slope = denom != 0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / m;
  SifEstimate est;
  est.C0 = intercept;
  est.lower_bound = window.front().second;
  est.fit_window = {window.front().first, window.back().first};
  for (const auto& [x, y] : window)
    est.uncertainty = std::max(est.uncertainty, std::abs(y - (intercept + slope * x)));
  return est;
}

// ---------------------------------------------------------------------------
// Circle flux machinery (exact per sub-arc for P1 fields)
// ---------------------------------------------------------------------------

namespace detail {

struct ArcPiece {
  double phi0, phi1;
  int triangle;
};

// Split the circle around x0 of radius r at every mesh-edge crossing and
// attribute each piece to its containing triangle.
inline std::vector<ArcPiece> circle_pieces(const Triangulation& T, const MeshLocator& loc,
                                           Vec2 x0, double r) {
  const BallSpec ball(x0, r);
  std::set<double> cut_set;
  std::vector<double> params;
  for (const auto& tr : T.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Vec2 p = T.vertices[tr[i]], q = T.vertices[tr[(i + 1) % 3]];
      const double dp = dist(p, x0), dq = dist(q, x0);
      if ((dp < r) == (dq < r) && std::min(dp, dq) > 0 &&
          point_segment_distance(x0, p, q) > r)
        continue;
      segment_circle_params(p, q, ball, params);
      for (double t : params) {
        const Vec2 pt = p + (q - p) * t;
        cut_set.insert(std::atan2(pt.y - x0.y, pt.x - x0.x));
      }
    }
  }
  std::vector<double> cuts(cut_set.begin(), cut_set.end());
  std::vector<ArcPiece> pieces;
  if (cuts.empty()) cuts.push_back(-kPi);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double phi0 = cuts[i];
    const double phi1 = (i + 1 < cuts.size()) ? cuts[i + 1] : cuts[0] + 2.0 * kPi;
    if (phi1 - phi0 < 1e-13) continue;
    const double mid = 0.5 * (phi0 + phi1);
    const Vec2 pm = x0 + Vec2{r * std::cos(mid), r * std::sin(mid)};
    const int t = loc.locate(pm);
    if (t < 0) throw Error("circle flux: arc midpoint outside the mesh");
    pieces.push_back({phi0, phi1, t});
  }
  return pieces;
}

// integral over [phi0, phi1] of (c0 + cx cos + cy sin)(qx cos + qy sin) r dphi
inline double arc_product_integral(double phi0, double phi1, double c0, double cx, double cy,
                                   double qx, double qy, double r) {
  auto F = [&](double p) {
    const double s = std::sin(p), c = std::cos(p);
    double v = 0;
    v += c0 * (qx * s - qy * c);                          // c0 (qx cos + qy sin)
    v += cx * qx * (0.5 * p + 0.25 * std::sin(2 * p));    // cos^2
    v += cy * qy * (0.5 * p - 0.25 * std::sin(2 * p));    // sin^2
    v += (cx * qy + cy * qx) * (-0.25 * std::cos(2 * p)); // sin cos
    return v;
  };
  return r * (F(phi1) - F(phi0));
}

struct AffineOnTriangle {
  double c0;
  Vec2 grad;
};

inline AffineOnTriangle affine_form(const DiscreteSolution& sol, int t) {
  const auto& tr = sol.mesh->triangles[t];
  const Vec2 a = sol.mesh->vertices[tr[0]];
  const Vec2 g = sol.element_gradients[t];
  return {sol.nodal_values[tr[0]] - g.dot(a), g};
}

}  // namespace detail

// Avoid radii passing through mesh vertices (perturb upward by 1e-6 r).
inline double safe_flux_radius(const Triangulation& T, Vec2 x0, double r) {
  for (int guard = 0; guard < 8; ++guard) {
    bool hit = false;
    for (const Vec2& v : T.vertices)
      if (std::abs(dist(v, x0) - r) < 1e-9 * r) {
        hit = true;
        break;
      }
    if (!hit) return r;
    r *= 1.0 + 1e-6;
  }
  return r;
}

// Gauss-Green identity on the ball: energy - volume term - boundary flux,
// normalized. The boundary integral runs over the full circle; crack
// crossings are cut points of the subdivision, so each piece sees one face.
inline double gauss_green_residual(const DiscreteSolution& sol, const ProblemSpec& spec, Vec2 x0,
                                   double r) {
  const Triangulation& T = *sol.mesh;
  r = safe_flux_radius(T, x0, r);
  const MeshLocator loc(T);
  const double E = energy_in_ball(sol, spec.A, x0, r);

  const BallSpec ball(x0, r);
  double V = 0;  // integral of (f - lambda u) u
  if (spec.lambda > 0 || spec.f) {
    for (std::size_t t = 0; t < T.triangles.size(); ++t) {
      const auto& tr = T.triangles[t];
      const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
      const double dmin = std::min({dist(a, x0), dist(b, x0), dist(c, x0)});
      const double lmax = std::max({dist(a, b), dist(b, c), dist(c, a)});
      if (dmin - lmax > r) continue;
      const auto u = detail::affine_form(sol, static_cast<int>(t));
      V += clip_integrate(a, b, c, ball, [&](Vec2 p) {
        const double uv = u.c0 + u.grad.dot(p);
        return (spec.f_at(p) - spec.lambda * uv) * uv;
      });
    }
  }

  double flux = 0;
  for (const auto& piece : detail::circle_pieces(T, loc, x0, r)) {
    const auto u = detail::affine_form(sol, piece.triangle);
    const Mat2 A = spec.A.eval(T.centroid(piece.triangle));
    const Vec2 q = A.apply(u.grad);
    const double c0 = u.c0 + u.grad.dot(x0);
    const Vec2 cg = u.grad * r;
    flux += detail::arc_product_integral(piece.phi0, piece.phi1, c0, cg.x, cg.y, q.x, q.y, r);
  }
  return std::abs(E - V - flux) / (E + std::abs(V) + 1e-30);
}

// ---------------------------------------------------------------------------
// Per-arc flux residuals
// ---------------------------------------------------------------------------

struct ArcFluxReport {
  struct Arc {
    double phi0, phi1;
    double flux_out;       // out of U_j, through the arc
    double volume;         // integral over U_j of (lambda u - f)
    double normalization;  // integral of |flux density|
    double residual;
    bool inner;            // U_j on the inside of the circle
  };
  std::vector<Arc> arcs;
  double max_residual = 0;
};

inline ArcFluxReport arc_flux_residual(const DiscreteSolution& sol, const ProblemSpec& spec,
                                       Vec2 x0, double r) {
  const Triangulation& T = *sol.mesh;
  r = safe_flux_radius(T, x0, r);
  const MeshLocator loc(T);

  // crack crossing angles define the arcs
  std::vector<double> crack_angles;
  if (!spec.crack.empty())
    for (const auto& c : circle_crossing_points(spec.crack, x0, r)) crack_angles.push_back(c.angle);
  std::sort(crack_angles.begin(), crack_angles.end());

  const auto pieces = detail::circle_pieces(T, loc, x0, r);

  // discrete disk and its rim
  std::vector<char> in_disk(T.triangles.size(), 0);
  for (std::size_t t = 0; t < T.triangles.size(); ++t)
    in_disk[t] = dist(T.centroid(t), x0) < r ? 1 : 0;
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (int t = 0; t < static_cast<int>(T.triangles.size()); ++t)
    for (int i = 0; i < 3; ++i) {
      int a = T.triangles[t][i], b = T.triangles[t][(i + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_tris[{a, b}].push_back(t);
    }
  std::set<std::pair<int, int>> crack_edge_set;
  for (const auto& e : T.crack_edges)
    crack_edge_set.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});

  struct RimEdge {
    std::pair<int, int> key;
    double mid_angle;   // angle of the edge midpoint
    double half_width;  // angular half-spread plus slack
    int tri_in, tri_out;
  };
  std::vector<RimEdge> rim;
  for (const auto& [key, ts] : edge_tris) {
    if (ts.size() != 2) continue;
    if (in_disk[ts[0]] == in_disk[ts[1]]) continue;
    const Vec2 pa = T.vertices[key.first], pb = T.vertices[key.second];
    const double aa = std::atan2(pa.y - x0.y, pa.x - x0.x);
    const double ab = std::atan2(pb.y - x0.y, pb.x - x0.x);
    const Vec2 pm = (pa + pb) / 2.0;
    const double mid = std::atan2(pm.y - x0.y, pm.x - x0.x);
    const double spread = 0.5 * std::abs(std::remainder(aa - ab, 2.0 * kPi));
    const double slack = 2.0 * dist(pa, pb) / r;
    rim.push_back({key, mid, spread + slack, in_disk[ts[0]] ? ts[0] : ts[1],
                   in_disk[ts[0]] ? ts[1] : ts[0]});
  }

  ArcFluxReport report;
  const std::size_t n_arcs = std::max<std::size_t>(1, crack_angles.size());
  for (std::size_t j = 0; j < n_arcs; ++j) {
    double phi0, phi1;
    if (crack_angles.empty()) {
      phi0 = -kPi;
      phi1 = kPi;
    } else {
      phi0 = crack_angles[j];
      phi1 = (j + 1 < crack_angles.size()) ? crack_angles[j + 1] : crack_angles[0] + 2.0 * kPi;
    }
    // barrier edges: crack edges everywhere + rim edges whose angular span
    // overlaps this arc (modulo 2 pi)
    std::set<std::pair<int, int>> barrier = crack_edge_set;
    int start_edge = -1;
    double best_gap = 1e300;
    const double arc_mid = 0.5 * (phi0 + phi1);
    for (std::size_t e = 0; e < rim.size(); ++e) {
      bool overlaps = false;
      for (double shift : {-2.0 * kPi, 0.0, 2.0 * kPi}) {
        const double m = rim[e].mid_angle + shift;
        if (m + rim[e].half_width >= phi0 && m - rim[e].half_width <= phi1) overlaps = true;
      }
      if (!overlaps) continue;
      barrier.insert(rim[e].key);
      const double gap = std::abs(std::remainder(rim[e].mid_angle - arc_mid, 2.0 * kPi));
      if (gap < best_gap) {
        best_gap = gap;
        start_edge = static_cast<int>(e);
      }
    }
    if (start_edge < 0) throw Error("arc flux: region identification failure (no rim)");
    auto flood = [&](int seed) {
      std::vector<int> comp;
      std::set<int> seen{seed};
      std::deque<int> q{seed};
      bool touches_outer = false;
      while (!q.empty()) {
        const int t = q.front();
        q.pop_front();
        comp.push_back(t);
        for (int i = 0; i < 3; ++i) {
          int a = T.triangles[t][i], b = T.triangles[t][(i + 1) % 3];
          if (a > b) std::swap(a, b);
          if (barrier.count({a, b})) continue;
          const auto& ts = edge_tris[{a, b}];
          if (ts.size() == 1) {
            // rim of the mesh: outer boundary unless it is a slit face
            if (!crack_edge_set.count({a, b})) touches_outer = true;
            continue;
          }
          for (int u : ts)
            if (!seen.count(u)) {
              seen.insert(u);
              q.push_back(u);
            }
        }
      }
      return std::pair<std::vector<int>, bool>{comp, touches_outer};
    };
    const auto [comp_in, outer_in] = flood(rim[start_edge].tri_in);
    const auto [comp_out, outer_out] = flood(rim[start_edge].tri_out);
    bool use_inner;
    if (!outer_in && outer_out)
      use_inner = true;
    else if (outer_in && !outer_out)
      use_inner = false;
    else
      throw Error("arc flux: region identification failure (ambiguous side: inner " +
                  std::to_string(comp_in.size()) + " tris outer_flag " +
                  std::to_string(outer_in) + ", outer " + std::to_string(comp_out.size()) +
                  " tris outer_flag " + std::to_string(outer_out) + ")");
    const auto& comp = use_inner ? comp_in : comp_out;

    double volume = 0;
    for (int t : comp) {
      const auto& tr = T.triangles[t];
      const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
      const double area = 0.5 * (b - a).cross(c - a);
      const Vec2 mids[3] = {(a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0};
      const double um[3] = {0.5 * (sol.nodal_values[tr[0]] + sol.nodal_values[tr[1]]),
                            0.5 * (sol.nodal_values[tr[1]] + sol.nodal_values[tr[2]]),
                            0.5 * (sol.nodal_values[tr[2]] + sol.nodal_values[tr[0]])};
      for (int m = 0; m < 3; ++m)
        volume += area / 3.0 * (spec.lambda * um[m] - spec.f_at(mids[m]));
    }

    double flux_outward = 0, normalization = 0;
    for (const auto& piece : pieces) {
      // pieces inside [phi0, phi1] modulo 2 pi
      double a0 = piece.phi0, a1 = piece.phi1;
      while (a0 < phi0 - 1e-12) {
        a0 += 2.0 * kPi;
        a1 += 2.0 * kPi;
      }
      if (a0 >= phi1 - 1e-12) continue;
      const double b1 = std::min(a1, phi1);
      const auto u = detail::affine_form(sol, piece.triangle);
      const Mat2 A = spec.A.eval(T.centroid(piece.triangle));
      const Vec2 q = A.apply(u.grad);
      const double c0 = u.c0 + u.grad.dot(x0);
      const Vec2 cg = u.grad * r;
      flux_outward += detail::arc_product_integral(a0, b1, 1.0, 0.0, 0.0, q.x, q.y, r);
      (void)c0;
      (void)cg;
      // |q . nu| integrated by Gauss points (normalization only)
      const int gp = 8;
      for (int k = 0; k < gp; ++k) {
        const double t = (k + 0.5) / gp;
        const double phi = a0 + (b1 - a0) * t;
        normalization += std::abs(q.dot({std::cos(phi), std::sin(phi)})) * (b1 - a0) / gp * r;
      }
    }
    const double flux_out_of_U = use_inner ? flux_outward : -flux_outward;

    ArcFluxReport::Arc arc;
    arc.phi0 = phi0;
    arc.phi1 = phi1;
    arc.flux_out = flux_out_of_U;
    arc.volume = volume;
    arc.normalization = normalization;
    arc.residual = std::abs(flux_out_of_U - volume) / (normalization + 1e-30);
    arc.inner = use_inner;
    report.arcs.push_back(arc);
    report.max_residual = std::max(report.max_residual, arc.residual);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Wirtinger check
// ---------------------------------------------------------------------------

struct WirtingerResult {
  double lhs = 0;  // integral of |g - mean|^2
  double rhs = 0;  // (|I|/pi)^2 integral of |g'|^2
};

inline WirtingerResult wirtinger_check(const std::vector<double>& samples, double arc_length) {
  const std::size_t n = samples.size();
  if (n < 16) throw Error("wirtinger_check: need at least 16 samples");
  const double h = arc_length / static_cast<double>(n - 1);
  auto trapezoid = [&](auto&& f) {
    double s = 0.5 * (f(0) + f(n - 1));
    for (std::size_t i = 1; i + 1 < n; ++i) s += f(i);
    return s * h;
  };
  const double mean = trapezoid([&](std::size_t i) { return samples[i]; }) / arc_length;
  WirtingerResult res;
  res.lhs = trapezoid([&](std::size_t i) {
    const double d = samples[i] - mean;
    return d * d;
  });
  std::vector<double> der(n);
  for (std::size_t i = 1; i + 1 < n; ++i) der[i] = (samples[i + 1] - samples[i - 1]) / (2 * h);
  der[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2 * h);
  der[n - 1] = (3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) / (2 * h);
  const double dint = trapezoid([&](std::size_t i) { return der[i] * der[i]; });
  res.rhs = (arc_length / kPi) * (arc_length / kPi) * dint;
  return res;
}

// ---------------------------------------------------------------------------
// Gronwall-type corrected sequences
// ---------------------------------------------------------------------------

struct GronwallResult {
  std::vector<double> v1;        // (E/r)(1 + C r^alpha)^(1/alpha)
  std::vector<double> v2;        // (E - G)/r
  std::vector<double> G_over_r;  // particular solution check: -> 0
};

// radii ascending; N sampled on the same grid (piecewise constant counts).
inline GronwallResult gronwall_transforms(const std::vector<double>& radii,
                                          const std::vector<double>& E, double C, double alpha,
                                          const std::vector<double>& N = {}) {
  if (radii.empty() || radii.size() != E.size())
    throw Error("gronwall: radii/E size mismatch");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0)) throw Error("gronwall: non-positive grid");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw Error("gronwall: radii must ascend");
  }
  if (!N.empty() && N.size() != radii.size()) throw Error("gronwall: N size mismatch");
  if (!(alpha > 0) || alpha >= 1) throw Error("gronwall: alpha must be in (0,1)");

  GronwallResult res;
  res.v1.resize(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double factor = C == 0 ? 1.0 : std::pow(1.0 + C * std::pow(radii[i], alpha), 1.0 / alpha);
    res.v1[i] = E[i] / radii[i] * factor;
  }

  res.v2.resize(radii.size());
  res.G_over_r.resize(radii.size());
  // lambda(r) = -C * integral_0^r N(t) (C t^alpha + 1)^((1-alpha)/alpha) dt
  double acc = 0;
  double prev_r = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double Ni = N.empty() ? 0.0 : N[i];
    const double w = std::pow(C * std::pow(radii[i], alpha) + 1.0, (1.0 - alpha) / alpha);
    acc += Ni * w * (radii[i] - prev_r);
    prev_r = radii[i];
    const double lam = -C * acc;
    const double G = lam * radii[i] / std::pow(C * std::pow(radii[i], alpha) + 1.0, 1.0 / alpha);
    res.G_over_r[i] = G / radii[i];
    res.v2[i] = (E[i] - G) / radii[i];
  }
  return res;
}

}  // namespace cracklab
