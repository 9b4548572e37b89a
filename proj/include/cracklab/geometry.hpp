#pragma once

// Cracks as connected polyline sets: generators (segment, polyline, spiral,
// two-scale set), lengths in balls, density ratios, Hausdorff distances,
// circle crossings, geodesics inside the set and the tip rotations used by
// the blow-up analysis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "cracklab/core.hpp"

namespace cracklab {

using Polyline = std::vector<Vec2>;

// ---------------------------------------------------------------------------
// Segment primitives
// ---------------------------------------------------------------------------

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b, double* t_out = nullptr) {
  const Vec2 d = b - a;
  const double len2 = d.norm2();
  double t = 0.0;
  if (len2 > 0) t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  if (t_out) *t_out = t;
  return dist(p, a + d * t);
}

// Closed-form length of segment [a,b] inside the closed disk.
inline double segment_length_in_disk(Vec2 a, Vec2 b, const BallSpec& ball) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len == 0) return 0.0;
  const Vec2 m = a - ball.center;
  const double A = d.norm2();
  const double B = 2.0 * m.dot(d);
  const double C = m.norm2() - ball.radius * ball.radius;
  const double disc = B * B - 4.0 * A * C;
  if (disc <= 0) {
    // No chord: fully inside or fully outside.
    return C <= 0 ? len : 0.0;
  }
  const double sq = std::sqrt(disc);
  const double t0 = std::clamp((-B - sq) / (2.0 * A), 0.0, 1.0);
  const double t1 = std::clamp((-B + sq) / (2.0 * A), 0.0, 1.0);
  return (t1 - t0) * len;
}

// Parameters t in [0,1] where segment [a,b] meets the circle boundary.
// A tangential touch yields a single parameter.
inline void segment_circle_params(Vec2 a, Vec2 b, const BallSpec& ball,
                                  std::vector<double>& out) {
  out.clear();
  const Vec2 d = b - a;
  const double A = d.norm2();
  if (A == 0) return;
  const Vec2 m = a - ball.center;
  const double B = 2.0 * m.dot(d);
  const double C = m.norm2() - ball.radius * ball.radius;
  const double disc = B * B - 4.0 * A * C;
  const double eps = 1e-14 * (A * ball.radius * ball.radius + B * B);
  if (disc < -eps) return;
  if (disc <= eps) {
    const double t = -B / (2.0 * A);
    if (t >= 0.0 && t <= 1.0) out.push_back(t);
    return;
  }
  const double sq = std::sqrt(disc);
  for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
    if (t >= 0.0 && t <= 1.0) out.push_back(t);
}

// Proper-intersection test used by the simplicity check. Segments that only
// share an endpoint are handled by the caller (adjacent segments are skipped).
inline bool segments_intersect(Vec2 p1, Vec2 q1, Vec2 p2, Vec2 q2) {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
    const double v = (b - a).cross(c - a);
    const double scale = (b - a).norm() * (c - a).norm() + 1e-300;
    if (v > 1e-14 * scale) return 1;
    if (v < -1e-14 * scale) return -1;
    return 0;
  };
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) - 1e-14 <= p.x && p.x <= std::max(a.x, b.x) + 1e-14 &&
           std::min(a.y, b.y) - 1e-14 <= p.y && p.y <= std::max(a.y, b.y) + 1e-14;
  };
  const int o1 = orient(p1, q1, p2), o2 = orient(p1, q1, q2);
  const int o3 = orient(p2, q2, p1), o4 = orient(p2, q2, q1);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, q1, p2)) return true;
  if (o2 == 0 && on_segment(p1, q1, q2)) return true;
  if (o3 == 0 && on_segment(p2, q2, p1)) return true;
  if (o4 == 0 && on_segment(p2, q2, q1)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// CrackSet
// ---------------------------------------------------------------------------

// Vertices of different polylines closer than this are one graph node.
inline constexpr double kNodeMergeTol = 1e-12;

struct CrackSet {
  std::vector<Polyline> polylines;
  Vec2 tip;
  bool has_tip = false;

  bool empty() const { return polylines.empty(); }

  double total_length() const {
    double len = 0;
    for (const auto& pl : polylines)
      for (std::size_t i = 0; i + 1 < pl.size(); ++i) len += dist(pl[i], pl[i + 1]);
    return len;
  }

  template <typename F>
  void for_each_segment(F&& f) const {
    for (std::size_t p = 0; p < polylines.size(); ++p)
      for (std::size_t i = 0; i + 1 < polylines[p].size(); ++i)
        f(polylines[p][i], polylines[p][i + 1], p, i);
  }
};

// Adjacency graph of a CrackSet: polyline vertices merged into nodes by
// position, one weighted edge per segment.
struct CrackGraph {
  std::vector<Vec2> nodes;
  struct Edge {
    std::size_t a, b;
    double len;
    std::size_t poly, seg;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> node_edges;      // node -> edge ids
  std::vector<std::vector<std::size_t>> vertex_node;     // [poly][vertex] -> node

  std::size_t segment_node(std::size_t poly, std::size_t seg, bool second) const {
    return vertex_node[poly][seg + (second ? 1 : 0)];
  }
};

inline CrackGraph build_crack_graph(const CrackSet& K) {
  CrackGraph g;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;
  auto find_or_add = [&](Vec2 p) -> std::size_t {
    const auto qx = static_cast<std::int64_t>(std::floor(p.x / kNodeMergeTol));
    const auto qy = static_cast<std::int64_t>(std::floor(p.y / kNodeMergeTol));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells.find({qx + dx, qy + dy});
        if (it == cells.end()) continue;
        for (std::size_t id : it->second)
          if (dist(g.nodes[id], p) <= kNodeMergeTol) return id;
      }
    g.nodes.push_back(p);
    cells[{qx, qy}].push_back(g.nodes.size() - 1);
    return g.nodes.size() - 1;
  };

  g.vertex_node.resize(K.polylines.size());
  for (std::size_t p = 0; p < K.polylines.size(); ++p) {
    g.vertex_node[p].reserve(K.polylines[p].size());
    for (const Vec2& v : K.polylines[p]) g.vertex_node[p].push_back(find_or_add(v));
  }
  for (std::size_t p = 0; p < K.polylines.size(); ++p)
    for (std::size_t i = 0; i + 1 < K.polylines[p].size(); ++i) {
      const std::size_t a = g.vertex_node[p][i], b = g.vertex_node[p][i + 1];
      g.edges.push_back({a, b, dist(K.polylines[p][i], K.polylines[p][i + 1]), p, i});
    }
  g.node_edges.assign(g.nodes.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    g.node_edges[g.edges[e].a].push_back(e);
    if (g.edges[e].b != g.edges[e].a) g.node_edges[g.edges[e].b].push_back(e);
  }
  return g;
}

inline std::vector<double> dijkstra(const CrackGraph& g, std::size_t source) {
  std::vector<double> d(g.nodes.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  d[source] = 0;
  q.push({0, source});
  while (!q.empty()) {
    auto [dist_u, u] = q.top();
    q.pop();
    if (dist_u > d[u]) continue;
    for (std::size_t e : g.node_edges[u]) {
      const auto& ed = g.edges[e];
      const std::size_t v = ed.a == u ? ed.b : ed.a;
      if (d[u] + ed.len < d[v]) {
        d[v] = d[u] + ed.len;
        q.push({d[v], v});
      }
    }
  }
  return d;
}

inline void validate_crack(const CrackSet& K) {
  if (K.polylines.empty()) throw Error("crack: no polylines");
  for (const auto& pl : K.polylines) {
    if (pl.size() < 2) throw Error("crack: polyline with fewer than 2 vertices");
    for (std::size_t i = 0; i + 1 < pl.size(); ++i)
      if (dist(pl[i], pl[i + 1]) <= 0.0) throw Error("crack: degenerate (zero-length) polyline segment");
  }
  const double len = K.total_length();
  if (!(len > 0) || !std::isfinite(len)) throw Error("crack: total length must be finite and positive");

  // Simplicity per polyline: non-adjacent segment pairs must not meet.
  for (const auto& pl : K.polylines) {
    const std::size_t n = pl.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1 && pl.front() == pl.back()) continue;  // closed loop join
        const double lo = std::min({pl[i].x, pl[i + 1].x}), hi = std::max({pl[i].x, pl[i + 1].x});
        if (std::max(pl[j].x, pl[j + 1].x) < lo - 1e-13 || std::min(pl[j].x, pl[j + 1].x) > hi + 1e-13)
          continue;
        if (segments_intersect(pl[i], pl[i + 1], pl[j], pl[j + 1]))
          throw Error("crack: polyline self-intersection");
      }
  }

  const CrackGraph g = build_crack_graph(K);
  // Connectivity through shared endpoints.
  std::vector<std::size_t> parent(g.nodes.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) parent[find(e.a)] = find(e.b);
  for (std::size_t i = 1; i < g.nodes.size(); ++i)
    if (find(i) != find(0)) throw Error("crack: polylines are not connected through shared endpoints");

  if (K.has_tip) {
    bool tip_is_vertex = false;
    for (const auto& pl : K.polylines)
      for (const Vec2& v : pl)
        if (dist(v, K.tip) <= kNodeMergeTol) tip_is_vertex = true;
    if (!tip_is_vertex) throw Error("crack: tip is not a polyline vertex");
  }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

inline CrackSet make_segment_crack(Vec2 a, Vec2 b) {
  CrackSet K;
  K.polylines.push_back({a, b});
  K.tip = b;
  K.has_tip = true;
  validate_crack(K);
  return K;
}

inline CrackSet make_polyline_crack(Polyline vertices, std::optional<Vec2> tip = std::nullopt) {
  CrackSet K;
  if (vertices.size() < 2) throw Error("polyline crack: need at least 2 vertices");
  K.tip = tip.value_or(vertices.back());
  K.polylines.push_back(std::move(vertices));
  K.has_tip = true;
  validate_crack(K);
  return K;
}

// Spiral t -> t e^{i theta(t)} with theta(t) = sqrt(-ln t), discretized with
// geometrically spaced parameters and closed to the origin by a straight join
// of length t_min.
inline Vec2 spiral_point(double t) {
  const double theta = std::sqrt(-std::log(t));
  return {t * std::cos(theta), t * std::sin(theta)};
}

inline CrackSet make_spiral_crack(double t_min, double t_max, int vertex_count) {
  if (!(t_min > 0)) throw Error("spiral crack: t_min must be positive");
  if (!(t_min < t_max) || !(t_max <= 1.0)) throw Error("spiral crack: need 0 < t_min < t_max <= 1");
  if (vertex_count < 2) throw Error("spiral crack: need at least 2 vertices");
  Polyline pl;
  pl.reserve(static_cast<std::size_t>(vertex_count) + 1);
  const double ratio = std::pow(t_max / t_min, 1.0 / (vertex_count - 1));
  for (int i = vertex_count - 1; i >= 0; --i) {
    const double t = std::min(t_max, t_min * std::pow(ratio, static_cast<double>(i)));
    pl.push_back(spiral_point(t));
  }
  pl.push_back({0, 0});
  CrackSet K;
  K.polylines.push_back(std::move(pl));
  K.tip = {0, 0};
  K.has_tip = true;
  validate_crack(K);
  return K;
}

// Two-scale set: truncated negative axis plus `depth` horizontal diameters
// hung above it, each connected to the axis by a vertical segment at its
// left end. Diameter n has half-length q_{2n-1} and sits at height
// (4/3) q_{2n} ratio. The axis polyline carries a vertex at every connector
// foot so the pieces share endpoints.
inline CrackSet make_two_scale_crack(const std::vector<double>& q, int depth,
                                     double ratio = 1.0, double axis_length = 1.0) {
  if (depth < 1) throw Error("two-scale crack: depth must be >= 1");
  if (q.size() < static_cast<std::size_t>(2 * depth))
    throw Error("two-scale crack: need at least 2*depth scales");
  if (!(ratio > 0)) throw Error("two-scale crack: ratio must be positive");
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0)) throw Error("two-scale crack: scales must be positive");
    if (i > 0 && !(q[i] <= q[i - 1] / 4.0))
      throw Error("two-scale crack: non-decreasing q sequence (need q[n+1] <= q[n]/4)");
  }
  if (!(q[0] < axis_length)) throw Error("two-scale crack: largest scale must fit inside the axis");

  CrackSet K;
  Polyline axis;
  axis.push_back({-axis_length, 0});
  for (int n = 1; n <= depth; ++n) axis.push_back({-q[2 * n - 2], 0});
  axis.push_back({0, 0});
  K.polylines.push_back(std::move(axis));

  for (int n = 1; n <= depth; ++n) {
    const double half = q[2 * n - 2];
    const double h = (4.0 / 3.0) * q[2 * n - 1] * ratio;
    if (!(h < half)) throw Error("two-scale crack: diameter height exceeds its own scale");
    K.polylines.push_back({{-half, 0}, {-half, h}});
    K.polylines.push_back({{-half, h}, {half, h}});
  }
  K.tip = {0, 0};
  K.has_tip = true;
  validate_crack(K);
  return K;
}

// ---------------------------------------------------------------------------
// Lengths, densities, clipping
// ---------------------------------------------------------------------------

inline double length_in_ball(const CrackSet& K, const BallSpec& ball) {
  double len = 0;
  K.for_each_segment([&](Vec2 a, Vec2 b, std::size_t, std::size_t) {
    len += segment_length_in_disk(a, b, ball);
  });
  return len;
}

inline double density_ratio(const CrackSet& K, Vec2 x0, double r) {
  if (!(r > 0)) throw Error("density_ratio: r must be positive");
  return length_in_ball(K, BallSpec(x0, r)) / (2.0 * r);
}

// K intersected with the closed disk; polylines are split where they leave.
// The result is raw (it may be disconnected) and keeps the tip only if the
// tip lies inside.
inline CrackSet clip_to_ball(const CrackSet& K, const BallSpec& ball) {
  CrackSet out;
  std::vector<double> params;
  for (const auto& pl : K.polylines) {
    Polyline current;
    auto flush = [&] {
      if (current.size() >= 2) out.polylines.push_back(current);
      current.clear();
    };
    for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
      const Vec2 a = pl[i], b = pl[i + 1];
      const Vec2 d = b - a;
      const double A = d.norm2();
      if (A == 0) continue;
      const Vec2 m = a - ball.center;
      const double B = 2.0 * m.dot(d);
      const double C = m.norm2() - ball.radius * ball.radius;
      const double disc = B * B - 4.0 * A * C;
      double t0 = 0.0, t1 = 0.0;
      if (disc <= 0) {
        if (C > 0) { flush(); continue; }
        t0 = 0.0; t1 = 1.0;
      } else {
        const double sq = std::sqrt(disc);
        t0 = std::clamp((-B - sq) / (2.0 * A), 0.0, 1.0);
        t1 = std::clamp((-B + sq) / (2.0 * A), 0.0, 1.0);
        if (t1 <= t0) { flush(); continue; }
      }
      const Vec2 p0 = a + d * t0, p1 = a + d * t1;
      if (current.empty()) {
        current.push_back(p0);
      } else if (dist(current.back(), p0) > kNodeMergeTol) {
        flush();
        current.push_back(p0);
      }
      current.push_back(p1);
      if (t1 < 1.0) flush();
    }
    flush();
  }
  if (K.has_tip && ball.contains(K.tip)) {
    out.tip = K.tip;
    out.has_tip = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hausdorff distance (sampled sup-inf, exact point-to-segment inf)
// ---------------------------------------------------------------------------

inline void sample_crack(const CrackSet& K, double step, std::vector<Vec2>& out) {
  for (const auto& pl : K.polylines)
    for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
      const double len = dist(pl[i], pl[i + 1]);
      const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
      for (int k = 0; k <= n; ++k)
        out.push_back(pl[i] + (pl[i + 1] - pl[i]) * (static_cast<double>(k) / n));
    }
}

inline double point_to_crack_distance(const CrackSet& K, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  K.for_each_segment([&](Vec2 a, Vec2 b, std::size_t, std::size_t) {
    best = std::min(best, point_segment_distance(p, a, b));
  });
  return best;
}

inline double hausdorff_distance(const CrackSet& S1, const CrackSet& S2, double step) {
  if (S1.empty() || S2.empty()) throw Error("hausdorff_distance: empty set");
  std::vector<Vec2> samples;
  double sup = 0;
  sample_crack(S1, step, samples);
  for (Vec2 p : samples) sup = std::max(sup, point_to_crack_distance(S2, p));
  samples.clear();
  sample_crack(S2, step, samples);
  for (Vec2 p : samples) sup = std::max(sup, point_to_crack_distance(S1, p));
  return sup;
}

// ---------------------------------------------------------------------------
// Circle crossings and tip rotations
// ---------------------------------------------------------------------------

struct CircleCrossing {
  Vec2 point;
  double angle;        // atan2 around x0, in (-pi, pi]
  std::size_t poly, seg;
  double t;            // parameter on the segment
};

// Crossing points of K with the circle of radius r around x0, merged within
// 1e-9 r so shared vertices and tangential touches count once.
inline std::vector<CircleCrossing> circle_crossing_points(const CrackSet& K, Vec2 x0, double r) {
  if (!(r > 0)) throw Error("circle crossings: r must be positive");
  const BallSpec ball(x0, r);
  std::vector<CircleCrossing> raw;
  std::vector<double> params;
  K.for_each_segment([&](Vec2 a, Vec2 b, std::size_t p, std::size_t i) {
    segment_circle_params(a, b, ball, params);
    for (double t : params) {
      const Vec2 pt = a + (b - a) * t;
      raw.push_back({pt, std::atan2(pt.y - x0.y, pt.x - x0.x), p, i, t});
    }
  });
  std::sort(raw.begin(), raw.end(), [](const CircleCrossing& u, const CircleCrossing& v) {
    return std::tie(u.angle, u.poly, u.seg, u.t) < std::tie(v.angle, v.poly, v.seg, v.t);
  });
  std::vector<CircleCrossing> merged;
  const double tol = 1e-9 * r;
  for (const auto& c : raw) {
    bool dup = false;
    for (const auto& m : merged)
      if (dist(m.point, c.point) <= tol) { dup = true; break; }
    if (!dup) merged.push_back(c);
  }
  return merged;
}

inline int circle_crossings(const CrackSet& K, Vec2 x0, double r) {
  return static_cast<int>(circle_crossing_points(K, x0, r).size());
}

// Arc-length distance inside K from the tip to each crossing point, via the
// shortest path on the polyline graph.
inline std::vector<double> crossing_geodesic_params(const CrackSet& K, const CrackGraph& g,
                                                    const std::vector<double>& dist_from_tip,
                                                    const std::vector<CircleCrossing>& crossings) {
  std::vector<double> out;
  out.reserve(crossings.size());
  for (const auto& c : crossings) {
    const std::size_t na = g.vertex_node[c.poly][c.seg];
    const std::size_t nb = g.vertex_node[c.poly][c.seg + 1];
    const double len = dist(K.polylines[c.poly][c.seg], K.polylines[c.poly][c.seg + 1]);
    out.push_back(std::min(dist_from_tip[na] + c.t * len,
                           dist_from_tip[nb] + (1.0 - c.t) * len));
  }
  return out;
}

inline std::size_t tip_node(const CrackSet& K, const CrackGraph& g) {
  if (!K.has_tip) throw Error("crack has no tip");
  for (std::size_t n = 0; n < g.nodes.size(); ++n)
    if (dist(g.nodes[n], K.tip) <= kNodeMergeTol) return n;
  throw Error("tip is not a graph node");
}

// The rotation mapping the selected crossing x_r onto the negative first
// axis. x_r is the crossing with the smallest arc-length distance from the
// tip along K; exact ties pick the smallest angle.
inline Rotation tip_rotation(const CrackSet& K, Vec2 x0, double r) {
  const auto crossings = circle_crossing_points(K, x0, r);
  if (crossings.empty()) throw Error("tip_rotation: no crossing at this radius");
  const CrackGraph g = build_crack_graph(K);
  const auto d0 = dijkstra(g, tip_node(K, g));
  const auto params = crossing_geodesic_params(K, g, d0, crossings);
  std::size_t best = 0;
  for (std::size_t i = 1; i < crossings.size(); ++i) {
    if (params[i] < params[best] - 1e-12 * r ||
        (params[i] < params[best] + 1e-12 * r && crossings[i].angle < crossings[best].angle))
      best = i;
  }
  const Vec2 xr = crossings[best].point - x0;
  return Rotation::of(kPi - std::atan2(xr.y, xr.x));
}

// ---------------------------------------------------------------------------
// Geodesics
// ---------------------------------------------------------------------------

struct CrackAnchor {
  std::size_t poly, seg;
  double t;
  Vec2 point;
};

inline CrackAnchor snap_to_crack(const CrackSet& K, Vec2 p, double tol) {
  CrackAnchor best{0, 0, 0, {0, 0}};
  double best_d = std::numeric_limits<double>::infinity();
  K.for_each_segment([&](Vec2 a, Vec2 b, std::size_t poly, std::size_t seg) {
    double t = 0;
    const double d = point_segment_distance(p, a, b, &t);
    if (d < best_d) {
      best_d = d;
      best = {poly, seg, t, a + (b - a) * t};
    }
  });
  if (best_d > tol) throw Error("point is farther than tolerance from the crack");
  return best;
}

inline double geodesic_distance(const CrackSet& K, Vec2 y, Vec2 z, double tol = 1e-9) {
  const CrackAnchor ay = snap_to_crack(K, y, tol);
  const CrackAnchor az = snap_to_crack(K, z, tol);
  const CrackGraph g = build_crack_graph(K);

  const Vec2 ya = K.polylines[ay.poly][ay.seg], yb = K.polylines[ay.poly][ay.seg + 1];
  const Vec2 za = K.polylines[az.poly][az.seg], zb = K.polylines[az.poly][az.seg + 1];
  const double ylen = dist(ya, yb), zlen = dist(za, zb);
  const std::size_t yna = g.vertex_node[ay.poly][ay.seg], ynb = g.vertex_node[ay.poly][ay.seg + 1];
  const std::size_t zna = g.vertex_node[az.poly][az.seg], znb = g.vertex_node[az.poly][az.seg + 1];

  double best = std::numeric_limits<double>::infinity();
  if (ay.poly == az.poly && ay.seg == az.seg)
    best = std::abs(ay.t - az.t) * ylen;

  const auto da = dijkstra(g, yna);
  const auto db = dijkstra(g, ynb);
  const double off_a = ay.t * ylen, off_b = (1.0 - ay.t) * ylen;
  auto through = [&](std::size_t zn, double zoff) {
    best = std::min(best, off_a + da[zn] + zoff);
    best = std::min(best, off_b + db[zn] + zoff);
  };
  through(zna, az.t * zlen);
  through(znb, (1.0 - az.t) * zlen);
  return best;
}

// Largest geodesic/r over the given radii and all crossing pairs at each
// radius; radii with fewer than two crossings contribute nothing.
inline double chord_arc_constant(const CrackSet& K, Vec2 x0, const std::vector<double>& radii) {
  double worst = 0;
  for (double r : radii) {
    const auto crossings = circle_crossing_points(K, x0, r);
    for (std::size_t i = 0; i < crossings.size(); ++i)
      for (std::size_t j = i + 1; j < crossings.size(); ++j) {
        const double gd = geodesic_distance(K, crossings[i].point, crossings[j].point, 1e-9 * r);
        worst = std::max(worst, gd / r);
      }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Blow-up sets
// ---------------------------------------------------------------------------

// (1/r) R_r (K - x0), clipped to B(0,2).
inline CrackSet blowup_set(const CrackSet& K, Vec2 x0, double r) {
  const Rotation R = tip_rotation(K, x0, r);
  CrackSet scaled;
  scaled.polylines.reserve(K.polylines.size());
  for (const auto& pl : K.polylines) {
    Polyline q;
    q.reserve(pl.size());
    for (Vec2 v : pl) q.push_back(R.apply(v - x0) / r);
    scaled.polylines.push_back(std::move(q));
  }
  if (K.has_tip) {
    scaled.tip = R.apply(K.tip - x0) / r;
    scaled.has_tip = true;
  }
  return clip_to_ball(scaled, BallSpec({0, 0}, 2.0));
}

}  // namespace cracklab
