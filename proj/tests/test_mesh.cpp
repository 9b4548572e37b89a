#include <catch2/catch_amalgamated.hpp>

#include <deque>
#include <set>

#include "cracklab/mesh.hpp"

using namespace cracklab;

namespace {

MeshConfig cfg(double h, double min_h = 0, double beta = 0.5, double bnd = 0) {
  MeshConfig c;
  c.target_h = h;
  c.min_h = min_h;
  c.tip_grading_beta = beta;
  c.boundary_h = bnd;
  return c;
}

int count_components_near(const Triangulation& T, double rho) {
  std::set<std::pair<int, int>> crack;
  for (const auto& e : T.crack_edges) crack.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  std::vector<int> keep;
  std::vector<int> comp(T.triangles.size(), -1);
  for (int t = 0; t < static_cast<int>(T.triangles.size()); ++t) {
    if (T.centroid(t).norm() > rho) continue;
    keep.push_back(t);
    for (int i = 0; i < 3; ++i) {
      int a = T.triangles[t][i], b = T.triangles[t][(i + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_tris[{a, b}].push_back(t);
    }
  }
  int ncomp = 0;
  for (int seed : keep) {
    if (comp[seed] >= 0) continue;
    ++ncomp;
    std::deque<int> q{seed};
    comp[seed] = ncomp;
    while (!q.empty()) {
      const int t = q.front();
      q.pop_front();
      for (int i = 0; i < 3; ++i) {
        int a = T.triangles[t][i], b = T.triangles[t][(i + 1) % 3];
        if (a > b) std::swap(a, b);
        if (crack.count({a, b})) continue;
        for (int u : edge_tris[{a, b}])
          if (comp[u] < 0) {
            comp[u] = ncomp;
            q.push_back(u);
          }
      }
    }
  }
  return ncomp;
}

}  // namespace

TEST_CASE("empty crack: disk area converges to pi") {
  const Triangulation coarse = mesh_disk_with_crack(CrackSet{}, cfg(0.1));
  const MeshReport r1 = validate(coarse);
  CHECK(r1.pass);
  CHECK(r1.area_vs_disk_rel < 1e-3);

  const Triangulation fine = mesh_disk_with_crack(CrackSet{}, cfg(0.1, 0, 0.5, 2e-3));
  const MeshReport r2 = validate(fine);
  CHECK(r2.pass);
  CHECK(r2.area_vs_disk_rel < 1e-6);
}

TEST_CASE("straight crack: slit structure") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, cfg(0.15));
  const MeshReport rep = validate(T);
  for (const auto& f : rep.failures) UNSCOPED_INFO(f);
  CHECK(rep.pass);
  REQUIRE(T.tip_vertex >= 0);
  CHECK(dist(T.vertices[T.tip_vertex], {0, 0}) < 1e-12);

  // tip unduplicated, every other crack vertex exactly once
  std::set<int> paired;
  for (const auto& [l, r] : T.slit_pairs) {
    CHECK(l != T.tip_vertex);
    CHECK(r != T.tip_vertex);
    CHECK(paired.insert(l).second);
    CHECK(paired.insert(r).second);
  }
  std::set<std::pair<long, long>> distinct_positions;
  std::set<int> crack_verts;
  for (const auto& e : T.crack_edges) {
    crack_verts.insert(e[0]);
    crack_verts.insert(e[1]);
  }
  for (int v : crack_verts)
    distinct_positions.insert({static_cast<long>(T.vertices[v].x * 1e12),
                               static_cast<long>(T.vertices[v].y * 1e12)});
  // chain crack: every distinct crack position except the tip is split once
  CHECK(T.slit_pairs.size() == distinct_positions.size() - 1);
}

TEST_CASE("halving target_h grows the vertex count by 3x to 5x") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const auto n1 = mesh_disk_with_crack(K, cfg(0.1, 0.01)).vertices.size();
  const auto n2 = mesh_disk_with_crack(K, cfg(0.05, 0.01)).vertices.size();
  const double ratio = static_cast<double>(n2) / n1;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("validate flags constructed failures") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  Triangulation T = mesh_disk_with_crack(K, cfg(0.2));
  REQUIRE(validate(T).pass);

  SECTION("swapped orientation") {
    std::swap(T.triangles[0][0], T.triangles[0][1]);
    const MeshReport rep = validate(T);
    CHECK(!rep.pass);
    bool orientation = false;
    for (const auto& f : rep.failures)
      if (f.find("orientation") != std::string::npos) orientation = true;
    CHECK(orientation);
  }
  SECTION("merged slit pair") {
    REQUIRE(!T.slit_pairs.empty());
    const auto [l, r] = T.slit_pairs.front();
    for (auto& tr : T.triangles)
      for (int i = 0; i < 3; ++i)
        if (tr[i] == r) tr[i] = l;
    const MeshReport rep = validate(T);
    CHECK(!rep.pass);
  }
}

TEST_CASE("diameter crack separates the mesh near the tip") {
  const CrackSet K = make_polyline_crack({{-1, 0}, {0, 0}, {1, 0}}, Vec2{0, 0});
  const Triangulation T = mesh_disk_with_crack(K, cfg(0.15));
  const MeshReport rep = validate(T);
  for (const auto& f : rep.failures) UNSCOPED_INFO(f);
  CHECK(rep.pass);
  CHECK(count_components_near(T, 0.3) == 2);
  // through-crack: the center vertex carries a slit pair as well
  bool center_paired = false;
  for (const auto& [l, r] : T.slit_pairs)
    if (l == T.tip_vertex || r == T.tip_vertex) center_paired = true;
  CHECK(center_paired);
}

TEST_CASE("mesh quality: minimum angles") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, cfg(0.1, 1e-3));
  double min_far = 180, min_near = 180;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    double worst = 180;
    for (int i = 0; i < 3; ++i) {
      const Vec2 p = T.vertices[tr[i]], q = T.vertices[tr[(i + 1) % 3]],
                 r = T.vertices[tr[(i + 2) % 3]];
      const double ang =
          std::acos(std::clamp((q - p).normalized().dot((r - p).normalized()), -1.0, 1.0)) * 180.0 /
          kPi;
      worst = std::min(worst, ang);
    }
    if (dist(T.centroid(t), {0, 0}) > 64 * 1e-3)
      min_far = std::min(min_far, worst);
    else
      min_near = std::min(min_near, worst);
  }
  CHECK(min_far >= 20.0);
  CHECK(min_near >= 10.0);
}

TEST_CASE("mesh is deterministic") {
  const CrackSet K = make_polyline_crack({{-1, 0}, {-0.4, 0.15}, {0, 0}}, Vec2{0, 0});
  const Triangulation a = mesh_disk_with_crack(K, cfg(0.12));
  const Triangulation b = mesh_disk_with_crack(K, cfg(0.12));
  REQUIRE(a.vertices.size() == b.vertices.size());
  REQUIRE(a.triangles.size() == b.triangles.size());
  for (std::size_t i = 0; i < a.vertices.size(); ++i) {
    CHECK(a.vertices[i].x == b.vertices[i].x);
    CHECK(a.vertices[i].y == b.vertices[i].y);
  }
  CHECK(a.triangles == b.triangles);
  CHECK(a.slit_pairs == b.slit_pairs);
}

TEST_CASE("mesh error paths") {
  // crack leaving the domain
  CHECK_THROWS_AS(mesh_disk_with_crack(make_segment_crack({-2, 0}, {0, 0}), cfg(0.1)), Error);
  // vertex spacing below min_h / 4
  const CrackSet tight = make_polyline_crack({{-1, 0}, {-0.5, 0}, {-0.5 + 1e-4, 1e-4}, {0, 0}});
  CHECK_THROWS_AS(mesh_disk_with_crack(tight, cfg(0.1, 0.01)), Error);
}

TEST_CASE("spiral and two-scale cracks mesh cleanly") {
  const CrackSet spiral = make_spiral_crack(0.02, 1.0, 120);
  const Triangulation Ts = mesh_disk_with_crack(spiral, cfg(0.1, 2e-3));
  const MeshReport rs = validate(Ts);
  for (const auto& f : rs.failures) UNSCOPED_INFO(f);
  CHECK(rs.pass);

  const CrackSet two = make_two_scale_crack({0.3, 0.075, 0.012, 0.003}, 2);
  const Triangulation Tt = mesh_disk_with_crack(two, cfg(0.1, 1e-3));
  const MeshReport rt = validate(Tt);
  for (const auto& f : rt.failures) UNSCOPED_INFO(f);
  CHECK(rt.pass);
  // junction vertices split into one copy per extra sector
  CHECK(!Tt.slit_pairs.empty());
}

TEST_CASE("graded sizes honour the field") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const MeshConfig c = cfg(0.1, 1e-3);
  const Triangulation T = mesh_disk_with_crack(K, c);
  CHECK(T.tip_element_size <= 2.0 * 1e-3);
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const auto& tr = T.triangles[t];
    const Vec2 cent = T.centroid(t);
    const double h_loc = std::clamp(0.1 * std::pow(cent.norm(), 0.5), 1e-3, 0.1);
    double longest = 0;
    for (int i = 0; i < 3; ++i)
      longest = std::max(longest, dist(T.vertices[tr[i]], T.vertices[tr[(i + 1) % 3]]));
    CHECK(longest <= 2.5 * h_loc);
  }
}
