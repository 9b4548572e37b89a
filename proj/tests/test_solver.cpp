#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cracklab/solver.hpp"

using namespace cracklab;

namespace {

MeshConfig mesh_cfg(double h, double min_h = 0) {
  MeshConfig c;
  c.target_h = h;
  c.min_h = min_h;
  return c;
}

double cracktip_trace(Vec2 p) {
  const double rho = p.norm();
  return std::sqrt(rho) * std::sin(0.5 * std::atan2(p.y, p.x));
}

double total_energy(const DiscreteSolution& sol, const CoefficientField& A) {
  const Triangulation& T = *sol.mesh;
  double E = 0;
  for (std::size_t t = 0; t < T.triangles.size(); ++t) {
    const Vec2 g = sol.element_gradients[t];
    E += T.triangle_area(t) * A.eval(T.centroid(t)).apply(g).dot(g);
  }
  return E;
}

ProblemSpec harmonic_spec(const CrackSet& K, ScalarField g) {
  ProblemSpec s;
  s.crack = K;
  s.g = std::move(g);
  return s;
}

}  // namespace

TEST_CASE("P1 reproduces linear fields exactly") {
  const Triangulation T = mesh_disk_with_crack(CrackSet{}, mesh_cfg(0.15));
  const ProblemSpec spec = harmonic_spec(CrackSet{}, [](Vec2 p) { return p.x; });
  const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
  for (std::size_t v = 0; v < T.vertices.size(); ++v)
    REQUIRE(std::abs(sol.nodal_values[v] - T.vertices[v].x) < 1e-10);
  CHECK(sol.max_gradient_recompute_error() < 1e-13);
}

TEST_CASE("constant exact solution with a reaction term") {
  const CrackSet K = make_polyline_crack({{-1, 0}, {-0.4, 0.15}, {0, 0}}, Vec2{0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.12));
  ProblemSpec spec;
  spec.crack = K;
  spec.lambda = 1.0;
  spec.f = [](Vec2) { return 1.0; };
  spec.g = [](Vec2) { return 1.0; };
  const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
  for (double v : sol.nodal_values) CHECK(std::abs(v - 1.0) < 1e-9);
}

TEST_CASE("cracktip boundary data: total energy approaches pi/2") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  double prev_err = 1e300;
  double final_err = 0;
  for (double h : {0.16, 0.08, 0.04}) {
    const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(h, h / 64));
    const ProblemSpec spec = harmonic_spec(K, cracktip_trace);
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-11);
    const double E = total_energy(sol, spec.A);
    final_err = std::abs(E - kPi / 2);
    CHECK(final_err < prev_err);
    prev_err = final_err;
  }
  CHECK(final_err < 0.02 * kPi / 2);
}

TEST_CASE("weak residual identities") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.12));

  SECTION("constant solution annihilates every admissible test field") {
    ProblemSpec spec;
    spec.crack = K;
    spec.lambda = 1.0;
    spec.f = [](Vec2) { return 1.0; };
    spec.g = [](Vec2) { return 1.0; };
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
    const TestField phi{
        [](Vec2 p) { return std::max(0.0, 0.6 - p.norm2()); },
        [](Vec2 p) { return p.norm2() < 0.6 ? Vec2{-2 * p.x, -2 * p.y} : Vec2{0, 0}; }};
    CHECK(std::abs(weak_residual(sol, spec, phi)) < 1e-10);
  }

  SECTION("Galerkin orthogonality against a discrete hat") {
    const ProblemSpec spec = harmonic_spec(K, cracktip_trace);
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
    const MeshLocator loc(T);
    // an interior vertex well away from boundary and crack
    int w = -1;
    for (int v = 0; v < static_cast<int>(T.vertices.size()); ++v) {
      if (dist(T.vertices[v], {0.3, 0.4}) < 0.05) w = v;
    }
    REQUIRE(w >= 0);
    auto hat = [&](Vec2 p) -> std::pair<double, Vec2> {
      std::array<double, 3> bary{};
      const int t = loc.locate(p, &bary);
      if (t < 0) return {0.0, {0, 0}};
      const auto& tr = T.triangles[t];
      for (int i = 0; i < 3; ++i)
        if (tr[i] == w) {
          const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
          const double area2 = (b - a).cross(c - a);
          const Vec2 grads[3] = {(c - b).rot90() / area2, (a - c).rot90() / area2,
                                 (b - a).rot90() / area2};
          return {bary[i], grads[i]};
        }
      return {0.0, {0, 0}};
    };
    const TestField phi{[&](Vec2 p) { return hat(p).first; },
                        [&](Vec2 p) { return hat(p).second; }};
    CHECK(std::abs(weak_residual(sol, spec, phi)) < 1e-8);
  }

  SECTION("interpolated cracktip field: residual vanishes under refinement") {
    const ProblemSpec spec = harmonic_spec(K, cracktip_trace);
    const TestField phi{
        [](Vec2 p) {
          const double s = 1.0 - (p - Vec2{0.35, 0.35}).norm2() / 0.09;
          return s > 0 ? s * s * s : 0.0;
        },
        [](Vec2 p) {
          const double s = 1.0 - (p - Vec2{0.35, 0.35}).norm2() / 0.09;
          if (s <= 0) return Vec2{0, 0};
          return (p - Vec2{0.35, 0.35}) * (-6.0 * s * s / 0.09);
        }};
    std::vector<double> errs;
    for (double h : {0.2, 0.1, 0.05}) {
      const Triangulation Th = mesh_disk_with_crack(K, mesh_cfg(h));
      DiscreteSolution interp;
      interp.mesh = std::make_shared<Triangulation>(Th);
      const auto pts = detail::dirichlet_points(Th);
      interp.nodal_values.resize(Th.vertices.size());
      for (std::size_t v = 0; v < Th.vertices.size(); ++v)
        interp.nodal_values[v] = cracktip_trace(pts[v]);
      interp.element_gradients.resize(Th.triangles.size());
      for (std::size_t t = 0; t < Th.triangles.size(); ++t)
        interp.element_gradients[t] = interp.gradient_of_element(t);
      errs.push_back(std::abs(weak_residual(interp, spec, phi)));
    }
    const double rate = std::log2(errs[0] / errs[2]) / 2.0;
    CHECK(rate >= 1.0);
  }

  SECTION("test field touching the boundary is rejected") {
    const ProblemSpec spec = harmonic_spec(K, cracktip_trace);
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-10);
    const TestField phi{[](Vec2) { return 1.0; }, [](Vec2) { return Vec2{0, 0}; }};
    CHECK_THROWS_AS(weak_residual(sol, spec, phi), Error);
  }
}

TEST_CASE("sup bound check") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.12));

  SECTION("constant case: bound met exactly") {
    ProblemSpec spec;
    spec.crack = K;
    spec.lambda = 1.0;
    spec.f = [](Vec2) { return 1.0; };
    spec.g = [](Vec2) { return 1.0; };
    const auto rep = sup_bound_check(assemble_and_solve(spec, T, 1e-12), spec);
    CHECK(rep.pass);
    CHECK(rep.bound == Catch::Approx(1.0));
  }
  SECTION("harmonic case reduces to the maximum principle") {
    const ProblemSpec spec = harmonic_spec(K, cracktip_trace);
    const auto rep = sup_bound_check(assemble_and_solve(spec, T, 1e-11), spec);
    CHECK(rep.bound == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(rep.pass);
  }
  SECTION("reaction-dominated case") {
    ProblemSpec spec;
    spec.crack = K;
    spec.lambda = 2.0;
    spec.f = [](Vec2) { return 3.0; };
    spec.g = [](Vec2) { return 1.0; };
    const auto rep = sup_bound_check(assemble_and_solve(spec, T, 1e-11), spec);
    CHECK(rep.bound == Catch::Approx(3.0));
    CHECK(rep.pass);
  }
}

TEST_CASE("solution map is linear in the data") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.15));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int it = 0; it < 3; ++it) {
    const double a1 = u(rng), b1 = u(rng), a2 = u(rng), b2 = u(rng);
    auto mk = [&](double a, double b) {
      ProblemSpec s;
      s.crack = K;
      s.lambda = 1.0;
      s.f = [a](Vec2 p) { return a * (1.0 + p.x); };
      s.g = [b](Vec2 p) { return b * (p.x - 0.5 * p.y); };
      return s;
    };
    const auto s1 = assemble_and_solve(mk(a1, b1), T, 1e-12);
    const auto s2 = assemble_and_solve(mk(a2, b2), T, 1e-12);
    const auto s12 = assemble_and_solve(mk(a1 + a2, b1 + b2), T, 1e-12);
    double worst = 0;
    for (std::size_t v = 0; v < T.vertices.size(); ++v)
      worst = std::max(worst,
                       std::abs(s12.nodal_values[v] - s1.nodal_values[v] - s2.nodal_values[v]));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("diameter crack decouples the two half disks") {
  const CrackSet K = make_polyline_crack({{-1, 0}, {0, 0}, {1, 0}}, Vec2{0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.15));
  auto top_even = [](Vec2 p) { return p.x * p.x + std::abs(p.y); };
  const ProblemSpec base = harmonic_spec(K, top_even);
  auto perturbed = harmonic_spec(K, [&](Vec2 p) {
    return top_even(p) + (p.y < 0 ? 10.0 * std::sin(3 * p.x) : 0.0);
  });
  const auto s0 = assemble_and_solve(base, T, 1e-12);
  const auto s1 = assemble_and_solve(perturbed, T, 1e-12);
  double worst = 0;
  for (std::size_t v = 0; v < T.vertices.size(); ++v) {
    if (T.vertices[v].y <= 1e-12) continue;  // strictly upper half
    worst = std::max(worst, std::abs(s0.nodal_values[v] - s1.nodal_values[v]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("assembled operator passes the SPD probe") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.2));
  ProblemSpec spec;
  spec.crack = K;
  spec.lambda = 0.5;
  spec.f = [](Vec2) { return 1.0; };
  spec.A = CoefficientField::constant_matrix(Mat2::symmetric(4, 0.5, 1));
  CHECK(spd_probe(spec, T));
}

TEST_CASE("first-order stationarity of the discrete functional") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.15));
  ProblemSpec spec;
  spec.crack = K;
  spec.lambda = 1.0;
  spec.f = [](Vec2 p) { return 1.0 + p.y; };
  spec.g = cracktip_trace;
  const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
  const double F0 = discrete_functional(sol, spec, sol.nodal_values);
  std::set<int> bc(T.outer_vertices.begin(), T.outer_vertices.end());
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int it = 0; it < 10; ++it) {
    std::vector<double> pert = sol.nodal_values;
    for (std::size_t v = 0; v < pert.size(); ++v)
      if (!bc.count(static_cast<int>(v))) pert[v] += 1e-4 * u(rng);
    CHECK(discrete_functional(sol, spec, pert) >= F0 - 1e-10);
  }
}

TEST_CASE("solver error paths") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const CrackSet other = make_segment_crack({0, -1}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.2));
  ProblemSpec spec;
  spec.crack = other;
  spec.g = [](Vec2 p) { return p.x; };
  CHECK_THROWS_AS(assemble_and_solve(spec, T, 1e-10), Error);

  ProblemSpec bad;
  bad.lambda = 0.0;
  bad.f = [](Vec2) { return 1.0; };
  CHECK_THROWS_AS(bad.check(), Error);
}

TEST_CASE("coefficient field validation") {
  const BallSpec dom({0, 0}, 1.0);
  CHECK_NOTHROW(CoefficientField::identity().check_sampled(dom));
  CHECK_NOTHROW(CoefficientField::constant_matrix(Mat2::diag(4, 1)).check_sampled(dom));
  CHECK_NOTHROW(
      CoefficientField::holder_field(0.2, 0.6, Mat2::symmetric(1, 0.2, -0.5), {0, 0}, 1.0)
          .check_sampled(dom));
  CHECK_THROWS_AS(CoefficientField::constant_matrix(Mat2{1, 0.5, 0.1, 1}), Error);  // asym
  CHECK_THROWS_AS(CoefficientField::constant_matrix(Mat2::diag(-1, 1)), Error);
  CHECK_THROWS_AS(
      CoefficientField::holder_field(2.0, 0.6, Mat2::identity(), {0, 0}, 1.0), Error);
}
