#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cracklab/blowup.hpp"
#include "cracklab/energy.hpp"

using namespace cracklab;

namespace {

MeshConfig mesh_cfg(double h, double min_h = 0) {
  MeshConfig c;
  c.target_h = h;
  c.min_h = min_h;
  return c;
}

double cracktip_trace(Vec2 p) {
  return std::sqrt(p.norm()) * std::sin(0.5 * std::atan2(p.y, p.x));
}

// nodal interpolant of an analytic field, slit-aware via sector nudges
DiscreteSolution interpolate(const Triangulation& T, const ScalarField& u) {
  DiscreteSolution sol;
  sol.mesh = std::make_shared<Triangulation>(T);
  const auto pts = detail::dirichlet_points(T);
  sol.nodal_values.resize(T.vertices.size());
  for (std::size_t v = 0; v < T.vertices.size(); ++v) sol.nodal_values[v] = u(pts[v]);
  sol.element_gradients.resize(T.triangles.size());
  for (std::size_t t = 0; t < T.triangles.size(); ++t)
    sol.element_gradients[t] = sol.gradient_of_element(t);
  return sol;
}

}  // namespace

TEST_CASE("energy in ball: analytic cases") {
  const Triangulation T = mesh_disk_with_crack(CrackSet{}, mesh_cfg(0.1));
  SECTION("linear field gives pi r^2") {
    const DiscreteSolution u = interpolate(T, [](Vec2 p) { return p.x; });
    for (double r : {0.2, 0.5, 0.8}) {
      const double E = energy_in_ball(u, CoefficientField::identity(), {0, 0}, r);
      CHECK(std::abs(E - kPi * r * r) / (kPi * r * r) < 1e-6);
    }
  }
  SECTION("constant field gives zero") {
    const DiscreteSolution u = interpolate(T, [](Vec2) { return 3.0; });
    CHECK(std::abs(energy_in_ball(u, CoefficientField::identity(), {0, 0}, 0.5)) < 1e-20);
  }
  SECTION("off-center balls") {
    const DiscreteSolution u = interpolate(T, [](Vec2 p) { return p.x + 2 * p.y; });
    const double E = energy_in_ball(u, CoefficientField::identity(), {0.3, -0.2}, 0.25);
    CHECK(std::abs(E - 5.0 * kPi * 0.0625) / (5.0 * kPi * 0.0625) < 1e-6);
  }
  SECTION("ball larger than the domain is rejected") {
    const DiscreteSolution u = interpolate(T, [](Vec2 p) { return p.x; });
    CHECK_THROWS_AS(energy_in_ball(u, CoefficientField::identity(), {0.5, 0}, 0.8), Error);
  }
}

TEST_CASE("energy of the interpolated cracktip field") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.04, 5e-4));
  const DiscreteSolution u = interpolate(T, cracktip_trace);
  for (double r : {0.2, 0.4}) {
    const double E = energy_in_ball(u, CoefficientField::identity(), {0, 0}, r);
    CHECK(std::abs(E - kPi / 2 * r) / (kPi / 2 * r) < 0.01);
  }
}

TEST_CASE("energy in ellipse") {
  const Triangulation T = mesh_disk_with_crack(CrackSet{}, mesh_cfg(0.1));
  SECTION("identity at the center reduces to the ball") {
    const auto A = CoefficientField::holder_field(0.3, 0.6, Mat2::symmetric(1, 0.3, -0.4),
                                                  {0.1, 0.2}, 1.0);
    const DiscreteSolution u = interpolate(T, [](Vec2 p) { return p.x - 0.7 * p.y; });
    const double Eb = energy_in_ball(u, A, {0.1, 0.2}, 0.3);
    const double Ee = energy_in_ellipse(u, A, {0.1, 0.2}, 0.3);
    CHECK(std::abs(Eb - Ee) < 1e-10 * Eb);
  }
  SECTION("anisotropic analytic value") {
    const auto A = CoefficientField::constant_matrix(Mat2::diag(4, 1));
    const DiscreteSolution u = interpolate(T, [](Vec2 p) { return p.x; });
    const double r = 0.3;
    const double expected = 8.0 * kPi * r * r;  // 4 x ellipse area 2 pi r^2
    const double E = energy_in_ellipse(u, A, {0, 0}, r);
    CHECK(std::abs(E - expected) / expected < 1e-6);
  }
  SECTION("constant field gives zero") {
    const auto A = CoefficientField::constant_matrix(Mat2::diag(4, 1));
    const DiscreteSolution u = interpolate(T, [](Vec2) { return 1.0; });
    CHECK(std::abs(energy_in_ellipse(u, A, {0, 0}, 0.3)) < 1e-20);
  }
}

TEST_CASE("profile of the exact cracktip interpolant is flat at pi/2") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.04, 5e-4));
  const DiscreteSolution u = interpolate(T, cracktip_trace);
  ProblemSpec spec;
  spec.crack = K;
  spec.g = cracktip_trace;
  const auto sched = geometric_schedule(0.5, 0.05);
  const EnergyProfile p = profile(u, spec, {0, 0}, sched, CorrectionParams{});
  p.check_invariants();
  for (double c : p.corrected) CHECK(std::abs(c - kPi / 2) / (kPi / 2) < 0.01);
  for (int n : p.N) CHECK(n == 1);
  // P(r) tracks r for a single-crossing crack
  for (std::size_t i = 0; i < p.radii.size(); ++i)
    CHECK(p.P[i] == Catch::Approx(p.radii[i]).epsilon(0.01));
}

TEST_CASE("profile corrections") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.1));
  const DiscreteSolution u = interpolate(T, [](Vec2) { return 2.0; });
  ProblemSpec spec;
  spec.crack = K;
  SECTION("constant solution: all profile values vanish") {
    const EnergyProfile p = profile(u, spec, {0, 0}, geometric_schedule(0.4, 0.1),
                                    CorrectionParams{});
    for (double e : p.E) CHECK(std::abs(e) < 1e-20);
    for (double c : p.corrected) CHECK(std::abs(c) < 1e-18);
  }
  SECTION("Holder correction with C = 0 is the bare profile") {
    CorrectionParams hc;
    hc.mode = CorrectionParams::Mode::Holder;
    hc.C = 0.0;
    hc.alpha = 0.5;
    const DiscreteSolution w = interpolate(T, [](Vec2 p) { return p.x; });
    const EnergyProfile p = profile(w, spec, {0, 0}, geometric_schedule(0.4, 0.1), hc);
    for (std::size_t i = 0; i < p.radii.size(); ++i) CHECK(p.corrected[i] == p.E_over_r[i]);
  }
}

TEST_CASE("monotone_check flags increases toward zero") {
  EnergyProfile p;
  p.radii = {0.4, 0.3, 0.2, 0.1};
  SECTION("constant profile passes") {
    p.corrected = {1.0, 1.0, 1.0, 1.0};
    CHECK(monotone_check(p, 0.01).empty());
  }
  SECTION("profile increasing in r passes") {
    p.corrected = {1.3, 1.2, 1.1, 1.0};  // stored by decreasing radius
    CHECK(monotone_check(p, 0.01).empty());
  }
  SECTION("one dip of twice the slack yields exactly one violation") {
    p.corrected = {1.0, 1.0, 1.02, 1.0};
    const auto v = monotone_check(p, 0.01);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == 2);
  }
  SECTION("too few radii") {
    p.radii = {0.4};
    p.corrected = {1.0};
    CHECK_THROWS_AS(monotone_check(p, 0.01), Error);
  }
}

TEST_CASE("sif estimate") {
  SECTION("flat profile recovers its level") {
    EnergyProfile p;
    for (double r = 0.5; r > 0.004; r *= 0.7071067811865475) {
      p.radii.push_back(r);
      p.corrected.push_back(kPi / 2);
    }
    const SifEstimate est = sif_estimate(p, 1e-4);
    CHECK(est.C0 == Catch::Approx(kPi / 2).epsilon(1e-12));
    CHECK(est.lower_bound == Catch::Approx(kPi / 2));
    CHECK(est.uncertainty < 1e-12);
  }
  SECTION("zero profile gives zero") {
    EnergyProfile p;
    for (double r = 0.5; r > 0.004; r *= 0.7) {
      p.radii.push_back(r);
      p.corrected.push_back(0.0);
    }
    CHECK(sif_estimate(p, 1e-4).C0 == 0.0);
  }
  SECTION("linear profile has intercept zero") {
    EnergyProfile p;
    for (double r = 0.5; r > 0.004; r *= 0.7) {
      p.radii.push_back(r);
      p.corrected.push_back(5.0 * r);
    }
    CHECK(std::abs(sif_estimate(p, 1e-4).C0) < 1e-12);
  }
  SECTION("needs four admissible radii") {
    EnergyProfile p;
    p.radii = {0.4, 0.2, 0.1};
    p.corrected = {1, 1, 1};
    CHECK_THROWS_AS(sif_estimate(p, 1e-3), Error);
  }
}

TEST_CASE("gauss-green residual") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  SECTION("constant solution with matching data") {
    const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.12));
    ProblemSpec spec;
    spec.crack = K;
    spec.lambda = 1.0;
    spec.f = [](Vec2) { return 1.0; };
    spec.g = [](Vec2) { return 1.0; };
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
    CHECK(gauss_green_residual(sol, spec, {0, 0}, 0.5) < 1e-9);
  }
  SECTION("linear field: identity is sign-exact") {
    const Triangulation T = mesh_disk_with_crack(CrackSet{}, mesh_cfg(0.1));
    ProblemSpec spec;
    spec.g = [](Vec2 p) { return p.x; };
    const DiscreteSolution u = interpolate(T, spec.g);
    CHECK(gauss_green_residual(u, spec, {0, 0}, 0.5) < 1e-10);
    CHECK(gauss_green_residual(u, spec, {0.2, -0.1}, 0.3) < 1e-10);
  }
  SECTION("FEM cracktip solution: residual contracts under refinement") {
    ProblemSpec spec;
    spec.crack = K;
    spec.g = cracktip_trace;
    std::vector<double> res;
    for (double h : {0.16, 0.08, 0.04}) {
      const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(h, h / 64));
      const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-11);
      res.push_back(gauss_green_residual(sol, spec, {0, 0}, 0.5));
    }
    CHECK(res[1] < res[0]);
    CHECK(res[2] < res[1]);
    CHECK(res[2] < 0.01);
  }
}

TEST_CASE("arc flux residuals") {
  const CrackSet K = make_segment_crack({-1, 0}, {0, 0});
  SECTION("constant solution: every arc balances exactly") {
    const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.12));
    ProblemSpec spec;
    spec.crack = K;
    spec.lambda = 1.0;
    spec.f = [](Vec2) { return 1.0; };
    spec.g = [](Vec2) { return 1.0; };
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
    const auto rep = arc_flux_residual(sol, spec, {0, 0}, 0.5);
    REQUIRE(rep.arcs.size() == 1);
    CHECK(std::abs(rep.arcs[0].flux_out) < 1e-10);
    CHECK(std::abs(rep.arcs[0].volume) < 1e-10);
  }
  SECTION("harmonic cracktip solution: arc fluxes contract under refinement") {
    ProblemSpec spec;
    spec.crack = K;
    spec.g = cracktip_trace;
    std::vector<double> res;
    for (double h : {0.16, 0.08, 0.04}) {
      const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(h, h / 64));
      const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-11);
      res.push_back(arc_flux_residual(sol, spec, {0, 0}, 0.5).max_residual);
    }
    CHECK(res[2] < res[0]);
    CHECK(res[2] < 0.02);
  }
  SECTION("volume term carries the right sign") {
    // diameter crack, reaction problem: flux out of each half equals the
    // volume integral of (lambda u - f) over that half
    const CrackSet D = make_polyline_crack({{-1, 0}, {0, 0}, {1, 0}}, Vec2{0, 0});
    const Triangulation T = mesh_disk_with_crack(D, mesh_cfg(0.08));
    ProblemSpec spec;
    spec.crack = D;
    spec.lambda = 1.0;
    spec.f = [](Vec2 p) { return 1.0 + p.x + 0.5 * p.y; };
    spec.g = [](Vec2 p) { return 0.2 * p.x; };
    const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-12);
    const auto rep = arc_flux_residual(sol, spec, {0, 0}, 0.5);
    REQUIRE(rep.arcs.size() == 2);
    for (const auto& arc : rep.arcs) {
      CHECK(std::abs(arc.volume) > 1e-3);  // nontrivial both sides
      CHECK(std::abs(arc.flux_out - arc.volume) <
            0.1 * (std::abs(arc.volume) + arc.normalization));
    }
  }
}

TEST_CASE("wirtinger inequality") {
  SECTION("constant samples") {
    const auto res = wirtinger_check(std::vector<double>(64, 2.5), kPi);
    CHECK(res.lhs == Catch::Approx(0.0).margin(1e-24));
    CHECK(res.rhs == Catch::Approx(0.0).margin(1e-24));
  }
  SECTION("equality case sin(theta/2) on (-pi, pi)") {
    const int n = 4096;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
      const double th = -kPi + 2.0 * kPi * i / (n - 1);
      g[i] = std::sin(0.5 * th);
    }
    const auto res = wirtinger_check(g, 2.0 * kPi);
    CHECK(std::abs(res.lhs - kPi) < 1e-6);
    CHECK(std::abs(res.rhs - kPi) < 1e-6);
  }
  SECTION("random trigonometric samples satisfy the inequality") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> amp(-1, 1);
    for (int it = 0; it < 100; ++it) {
      const int n = 2048;
      const double L = 0.5 + 2.5 * std::abs(amp(rng));  // arc length
      const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng), phase = amp(rng);
      std::vector<double> g(n);
      for (int i = 0; i < n; ++i) {
        const double s = L * i / (n - 1);             // arc-length coordinate
        const double base = kPi * s / L;              // lowest admissible mode
        g[i] = a1 * std::sin(base + phase) + a2 * std::cos(base) + a3;
      }
      const auto res = wirtinger_check(g, L);
      CHECK(res.lhs <= res.rhs + 1e-8 + 1e-4 * res.rhs);
    }
  }
  SECTION("too few samples") {
    CHECK_THROWS_AS(wirtinger_check(std::vector<double>(8, 1.0), 1.0), Error);
  }
}

TEST_CASE("gronwall transforms") {
  std::vector<double> radii;
  for (double r = 1e-3; r < 0.5; r *= 1.12) radii.push_back(r);

  SECTION("C = 0 leaves the profile untouched") {
    std::vector<double> E(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) E[i] = radii[i] * (1.0 + radii[i]);
    const auto res = gronwall_transforms(radii, E, 0.0, 0.5);
    for (std::size_t i = 0; i < radii.size(); ++i)
      CHECK(res.v1[i] == Catch::Approx(E[i] / radii[i]).epsilon(1e-14));
  }
  SECTION("zero crossing counts give a vanishing particular solution") {
    std::vector<double> E(radii.size(), 1.0), N(radii.size(), 0.0);
    const auto res = gronwall_transforms(radii, E, 2.0, 0.5, N);
    for (double g : res.G_over_r) CHECK(g == 0.0);
  }
  SECTION("equality solution is mapped to a constant") {
    const double C = 1.7, alpha = 0.35;
    std::vector<double> E(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i)
      E[i] = radii[i] * std::pow(1.0 + C * std::pow(radii[i], alpha), -1.0 / alpha);
    const auto res = gronwall_transforms(radii, E, C, alpha);
    for (double v : res.v1) CHECK(std::abs(v - 1.0) < 1e-10);
  }
  SECTION("random profiles satisfying the sampled inequality stay nondecreasing") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u01(0.05, 0.6);
    for (int it = 0; it < 100; ++it) {
      const double C = 0.2 + 2.0 * u01(rng), alpha = 0.2 + 0.5 * u01(rng);
      auto h_factor = [&](double r) {
        return r / std::pow(C * std::pow(r, alpha) + 1.0, 1.0 / alpha);
      };
      std::vector<double> E(radii.size());
      double v = 1.0 + u01(rng);
      for (std::size_t i = 0; i < radii.size(); ++i) {
        if (i > 0) v *= 1.0 + u01(rng);
        E[i] = v * h_factor(radii[i]);
      }
      // sampled differential inequality at the left grid point
      for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
        const double dr = radii[i + 1] - radii[i];
        const double slope = (E[i + 1] - E[i]) / dr;
        const double factor = radii[i] + C * std::pow(radii[i], 1.0 + alpha);
        REQUIRE(E[i] <= factor * slope * (1.0 + 1e-12));
      }
      const auto res = gronwall_transforms(radii, E, C, alpha);
      for (std::size_t i = 0; i + 1 < res.v1.size(); ++i)
        CHECK(res.v1[i + 1] >= res.v1[i] * (1.0 - 1e-12));
    }
  }
  SECTION("G(r)/r tends to zero on random crossing counts") {
    std::mt19937 rng(123);
    std::uniform_int_distribution<int> counts(0, 5);
    for (int it = 0; it < 20; ++it) {
      std::vector<double> wide;
      for (double r = 1e-6; r < 0.5; r *= 1.3) wide.push_back(r);
      std::vector<double> E(wide.size(), 1.0), N(wide.size());
      for (double& n : N) n = counts(rng);
      const auto res = gronwall_transforms(wide, E, 1.3, 0.4, N);
      double head = 0, tail = 0;
      for (int i = 0; i < 5; ++i) head = std::max(head, std::abs(res.G_over_r[i]));
      for (double g : res.G_over_r) tail = std::max(tail, std::abs(g));
      if (tail > 0) CHECK(head <= 0.05 * tail);
      CHECK(std::abs(res.G_over_r.front()) < 1e-4);
    }
  }
  SECTION("error paths") {
    CHECK_THROWS_AS(gronwall_transforms({0.1, 0.05}, {1, 1}, 1.0, 0.5), Error);  // descending
    CHECK_THROWS_AS(gronwall_transforms({-0.1, 0.05}, {1, 1}, 1.0, 0.5), Error);
    CHECK_THROWS_AS(gronwall_transforms({0.05, 0.1}, {1.0}, 1.0, 0.5), Error);
  }
}

TEST_CASE("energy is nondecreasing in the radius for any solution") {
  const CrackSet K = make_polyline_crack({{-1, 0}, {-0.4, 0.15}, {0, 0}}, Vec2{0, 0});
  const Triangulation T = mesh_disk_with_crack(K, mesh_cfg(0.08));
  ProblemSpec spec;
  spec.crack = K;
  spec.g = cracktip_trace;
  const DiscreteSolution sol = assemble_and_solve(spec, T, 1e-11);
  double prev = 0;
  for (double r : {0.1, 0.2, 0.3, 0.5, 0.7}) {
    const double E = energy_in_ball(sol, spec.A, {0, 0}, r);
    CHECK(E >= prev - 1e-14);
    prev = E;
  }
}
