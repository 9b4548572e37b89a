#pragma once

// Tip values by ball and circle averages, blow-up rescalings of a discrete
// solution, L2 distances (values and gradients) to the cracktip field, the
// stress intensity coefficient and the flattening change of variable.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cracklab/core.hpp"
#include "cracklab/energy.hpp"
#include "cracklab/geometry.hpp"
#include "cracklab/solver.hpp"

namespace cracklab {

// ---------------------------------------------------------------------------
// Tip value
// ---------------------------------------------------------------------------

struct TipValue {
  std::vector<double> radii;          // radii whose windows were crack-free
  std::vector<double> ball_means;     // m_r
  std::vector<double> circle_means;   // averages on the circle window
  std::vector<double> skipped;        // radii whose windows met the crack
  std::vector<double> increments;     // |m_{r_k} - m_{r_{k+1}}|
  double u0 = 0.0;
  double cauchy_exponent = 0.0;       // fitted slope of log|increment| vs log r
};

inline TipValue tip_value(const DiscreteSolution& sol, const CrackSet& K, Vec2 x0,
                          std::vector<double> schedule) {
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  const Triangulation& T = *sol.mesh;
  const MeshLocator loc(T);
  TipValue out;

  for (double r : schedule) {
    Rotation R;
    try {
      R = tip_rotation(K, x0, r);
    } catch (const Error&) {
      out.skipped.push_back(r);
      continue;
    }
    const Vec2 center = x0 + R.apply_inverse({r / 2.0, 0.0});
    const double rho = r / 4.0;
    if (point_to_crack_distance(K, center) <= rho * (1.0 + 1e-6) ||
        dist(center, T.domain.center) + rho > T.domain.radius) {
      out.skipped.push_back(r);
      continue;
    }

    // ball average by clipped element quadrature
    const BallSpec window(center, rho);
    double integral = 0, area = 0;
    for (std::size_t t = 0; t < T.triangles.size(); ++t) {
      const auto& tr = T.triangles[t];
      const Vec2 a = T.vertices[tr[0]], b = T.vertices[tr[1]], c = T.vertices[tr[2]];
      const double dmin = std::min({dist(a, center), dist(b, center), dist(c, center)});
      const double lmax = std::max({dist(a, b), dist(b, c), dist(c, a)});
      if (dmin - lmax > rho) continue;
      const auto u = detail::affine_form(sol, static_cast<int>(t));
      integral += clip_integrate(a, b, c, window, [&](Vec2 p) { return u.c0 + u.grad.dot(p); });
      area += triangle_disk_area(a, b, c, window);
    }
    if (area <= 0) {
      out.skipped.push_back(r);
      continue;
    }
    const double m_ball = integral / area;

    // circle average over the window arc around the opposite direction
    const double half_width = 2.0 * std::asin(1.0 / 8.0);
    const double center_angle = Rotation::normalize_angle(-R.angle);
    double arc_integral = 0, arc_len = 0;
    bool arc_blocked = false;
    if (!K.empty())
      for (const auto& c : circle_crossing_points(K, x0, r)) {
        const double d = std::abs(Rotation::normalize_angle(c.angle - center_angle));
        if (d <= half_width * 1.05) arc_blocked = true;
      }
    if (!arc_blocked) {
      for (const auto& piece : detail::circle_pieces(T, loc, x0, r)) {
        double a0 = piece.phi0, a1 = piece.phi1;
        // overlap with [center_angle - hw, center_angle + hw] modulo 2 pi
        for (int shift = -1; shift <= 1; ++shift) {
          const double lo = std::max(a0, center_angle - half_width + shift * 2.0 * kPi);
          const double hi = std::min(a1, center_angle + half_width + shift * 2.0 * kPi);
          if (hi <= lo) continue;
          const auto u = detail::affine_form(sol, piece.triangle);
          const double c0 = u.c0 + u.grad.dot(x0);
          const Vec2 cg = u.grad * r;
          // integral of (c0 + cg . (cos, sin)) r dphi
          arc_integral += r * (c0 * (hi - lo) + cg.x * (std::sin(hi) - std::sin(lo)) -
                               cg.y * (std::cos(hi) - std::cos(lo)));
          arc_len += r * (hi - lo);
        }
      }
    }

    out.radii.push_back(r);
    out.ball_means.push_back(m_ball);
    out.circle_means.push_back(arc_len > 0 ? arc_integral / arc_len : m_ball);
  }

  if (out.radii.empty()) throw Error("tip_value: the crack blocks every averaging window");
  out.u0 = out.ball_means.back();
  for (std::size_t i = 0; i + 1 < out.radii.size(); ++i)
    out.increments.push_back(std::abs(out.ball_means[i] - out.ball_means[i + 1]));

  // fit |increment| ~ c r^e over informative increments
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < out.increments.size(); ++i) {
    if (out.increments[i] < 1e-14) continue;
    const double lx = std::log(out.radii[i]);
    const double ly = std::log(out.increments[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m >= 2 && m * sxx - sx * sx > 0) out.cauchy_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

// ---------------------------------------------------------------------------
// Cracktip field and blow-up rescaling
// ---------------------------------------------------------------------------

struct CracktipField {
  double C0 = kPi / 2;
  Vec2 tip{0, 0};
  Rotation frame;          // applied before the polar evaluation
  Mat2 A0 = Mat2::identity();  // composition map sqrt(A(0))

  double coefficient() const { return std::sqrt(2.0 * C0 / kPi); }

  double value(Vec2 x) const {
    const Vec2 z = frame.apply(A0.apply(x));
    const double rho = z.norm();
    if (rho == 0) return 0.0;
    const double theta = std::atan2(z.y, z.x);
    return coefficient() * std::sqrt(rho) * std::sin(0.5 * theta);
  }
  Vec2 gradient(Vec2 x) const {
    const Vec2 z = frame.apply(A0.apply(x));
    const double rho = z.norm();
    if (rho < 1e-300) return {0, 0};
    const double theta = std::atan2(z.y, z.x);
    const double c = coefficient() / (2.0 * std::sqrt(rho));
    const Vec2 e_rho{std::cos(theta), std::sin(theta)};
    const Vec2 e_theta{-std::sin(theta), std::cos(theta)};
    const Vec2 gz = e_rho * (c * std::sin(0.5 * theta)) + e_theta * (c * std::cos(0.5 * theta));
    // chain rule through frame then A0 (both act on x)
    const Vec2 gy = frame.inverse().apply(gz);
    return A0.transpose().apply(gy);
  }
};

struct BlowupField {
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> gradient;
};

// u_r(x) = r^{-1/2} (u(x0 + r R^{-1} x) - u0), gradient sqrt(r) R grad u.
inline BlowupField blowup_rescale(const DiscreteSolution& sol, Vec2 x0, double r, double u0,
                                  Rotation R) {
  auto loc = std::make_shared<MeshLocator>(*sol.mesh);
  auto mesh = sol.mesh;
  auto values = std::make_shared<std::vector<double>>(sol.nodal_values);
  auto grads = std::make_shared<std::vector<Vec2>>(sol.element_gradients);
  const double scale = 1.0 / std::sqrt(r);
  BlowupField f;
  f.value = [=](Vec2 x) {
    const Vec2 y = x0 + R.apply_inverse(x) * r;
    std::array<double, 3> bary{};
    const int t = loc->locate(y, &bary);
    if (t < 0) return 0.0;
    const auto& tr = mesh->triangles[t];
    const double u =
        bary[0] * (*values)[tr[0]] + bary[1] * (*values)[tr[1]] + bary[2] * (*values)[tr[2]];
    return scale * (u - u0);
  };
  f.gradient = [=](Vec2 x) {
    const Vec2 y = x0 + R.apply_inverse(x) * r;
    const int t = loc->locate(y);
    if (t < 0) return Vec2{0, 0};
    return R.apply((*grads)[t]) * std::sqrt(r);
  };
  return f;
}

inline BlowupField as_blowup_field(const CracktipField& v0) {
  BlowupField f;
  f.value = [v0](Vec2 x) { return v0.value(x); };
  f.gradient = [v0](Vec2 x) { return v0.gradient(x); };
  return f;
}

// ---------------------------------------------------------------------------
// Distance to the cracktip field over B(0,1)
// ---------------------------------------------------------------------------

struct CracktipDistance {
  double value_distance = 0;
  double gradient_distance = 0;
};

// Annular rings with Gauss quadrature; panels never straddle the slit of the
// reference frame. Below rho_min the reference field's own energy C0 rho is
// added in closed form (any bounded field contributes nothing there).
inline CracktipDistance cracktip_distance(const BlowupField& field, double C0,
                                          Rotation frame = Rotation{}, int theta_panels = 64,
                                          double ring_ratio = 0.7, double rho_min = 1e-9) {
  if (C0 < 0) throw Error("cracktip_distance: C0 must be nonnegative");
  const CracktipField v0{C0, {0, 0}, frame, Mat2::identity()};
  static const double gauss_x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double gauss_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  double val2 = 0, grad2 = 0;
  double rho_hi = 1.0;
  while (rho_hi > rho_min) {
    const double rho_lo = std::max(rho_min, rho_hi * ring_ratio);
    for (int p = 0; p < theta_panels; ++p) {
      const double th_lo = -kPi + 2.0 * kPi * p / theta_panels;
      const double th_hi = -kPi + 2.0 * kPi * (p + 1) / theta_panels;
      for (int i = 0; i < 3; ++i) {
        const double rho = 0.5 * (rho_hi + rho_lo) + 0.5 * (rho_hi - rho_lo) * gauss_x[i];
        for (int j = 0; j < 3; ++j) {
          const double th = 0.5 * (th_hi + th_lo) + 0.5 * (th_hi - th_lo) * gauss_x[j];
          const double w =
              gauss_w[i] * gauss_w[j] * 0.25 * (rho_hi - rho_lo) * (th_hi - th_lo) * rho;
          const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
          const double dv = field.value(x) - v0.value(x);
          const Vec2 dg = field.gradient(x) - v0.gradient(x);
          val2 += w * dv * dv;
          grad2 += w * dg.norm2();
        }
      }
    }
    rho_hi = rho_lo;
  }
  grad2 += C0 * rho_min;                                  // reference field below rho_min
  val2 += (2.0 * C0 / 3.0) * rho_min * rho_min * rho_min; // |v0|^2 below rho_min
  CracktipDistance d;
  d.value_distance = std::sqrt(std::max(0.0, val2));
  d.gradient_distance = std::sqrt(std::max(0.0, grad2));
  return d;
}

inline double sif_coefficient(double C0) {
  if (C0 < 0) throw Error("sif_coefficient: negative energy density");
  return std::sqrt(2.0 * C0 / kPi);
}

// ---------------------------------------------------------------------------
// Change of variable flattening A(x0) to the identity
// ---------------------------------------------------------------------------

struct ChangeOfVariable {
  ProblemSpec transformed_spec;
  DiscreteSolution transformed_solution;
  Mat2 sqrt_A0;
  double lhs = 0;       // energy of the transformed pair in B(y0, r)
  double rhs = 0;       // ellipse energy of the original pair / det(sqrt A0)
  double rel_diff = 0;
  double check_radius = 0;
};

inline ChangeOfVariable change_of_variable(const ProblemSpec& spec, const DiscreteSolution& sol,
                                           Vec2 x0, double check_radius) {
  const Mat2 A0 = spec.A.eval(x0);
  if (!A0.is_symmetric(1e-10)) throw Error("change_of_variable: A(x0) not symmetric");
  const auto ev = A0.sym_eigenvalues();
  if (!(ev[0] > 0)) throw Error("change_of_variable: A(x0) not positive definite");
  const Mat2 S = A0.spd_sqrt();
  const Mat2 Sinv = S.inverse();

  ChangeOfVariable out;
  out.sqrt_A0 = S;
  out.check_radius = check_radius;

  auto mesh2 = std::make_shared<Triangulation>(*sol.mesh);
  for (Vec2& v : mesh2->vertices) v = Sinv.apply(v);
  mesh2->domain = BallSpec(Sinv.apply(sol.mesh->domain.center),
                           sol.mesh->domain.radius / std::sqrt(ev[1]));
  out.transformed_solution.mesh = mesh2;
  out.transformed_solution.nodal_values = sol.nodal_values;
  out.transformed_solution.stats = sol.stats;
  out.transformed_solution.element_gradients.resize(mesh2->triangles.size());
  for (std::size_t t = 0; t < mesh2->triangles.size(); ++t)
    out.transformed_solution.element_gradients[t] =
        out.transformed_solution.gradient_of_element(t);

  ProblemSpec spec2;
  spec2.domain = mesh2->domain;
  if (!spec.crack.empty()) {
    spec2.crack.polylines.reserve(spec.crack.polylines.size());
    for (const auto& pl : spec.crack.polylines) {
      Polyline q;
      q.reserve(pl.size());
      for (Vec2 v : pl) q.push_back(Sinv.apply(v));
      spec2.crack.polylines.push_back(std::move(q));
    }
    if (spec.crack.has_tip) {
      spec2.crack.tip = Sinv.apply(spec.crack.tip);
      spec2.crack.has_tip = true;
    }
  }
  const MatrixField baseA = spec.A.eval;
  spec2.A.eval = [baseA, S, Sinv](Vec2 y) {
    const Mat2 Axy = baseA(S.apply(y));
    return Sinv.mul(Axy).mul(Sinv);
  };
  spec2.A.holder_exponent = spec.A.holder_exponent;
  spec2.A.holder_constant = spec.A.holder_constant / ev[0];
  spec2.A.coercivity = spec.A.coercivity / ev[1];
  spec2.A.upper_bound = spec.A.upper_bound / ev[0];
  spec2.A.constant = spec.A.constant;
  spec2.lambda = spec.lambda;
  if (spec.f) {
    const ScalarField basef = spec.f;
    spec2.f = [basef, S](Vec2 y) { return basef(S.apply(y)); };
  }
  const ScalarField baseg = spec.g;
  spec2.g = [baseg, S](Vec2 y) { return baseg(S.apply(y)); };
  out.transformed_spec = spec2;

  const Vec2 y0 = Sinv.apply(x0);
  out.lhs = energy_in_ball(out.transformed_solution, spec2.A, y0, check_radius);
  out.rhs = energy_in_ellipse(sol, spec.A, x0, check_radius) / S.det();
  out.rel_diff = std::abs(out.lhs - out.rhs) / (std::abs(out.rhs) + 1e-30);
  return out;
}

}  // namespace cracklab
