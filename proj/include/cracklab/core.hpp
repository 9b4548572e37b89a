#pragma once

// Small planar linear algebra, deterministic number formatting and a few
// shared helpers used by every other header.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace cracklab {

inline constexpr double kPi = 3.14159265358979323846;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  bool operator==(const Vec2&) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
  Vec2 rot90() const { return {-y, x}; }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
  }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Symmetric matrices are stored with both off-diagonal entries to keep the
// algebra explicit; is_symmetric guards against construction slips.
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // [[a,b],[c,d]]

  static Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 diag(double p, double q) { return {p, 0, 0, q}; }
  static Mat2 symmetric(double a, double b, double d) { return {a, b, b, d}; }

  Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Mat2 mul(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 transpose() const { return {a, c, b, d}; }
  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  Mat2 inverse() const {
    const double dt = det();
    if (std::abs(dt) < 1e-300) throw Error("Mat2::inverse: singular matrix");
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
  bool is_symmetric(double tol = 1e-12) const { return std::abs(b - c) <= tol; }

  // Eigenvalues of a symmetric matrix, ascending.
  std::array<double, 2> sym_eigenvalues() const {
    const double m = 0.5 * trace();
    const double disc = std::sqrt(std::max(0.0, m * m - det()));
    return {m - disc, m + disc};
  }

  // Principal square root of a symmetric positive definite matrix:
  // sqrt(M) = (M + sqrt(det) I) / sqrt(trace + 2 sqrt(det)).
  Mat2 spd_sqrt() const {
    if (!is_symmetric(1e-10)) throw Error("spd_sqrt: matrix not symmetric");
    const double dt = det();
    if (dt <= 0 || a <= 0) throw Error("spd_sqrt: matrix not positive definite");
    const double s = std::sqrt(dt);
    const double t = std::sqrt(trace() + 2.0 * s);
    return {(a + s) / t, b / t, c / t, (d + s) / t};
  }

  double quadratic_form(Vec2 v) const { return apply(v).dot(v); }
};

// Plane rotation by `angle` (counterclockwise), kept in (-pi, pi].
struct Rotation {
  double angle = 0.0;

  static double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
  }
  static Rotation of(double a) { return Rotation{normalize_angle(a)}; }

  Vec2 apply(Vec2 v) const {
    const double co = std::cos(angle), si = std::sin(angle);
    return {co * v.x - si * v.y, si * v.x + co * v.y};
  }
  Rotation inverse() const { return of(-angle); }
  Vec2 apply_inverse(Vec2 v) const { return inverse().apply(v); }
  Mat2 matrix() const {
    const double co = std::cos(angle), si = std::sin(angle);
    return {co, -si, si, co};
  }
};

struct BallSpec {
  Vec2 center;
  double radius = 1.0;

  BallSpec() = default;
  BallSpec(Vec2 c, double r) : center(c), radius(r) {
    if (!(r > 0)) throw Error("BallSpec: radius must be positive");
  }
  bool contains(Vec2 p) const { return dist(p, center) <= radius; }
};

// Shortest round-trip decimal representation; used everywhere a double is
// written to an artifact so that repeated runs are byte-identical.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc()) throw Error("format_double: to_chars failed");
  return std::string(buf.data(), res.ptr);
}

// FNV-1a over raw bytes; used to fingerprint serialized meshes.
inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string fnv1a_hex(const std::string& s) {
  const std::uint64_t h = fnv1a(s.data(), s.size());
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h >> (4 * i)) & 0xF];
  return out;
}

}  // namespace cracklab
