#pragma once

// Singular curves (interfaces), the plate domain and the intersection
// queries needed by probes, loop integrals and split quadrature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vkplate/tensor.hpp"

namespace vkp {

enum class CurveKind { Segment, Circle };

/// A singular curve with its orientation.  Arclength s runs along t, and
/// t = nu rotated by -pi/2 (equivalently nu = e3 x t).  Jumps are taken as
/// plus-side minus minus-side, the minus side being the one nu points into.
struct InterfaceSpec {
  std::string name;
  CurveKind kind = CurveKind::Segment;
  Vec2 a{0, 0}, b{1, 0};  // segment from s = 0 to s = |b - a|
  Vec2 center{0, 0};      // circle
  double r0 = 1.0;
  bool inward = true;     // circle normal points to the center (k = 1/r0)
  double theta_start = 0.0;
  double gamma0_value = 0.0;                 // fold strength when constant
  std::function<double(double)> gamma0_fn;   // optional s-dependent strength

  double gamma0(double s) const { return gamma0_fn ? gamma0_fn(s) : gamma0_value; }
  bool gamma0_constant() const { return !gamma0_fn; }

  bool closed() const { return kind == CurveKind::Circle; }
  double length() const { return kind == CurveKind::Segment ? (b - a).norm() : 2.0 * kPi * r0; }

  double angle_at(double s) const { return inward ? theta_start + s / r0 : theta_start - s / r0; }

  Vec2 point(double s) const {
    if (kind == CurveKind::Segment) return a + s * tangent(s);
    const double th = angle_at(s);
    return center + r0 * Vec2(std::cos(th), std::sin(th));
  }
  Vec2 tangent(double s) const {
    if (kind == CurveKind::Segment) return (b - a).normalized();
    const double th = angle_at(s);
    const Vec2 et(-std::sin(th), std::cos(th));
    return inward ? et : Vec2(-et);
  }
  Vec2 normal(double s) const { return perp(tangent(s)); }
  double curvature() const { return kind == CurveKind::Segment ? 0.0 : (inward ? 1.0 / r0 : -1.0 / r0); }

  /// Closest-point arclength and distance.
  double project(const Vec2& x) const {
    if (kind == CurveKind::Segment) {
      const Vec2 t = tangent(0);
      return std::clamp((x - a).dot(t), 0.0, length());
    }
    const Vec2 d = x - center;
    double th = std::atan2(d.y(), d.x());
    double s = inward ? (th - theta_start) * r0 : (theta_start - th) * r0;
    const double L = length();
    s = std::fmod(s, L);
    if (s < 0) s += L;
    return s;
  }
  double distance(const Vec2& x) const {
    if (kind == CurveKind::Segment) return (x - point(project(x))).norm();
    return std::abs((x - center).norm() - r0);
  }
};

/// Segment from p to q with the requested normal; endpoints are ordered so
/// that nu = e3 x t.
inline InterfaceSpec make_segment(const std::string& name, const Vec2& p, const Vec2& q, const Vec2& nu, double gamma0) {
  const Vec2 d = q - p;
  if (d.norm() == 0.0) throw GeometryError("degenerate segment " + name);
  const Vec2 n = nu.normalized();
  if (std::abs(n.dot(d.normalized())) > 1e-12) throw GeometryError("normal of " + name + " is not orthogonal to the segment");
  InterfaceSpec s;
  s.name = name;
  s.kind = CurveKind::Segment;
  if (perp(d.normalized()).dot(n) > 0) { s.a = p; s.b = q; } else { s.a = q; s.b = p; }
  s.gamma0_value = gamma0;
  return s;
}

inline InterfaceSpec make_circle(const std::string& name, const Vec2& c, double r0, bool inward, double gamma0) {
  if (!(r0 > 0)) throw GeometryError("circle radius must be positive");
  InterfaceSpec s;
  s.name = name;
  s.kind = CurveKind::Circle;
  s.center = c;
  s.r0 = r0;
  s.inward = inward;
  s.gamma0_value = gamma0;
  return s;
}

/// Plate domain: a disk or an axis-aligned rectangle.
struct Domain {
  enum class Kind { Disk, Rect } kind = Kind::Disk;
  Vec2 center{0, 0};
  double radius = 1.0;
  Vec2 lo{-1, -1}, hi{1, 1};

  static Domain disk(const Vec2& c, double R) { Domain d; d.kind = Kind::Disk; d.center = c; d.radius = R; return d; }
  static Domain rect(const Vec2& lo, const Vec2& hi) { Domain d; d.kind = Kind::Rect; d.lo = lo; d.hi = hi; return d; }

  bool contains(const Vec2& x) const {
    if (kind == Kind::Disk) return (x - center).norm() < radius;
    return x.x() > lo.x() && x.x() < hi.x() && x.y() > lo.y() && x.y() < hi.y();
  }
  // distance from x to the complement (negative outside)
  double depth(const Vec2& x) const {
    if (kind == Kind::Disk) return radius - (x - center).norm();
    return std::min({x.x() - lo.x(), hi.x() - x.x(), x.y() - lo.y(), hi.y() - x.y()});
  }
  double scale() const {
    if (kind == Kind::Disk) return radius;
    return 0.5 * std::max(hi.x() - lo.x(), hi.y() - lo.y());
  }
  template <class Rng>
  Vec2 sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (kind == Kind::Rect) return {lo.x() + (hi.x() - lo.x()) * u(rng), lo.y() + (hi.y() - lo.y()) * u(rng)};
    const double r = radius * std::sqrt(u(rng)), th = 2.0 * kPi * u(rng);
    return center + r * Vec2(std::cos(th), std::sin(th));
  }
};

namespace geom {

/// Radii r > 0 at which the ray p + r(cos th, sin th) meets the interface.
inline std::vector<double> ray_hits(const InterfaceSpec& S, const Vec2& p, double th) {
  const Vec2 e(std::cos(th), std::sin(th));
  std::vector<double> out;
  if (S.kind == CurveKind::Segment) {
    const Vec2 d = S.b - S.a;
    const double den = e.x() * (-d.y()) - e.y() * (-d.x());  // det[e, -d]
    if (std::abs(den) < 1e-300) return out;
    const Vec2 w = S.a - p;
    const double r = (w.x() * (-d.y()) - w.y() * (-d.x())) / den;
    const double u = (e.x() * w.y() - e.y() * w.x()) / den;
    if (r > 0 && u >= 0 && u <= 1) out.push_back(r);
    return out;
  }
  const Vec2 w = p - S.center;
  const double bq = w.dot(e), cq = w.squaredNorm() - S.r0 * S.r0;
  const double disc = bq * bq - cq;
  if (disc <= 0) return out;
  const double sq = std::sqrt(disc);
  for (double r : {-bq - sq, -bq + sq})
    if (r > 0) out.push_back(r);
  return out;
}

/// Points where the circle |x - c| = eps meets the interface, as angles about c.
inline std::vector<double> circle_hits(const InterfaceSpec& S, const Vec2& c, double eps) {
  std::vector<double> out;
  if (S.kind == CurveKind::Segment) {
    const Vec2 d = S.b - S.a, w = S.a - c;
    const double A = d.squaredNorm(), B = 2 * w.dot(d), C = w.squaredNorm() - eps * eps;
    const double disc = B * B - 4 * A * C;
    if (disc < 0) return out;
    const double sq = std::sqrt(disc);
    for (double u : {(-B - sq) / (2 * A), (-B + sq) / (2 * A)}) {
      if (u < 0 || u > 1) continue;
      const Vec2 x = S.a + u * d - c;
      out.push_back(std::atan2(x.y(), x.x()));
    }
    if (out.size() == 2 && std::abs(out[0] - out[1]) < 1e-14) out.pop_back();
    return out;
  }
  const Vec2 d = S.center - c;
  const double D = d.norm();
  if (D < 1e-300) return out;  // concentric: no transversal crossing
  const double x = (D * D + eps * eps - S.r0 * S.r0) / (2 * D);
  const double h2 = eps * eps - x * x;
  if (h2 <= 0) return out;
  const double base = std::atan2(d.y(), d.x()), da = std::acos(std::clamp(x / eps, -1.0, 1.0));
  out.push_back(base - da);
  out.push_back(base + da);
  return out;
}

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2 * kPi);
  if (a <= 0) a += 2 * kPi;
  return a - kPi;  // (-pi, pi]
}

}  // namespace geom
}  // namespace vkp
