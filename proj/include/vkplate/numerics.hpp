#pragma once

// Quadrature, finite differences, bracketed root finding and the compactly
// supported bump used as test function in every weak pairing.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "vkplate/errors.hpp"
#include "vkplate/jet.hpp"

namespace vkp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline double checked(double v, const char* what, double at) {
  if (!std::isfinite(v))
    throw EvaluationError(std::string("non-finite ") + what + " at " + fmt_num(at));
  return v;
}

// Gauss-Legendre rule on [-1, 1], full node set (Boost stores the
// non-negative half).
struct GaussRule {
  std::vector<double> x, w;
};

template <unsigned N>
GaussRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  GaussRule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
    } else {
      r.x.push_back(a[i]);
      r.w.push_back(w[i]);
      r.x.push_back(-a[i]);
      r.w.push_back(w[i]);
    }
  }
  return r;
}

inline const GaussRule& gauss_rule(int order) {
  static const std::array<GaussRule, 21> rules = [] {
    std::array<GaussRule, 21> t{};
    t[2] = make_rule<2>();
    t[3] = make_rule<3>();
    t[4] = make_rule<4>();
    t[5] = make_rule<5>();
    t[6] = make_rule<6>();
    t[7] = make_rule<7>();
    t[8] = make_rule<8>();
    t[9] = make_rule<9>();
    t[10] = make_rule<10>();
    t[16] = make_rule<16>();
    t[20] = make_rule<20>();
    return t;
  }();
  if (order < 0 || order > 20 || rules[std::size_t(order)].x.empty())
    throw PreconditionError("unsupported Gauss order " + std::to_string(order));
  return rules[std::size_t(order)];
}

}  // namespace detail

/// Composite trapezoid over (-pi, pi]; spectrally accurate for smooth periodic f.
template <class F>
double integrate_periodic(F&& f, int n) {
  if (n < 8) throw PreconditionError("integrate_periodic needs n >= 8");
  const double h = 2.0 * kPi / n;
  double s = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double th = -kPi + k * h;
    s += detail::checked(f(th), "integrand", th);
  }
  return s * h;
}

/// Composite Gauss-Legendre on [a, b]; exact for degree <= 2*order-1 per panel.
template <class F>
double integrate_interval(F&& f, double a, double b, int panels = 1, int order = 10) {
  if (!(a < b)) throw PreconditionError("integrate_interval needs a < b");
  if (panels < 1) throw PreconditionError("integrate_interval needs panels >= 1");
  const auto& rule = detail::gauss_rule(order);
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h, mid = lo + 0.5 * h;
    double ps = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double x = mid + 0.5 * h * rule.x[i];
      ps += rule.w[i] * detail::checked(f(x), "integrand", x);
    }
    s += 0.5 * h * ps;
  }
  return s;
}

/// Gauss-Legendre on geometrically graded panels accumulating at `a`
/// (panel edges a + (b-a) * ratio^-k, k = 0..levels, plus the innermost
/// panel).  Used for integrands with integrable singularities at `a`.
template <class F>
double integrate_graded(F&& f, double a, double b, int levels = 12, double ratio = 2.0, int order = 10) {
  if (!(a < b)) return 0.0;
  double s = 0.0;
  double hi = b;
  for (int k = 0; k < levels; ++k) {
    const double lo = a + (hi - a) / ratio;
    s += integrate_interval(f, lo, hi, 1, order);
    hi = lo;
  }
  s += integrate_interval(f, a, hi, 1, order);
  return s;
}

/// Safeguarded secant/bisection root finder.  Every iteration at least
/// halves the bracket, so termination is guaranteed.
template <class F>
double find_root_bracketed(F&& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("find_root_bracketed needs tol > 0");
  if (lo > hi) std::swap(lo, hi);
  double flo = detail::checked(f(lo), "function value", lo);
  double fhi = detail::checked(f(hi), "function value", hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw BracketError("no sign change on [" + detail::fmt_num(lo) + ", " + detail::fmt_num(hi) + "]");

  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(flo), std::abs(fhi));
  for (int it = 0; it < 200; ++it) {
    const double width = hi - lo;
    if (width <= tol) break;
    // secant candidate, kept strictly inside the bracket
    double x = hi - fhi * (hi - lo) / (fhi - flo);
    const double guard = 1e-3 * width;
    if (!(x > lo + guard && x < hi - guard)) x = 0.5 * (lo + hi);
    double fx = detail::checked(f(x), "function value", x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (flo < 0.0)) { lo = x; flo = fx; } else { hi = x; fhi = fx; }
    if (hi - lo > 0.5 * width) {
      const double m = 0.5 * (lo + hi);
      const double fm = detail::checked(f(m), "function value", m);
      if (fm == 0.0) return m;
      if ((fm < 0.0) == (flo < 0.0)) { lo = m; flo = fm; } else { hi = m; fhi = fm; }
    }
    if (hi - lo <= tol && std::min(std::abs(flo), std::abs(fhi)) <= floor) break;
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

/// Central difference of order 1..4 with one Richardson level (O(h^4)).
/// `excluded(x)` flags stencil points that must not be sampled.
template <class F>
double fd_derivative(F&& f, double x, int order, double h,
                     const std::function<bool(double)>& excluded = {}) {
  if (order < 1 || order > 4) throw PreconditionError("fd_derivative order must be 1..4");
  if (!(h > 0.0)) throw PreconditionError("fd_derivative needs h > 0");
  auto sample = [&](double t) {
    if (excluded && excluded(t)) throw StencilError("stencil point " + detail::fmt_num(t) + " lies in an excluded region");
    return detail::checked(f(t), "function value", t);
  };
  auto central = [&](double s) {
    switch (order) {
      case 1: return (sample(x + s) - sample(x - s)) / (2 * s);
      case 2: return (sample(x + s) - 2 * sample(x) + sample(x - s)) / (s * s);
      case 3: return (sample(x + 2 * s) - 2 * sample(x + s) + 2 * sample(x - s) - sample(x - 2 * s)) / (2 * s * s * s);
      default:
        return (sample(x + 2 * s) - 4 * sample(x + s) + 6 * sample(x) - 4 * sample(x - s) + sample(x - 2 * s)) / (s * s * s * s);
    }
  };
  const double d1 = central(h), d2 = central(0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

/// Smooth compactly supported test function.  The classical mollifier
/// exp(1 - 1/(1 - t)), t = |x - c|^2 / rho^2, optionally scaled by an
/// amplitude and multiplied by an affine weight  w0 + <wv, (x - c)/rho>.
struct TestFunction {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
  double amplitude = 1.0;
  double w0 = 1.0;
  Vec2 wv{0.0, 0.0};

  bool in_support(const Vec2& x) const { return (x - center).squaredNorm() < radius * radius; }

  template <int N = 4>
  Jet<N> jet(const Vec2& x) const {
    using J = Jet<N>;
    const double rho2 = radius * radius;
    if ((x - center).squaredNorm() >= rho2) return J(0.0);
    const J X = J::variable_x(x.x()) - center.x();
    const J Y = J::variable_y(x.y()) - center.y();
    const J t = (X * X + Y * Y) / rho2;
    J psi = exp(1.0 - reciprocal(1.0 - t)) * amplitude;
    if (w0 != 1.0 || wv.squaredNorm() > 0.0) psi = psi * (w0 + (X * wv.x() + Y * wv.y()) / radius);
    return psi;
  }

  double value(const Vec2& x) const { return jet<4>(x).value(); }
  // partial derivative d^i_x d^j_y, i + j <= 4
  double d(int i, int j, const Vec2& x) const { return jet<4>(x).d(i, j); }
  Vec2 grad(const Vec2& x) const { const auto J = jet<4>(x); return {J.d(1, 0), J.d(0, 1)}; }
};

inline TestFunction make_bump(const Vec2& center, double radius) {
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  TestFunction t;
  t.center = center;
  t.radius = radius;
  return t;
}

/// psi_lambda(x) = lambda^-2 psi((x - c)/lambda + c): the dilation used for degrees.
inline TestFunction dilate(const TestFunction& t, double lambda) {
  TestFunction r = t;
  r.radius = t.radius * lambda;
  r.amplitude = t.amplitude / (lambda * lambda);
  return r;
}

}  // namespace vkp
