#pragma once

// Analytic field classes for the singular solutions, type-erased scalar and
// symmetric-tensor fields with exact jets, the plate state (FieldBundle) and
// one-sided limits / jumps / averages across interfaces.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vkplate/geometry.hpp"

namespace vkp {

// ---------------------------------------------------------------- material

struct Material {
  double E = 1.0;   // stretching modulus
  double D = 1.0;   // bending modulus
  double nu = 0.3;  // Poisson ratio

  void validate() const {
    if (!(E > 0)) throw PreconditionError("material: E must be positive");
    if (!(D > 0)) throw PreconditionError("material: D must be positive");
    if (!(nu > -1.0 && nu < 0.5)) throw PreconditionError("material: nu must lie in (-1, 0.5)");
  }
};

// --------------------------------------------------------- angular profile

struct Harmonic {
  double amplitude = 0.0;
  double wavenumber = 0.0;  // real, k >= 0
  double phase = 0.0;       // term = amplitude * cos(k theta + phase)
};

/// g(theta) on (-pi, pi] as a piecewise harmonic sum.  Pieces partition
/// (-pi, pi]; the +-pi cut always separates the first and last piece, so a
/// profile without breaks is stored as two identical pieces split at 0.
struct AngularProfile {
  struct Piece {
    double lo, hi;
    std::vector<Harmonic> terms;
  };
  std::vector<Piece> pieces;
  std::vector<bool> is_break;  // is_break[i]: boundary between piece i and i+1 is declared (last entry: the cut)

  static AngularProfile harmonic(const std::vector<Harmonic>& terms) {
    AngularProfile p;
    p.pieces = {{-kPi, 0.0, terms}, {0.0, kPi, terms}};
    p.is_break = {false, false};
    p.validate();
    return p;
  }

  /// breaks: strictly increasing angles in (-pi, pi); terms.size() == breaks.size() + 1.
  static AngularProfile piecewise(const std::vector<double>& breaks, const std::vector<std::vector<Harmonic>>& terms) {
    if (terms.size() != breaks.size() + 1) throw PreconditionError("profile: need one term set per sector");
    if (breaks.empty()) return harmonic(terms[0]);
    AngularProfile p;
    double lo = -kPi;
    for (std::size_t i = 0; i <= breaks.size(); ++i) {
      const double hi = i < breaks.size() ? breaks[i] : kPi;
      if (!(hi > lo) || (i < breaks.size() && !(hi < kPi))) throw PreconditionError("profile: breaks must increase inside (-pi, pi)");
      p.pieces.push_back({lo, hi, terms[i]});
      p.is_break.push_back(true);
      lo = hi;
    }
    p.validate();
    return p;
  }

  int piece_of(double th) const {
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
      if (th <= pieces[i].hi) return int(i);
    return int(pieces.size()) - 1;
  }

  /// n-th derivative of the piece formula at theta (theta on the piece's branch).
  double g(int piece, double th, int n = 0) const {
    double v = 0.0;
    for (const auto& h : pieces[std::size_t(piece)].terms)
      v += h.amplitude * std::pow(h.wavenumber, n) * std::cos(h.wavenumber * th + h.phase + n * 0.5 * kPi);
    return v;
  }

  /// g evaluated on theta in (-pi, pi] using the containing piece.
  double operator()(double th, int n = 0) const { return g(piece_of(th), th, n); }

  template <int N>
  Jet<N> jet(int piece, const Jet<N>& th) const {
    Jet<N> v(0.0);
    for (const auto& h : pieces[std::size_t(piece)].terms) v += h.amplitude * cos(th * h.wavenumber + h.phase);
    return v;
  }

  /// Branch of the angle closest to the piece interval.
  double branch(int piece, double th) const {
    const auto& P = pieces[std::size_t(piece)];
    double best = th, bestd = 1e300;
    for (double c : {th - 2 * kPi, th, th + 2 * kPi}) {
      const double d = c < P.lo ? P.lo - c : (c > P.hi ? c - P.hi : 0.0);
      if (d < bestd) { bestd = d; best = c; }
    }
    return best;
  }

  /// Boundaries between consecutive pieces, with the cut reported at +pi.
  std::vector<double> boundaries() const {
    std::vector<double> b;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) b.push_back(pieces[i].hi);
    b.push_back(kPi);
    return b;
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i)
      for (int k = 0; k <= 16; ++k) {
        const double th = pieces[i].lo + (pieces[i].hi - pieces[i].lo) * k / 16.0;
        m = std::max(m, std::abs(g(int(i), th)));
      }
    return m;
  }

  /// Continuity of g at every boundary (including the cut).
  void validate() const {
    if (pieces.empty()) throw PreconditionError("profile: no pieces");
    for (const auto& P : pieces)
      for (const auto& h : P.terms)
        if (!(h.wavenumber >= 0.0)) throw PreconditionError("profile: wavenumber must be nonnegative");
    const double tol = 1e-9 * std::max(1.0, max_abs());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const std::size_t j = (i + 1) % pieces.size();
      const double left = g(int(i), pieces[i].hi);
      const double right = g(int(j), j == 0 ? -kPi : pieces[j].lo);
      if (std::abs(left - right) > tol)
        throw PreconditionError("profile: g is discontinuous at theta = " + detail::fmt_num(pieces[i].hi));
    }
  }

  /// True if g is smooth and 2pi-periodic (single term set, integer wavenumbers).
  bool smooth_periodic() const {
    for (const auto& P : pieces) {
      if (P.terms.size() != pieces[0].terms.size()) return false;
      for (std::size_t k = 0; k < P.terms.size(); ++k) {
        const auto &a = P.terms[k], &b = pieces[0].terms[k];
        if (a.amplitude != b.amplitude || a.wavenumber != b.wavenumber || a.phase != b.phase) return false;
        if (std::abs(a.wavenumber - std::round(a.wavenumber)) > 0) return false;
      }
    }
    return true;
  }
};

// ------------------------------------------------------- polar jets helper

namespace detail {

template <int N>
struct PolarJets {
  Jet<N> X, Y;
  double x0, y0;
};

template <int N>
PolarJets<N> local_xy(const Vec2& x, const Vec2& o) {
  return {Jet<N>::variable_x(x.x()) - o.x(), Jet<N>::variable_y(x.y()) - o.y(), x.x() - o.x(), x.y() - o.y()};
}

// theta jet on the branch through th0
template <int N>
Jet<N> angle_jet(const PolarJets<N>& p, double th0) {
  const Jet<N> num = p.X * (-p.y0) + p.Y * p.x0;
  const Jet<N> den = p.X * p.x0 + p.Y * p.y0;
  return atan(num / den) + th0;
}

}  // namespace detail

// ---------------------------------------------------------- field classes

/// w = r g(theta) about the origin O.
struct ConicalDisplacement {
  Vec2 origin{0, 0};
  AngularProfile profile;

  int region_of(const Vec2& x) const {
    const Vec2 d = x - origin;
    return profile.piece_of(std::atan2(d.y(), d.x()));
  }
  template <int N>
  Jet<N> jet(const Vec2& x, int region) const {
    const auto p = detail::local_xy<N>(x, origin);
    const double r2 = p.x0 * p.x0 + p.y0 * p.y0;
    if (r2 == 0.0) throw EvaluationError("conical field evaluated at its tip");
    const double th0 = profile.branch(region, std::atan2(p.y0, p.x0));
    const Jet<N> th = detail::angle_jet(p, th0);
    return sqrt(p.X * p.X + p.Y * p.Y) * profile.jet(region, th);
  }
};

/// phi = c ln r about O.
struct LogStressFunction {
  Vec2 origin{0, 0};
  double c = 0.0;

  int region_of(const Vec2&) const { return 0; }
  template <int N>
  Jet<N> jet(const Vec2& x, int) const {
    const auto p = detail::local_xy<N>(x, origin);
    if (p.x0 == 0.0 && p.y0 == 0.0) throw EvaluationError("log stress function evaluated at its center");
    return log(p.X * p.X + p.Y * p.Y) * (0.5 * c);
  }
};

/// w = f(q), q = <x, c>, f a cubic on each side of q0.
struct PiecewiseCylindricalField {
  Vec2 c{1, 0};
  double q0 = 0.0;
  std::array<double, 4> left{}, right{};  // coefficients of 1, q, q^2, q^3

  int region_of(const Vec2& x) const { return x.dot(c) < q0 ? 0 : 1; }
  template <int N>
  Jet<N> jet(const Vec2& x, int region) const {
    const Jet<N> q = Jet<N>::variable_x(x.x()) * c.x() + Jet<N>::variable_y(x.y()) * c.y();
    const auto& k = region == 0 ? left : right;
    return ((q * k[3] + k[2]) * q + k[1]) * q + k[0];
  }
  double f(double q, int n = 0) const {
    const auto& k = q < q0 ? left : right;
    switch (n) {
      case 0: return ((k[3] * q + k[2]) * q + k[1]) * q + k[0];
      case 1: return (3 * k[3] * q + 2 * k[2]) * q + k[1];
      case 2: return 6 * k[3] * q + 2 * k[2];
      case 3: return 6 * k[3];
      default: return 0.0;
    }
  }
};

/// w = <G_i, x - O> in the sector between consecutive ray angles.
struct SectorAffineField {
  Vec2 origin{0, 0};
  std::vector<double> angles;  // increasing in (-pi, pi]
  std::vector<Vec2> gradients; // gradients[i]: sector (angles[i], angles[i+1]) cyclically

  int region_of(const Vec2& x) const {
    const Vec2 d = x - origin;
    const double th = std::atan2(d.y(), d.x());
    const int n = int(angles.size());
    for (int i = 0; i + 1 < n; ++i)
      if (th > angles[std::size_t(i)] && th <= angles[std::size_t(i + 1)]) return i;
    return n - 1;
  }
  template <int N>
  Jet<N> jet(const Vec2& x, int region) const {
    const auto p = detail::local_xy<N>(x, origin);
    const Vec2& G = gradients[std::size_t(region)];
    return p.X * G.x() + p.Y * G.y();
  }
};

/// f(r) = c0 + c1 r + clog ln r + c2 r^2 inside / outside r_break about a center.
struct RadialPiecewiseField {
  struct Coeffs { double c0 = 0, c1 = 0, clog = 0, c2 = 0; };
  Vec2 center{0, 0};
  double r_break = 1.0;
  Coeffs inner, outer;

  int region_of(const Vec2& x) const { return (x - center).norm() < r_break ? 0 : 1; }
  template <int N>
  Jet<N> jet(const Vec2& x, int region) const {
    const auto p = detail::local_xy<N>(x, center);
    const Coeffs& k = region == 0 ? inner : outer;
    const Jet<N> r2 = p.X * p.X + p.Y * p.Y;
    Jet<N> v = r2 * k.c2 + k.c0;
    if (k.c1 != 0.0 || k.clog != 0.0) {
      if (r2.value() == 0.0) throw EvaluationError("radial field evaluated at its center");
      if (k.c1 != 0.0) v += sqrt(r2) * k.c1;
      if (k.clog != 0.0) v += log(r2) * (0.5 * k.clog);
    }
    return v;
  }
};

// ---------------------------------------------------- type-erased fields

namespace detail {
template <class Fn>
struct AnalyticScalar {
  Fn fn;
  std::function<int(const Vec2&)> reg;
  int region_of(const Vec2& x) const { return reg(x); }
  template <int N>
  Jet<N> jet(const Vec2& x, int r) const { return fn(Jet<N>::variable_x(x.x()), Jet<N>::variable_y(x.y()), r); }
};
}  // namespace detail

template <int N>
using ScalarFn = std::function<Jet<N>(const Vec2& x, const Vec2& ref)>;

/// Scalar field with jets of order 0..5.  `ref` selects the region whose
/// closed-form expression is evaluated at x (ref = x for bulk evaluation,
/// ref = x -+ delta nu for one-sided limits on an interface).
struct ScalarField {
  std::string kind = "zero";
  std::function<int(const Vec2&)> region_of = [](const Vec2&) { return 0; };
  ScalarFn<0> f0;
  ScalarFn<1> f1;
  ScalarFn<2> f2;
  ScalarFn<3> f3;
  ScalarFn<4> f4;
  ScalarFn<5> f5;
  bool is_zero = true;

  template <int N>
  Jet<N> jet(const Vec2& x, const Vec2& ref) const {
    if (is_zero) return Jet<N>(0.0);
    if constexpr (N == 0) return f0(x, ref);
    else if constexpr (N == 1) return f1(x, ref);
    else if constexpr (N == 2) return f2(x, ref);
    else if constexpr (N == 3) return f3(x, ref);
    else if constexpr (N == 4) return f4(x, ref);
    else { static_assert(N == 5, "scalar field jets are available up to order 5"); return f5(x, ref); }
  }
  template <int N>
  Jet<N> jet(const Vec2& x) const { return jet<N>(x, x); }

  double value(const Vec2& x) const { return jet<0>(x).value(); }
  Vec2 grad(const Vec2& x, const Vec2& ref) const { const auto J = jet<1>(x, ref); return {J.d(1, 0), J.d(0, 1)}; }
  Mat2 hess(const Vec2& x, const Vec2& ref) const {
    const auto J = jet<2>(x, ref);
    Mat2 h;
    h << J.d(2, 0), J.d(1, 1), J.d(1, 1), J.d(0, 2);
    return h;
  }
  Vec2 grad(const Vec2& x) const { return grad(x, x); }
  Mat2 hess(const Vec2& x) const { return hess(x, x); }

  static ScalarField zero() { return ScalarField{}; }

  template <class T>
  static ScalarField wrap(T obj, std::string kind) {
    auto o = std::make_shared<const T>(std::move(obj));
    ScalarField f;
    f.kind = std::move(kind);
    f.is_zero = false;
    f.region_of = [o](const Vec2& x) { return o->region_of(x); };
    f.f0 = [o](const Vec2& x, const Vec2& r) { return o->template jet<0>(x, o->region_of(r)); };
    f.f1 = [o](const Vec2& x, const Vec2& r) { return o->template jet<1>(x, o->region_of(r)); };
    f.f2 = [o](const Vec2& x, const Vec2& r) { return o->template jet<2>(x, o->region_of(r)); };
    f.f3 = [o](const Vec2& x, const Vec2& r) { return o->template jet<3>(x, o->region_of(r)); };
    f.f4 = [o](const Vec2& x, const Vec2& r) { return o->template jet<4>(x, o->region_of(r)); };
    f.f5 = [o](const Vec2& x, const Vec2& r) { return o->template jet<5>(x, o->region_of(r)); };
    return f;
  }

  /// From a generic callable fn(X, Y, region) on jets of any order.
  template <class Fn>
  static ScalarField analytic(Fn fn, std::function<int(const Vec2&)> region = [](const Vec2&) { return 0; },
                              std::string kind = "analytic") {
    return wrap(detail::AnalyticScalar<Fn>{std::move(fn), std::move(region)}, std::move(kind));
  }
};

template <int N>
using SymJet = std::array<Jet<N>, 3>;  // components 11, 12, 22

template <int N>
using TensorFn = std::function<SymJet<N>(const Vec2& x, const Vec2& ref)>;

/// Symmetric tensor field with jets of order 0..3.
struct TensorField {
  std::string kind = "zero";
  TensorFn<0> f0;
  TensorFn<1> f1;
  TensorFn<2> f2;
  TensorFn<3> f3;
  bool is_zero = true;

  template <int N>
  SymJet<N> jet(const Vec2& x, const Vec2& ref) const {
    if (is_zero) return {Jet<N>(0.0), Jet<N>(0.0), Jet<N>(0.0)};
    if constexpr (N == 0) return f0(x, ref);
    else if constexpr (N == 1) return f1(x, ref);
    else if constexpr (N == 2) return f2(x, ref);
    else { static_assert(N == 3, "tensor field jets are available up to order 3"); return f3(x, ref); }
  }
  template <int N>
  SymJet<N> jet(const Vec2& x) const { return jet<N>(x, x); }

  Mat2 value(const Vec2& x, const Vec2& ref) const {
    const auto J = jet<0>(x, ref);
    Mat2 m;
    m << J[0].value(), J[1].value(), J[1].value(), J[2].value();
    return m;
  }
  Mat2 value(const Vec2& x) const { return value(x, x); }

  /// Derivative slices d_k a (k = 1, 2) at x on the region of ref.
  Tensor3 gradient(const Vec2& x, const Vec2& ref) const {
    const auto J = jet<1>(x, ref);
    Tensor3 d;
    for (int k = 0; k < 2; ++k) {
      const int i = k == 0 ? 1 : 0, j = k == 0 ? 0 : 1;
      d[std::size_t(k)] << J[0].d(i, j), J[1].d(i, j), J[1].d(i, j), J[2].d(i, j);
    }
    return d;
  }

  static TensorField zero() { return TensorField{}; }

  /// From a generic callable fn(X, Y, region) returning SymJet<N>.
  template <class Fn>
  static TensorField analytic(Fn fn, std::function<int(const Vec2&)> region = [](const Vec2&) { return 0; },
                              std::string kind = "analytic") {
    auto f = std::make_shared<const Fn>(std::move(fn));
    TensorField t;
    t.kind = std::move(kind);
    t.is_zero = false;
    auto make = [f, region](auto tag) {
      constexpr int N = decltype(tag)::value;
      return [f, region](const Vec2& x, const Vec2& r) -> SymJet<N> {
        return (*f)(Jet<N>::variable_x(x.x()), Jet<N>::variable_y(x.y()), region(r));
      };
    };
    t.f0 = make(std::integral_constant<int, 0>{});
    t.f1 = make(std::integral_constant<int, 1>{});
    t.f2 = make(std::integral_constant<int, 2>{});
    t.f3 = make(std::integral_constant<int, 3>{});
    return t;
  }

  /// Generic composition from a callable op(tag) returning the order-N evaluator.
  template <class Make>
  static TensorField compose(Make make, std::string kind) {
    TensorField t;
    t.kind = std::move(kind);
    t.is_zero = false;
    t.f0 = make(std::integral_constant<int, 0>{});
    t.f1 = make(std::integral_constant<int, 1>{});
    t.f2 = make(std::integral_constant<int, 2>{});
    t.f3 = make(std::integral_constant<int, 3>{});
    return t;
  }
};

// ------------------------------------------------ tensor field algebra

/// scale * sym(grad f (x) grad g).
inline TensorField sym_grad_outer(const ScalarField& f, const ScalarField& g, double scale = 1.0) {
  if (f.is_zero || g.is_zero || scale == 0.0) return TensorField::zero();
  return TensorField::compose(
      [f, g, scale](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [f, g, scale](const Vec2& x, const Vec2& r) -> SymJet<N> {
          const auto F = f.template jet<N + 1>(x, r);
          const auto G = g.template jet<N + 1>(x, r);
          const auto f1 = dx(F), f2 = dy(F), g1 = dx(G), g2 = dy(G);
          return {f1 * g1 * scale, (f1 * g2 + f2 * g1) * (0.5 * scale), f2 * g2 * scale};
        };
      },
      "sym_grad_outer");
}

/// scale * grad grad f (available up to order 3).
inline TensorField hessian_field(const ScalarField& f, double scale = 1.0) {
  if (f.is_zero || scale == 0.0) return TensorField::zero();
  return TensorField::compose(
      [f, scale](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [f, scale](const Vec2& x, const Vec2& r) -> SymJet<N> {
          const auto F = f.template jet<N + 2>(x, r);
          const auto f1 = dx(F), f2 = dy(F);
          return {dx(f1) * scale, dy(f1) * scale, dy(f2) * scale};
        };
      },
      "hessian");
}

/// f * I.
inline TensorField isotropic(const ScalarField& f, double scale = 1.0) {
  if (f.is_zero || scale == 0.0) return TensorField::zero();
  return TensorField::compose(
      [f, scale](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [f, scale](const Vec2& x, const Vec2& r) -> SymJet<N> {
          const auto F = f.template jet<N>(x, r) * scale;
          return {F, Jet<N>(0.0), F};
        };
      },
      "isotropic");
}

/// alpha a + beta b.
inline TensorField combine(const TensorField& a, double alpha, const TensorField& b, double beta) {
  const bool za = a.is_zero || alpha == 0.0, zb = b.is_zero || beta == 0.0;
  if (za && zb) return TensorField::zero();
  return TensorField::compose(
      [a, b, alpha, beta, za, zb](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [a, b, alpha, beta, za, zb](const Vec2& x, const Vec2& r) -> SymJet<N> {
          SymJet<N> out{Jet<N>(0.0), Jet<N>(0.0), Jet<N>(0.0)};
          if (!za) { const auto A = a.template jet<N>(x, r); for (int i = 0; i < 3; ++i) out[std::size_t(i)] += A[std::size_t(i)] * alpha; }
          if (!zb) { const auto B = b.template jet<N>(x, r); for (int i = 0; i < 3; ++i) out[std::size_t(i)] += B[std::size_t(i)] * beta; }
          return out;
        };
      },
      "combination");
}

/// A applied pointwise: (a11, a12, a22) -> (a22, -a12, a11).
inline TensorField apply_A(const TensorField& a) {
  if (a.is_zero) return a;
  return TensorField::compose(
      [a](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [a](const Vec2& x, const Vec2& r) -> SymJet<N> {
          const auto A = a.template jet<N>(x, r);
          return {A[2], -A[1], A[0]};
        };
      },
      "A(" + a.kind + ")");
}

/// Moment tensor D((1-nu) lambda + nu tr(lambda) I) for lambda = grad grad w - lambda_p.
inline TensorField moment_field(const Material& mat, const ScalarField& w, const TensorField& lp) {
  const TensorField lam = combine(hessian_field(w), 1.0, lp, -1.0);
  if (lam.is_zero) return lam;
  const double D = mat.D, nu = mat.nu;
  return TensorField::compose(
      [lam, D, nu](auto tag) {
        constexpr int N = decltype(tag)::value;
        return [lam, D, nu](const Vec2& x, const Vec2& r) -> SymJet<N> {
          const auto L = lam.template jet<N>(x, r);
          const auto tr = (L[0] + L[2]) * nu;
          return {(L[0] * (1 - nu) + tr) * D, L[1] * ((1 - nu) * D), (L[2] * (1 - nu) + tr) * D};
        };
      },
      "moment");
}

// ------------------------------------------------------------ bundle

struct PointSource {
  double f0 = 0.0;       // Dirac coefficient
  Vec2 f1{0.0, 0.0};     // dipole vector: <f1, grad delta_O>
};

/// Transverse loads on an interface: monopole density f2 (pairs with psi)
/// and couple density f2c (pairs with d psi / d nu).
struct LineLoad {
  double f2 = 0.0;
  double f2c = 0.0;
};

struct Degrees {
  int grad_w = -2;
  int grad_w_grad_w = -2;
  int grad_phi_grad_w = -1;
};

struct FieldBundle {
  std::string scenario = "custom";
  Material material;
  bool inextensible = true;  // elastic stretching strain vanishes; 1/E terms are not evaluated
  Domain domain;
  ScalarField w, phi;
  TensorField ep;            // bulk plastic stretching strain
  TensorField lp;            // bulk plastic bending strain (fold concentrations live on interfaces)
  std::vector<InterfaceSpec> interfaces;
  std::vector<LineLoad> line_loads;  // parallel to interfaces
  std::optional<Vec2> origin;        // singular point O
  ScalarField f1;                    // bulk transverse force
  PointSource point;                 // point force / dipole at O
  Degrees degrees;
  double eps_excl = 1e-6;
  std::map<std::string, double> solved;  // solved / reported parameters
  std::vector<std::string> notes;

  double scale() const { return domain.scale(); }
  LineLoad load(std::size_t i) const { return i < line_loads.size() ? line_loads[i] : LineLoad{}; }

  /// Distance from x to S and O together with the name of the closest set.
  std::pair<double, std::string> singular_distance(const Vec2& x) const {
    double d = 1e300;
    std::string who;
    if (origin) { d = (x - *origin).norm(); who = "singular point O"; }
    for (const auto& S : interfaces) {
      const double ds = S.distance(x);
      if (ds < d) { d = ds; who = "interface '" + S.name + "'"; }
    }
    return {d, who};
  }

  void check_bulk_point(const Vec2& x) const {
    const auto [d, who] = singular_distance(x);
    if (d <= eps_excl * scale())
      throw ProximityError("point (" + detail::fmt_num(x.x()) + ", " + detail::fmt_num(x.y()) + ") lies within the exclusion radius of the " + who);
  }

  void validate() const {
    material.validate();
    if (!line_loads.empty() && line_loads.size() != interfaces.size()) throw PreconditionError("line loads must match interfaces");
    // interfaces end on the boundary or at O
    for (const auto& S : interfaces) {
      if (S.closed()) continue;
      for (const Vec2& e : {S.a, S.b}) {
        const bool at_o = origin && (e - *origin).norm() < 1e-9 * scale();
        const bool on_boundary = std::abs(domain.depth(e)) < 1e-9 * scale() || !domain.contains(e);
        if (!at_o && !on_boundary) throw GeometryError("interface '" + S.name + "' ends inside the domain away from O");
      }
    }
    if (degrees.grad_w >= 0 || degrees.grad_w_grad_w >= 0 || degrees.grad_phi_grad_w >= 0)
      throw PreconditionError("declared degrees must be negative");
  }
};

// ---------------------------------------------------------- evaluators

inline double eval_w(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.w.value(x); }
inline Vec2 eval_grad_w(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.w.grad(x); }
inline Mat2 eval_hess_w(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.w.hess(x); }
inline double eval_phi(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.phi.value(x); }
inline Vec2 eval_grad_phi(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.phi.grad(x); }
inline Mat2 eval_hess_phi(const FieldBundle& b, const Vec2& x) { b.check_bulk_point(x); return b.phi.hess(x); }

// ------------------------------------------------ jumps and averages

/// A sampled quantity: evaluate at x using the closed form of the region of ref.
using Sampler = std::function<Eigen::VectorXd(const Vec2& x, const Vec2& ref)>;

enum class Quantity { W, GradW, HessW, LapW, Phi, GradPhi, HessPhi, Stress };

inline Sampler sampler(const FieldBundle& b, Quantity q) {
  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd r(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double d : v) r(i++) = d;
    return r;
  };
  const ScalarField& f = (q == Quantity::Phi || q == Quantity::GradPhi || q == Quantity::HessPhi || q == Quantity::Stress) ? b.phi : b.w;
  switch (q) {
    case Quantity::W:
    case Quantity::Phi:
      return [f, vec](const Vec2& x, const Vec2& r) { return vec({f.jet<0>(x, r).value()}); };
    case Quantity::GradW:
    case Quantity::GradPhi:
      return [f, vec](const Vec2& x, const Vec2& r) { const Vec2 g = f.grad(x, r); return vec({g.x(), g.y()}); };
    case Quantity::LapW:
      return [f, vec](const Vec2& x, const Vec2& r) { const Mat2 h = f.hess(x, r); return vec({h.trace()}); };
    case Quantity::Stress:
      return [f, vec](const Vec2& x, const Vec2& r) { const Mat2 h = apply_A(f.hess(x, r)); return vec({h(0, 0), h(0, 1), h(1, 1)}); };
    default:
      return [f, vec](const Vec2& x, const Vec2& r) { const Mat2 h = f.hess(x, r); return vec({h(0, 0), h(0, 1), h(1, 1)}); };
  }
}

struct OneSided {
  Eigen::VectorXd plus, minus;
};

/// Offset used to pick the region on each side of an interface.
inline double side_offset(const FieldBundle& b) { return std::max(b.eps_excl, 1e-9) * b.scale(); }

inline void check_interface_station(const FieldBundle& b, const InterfaceSpec& S, double s) {
  if (S.closed()) return;
  const double m = b.eps_excl * b.scale();
  if (s < m || s > S.length() - m) throw ProximityError("station s = " + detail::fmt_num(s) + " is within the exclusion radius of an end of '" + S.name + "'");
  if (b.origin && (S.point(s) - *b.origin).norm() <= m) throw ProximityError("station on '" + S.name + "' lies within the exclusion radius of O");
}

/// Sector-exact one-sided limits: each side's closed form evaluated on S.
inline OneSided one_sided(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s) {
  check_interface_station(b, S, s);
  const Vec2 x = S.point(s), nu = S.normal(s);
  const double d = side_offset(b);
  return {q(x, x - d * nu), q(x, x + d * nu)};
}

/// Offset limits with Richardson extrapolation (cross-check of one_sided).
struct OffsetOptions {
  double delta0 = 1e-2;  // relative to the domain scale
  int levels = 6;
  double tol = 1e-7;
};

inline Eigen::VectorXd offset_limit(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s, int side,
                                    const OffsetOptions& o = {}) {
  check_interface_station(b, S, s);
  const Vec2 x = S.point(s), nu = S.normal(s);
  const double dir = side > 0 ? -1.0 : 1.0;  // plus side lies opposite to nu
  std::vector<Eigen::VectorXd> v;
  double h = o.delta0 * b.scale();
  for (int k = 0; k < o.levels; ++k, h *= 0.5) {
    const Vec2 y = x + dir * h * nu;
    v.push_back(q(y, y));
  }
  // Richardson table for an expansion in integer powers of h
  std::vector<Eigen::VectorXd> prev = v;
  std::vector<double> change;
  for (int lvl = 1; lvl < o.levels; ++lvl) {
    std::vector<Eigen::VectorXd> next;
    const double f = std::pow(2.0, lvl);
    for (std::size_t i = 0; i + 1 < prev.size(); ++i) next.push_back((f * prev[i + 1] - prev[i]) / (f - 1.0));
    change.push_back((next.back() - prev.back()).norm());
    prev = next;
    if (prev.size() == 1) break;
  }
  const double mag = std::max(1.0, v.back().norm());
  if (change.size() >= 2 && change.back() > change[change.size() - 2] && change.back() > o.tol * mag)
    throw ConvergenceError("one-sided limit on '" + S.name + "' at s = " + detail::fmt_num(s) + " did not settle (last change " + detail::fmt_num(change.back()) + ")");
  return prev.back();
}

inline Eigen::VectorXd jump(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s) {
  const auto o = one_sided(b, S, q, s);
  return o.plus - o.minus;
}
inline Eigen::VectorXd average(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s) {
  const auto o = one_sided(b, S, q, s);
  return 0.5 * (o.plus + o.minus);
}
inline Eigen::VectorXd jump(const FieldBundle& b, const InterfaceSpec& S, Quantity q, double s) { return jump(b, S, sampler(b, q), s); }
inline Eigen::VectorXd average(const FieldBundle& b, const InterfaceSpec& S, Quantity q, double s) { return average(b, S, sampler(b, q), s); }

inline Eigen::VectorXd jump_offset(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s, const OffsetOptions& o = {}) {
  return offset_limit(b, S, q, s, +1, o) - offset_limit(b, S, q, s, -1, o);
}
inline Eigen::VectorXd average_offset(const FieldBundle& b, const InterfaceSpec& S, const Sampler& q, double s, const OffsetOptions& o = {}) {
  return 0.5 * (offset_limit(b, S, q, s, +1, o) + offset_limit(b, S, q, s, -1, o));
}

}  // namespace vkp
