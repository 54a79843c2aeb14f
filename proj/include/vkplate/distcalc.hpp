#pragma once

// Distributional calculus made computable: Monge-Ampere brackets, interfacial
// densities of Curl Curl and of the Laplacian, weak pairings against bumps
// (split polar quadrature), loop integrals, Dirac strengths and degrees.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vkplate/fields.hpp"

namespace vkp {

/// A sum together with the largest absolute summand (used to normalize residuals).
struct Term {
  double value = 0.0;
  double mag = 0.0;
  Term& add(double v) { value += v; mag = std::max(mag, std::abs(v)); return *this; }
  Term& add(const Term& t, double s = 1.0) { value += s * t.value; mag = std::max(mag, std::abs(s) * t.mag); return *this; }
};

// ------------------------------------------------------------------ bulk

/// [b1, b2] = <A grad grad b1, grad grad b2>, with its three products as terms.
inline Term monge_ampere_terms(const Mat2& h1, const Mat2& h2) {
  Term t;
  t.add(h1(1, 1) * h2(0, 0));
  t.add(h1(0, 0) * h2(1, 1));
  t.add(-2.0 * h1(0, 1) * h2(0, 1));
  return t;
}

inline double monge_ampere_bulk(const ScalarField& b1, const ScalarField& b2, const Vec2& x) {
  return monge_ampere_terms(b1.hess(x), b2.hess(x)).value;
}

inline double monge_ampere_bulk(const FieldBundle& b, const ScalarField& b1, const ScalarField& b2, const Vec2& x) {
  b.check_bulk_point(x);
  return monge_ampere_bulk(b1, b2, x);
}

/// curl curl a = a11,22 + a22,11 - 2 a12,12 at x (region of ref).
inline Term curlcurl_bulk(const TensorField& a, const Vec2& x, const Vec2& ref) {
  Term t;
  if (a.is_zero) return t;
  const auto J = a.jet<2>(x, ref);
  t.add(J[0].d(0, 2));
  t.add(J[2].d(2, 0));
  t.add(-2.0 * J[1].d(1, 1));
  return t;
}
inline Term curlcurl_bulk(const TensorField& a, const Vec2& x) { return curlcurl_bulk(a, x, x); }

/// div div a = a11,11 + 2 a12,12 + a22,22.
inline Term divdiv_bulk(const TensorField& a, const Vec2& x) {
  Term t;
  if (a.is_zero) return t;
  const auto J = a.jet<2>(x, x);
  t.add(J[0].d(2, 0));
  t.add(2.0 * J[1].d(1, 1));
  t.add(J[2].d(0, 2));
  return t;
}

inline Term laplacian_bulk(const ScalarField& f, const Vec2& x) {
  Term t;
  if (f.is_zero) return t;
  const auto J = f.jet<2>(x, x);
  t.add(J.d(2, 0));
  t.add(J.d(0, 2));
  return t;
}

inline Term bilaplacian_bulk(const ScalarField& f, const Vec2& x) {
  Term t;
  if (f.is_zero) return t;
  const auto J = f.jet<4>(x, x);
  t.add(J.d(4, 0));
  t.add(2.0 * J.d(2, 2));
  t.add(J.d(0, 4));
  return t;
}

/// Laplacian of the trace of a tensor field.
inline Term laplacian_trace_bulk(const TensorField& a, const Vec2& x) {
  Term t;
  if (a.is_zero) return t;
  const auto J = a.jet<2>(x, x);
  t.add(J[0].d(2, 0));
  t.add(J[0].d(0, 2));
  t.add(J[2].d(2, 0));
  t.add(J[2].d(0, 2));
  return t;
}

// ------------------------------------------------------------ interfaces

struct InterfacialDensities {
  Term monopole;  // coefficient of psi
  Term dipole;    // coefficient of d psi / d nu
};

struct LaplacianDensities {
  Term monopole;
  Term dipole;
  Term second;  // coefficient of d^2 psi / d nu^2
};

struct OneSidedTensor {
  Mat2 plus, minus;
  Tensor3 dplus, dminus;
};

inline OneSidedTensor one_sided_tensor(const FieldBundle& b, const TensorField& a, const InterfaceSpec& S, double s) {
  check_interface_station(b, S, s);
  const Vec2 x = S.point(s), nu = S.normal(s);
  const double d = side_offset(b);
  const Vec2 rp = x - d * nu, rm = x + d * nu;
  return {a.value(x, rp), a.value(x, rm), a.gradient(x, rp), a.gradient(x, rm)};
}

/// Interfacial densities of Curl Curl of a piecewise smooth tensor field:
/// monopole <[grad a], r> + k <[a], s>, dipole <[a], t x t>.
inline InterfacialDensities curlcurl_interfacial(const FieldBundle& b, const TensorField& a, const InterfaceSpec& S, double s) {
  InterfacialDensities out;
  if (a.is_zero) return out;
  const auto o = one_sided_tensor(b, a, S, s);
  const Vec2 t = S.tangent(s), nu = S.normal(s);
  const double k = S.curvature();
  const Mat2 ja = o.plus - o.minus;
  for (int side = 0; side < 2; ++side) {
    const Tensor3& d = side == 0 ? o.dplus : o.dminus;
    const double sg = side == 0 ? 1.0 : -1.0;
    out.monopole.add(sg * contract3(d, t, nu, t));
    out.monopole.add(-sg * contract3(d, t, t, nu));
    out.monopole.add(sg * contract3(d, nu, t, t));
  }
  if (k != 0.0) {
    out.monopole.add(k * nu.dot(o.plus * nu)).add(-k * nu.dot(o.minus * nu));
    out.monopole.add(-k * t.dot(o.plus * t)).add(k * t.dot(o.minus * t));
  }
  out.dipole.add(t.dot(o.plus * t)).add(-t.dot(o.minus * t));
  // components are bounded by the one-sided tensor norms; use them as the scale
  const double an = std::max(o.plus.norm(), o.minus.norm());
  const double dn = std::max(o.dplus[0].norm() + o.dplus[1].norm(), o.dminus[0].norm() + o.dminus[1].norm());
  out.monopole.mag = std::max({out.monopole.mag, dn, std::abs(k) * an});
  out.dipole.mag = std::max(out.dipole.mag, an);
  (void)ja;
  return out;
}

/// Product form for a = sym(grad f1 (x) grad f2) with f1, f2 continuous:
/// monopole <{grad grad f1}, t t><[grad f2], nu> + (1 <-> 2), dipole <[a], t t>.
inline InterfacialDensities curlcurl_interfacial_product(const FieldBundle& b, const ScalarField& f1, const ScalarField& f2,
                                                         const InterfaceSpec& S, double s) {
  InterfacialDensities out;
  if (f1.is_zero || f2.is_zero) return out;
  check_interface_station(b, S, s);
  const Vec2 x = S.point(s), nu = S.normal(s), t = S.tangent(s);
  const double d = side_offset(b);
  const Vec2 rp = x - d * nu, rm = x + d * nu;
  const Mat2 H1p = f1.hess(x, rp), H1m = f1.hess(x, rm), H2p = f2.hess(x, rp), H2m = f2.hess(x, rm);
  const double h1 = 0.5 * (t.dot(H1p * t) + t.dot(H1m * t));
  const double h2 = 0.5 * (t.dot(H2p * t) + t.dot(H2m * t));
  const double j1 = (f1.grad(x, rp) - f1.grad(x, rm)).dot(nu);
  const double j2 = (f2.grad(x, rp) - f2.grad(x, rm)).dot(nu);
  // a vanishing t-t curvature still counts the full Hessian as the term scale
  out.monopole.add(h1 * j2).add(h2 * j1);
  out.monopole.mag = std::max({out.monopole.mag, 0.5 * (H1p.norm() + H1m.norm()) * std::abs(j2), 0.5 * (H2p.norm() + H2m.norm()) * std::abs(j1)});
  const auto ap = sym(outer(f1.grad(x, rp), f2.grad(x, rp))), am = sym(outer(f1.grad(x, rm), f2.grad(x, rm)));
  out.dipole.add(t.dot(ap * t)).add(-t.dot(am * t));
  return out;
}

/// Densities of Div Div of a piecewise smooth bulk tensor field:
/// monopole -<[div a], nu> - d/ds [a]_{t nu}, dipole [a]_{nu nu}.
inline InterfacialDensities divdiv_interfacial(const FieldBundle& b, const TensorField& a, const InterfaceSpec& S, double s);

/// Arclength derivative of an interfacial quantity by central differences.
/// Constant quantities should not be routed here (their derivative is zero).
inline double d_ds(const FieldBundle& b, const InterfaceSpec& S, const std::function<double(double)>& q, double s, int order) {
  double h = 0.02 * b.scale();
  const double m = b.eps_excl * b.scale();
  std::function<bool(double)> excluded;
  if (!S.closed()) {
    double lo = m, hi = S.length() - m;
    if (b.origin) {
      // keep the stencil away from O along the curve
      const double so = S.project(*b.origin);
      if ((S.point(so) - *b.origin).norm() < m) { if (so < s) lo = std::max(lo, so + m); else hi = std::min(hi, so - m); }
    }
    h = std::min(h, 0.2 * std::min(s - lo, hi - s));
    excluded = [lo, hi](double u) { return u < lo || u > hi; };
  }
  if (!(h > 0)) throw StencilError("no room for a finite-difference stencil at s = " + detail::fmt_num(s) + " on '" + S.name + "'");
  return fd_derivative(q, s, order, h, excluded);
}

/// Densities of the Laplacian of (bulk a1 + line density a2 on S):
/// monopole -(<[grad a1], nu> - a2''), dipole [a1] - k a2, second moment a2.
inline LaplacianDensities laplacian_interfacial(const FieldBundle& b, const ScalarField& a1, const std::function<double(double)>& a2,
                                                bool a2_constant, const InterfaceSpec& S, double s) {
  LaplacianDensities out;
  const Vec2 x = S.point(s), nu = S.normal(s);
  check_interface_station(b, S, s);
  const double d = side_offset(b);
  const Vec2 rp = x - d * nu, rm = x + d * nu;
  if (!a1.is_zero) {
    out.monopole.add(-a1.grad(x, rp).dot(nu)).add(a1.grad(x, rm).dot(nu));
    out.dipole.add(a1.jet<0>(x, rp).value()).add(-a1.jet<0>(x, rm).value());
  }
  if (a2) {
    const double v = a2(s);
    if (!a2_constant) out.monopole.add(d_ds(b, S, a2, s, 2));
    out.dipole.add(-S.curvature() * v);
    out.second.add(v);
  }
  return out;
}

inline InterfacialDensities divdiv_interfacial(const FieldBundle& b, const TensorField& a, const InterfaceSpec& S, double s) {
  InterfacialDensities out;
  if (a.is_zero) return out;
  const auto o = one_sided_tensor(b, a, S, s);
  const Vec2 nu = S.normal(s);
  out.monopole.add(-div3(o.dplus).dot(nu)).add(div3(o.dminus).dot(nu));
  auto jtn = [&](double u) {
    const auto ou = one_sided_tensor(b, a, S, u);
    return S.tangent(u).dot((ou.plus - ou.minus) * S.normal(u));
  };
  out.monopole.add(-d_ds(b, S, jtn, s, 1));
  out.dipole.add(nu.dot(o.plus * nu)).add(-nu.dot(o.minus * nu));
  return out;
}

// --------------------------------------------------------- quadrature

struct QuadOptions {
  int ang_panels = 24;     // Gauss panels per full turn
  int rad_panels = 6;      // Gauss panels per support radius
  int order = 20;
  int grade_levels = 12;   // geometric grading towards a singular center
  double grade_ratio = 2.0;
  bool check = true;       // compare against a refined evaluation
  double rtol = 1e-7;      // relative to the integral of |f|
};

namespace detail {

struct Sector {
  double a, b;
  bool map_a, map_b;  // endpoint is a tangency (square-root behaviour)
};

inline void gauss_nodes(int order, double a, double b, int panels, std::vector<std::pair<double, double>>& out) {
  const auto& rule = gauss_rule(order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < rule.x.size(); ++i) out.emplace_back(mid + 0.5 * h * rule.x[i], 0.5 * h * rule.w[i]);
  }
}

}  // namespace detail

/// Integral over the support of psi of f(x) (f already contains the test
/// function factors).  Polar coordinates about O when O lies in the support,
/// else about the bump center; angular splits at rays through the pole,
/// segment ends and circle tangencies; radial splits at interface crossings;
/// geometric grading towards O.
/// Vector-valued form: f(x, out) writes K integrand components.
using VecIntegrand = std::function<void(const Vec2&, double*)>;

inline std::pair<std::vector<double>, std::vector<double>> integrate_support_vec(const FieldBundle& b, const Vec2& c, double rho,
                                                                                 const VecIntegrand& f, int K, const QuadOptions& q) {
  const bool at_o = b.origin && (*b.origin - c).norm() < rho;
  Vec2 P = at_o ? *b.origin : c;
  if (!at_o) {
    // a single straight interface through the support: put the pole on it so
    // the jump runs along two rays instead of cutting across them
    int crossing = 0;
    Vec2 foot = c;
    for (const auto& S : b.interfaces) {
      if (S.kind == CurveKind::Segment) {
        const Vec2 t = (S.b - S.a).normalized();
        const double s = std::clamp(t.dot(c - S.a), 0.0, (S.b - S.a).norm());
        const Vec2 f = S.a + s * t;
        if ((f - c).norm() < rho) { ++crossing; foot = f; }
      } else if (std::abs((S.center - c).norm() - S.r0) < rho) {
        crossing += 2;
      }
    }
    if (crossing == 1) P = foot;
  }
  const bool off_center = (P - c).norm() > 0.0;

  struct Brk { double th; bool tangent; };
  std::vector<Brk> brks;
  auto ang = [&](const Vec2& v) { return std::atan2(v.y(), v.x()); };
  const double tiny = 1e-12 * rho;
  for (const auto& S : b.interfaces) {
    if (S.kind == CurveKind::Segment) {
      for (const Vec2& e : {S.a, S.b})
        if ((e - P).norm() > tiny && (e - c).norm() < rho + 1e-9 * rho) brks.push_back({ang(e - P), false});
      const Vec2 t = (S.b - S.a).normalized();
      const double dl = std::abs(perp(t).dot(P - S.a));
      if (dl < tiny) { brks.push_back({ang(t), false}); brks.push_back({ang(-t), false}); }
    } else {
      const Vec2 d = S.center - P;
      const double D = d.norm();
      if (D > S.r0 + tiny) {
        const double base = ang(d), da = std::asin(std::min(1.0, S.r0 / D));
        brks.push_back({base - da, true});
        brks.push_back({base + da, true});
      }
    }
  }
  std::vector<detail::Sector> sectors;
  if (brks.empty()) {
    sectors.push_back({-kPi, kPi, false, false});
  } else {
    for (auto& x : brks) x.th = geom::wrap_angle(x.th);
    std::sort(brks.begin(), brks.end(), [](const Brk& u, const Brk& v) { return u.th < v.th; });
    std::vector<Brk> uniq;
    for (const auto& x : brks)
      if (uniq.empty() || x.th - uniq.back().th > 1e-13) uniq.push_back(x); else uniq.back().tangent = uniq.back().tangent || x.tangent;
    if (uniq.size() > 1 && uniq.front().th + 2 * kPi - uniq.back().th < 1e-13) uniq.pop_back();
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      const Brk& u = uniq[i];
      const Brk& v = i + 1 < uniq.size() ? uniq[i + 1] : Brk{uniq[0].th + 2 * kPi, uniq[0].tangent};
      sectors.push_back({u.th, v.th, u.tangent, v.tangent});
    }
  }

  auto radial = [&](double th) {
    const Vec2 e(std::cos(th), std::sin(th));
    double rout = rho;
    if (off_center) {
      const Vec2 w = P - c;
      const double bq = w.dot(e), cq = w.squaredNorm() - rho * rho;
      rout = -bq + std::sqrt(std::max(0.0, bq * bq - cq));
    }
    std::vector<double> cuts{0.0};
    for (const auto& S : b.interfaces)
      for (double r : geom::ray_hits(S, P, th))
        if (r > tiny && r < rout - tiny) cuts.push_back(r);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(rout);
    std::vector<double> s(static_cast<std::size_t>(K), 0.0), sa(static_cast<std::size_t>(K), 0.0), val(static_cast<std::size_t>(K));
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double r0 = cuts[i], r1 = cuts[i + 1];
      if (!(r1 > r0)) continue;
      nodes.clear();
      const int np = std::max(1, int(std::ceil(q.rad_panels * (r1 - r0) / rho)));
      if (i == 0 && at_o) {
        double hi = r1;
        for (int k = 0; k < q.grade_levels; ++k) {
          const double lo = hi / q.grade_ratio;
          detail::gauss_nodes(q.order, lo, hi, k == 0 ? np : 1, nodes);
          hi = lo;
        }
        detail::gauss_nodes(q.order, 0.0, hi, 1, nodes);
      } else {
        detail::gauss_nodes(q.order, r0, r1, np, nodes);
      }
      for (const auto& [r, w] : nodes) {
        f(P + r * e, val.data());
        for (int k = 0; k < K; ++k) {
          const double v = val[std::size_t(k)] * r;
          if (!std::isfinite(v)) throw EvaluationError("non-finite integrand at r = " + detail::fmt_num(r) + ", theta = " + detail::fmt_num(th));
          s[std::size_t(k)] += w * v;
          sa[std::size_t(k)] += w * std::abs(v);
        }
      }
    }
    return std::make_pair(s, sa);
  };

  std::vector<double> total(std::size_t(K), 0.0), total_abs(std::size_t(K), 0.0);
  std::vector<std::pair<double, double>> nodes;
  for (const auto& sec : sectors) {
    const double len = sec.b - sec.a;
    const int np = std::max(2, int(std::ceil(q.ang_panels * len / (2 * kPi))));
    nodes.clear();
    detail::gauss_nodes(q.order, 0.0, 1.0, np, nodes);
    for (const auto& [u, w] : nodes) {
      double th, jac;
      if (sec.map_a || sec.map_b) {
        // cosine map clusters nodes quadratically at both ends
        th = sec.a + len * 0.5 * (1.0 - std::cos(kPi * u));
        jac = len * 0.5 * kPi * std::sin(kPi * u);
      } else {
        th = sec.a + len * u;
        jac = len;
      }
      const auto [s, sa] = radial(th);
      for (int k = 0; k < K; ++k) {
        total[std::size_t(k)] += w * jac * s[std::size_t(k)];
        total_abs[std::size_t(k)] += w * jac * sa[std::size_t(k)];
      }
    }
  }
  return {total, total_abs};
}

/// Refined vector integral with the two-level accuracy check per component.
inline std::pair<std::vector<double>, std::vector<double>> integrate_support_checked(const FieldBundle& b, const Vec2& c, double rho,
                                                                                     const VecIntegrand& f, int K, const QuadOptions& q) {
  if (!q.check) return integrate_support_vec(b, c, rho, f, K, q);
  QuadOptions fine = q;
  fine.ang_panels = fine.ang_panels * 3 / 2;
  fine.rad_panels = fine.rad_panels * 3 / 2;
  fine.grade_levels += 4;
  const auto coarse = integrate_support_vec(b, c, rho, f, K, q);
  const auto refined = integrate_support_vec(b, c, rho, f, K, fine);
  for (std::size_t k = 0; k < std::size_t(K); ++k) {
    const double err = std::abs(refined.first[k] - coarse.first[k]);
    if (err > q.rtol * std::max(refined.second[k], 1e-300) && err > 1e-14)
      throw AccuracyError("weak pairing did not converge under refinement: estimate " + detail::fmt_num(refined.first[k]) +
                          ", change " + detail::fmt_num(err) + " against integral of |f| " + detail::fmt_num(refined.second[k]));
  }
  return refined;
}

inline std::pair<double, double> integrate_support_once(const FieldBundle& b, const TestFunction& psi,
                                                        const std::function<double(const Vec2&)>& f, const QuadOptions& q) {
  const auto r = integrate_support_vec(b, psi.center, psi.radius, [&](const Vec2& x, double* out) { out[0] = f(x); }, 1, q);
  return {r.first[0], r.second[0]};
}

inline double integrate_support(const FieldBundle& b, const TestFunction& psi, const std::function<double(const Vec2&)>& f,
                                const QuadOptions& q = {}, double* abs_integral = nullptr) {
  if (!q.check) {
    const auto once = integrate_support_once(b, psi, f, q);
    if (abs_integral) *abs_integral = once.second;
    return once.first;
  }
  QuadOptions fine = q;
  fine.ang_panels = fine.ang_panels * 3 / 2;
  fine.rad_panels = fine.rad_panels * 3 / 2;
  fine.grade_levels += 4;
  const auto coarse = integrate_support_once(b, psi, f, q);
  const auto refined = integrate_support_once(b, psi, f, fine);
  const double err = std::abs(refined.first - coarse.first);
  if (err > q.rtol * std::max(refined.second, 1e-300) && err > 1e-14)
    throw AccuracyError("weak pairing did not converge under refinement: estimate " + detail::fmt_num(refined.first) +
                        ", change " + detail::fmt_num(err) + " against integral of |f| " + detail::fmt_num(refined.second));
  if (abs_integral) *abs_integral = refined.second;
  return refined.first;
}

/// Integral of g(s) over the part of S inside the support of psi, graded
/// towards O when S ends there.
inline double integrate_line(const FieldBundle& b, const InterfaceSpec& S, const TestFunction& psi,
                             const std::function<double(double)>& g, int panels = 16, int order = 10) {
  const Vec2 c = psi.center;
  const double rho = psi.radius;
  std::vector<std::pair<double, double>> ranges;
  if (S.kind == CurveKind::Segment) {
    const Vec2 t = S.tangent(0), w = S.a - c;
    const double bq = w.dot(t), cq = w.squaredNorm() - rho * rho;
    const double disc = bq * bq - cq;
    if (disc <= 0) return 0.0;
    const double s0 = std::max(0.0, -bq - std::sqrt(disc)), s1 = std::min(S.length(), -bq + std::sqrt(disc));
    if (s1 <= s0) return 0.0;
    ranges.push_back({s0, s1});
  } else {
    const auto hits = geom::circle_hits(S, c, rho);
    const double L = S.length();
    if (hits.size() < 2) {
      if ((S.point(0) - c).norm() < rho) ranges.push_back({0.0, L});
      else return 0.0;
    } else {
      double sa = S.project(c + rho * Vec2(std::cos(hits[0]), std::sin(hits[0])));
      double sb = S.project(c + rho * Vec2(std::cos(hits[1]), std::sin(hits[1])));
      if (sb < sa) std::swap(sa, sb);
      const double mid = 0.5 * (sa + sb);
      if ((S.point(mid) - c).norm() < rho) ranges.push_back({sa, sb});
      else { ranges.push_back({sb, L}); ranges.push_back({0.0, sa}); }
    }
  }
  double total = 0.0;
  const double m = b.eps_excl * b.scale();
  for (auto [s0, s1] : ranges) {
    // grade towards an end that touches O
    const bool o_start = b.origin && (S.point(s0) - *b.origin).norm() < m;
    const bool o_end = b.origin && (S.point(s1) - *b.origin).norm() < m;
    std::vector<std::pair<double, double>> nodes;
    if (o_start || o_end) {
      double lo = s0, hi = s1;
      for (int k = 0; k < 12; ++k) {
        if (o_start) { const double mid = lo + (hi - lo) / 2.0; detail::gauss_nodes(order, mid, hi, k == 0 ? panels / 2 : 1, nodes); hi = mid; }
        else { const double mid = hi - (hi - lo) / 2.0; detail::gauss_nodes(order, lo, mid, k == 0 ? panels / 2 : 1, nodes); lo = mid; }
      }
      detail::gauss_nodes(order, lo, hi, 1, nodes);
    } else {
      detail::gauss_nodes(order, s0, s1, panels, nodes);
    }
    for (const auto& [s, w] : nodes) {
      if (!psi.in_support(S.point(s))) continue;
      total += w * g(s);
    }
  }
  return total;
}

// -------------------------------------------------------- weak pairings

/// Line density of a tensor-valued distribution on interface i (s -> tensor).
using LineTensor = std::function<Mat2(std::size_t iface, double s)>;

/// <Curl Curl A, psi> = int <a, A grad grad psi> + sum_S int <a_S, A grad grad psi>.
inline double weak_pair_curlcurl(const FieldBundle& b, const TensorField& a, const TestFunction& psi, const LineTensor& line = {},
                                 const QuadOptions& q = {}) {
  double v = 0.0;
  if (!a.is_zero)
    v += integrate_support(b, psi, [&](const Vec2& x) {
      if (!psi.in_support(x)) return 0.0;
      const auto P = psi.jet<2>(x);
      const auto A = a.jet<0>(x, x);
      return A[0].value() * P.d(0, 2) - 2.0 * A[1].value() * P.d(1, 1) + A[2].value() * P.d(2, 0);
    }, q);
  if (line)
    for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
      const auto& S = b.interfaces[i];
      v += integrate_line(b, S, psi, [&](double s) {
        const Vec2 x = S.point(s);
        const Mat2 h = apply_A(Mat2{{psi.d(2, 0, x), psi.d(1, 1, x)}, {psi.d(1, 1, x), psi.d(0, 2, x)}});
        return inner(line(i, s), h);
      });
    }
  return v;
}

/// <Div Div A, psi> = int <a, grad grad psi> + sum_S int <a_S, grad grad psi>.
inline double weak_pair_divdiv(const FieldBundle& b, const TensorField& a, const TestFunction& psi, const LineTensor& line = {},
                               const QuadOptions& q = {}) {
  double v = 0.0;
  if (!a.is_zero)
    v += integrate_support(b, psi, [&](const Vec2& x) {
      if (!psi.in_support(x)) return 0.0;
      const auto P = psi.jet<2>(x);
      const auto A = a.jet<0>(x, x);
      return A[0].value() * P.d(2, 0) + 2.0 * A[1].value() * P.d(1, 1) + A[2].value() * P.d(0, 2);
    }, q);
  if (line)
    for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
      const auto& S = b.interfaces[i];
      v += integrate_line(b, S, psi, [&](double s) {
        const Vec2 x = S.point(s);
        const Mat2 h{{psi.d(2, 0, x), psi.d(1, 1, x)}, {psi.d(1, 1, x), psi.d(0, 2, x)}};
        return inner(line(i, s), h);
      });
    }
  return v;
}

/// <Delta F, psi> for bulk f plus optional line densities (s -> scalar).
inline double weak_pair_laplacian(const FieldBundle& b, const ScalarField& f, const TestFunction& psi,
                                  const std::function<double(std::size_t, double)>& line = {}, const QuadOptions& q = {}) {
  double v = 0.0;
  if (!f.is_zero)
    v += integrate_support(b, psi, [&](const Vec2& x) {
      if (!psi.in_support(x)) return 0.0;
      const auto P = psi.jet<2>(x);
      return f.jet<0>(x, x).value() * (P.d(2, 0) + P.d(0, 2));
    }, q);
  if (line)
    for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
      const auto& S = b.interfaces[i];
      v += integrate_line(b, S, psi, [&](double s) {
        const Vec2 x = S.point(s);
        return line(i, s) * (psi.d(2, 0, x) + psi.d(0, 2, x));
      });
    }
  return v;
}

/// <Delta^2 F, psi> = int f Delta^2 psi.
inline double weak_pair_bilaplacian(const FieldBundle& b, const ScalarField& f, const TestFunction& psi, const QuadOptions& q = {}) {
  if (f.is_zero) return 0.0;
  return integrate_support(b, psi, [&](const Vec2& x) {
    if (!psi.in_support(x)) return 0.0;
    const auto P = psi.jet<4>(x);
    return f.jet<0>(x, x).value() * (P.d(4, 0) + 2.0 * P.d(2, 2) + P.d(0, 4));
  }, q);
}

/// <F, psi> for a bulk density.
inline double weak_pair_density(const FieldBundle& b, const std::function<double(const Vec2&)>& f, const TestFunction& psi,
                                const QuadOptions& q = {}) {
  return integrate_support(b, psi, [&](const Vec2& x) { return psi.in_support(x) ? f(x) * psi.value(x) : 0.0; }, q);
}

/// Strong form of <Curl Curl A, psi>: bulk curl curl a plus the interfacial
/// densities paired with psi and d psi / d nu (the identity under test).
inline double strong_pair_curlcurl(const FieldBundle& b, const TensorField& a, const TestFunction& psi, const QuadOptions& q = {}) {
  double v = integrate_support(b, psi, [&](const Vec2& x) {
    if (!psi.in_support(x)) return 0.0;
    if (b.origin && (x - *b.origin).norm() == 0.0) return 0.0;
    return curlcurl_bulk(a, x).value * psi.value(x);
  }, q);
  for (const auto& S : b.interfaces) {
    v += integrate_line(b, S, psi, [&](double s) {
      const Vec2 x = S.point(s);
      if (b.origin && (x - *b.origin).norm() <= b.eps_excl * b.scale()) return 0.0;
      if (!S.closed() && (s <= b.eps_excl * b.scale() || s >= S.length() - b.eps_excl * b.scale())) return 0.0;
      const auto dens = curlcurl_interfacial(b, a, S, s);
      return dens.monopole.value * psi.value(x) + dens.dipole.value * psi.grad(x).dot(S.normal(s));
    });
  }
  return v;
}

// ------------------------------------------------------------ loops

namespace detail {

struct Crossing {
  std::size_t iface;
  double s;      // arclength station on the interface
  double angle;  // angle on the loop
};

inline Vec2 loop_center(const FieldBundle& b) {
  if (b.origin) return *b.origin;
  return b.domain.kind == Domain::Kind::Disk ? b.domain.center : Vec2(0.5 * (b.domain.lo + b.domain.hi));
}

inline std::vector<Crossing> loop_crossings(const FieldBundle& b, const Vec2& o, double eps) {
  std::vector<Crossing> out;
  for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
    const auto& S = b.interfaces[i];
    for (double th : geom::circle_hits(S, o, eps)) {
      const Vec2 x = o + eps * Vec2(std::cos(th), std::sin(th));
      out.push_back({i, S.project(x), geom::wrap_angle(th)});
    }
  }
  return out;
}

// Gauss nodes on the loop, split at crossing angles.
inline std::vector<std::pair<double, double>> loop_nodes(const std::vector<Crossing>& cr, int panels, int order) {
  std::vector<double> cuts;
  for (const auto& c : cr) cuts.push_back(c.angle);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<double, double>> nodes;
  if (cuts.empty()) {
    gauss_nodes(order, -kPi, kPi, panels, nodes);
    return nodes;
  }
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double a = cuts[i], bb = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 2 * kPi;
    if (bb - a < 1e-14) continue;
    gauss_nodes(order, a, bb, std::max(2, int(std::ceil(panels * (bb - a) / (2 * kPi)))), nodes);
  }
  return nodes;
}

}  // namespace detail

/// Curl loop: int <v1, t> dl + sum sign(<t_loop, nu>) <v2, nu> over the
/// crossings; equals the Dirac coefficient of Curl V at the loop center.
inline double loop_integral_curl(const FieldBundle& b, const std::function<Vec2(const Vec2&)>& v1,
                                 const std::function<Vec2(std::size_t, double)>& v2, double eps, int panels = 16, int order = 10,
                                 double* mag = nullptr) {
  const Vec2 o = detail::loop_center(b);
  if (!(eps > b.eps_excl * b.scale())) throw PreconditionError("loop radius must exceed the exclusion radius");
  const auto cr = detail::loop_crossings(b, o, eps);
  double v = 0.0, m = 0.0;
  for (const auto& [th, w] : detail::loop_nodes(cr, panels, order)) {
    const Vec2 e(std::cos(th), std::sin(th)), t(-std::sin(th), std::cos(th));
    const double c = w * eps * v1(o + eps * e).dot(t);
    v += c;
    m += std::abs(c);
  }
  if (v2)
    for (const auto& c : cr) {
      const auto& S = b.interfaces[c.iface];
      const Vec2 nu = S.normal(c.s), t(-std::sin(c.angle), std::cos(c.angle));
      const double sg = t.dot(nu) >= 0 ? 1.0 : -1.0;
      const double cv = sg * v2(c.iface, c.s).dot(nu);
      v += cv;
      m = std::max(m, std::abs(cv));
    }
  if (mag) *mag = m;
  return v;
}

/// Vector-valued curl loop (row-wise): int v1 t dl + sum sign(<t_loop, nu>) v2 nu.
inline Vec2 loop_integral_curl_rows(const FieldBundle& b, const std::function<Mat2(const Vec2&)>& v1,
                                    const std::function<Mat2(std::size_t, double)>& v2, double eps, int panels = 16, int order = 10,
                                    double* mag = nullptr) {
  Vec2 out;
  if (mag) *mag = 0.0;
  for (int row = 0; row < 2; ++row) {
    double m = 0.0;
    out(row) = loop_integral_curl(
        b, [&](const Vec2& x) { return Vec2(v1(x).row(row).transpose()); },
        v2 ? std::function<Vec2(std::size_t, double)>([&](std::size_t i, double s) { return Vec2(v2(i, s).row(row).transpose()); })
           : std::function<Vec2(std::size_t, double)>(),
        eps, panels, order, &m);
    if (mag) *mag = std::max(*mag, m);
  }
  return out;
}

/// Moment loop for Div Div A = f0 delta_O + <f1, grad delta_O>:
/// int (a e_r - (x - x0) <div a, e_r>) dl + corner terms = f0 (x0 - O) + f1.
/// Corner terms sum sign * [a]_{t nu} (x_c - x0) over the crossings, sign
/// +1 when the interface tangent points away from O.
inline Vec2 loop_integral_moment(const FieldBundle& b, const TensorField& a, double eps, const Vec2& x0, int panels = 16, int order = 10,
                                 double* mag = nullptr) {
  const Vec2 o = detail::loop_center(b);
  if (!(eps > b.eps_excl * b.scale())) throw PreconditionError("loop radius must exceed the exclusion radius");
  const auto cr = detail::loop_crossings(b, o, eps);
  Vec2 v(0, 0);
  double m = 0.0;
  if (mag) *mag = 0.0;
  if (a.is_zero) return v;
  for (const auto& [th, w] : detail::loop_nodes(cr, panels, order)) {
    const Vec2 e(std::cos(th), std::sin(th));
    const Vec2 x = o + eps * e;
    const Mat2 A = a.value(x, x);
    const Vec2 dv = div3(a.gradient(x, x));
    const Vec2 c1 = w * eps * A * e, c2 = w * eps * (x - x0) * dv.dot(e);
    v += c1 - c2;
    m += c1.norm() + c2.norm();
  }
  for (const auto& c : cr) {
    const auto& S = b.interfaces[c.iface];
    const auto os = one_sided_tensor(b, a, S, c.s);
    const Vec2 t = S.tangent(c.s), nu = S.normal(c.s), xc = S.point(c.s);
    const double sg = t.dot(xc - o) > 0 ? 1.0 : -1.0;
    const Vec2 cv = sg * t.dot((os.plus - os.minus) * nu) * (xc - x0);
    v += cv;
    m = std::max(m, cv.norm());
  }
  if (mag) *mag = m;
  return v;
}

/// Scalar companion: int <div a, e_r> dl - sum sign [a]_{t nu} = f0.
inline double loop_integral_moment_monopole(const FieldBundle& b, const TensorField& a, double eps, int panels = 16, int order = 10,
                                            double* mag = nullptr) {
  const Vec2 o = detail::loop_center(b);
  const auto cr = detail::loop_crossings(b, o, eps);
  double v = 0.0, m = 0.0;
  if (mag) *mag = 0.0;
  if (a.is_zero) return v;
  for (const auto& [th, w] : detail::loop_nodes(cr, panels, order)) {
    const Vec2 e(std::cos(th), std::sin(th));
    const Vec2 x = o + eps * e;
    const double c = w * eps * div3(a.gradient(x, x)).dot(e);
    v += c;
    m += std::abs(c);
  }
  for (const auto& c : cr) {
    const auto& S = b.interfaces[c.iface];
    const auto os = one_sided_tensor(b, a, S, c.s);
    const Vec2 t = S.tangent(c.s), nu = S.normal(c.s), xc = S.point(c.s);
    const double sg = t.dot(xc - o) > 0 ? 1.0 : -1.0;
    const double cv = sg * t.dot((os.plus - os.minus) * nu);
    v -= cv;
    m = std::max(m, std::abs(cv));
  }
  if (mag) *mag = m;
  return v;
}

struct PointContent {
  double f0 = 0.0;      // Dirac coefficient
  Vec2 f1{0.0, 0.0};    // dipole vector
  double inconsistency = 0.0;  // spread of f0 across the x0 choices
  double scale = 0.0;          // size of the loop contributions (for normalization)
};

/// Separates f0 and f1 from moment loops at x0 = O, O + L e1, O + L e2.
inline PointContent moment_point_content(const FieldBundle& b, const TensorField& a, double eps, double tol = 1e-6) {
  const Vec2 o = detail::loop_center(b);
  const double L = b.scale();
  double m0 = 0.0, mc = 0.0;
  const Vec2 l0 = loop_integral_moment(b, a, eps, o, 16, 10, &m0);
  const Vec2 l1 = loop_integral_moment(b, a, eps, o + Vec2(L, 0));
  const Vec2 l2 = loop_integral_moment(b, a, eps, o + Vec2(0, L));
  PointContent pc;
  const double fa = (l1.x() - l0.x()) / L, fb = (l2.y() - l0.y()) / L;
  const double fc = loop_integral_moment_monopole(b, a, eps, 16, 10, &mc);
  pc.scale = std::max(m0, mc);
  pc.f0 = fc;
  pc.f1 = l0;
  const double cross = std::max(std::abs(l1.y() - l0.y()), std::abs(l2.x() - l0.x())) / L;
  pc.inconsistency = std::max({std::abs(fa - fc), std::abs(fb - fc), cross});
  if (pc.inconsistency > tol * std::max(pc.scale, 1e-300))
    throw ConsistencyError("moment loop: f0 estimates disagree (" + detail::fmt_num(fa) + ", " + detail::fmt_num(fb) + ", " +
                           detail::fmt_num(fc) + ")");
  return pc;
}

/// Curl Curl point content through Div Div (A a) = Curl Curl a.
inline PointContent curlcurl_point_content(const FieldBundle& b, const TensorField& a, double eps, double tol = 1e-6) {
  return moment_point_content(b, apply_A(a), eps, tol);
}

// ----------------------------------------------- Dirac strength, degrees

/// (1/2) int (g^2 - g'^2) dtheta = (1/2) int g (g + g'') - (1/2) sum_b g (g'(b-) - g'(b+)).
inline double dirac_gaussian_strength(const AngularProfile& p, int n = 256) {
  if (p.smooth_periodic())
    return 0.5 * integrate_periodic([&](double th) { return p(th) * (p(th) + p(th, 2)); }, n);
  double v = 0.0;
  for (std::size_t i = 0; i < p.pieces.size(); ++i) {
    const auto& P = p.pieces[i];
    const int panels = std::max(2, int(std::ceil(16 * (P.hi - P.lo) / (2 * kPi))));
    v += 0.5 * integrate_interval([&](double th) { return p.g(int(i), th) * (p.g(int(i), th) + p.g(int(i), th, 2)); }, P.lo, P.hi, panels, 10);
  }
  for (std::size_t i = 0; i < p.pieces.size(); ++i) {
    const std::size_t j = (i + 1) % p.pieces.size();
    const double th = p.pieces[i].hi;
    const double gl = p.g(int(i), th, 1), gr = p.g(int(j), j == 0 ? -kPi : th, 1);
    v -= 0.5 * p.g(int(i), th) * (gl - gr);
  }
  return v;
}

/// The break (boundary) term alone: -(1/2) sum_b g (g'(b-) - g'(b+)).
inline double dirac_break_term(const AngularProfile& p) {
  double v = 0.0;
  for (std::size_t i = 0; i < p.pieces.size(); ++i) {
    const std::size_t j = (i + 1) % p.pieces.size();
    const double th = p.pieces[i].hi;
    v -= 0.5 * p.g(int(i), th) * (p.g(int(i), th, 1) - p.g(int(j), j == 0 ? -kPi : th, 1));
  }
  return v;
}

struct DegreeEstimate {
  double degree = 0.0;
  double fit_residual = 0.0;
  bool unreliable = false;
};

/// Degree from the scaling of T(psi_lambda), psi_lambda = lambda^-2 psi(x / lambda),
/// over lambda in [1e-3, 1]; degree = -slope - 2.
inline DegreeEstimate estimate_degree(const std::function<double(const TestFunction&)>& pairing, const Vec2& center, double r,
                                      int levels = 7) {
  std::vector<double> X, Y;
  bool sign_change = false;
  double first_sign = 0.0;
  const TestFunction base = make_bump(center, r);
  for (int k = 0; k < levels; ++k) {
    const double lam = std::pow(10.0, -3.0 * k / (levels - 1));
    const double v = pairing(dilate(base, lam));
    if (v == 0.0) { sign_change = true; continue; }
    if (first_sign == 0.0) first_sign = v > 0 ? 1 : -1;
    else if ((v > 0 ? 1 : -1) != first_sign) sign_change = true;
    X.push_back(std::log(lam));
    Y.push_back(std::log(std::abs(v)));
  }
  DegreeEstimate d;
  if (X.size() < 2) { d.unreliable = true; return d; }
  const double n = double(X.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) { sx += X[i]; sy += Y[i]; sxx += X[i] * X[i]; sxy += X[i] * Y[i]; }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  for (std::size_t i = 0; i < X.size(); ++i) d.fit_residual = std::max(d.fit_residual, std::abs(Y[i] - icpt - slope * X[i]));
  d.degree = -slope - 2.0;
  d.unreliable = sign_change || d.fit_residual > 0.1;
  return d;
}

/// Least-squares split of a point-supported functional R(psi) = e psi(O) - <b, grad psi(O)>
/// from bumps of radius rho centered at O and at O + 0.3 rho (+-e1, +-e2).
struct PointFit {
  double e = 0.0;
  Vec2 b{0.0, 0.0};
  double misfit = 0.0;  // max residual of the fit
  double scale = 0.0;   // max |R| over the probes
};

inline PointFit fit_point_content(const std::function<double(const TestFunction&)>& R, const Vec2& o, double rho) {
  const std::vector<Vec2> shifts{{0, 0}, {0.3, 0}, {-0.3, 0}, {0, 0.3}, {0, -0.3}};
  Eigen::MatrixXd A(Eigen::Index(shifts.size()), 3);
  Eigen::VectorXd y(Eigen::Index(shifts.size()));
  PointFit f;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const TestFunction psi = make_bump(o + rho * shifts[i], rho);
    const Vec2 g = psi.grad(o);
    A(Eigen::Index(i), 0) = psi.value(o);
    A(Eigen::Index(i), 1) = -g.x();
    A(Eigen::Index(i), 2) = -g.y();
    y(Eigen::Index(i)) = R(psi);
    f.scale = std::max(f.scale, std::abs(y(Eigen::Index(i))));
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(y);
  f.e = sol(0);
  f.b = {sol(1), sol(2)};
  f.misfit = (A * sol - y).cwiseAbs().maxCoeff();
  return f;
}

}  // namespace vkp

namespace vkp {

/// Linear form in the 4-jet of a test function:
/// v psi + <g, grad psi> + <H, grad grad psi> + b4 Delta^2 psi.
struct LinearForm {
  double v = 0.0;
  Vec2 g{0.0, 0.0};
  Mat2 H = Mat2::Zero();
  double b4 = 0.0;

  double apply(const Jet<4>& P) const {
    return v * P.value() + g.x() * P.d(1, 0) + g.y() * P.d(0, 1) + H(0, 0) * P.d(2, 0) + (H(0, 1) + H(1, 0)) * P.d(1, 1) +
           H(1, 1) * P.d(0, 2) + b4 * (P.d(4, 0) + 2.0 * P.d(2, 2) + P.d(0, 4));
  }
};

/// A distribution given by what it integrates against a test function: a
/// bulk linear form and line linear forms on each interface.
struct WeakIntegrand {
  std::function<LinearForm(const Vec2&)> bulk;
  std::function<LinearForm(std::size_t, double)> line;
};

/// Pairings of w with several test functions sharing the support B(o, rho):
/// tests(x, out) writes the 4-jets of every test function at x.  mags receive
/// the integrals of |integrand| (bulk plus lines).
inline std::vector<double> weak_apply_many(const FieldBundle& b, const WeakIntegrand& w, const Vec2& o, double rho,
                                           const std::function<void(const Vec2&, Jet<4>*)>& tests, int K, const QuadOptions& q = {},
                                           std::vector<double>* mags = nullptr) {
  std::vector<double> v(std::size_t(K), 0.0), m(std::size_t(K), 0.0);
  std::vector<Jet<4>> J(static_cast<std::size_t>(K));
  const double r2 = rho * rho;
  if (w.bulk) {
    const auto r = integrate_support_checked(b, o, rho, [&](const Vec2& x, double* out) {
      if ((x - o).squaredNorm() >= r2) { std::fill(out, out + K, 0.0); return; }
      const LinearForm L = w.bulk(x);
      tests(x, J.data());
      for (int k = 0; k < K; ++k) out[k] = L.apply(J[std::size_t(k)]);
    }, K, q);
    v = r.first;
    m = r.second;
  }
  if (w.line) {
    const TestFunction support = make_bump(o, rho);
    for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
      const auto& S = b.interfaces[i];
      for (int k = 0; k < K; ++k) {
        auto f = [&](double s) {
          const Vec2 x = S.point(s);
          if ((x - o).squaredNorm() >= r2) return 0.0;
          if (b.origin && (x - *b.origin).norm() <= b.eps_excl * b.scale()) return 0.0;
          tests(x, J.data());
          return w.line(i, s).apply(J[std::size_t(k)]);
        };
        v[std::size_t(k)] += integrate_line(b, S, support, f);
        m[std::size_t(k)] += integrate_line(b, S, support, [&](double s) { return std::abs(f(s)); });
      }
    }
  }
  if (mags) *mags = m;
  return v;
}

inline double weak_apply(const FieldBundle& b, const WeakIntegrand& w, const TestFunction& psi, const QuadOptions& q = {},
                         double* mag = nullptr) {
  std::vector<double> m;
  const auto v = weak_apply_many(b, w, psi.center, psi.radius, [&](const Vec2& x, Jet<4>* out) { out[0] = psi.jet<4>(x); }, 1, q, &m);
  if (mag) *mag = m[0];
  return v[0];
}

/// Point content (e, b) of T = e delta_o + <b, grad delta_o> + (higher moments):
/// with psi the bump of radius rho at o, e = T(psi) and b_i = -rho T(psi (x - o)_i / rho).
/// The misfit is T(psi |x - o|^2 / rho^2), which vanishes without higher moments.
/// scale receives the largest integral of |integrand|.
inline PointFit weak_point_fit(const FieldBundle& b, const WeakIntegrand& w, const Vec2& o, double rho, const QuadOptions& q = {},
                               double* scale = nullptr) {
  const TestFunction psi = make_bump(o, rho);
  std::vector<double> m;
  const auto v = weak_apply_many(b, w, o, rho, [&](const Vec2& x, Jet<4>* out) {
    const Jet<4> P = psi.jet<4>(x);
    const Jet<4> X = (Jet<4>::variable_x(x.x()) - o.x()) / rho, Y = (Jet<4>::variable_y(x.y()) - o.y()) / rho;
    out[0] = P;
    out[1] = P * X;
    out[2] = P * Y;
    out[3] = P * (X * X + Y * Y);
  }, 4, q, &m);
  PointFit f;
  f.e = v[0];
  f.b = {-rho * v[1], -rho * v[2]};
  f.misfit = std::abs(v[3]);
  f.scale = *std::max_element(v.begin(), v.end(), [](double a, double c) { return std::abs(a) < std::abs(c); });
  f.scale = std::abs(f.scale);
  if (scale) *scale = *std::max_element(m.begin(), m.end());
  return f;
}

}  // namespace vkp
