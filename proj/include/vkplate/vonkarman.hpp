#pragma once

// Residuals of the generalized von Karman equations: the compatibility
// equation in its two prescriptions (plastic strain given, or defect
// densities given), the equilibrium equation, and the specialized fold system.
// Every distributional equation is checked per density order: bulk, the
// interfacial coefficients of psi, d psi/d nu and d^2 psi/d nu^2, and the
// point content at O (moment loops and weak pairings).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "vkplate/statics.hpp"

namespace vkp {

struct SuiteOptions {
  Tolerances tol;
  bool point = true;          // evaluate point conditions
  double bump_radius = 0.25;  // weak-pairing bumps, relative to the domain scale
  QuadOptions quad;
};

namespace detail {

inline double beta(const FieldBundle& b, const InterfaceSpec& S, double s) {
  // line density of Delta W: -<[grad w], nu>
  const Eigen::VectorXd j = jump(b, S, Quantity::GradW, s);
  return -Vec2(j(0), j(1)).dot(S.normal(s));
}

inline double beta_phi(const FieldBundle& b, const InterfaceSpec& S, double s) {
  if (b.phi.is_zero) return 0.0;
  const Eigen::VectorXd j = jump(b, S, Quantity::GradPhi, s);
  return -Vec2(j(0), j(1)).dot(S.normal(s));
}

inline ScalarField laplacian_field(const ScalarField& f) {
  if (f.is_zero) return f;
  ScalarField g = f;
  g.kind = "laplacian(" + f.kind + ")";
  g.f0 = [f](const Vec2& x, const Vec2& r) { const auto J = f.jet<2>(x, r); return Jet<0>(J.d(2, 0) + J.d(0, 2)); };
  g.f1 = [f](const Vec2& x, const Vec2& r) { const auto J = f.jet<3>(x, r); return truncate<1>(dx(dx(J)) + dy(dy(J))); };
  g.f2 = [f](const Vec2& x, const Vec2& r) { const auto J = f.jet<4>(x, r); return truncate<2>(dx(dx(J)) + dy(dy(J))); };
  g.f3 = [f](const Vec2& x, const Vec2& r) { const auto J = f.jet<5>(x, r); return truncate<3>(dx(dx(J)) + dy(dy(J))); };
  g.f4 = nullptr;
  g.f5 = nullptr;
  return g;
}

inline ScalarField trace_field(const TensorField& a) {
  if (a.is_zero) return ScalarField::zero();
  ScalarField g;
  g.kind = "trace";
  g.is_zero = false;
  g.region_of = [](const Vec2&) { return 0; };
  g.f0 = [a](const Vec2& x, const Vec2& r) { const auto J = a.jet<0>(x, r); return J[0] + J[2]; };
  g.f1 = [a](const Vec2& x, const Vec2& r) { const auto J = a.jet<1>(x, r); return J[0] + J[2]; };
  g.f2 = [a](const Vec2& x, const Vec2& r) { const auto J = a.jet<2>(x, r); return J[0] + J[2]; };
  g.f3 = [a](const Vec2& x, const Vec2& r) { const auto J = a.jet<3>(x, r); return J[0] + J[2]; };
  return g;
}

// Point equation from a weak pairing: fitted (e, b) against the target.
inline void weak_point_equation(EquationResidual& eq, const FieldBundle& b, const WeakIntegrand& w, double e_target,
                                const Vec2& b_target, const SuiteOptions& o) {
  if (!b.origin) {
    eq.note = "no singular point: point conditions not applicable";
    return;
  }
  try {
    const Vec2 c = loop_center(b);
    const double rho = o.bump_radius * b.scale();
    double scale = 0.0;
    const PointFit f = weak_point_fit(b, w, c, rho, o.quad, &scale);
    const TestFunction psi = make_bump(c, rho);
    const double p0 = psi.value(c);
    Term t;
    t.value = std::max(std::abs(f.e - e_target) * p0, (f.b - b_target).norm() * p0 / rho);
    t.mag = std::max(scale, f.scale);
    eq.add(t);
    eq.components["e"] = f.e;
    eq.components["b1"] = f.b.x();
    eq.components["b2"] = f.b.y();
    eq.components["e_expected"] = e_target;
    eq.components["b1_expected"] = b_target.x();
    eq.components["b2_expected"] = b_target.y();
    eq.components["fit_misfit"] = f.misfit;
    eq.components["scale"] = t.mag;
    eq.finish();
  } catch (const Error& e) {
    eq.fail(e.what());
  }
}

inline void point_not_evaluated(EquationResidual& eq, const std::string& why) {
  eq.note = why;
  eq.pass = true;
}

}  // namespace detail

// ------------------------------------------------------------ Case 1

/// (1/E) Delta^2 Phi - (1/2) Curl Curl(grad W (x) grad W) + Curl Curl E^p = 0
/// together with the fold closure [grad w] (x) nu = -gamma^p.
inline ResidualSet vk1_case1_residuals(const FieldBundle& b, const ProbeSet& p, const SuiteOptions& o = {}) {
  ResidualSet rs;
  rs.suite = "vk1_case1";
  const Tolerances& tol = o.tol;
  auto& clo = rs.add("closure", Region::Interface, tol);
  auto& bulk = rs.add("bulk", Region::Bulk, tol);
  auto& mono = rs.add("interface.monopole", Region::Interface, tol);
  auto& dip = rs.add("interface.dipole", Region::Interface, tol);
  auto& sec = rs.add("interface.second", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& weak = rs.add("point.weak", Region::Point, tol);
  const bool el = !b.inextensible;  // E-terms are evaluated only for extensible plates
  const double iE = el ? 1.0 / b.material.E : 0.0;
  const TensorField ww = sym_grad_outer(b.w, b.w);
  const ScalarField lphi = detail::laplacian_field(b.phi);

  accumulate(clo, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const Eigen::VectorXd j = jump(b, S, Quantity::GradW, ip.s);
    const Vec2 jw(j(0), j(1)), nu = S.normal(ip.s);
    const double g0 = S.gamma0(ip.s);
    return detail::vec_term(jw + g0 * nu, std::max(jw.norm(), std::abs(g0)));
  });
  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    b.check_bulk_point(x);
    Term t;
    if (el) t.add(bilaplacian_bulk(b.phi, x), iE);
    if (!b.w.is_zero) {
      const Mat2 H = b.w.hess(x);
      t.add(monge_ampere_terms(H, H), 0.5);
    }
    t.add(curlcurl_bulk(b.ep, x));
    return t;
  });
  accumulate_many({&mono, &dip, &sec}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const double s = ip.s;
    Term m, d, q;
    if (el && !b.phi.is_zero) {
      const auto L = laplacian_interfacial(b, lphi, [&](double u) { return detail::beta_phi(b, S, u); }, false, S, s);
      m.add(L.monopole, iE);
      d.add(L.dipole, iE);
      q.add(L.second, iE);
    }
    const auto cw = curlcurl_interfacial(b, ww, S, s);
    m.add(cw.monopole, -0.5);
    d.add(cw.dipole, -0.5);
    const auto ce = curlcurl_interfacial(b, b.ep, S, s);
    m.add(ce.monopole);
    d.add(ce.dipole);
    return std::vector<Term>{m, d, q};
  });
  if (!o.point) {
    detail::point_not_evaluated(loop, "point conditions skipped");
    detail::point_not_evaluated(weak, "point conditions skipped");
    return rs;
  }
  // Div Div of (1/E) Delta phi I + A(e^p - (1/2) grad w (x) grad w)
  const TensorField A = combine(el ? isotropic(lphi, iE) : TensorField::zero(), 1.0,
                                apply_A(combine(b.ep, 1.0, ww, -0.5)), 1.0);
  EquationResidual spread_dummy;
  const double Ls = b.scale();
  detail::loop_equations(loop, spread_dummy, p, [&](double eps, double& mag) {
    const auto pc = moment_point_content(b, A, eps);
    mag = pc.scale;
    return Eigen::Vector3d(pc.f0, pc.f1.x() / Ls, pc.f1.y() / Ls);
  });
  loop.components["spread"] = spread_dummy.components["spread"];
  WeakIntegrand wi;
  wi.bulk = [&](const Vec2& x) {
    LinearForm L;
    if (el && !b.phi.is_zero) L.b4 = iE * b.phi.jet<0>(x, x).value();
    const Mat2 X = (b.ep.is_zero ? Mat2::Zero().eval() : b.ep.value(x, x)) - (b.w.is_zero ? Mat2::Zero().eval() : 0.5 * ww.value(x, x));
    L.H = apply_A(X);
    return L;
  };
  detail::weak_point_equation(weak, b, wi, 0.0, Vec2(0, 0), o);
  return rs;
}

// --------------------------------------------------------- equilibrium

/// D Delta^2 W - [Phi, W] = F + D((1-nu) Div Div Lambda^p + nu Delta tr Lambda^p),
/// Lambda^p = lambda^p + gamma0 nu (x) nu delta_S.
inline ResidualSet vk2_residuals(const FieldBundle& b, const ProbeSet& p, const SuiteOptions& o = {}) {
  ResidualSet rs;
  rs.suite = "vk2";
  const Tolerances& tol = o.tol;
  auto& bulk = rs.add("bulk", Region::Bulk, tol);
  auto& mono = rs.add("interface.monopole", Region::Interface, tol);
  auto& dip = rs.add("interface.dipole", Region::Interface, tol);
  auto& sec = rs.add("interface.second", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& weak = rs.add("point.weak", Region::Point, tol);
  const double D = b.material.D, nu = b.material.nu;
  const TensorField pw = sym_grad_outer(b.phi, b.w);
  const ScalarField lw = detail::laplacian_field(b.w);
  const ScalarField trlp = detail::trace_field(b.lp);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    b.check_bulk_point(x);
    Term t;
    t.add(bilaplacian_bulk(b.w, x), D);
    if (!b.phi.is_zero && !b.w.is_zero) t.add(monge_ampere_terms(b.phi.hess(x), b.w.hess(x)), -1.0);
    if (!b.f1.is_zero) t.add(-b.f1.value(x));
    if (!b.lp.is_zero) {
      t.add(divdiv_bulk(b.lp, x), -D * (1 - nu));
      t.add(laplacian_trace_bulk(b.lp, x), -D * nu);
    }
    return t;
  });
  accumulate_many({&mono, &dip, &sec}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const double s = ip.s;
    Term m, d, q;
    const auto Lw = laplacian_interfacial(b, lw, [&](double u) { return detail::beta(b, S, u); }, false, S, s);
    m.add(Lw.monopole, D);
    d.add(Lw.dipole, D);
    q.add(Lw.second, D);
    const auto c = curlcurl_interfacial(b, pw, S, s);
    m.add(c.monopole);
    d.add(c.dipole);
    const LineLoad ld = b.load(ip.iface);
    m.add(-ld.f2);
    d.add(-ld.f2c);
    // plastic: (1-nu) Div Div Lambda^p + nu Delta tr Lambda^p
    const auto dd = divdiv_interfacial(b, b.lp, S, s);
    m.add(dd.monopole, -D * (1 - nu));
    d.add(dd.dipole, -D * (1 - nu));
    q.add(-D * (1 - nu) * S.gamma0(s));
    const auto Lp = laplacian_interfacial(b, trlp, [&](double u) { return S.gamma0(u); }, S.gamma0_constant(), S, s);
    m.add(Lp.monopole, -D * nu);
    d.add(Lp.dipole, -D * nu);
    q.add(Lp.second, -D * nu);
    return std::vector<Term>{m, d, q};
  });
  if (!o.point) {
    detail::point_not_evaluated(loop, "point conditions skipped");
    detail::point_not_evaluated(weak, "point conditions skipped");
    return rs;
  }
  const TensorField a = combine(moment_field(b.material, b.w, b.lp), 1.0, apply_A(pw), 1.0);
  EquationResidual spread_dummy;
  const double Ls = b.scale();
  detail::loop_equations(loop, spread_dummy, p, [&](double eps, double& mag) {
    const auto pc = moment_point_content(b, a, eps);
    mag = pc.scale;
    return Eigen::Vector3d(pc.f0 - b.point.f0, (pc.f1.x() - b.point.f1.x()) / Ls, (pc.f1.y() - b.point.f1.y()) / Ls);
  });
  loop.components["spread"] = spread_dummy.components["spread"];
  if (!p.loop_radii.empty()) {
    // measured content (not differences) at the smallest radius
    try {
      const auto pc = moment_point_content(b, a, p.loop_radii.empty() ? 0.1 * Ls : p.loop_radii.front());
      loop.components["f0"] = pc.f0;
      loop.components["f1_1"] = pc.f1.x();
      loop.components["f1_2"] = pc.f1.y();
    } catch (const Error&) {
    }
  }
  WeakIntegrand wi;
  wi.bulk = [&](const Vec2& x) {
    LinearForm L;
    if (!b.w.is_zero) L.b4 = D * b.w.jet<0>(x, x).value();
    if (!pw.is_zero) L.H += apply_A(pw.value(x, x));
    if (!b.f1.is_zero) L.v = -b.f1.value(x);
    if (!b.lp.is_zero) {
      const Mat2 l = b.lp.value(x, x);
      L.H -= D * (1 - nu) * l + D * nu * l.trace() * Mat2::Identity();
    }
    return L;
  };
  wi.line = [&](std::size_t i, double s) {
    const auto& S = b.interfaces[i];
    const Vec2 n = S.normal(s);
    const LineLoad ld = b.load(i);
    const double g0 = S.gamma0(s);
    LinearForm L;
    L.v = -ld.f2;
    L.g = -ld.f2c * n;
    L.H = -D * (1 - nu) * g0 * outer(n, n) - D * nu * g0 * Mat2::Identity();
    return L;
  };
  detail::weak_point_equation(weak, b, wi, b.point.f0, b.point.f1, o);
  return rs;
}

// ------------------------------------------------------------ Case 2

/// (1/E) Delta^2 Phi + (1/2)[W, W] + N1 - Det Lambda^p = 0 with N1 from the
/// defect densities and Lambda^p = lambda^p continuous (bulk only).
inline ResidualSet vk1_case2_residuals(const FieldBundle& b, const DefectSpec& defects, const ProbeSet& p, const SuiteOptions& o = {}) {
  ResidualSet rs;
  rs.suite = "vk1_case2";
  const Tolerances& tol = o.tol;
  auto& bulk = rs.add("bulk", Region::Bulk, tol);
  auto& mono = rs.add("interface.monopole", Region::Interface, tol);
  auto& dip = rs.add("interface.dipole", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& weak = rs.add("point.weak", Region::Point, tol);
  const bool el = !b.inextensible;
  const double iE = el ? 1.0 / b.material.E : 0.0;
  const Incompatibility N = defect_to_incompatibility(defects, b);
  const TensorField ww = sym_grad_outer(b.w, b.w);
  const ScalarField lphi = detail::laplacian_field(b.phi);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    b.check_bulk_point(x);
    Term t;
    if (el) t.add(bilaplacian_bulk(b.phi, x), iE);
    if (!b.w.is_zero) {
      const Mat2 H = b.w.hess(x);
      t.add(monge_ampere_terms(H, H), 0.5);
    }
    t.add(N.eta(x));
    if (!b.lp.is_zero) {
      const Mat2 l = b.lp.value(x, x);
      t.add(-l(0, 0) * l(1, 1)).add(l(0, 1) * l(0, 1));
    }
    return t;
  });
  accumulate_many({&mono, &dip}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const double s = ip.s;
    Term m, d;
    if (el && !b.phi.is_zero) {
      const auto L = laplacian_interfacial(b, lphi, [&](double u) { return detail::beta_phi(b, S, u); }, false, S, s);
      m.add(L.monopole, iE);
      d.add(L.dipole, iE);
    }
    const auto cw = curlcurl_interfacial_product(b, b.w, b.w, S, s);
    m.add(cw.monopole, -0.5);
    d.add(cw.dipole, -0.5);
    m.add(N.zeta1(ip.iface, s));
    d.add(N.zeta2(ip.iface, s));
    return std::vector<Term>{m, d};
  });
  if (!o.point) {
    detail::point_not_evaluated(loop, "point conditions skipped");
    detail::point_not_evaluated(weak, "point conditions skipped");
    return rs;
  }
  const bool bulk_free = b.lp.is_zero && defects.theta_B.is_zero && defects.alpha_B1.is_zero && defects.alpha_B2.is_zero &&
                         defects.q.is_zero && !defects.theta_S && !defects.alpha_S;
  const double Ls = b.scale();
  if (bulk_free) {
    const TensorField A = combine(el ? isotropic(lphi, iE) : TensorField::zero(), 1.0, apply_A(ww), -0.5);
    EquationResidual spread_dummy;
    detail::loop_equations(loop, spread_dummy, p, [&](double eps, double& mag) {
      const auto pc = moment_point_content(b, A, eps);
      mag = pc.scale;
      return Eigen::Vector3d(pc.f0 + N.point.f0, (pc.f1.x() + N.point.f1.x()) / Ls, (pc.f1.y() + N.point.f1.y()) / Ls);
    });
    loop.components["spread"] = spread_dummy.components["spread"];
  } else {
    detail::point_not_evaluated(loop, "bulk or interfacial defect densities present: loop route not applicable");
  }
  WeakIntegrand wi;
  wi.bulk = [&](const Vec2& x) {
    LinearForm L;
    if (el && !b.phi.is_zero) L.b4 = iE * b.phi.jet<0>(x, x).value();
    if (!b.w.is_zero) L.H = -0.5 * apply_A(ww.value(x, x));
    L.v = N.eta(x).value;
    if (!b.lp.is_zero) L.v -= b.lp.value(x, x).determinant();
    return L;
  };
  if (defects.theta_S || defects.alpha_S || !defects.q.is_zero || !defects.alpha_B1.is_zero || !defects.alpha_B2.is_zero)
    wi.line = [&](std::size_t i, double s) {
      LinearForm L;
      L.v = N.zeta1(i, s).value;
      L.g = N.zeta2(i, s).value * b.interfaces[i].normal(s);
      return L;
    };
  detail::weak_point_equation(weak, b, wi, -N.point.f0, -N.point.f1, o);
  return rs;
}

// ---------------------------------------------------------- fold system

/// The inextensible fold system: compatibility (1/2)[w,w] = -curl curl e^p
/// with its interfacial pair, equilibrium D Delta^2 w - [phi, w] = 0 with the
/// interfacial trio (monopole, the [Delta w] equation, closure).
inline ResidualSet fold_vk_residuals(const FieldBundle& b, const ProbeSet& p, const SuiteOptions& o = {}) {
  if (!b.inextensible) throw PreconditionError("fold system requires an inextensible bundle");
  SuiteOptions so = o;
  so.point = false;
  const ResidualSet c = vk1_case1_residuals(b, p, so);
  const ResidualSet e = vk2_residuals(b, p, so);
  ResidualSet rs;
  rs.suite = "fold_vk";
  auto copy = [&](const ResidualSet& from, const std::string& src, const std::string& dst) {
    EquationResidual q = from.at(src);
    q.id = rs.suite + "." + dst;
    rs.equations.push_back(q);
  };
  copy(c, "closure", "closure");
  copy(c, "bulk", "compat.bulk");
  copy(c, "interface.monopole", "compat.interface.monopole");
  copy(c, "interface.dipole", "compat.interface.dipole");
  copy(e, "bulk", "equil.bulk");
  copy(e, "interface.monopole", "equil.interface.monopole");
  copy(e, "interface.dipole", "equil.interface.dipole");
  copy(e, "interface.second", "equil.interface.second");
  return rs;
}

}  // namespace vkp
