#pragma once

// Stresses from the Airy function, constitutive relations and the in-plane
// and moment balance residuals.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "vkplate/kinematics.hpp"

namespace vkp {

/// Bulk stress sigma and moment m with their concentrations tau and n on S
/// (both zero unless supplied).
struct StressState {
  TensorField sigma, m;
  std::function<Mat2(std::size_t, double)> tau, n;
};

/// sigma = A grad grad phi.
inline Mat2 stress_from_airy(const FieldBundle& b, const Vec2& x) { return apply_A(eval_hess_phi(b, x)); }

/// sigma = E/(1-nu^2)((1-nu) e^e + nu tr(e^e) I), m = D((1-nu) lambda^e + nu tr(lambda^e) I).
inline std::pair<Mat2, Mat2> constitutive(const Material& mat, const Mat2& ee, const Mat2& le) {
  const Mat2 I = Mat2::Identity();
  const double nu = mat.nu;
  const Mat2 sigma = mat.E / (1 - nu * nu) * ((1 - nu) * ee + nu * ee.trace() * I);
  const Mat2 m = mat.D * ((1 - nu) * le + nu * le.trace() * I);
  return {sigma, m};
}

/// Airy stress and the constitutive moment of the bundle; no concentrations.
inline StressState make_stress_state(const FieldBundle& b) {
  StressState s;
  s.sigma = apply_A(hessian_field(b.phi));
  s.m = moment_field(b.material, b.w, b.lp);
  return s;
}

/// In-plane balance: div sigma = 0; (d tau/ds) t - [sigma] nu = 0 and
/// tau nu = 0 on S; no net force at the loop center (curl loops on e3 x sigma).
inline ResidualSet inplane_balance_residuals(const StressState& st, const FieldBundle& b, const ProbeSet& p,
                                             const Tolerances& tol = {}) {
  ResidualSet rs;
  rs.suite = "inplane";
  auto& bulk = rs.add("bulk.div", Region::Bulk, tol);
  auto& jmp = rs.add("interface.jump", Region::Interface, tol);
  auto& tn = rs.add("interface.tau_nu", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& spread = rs.add("point.loop_spread", Region::Point, tol);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    Term t;
    if (st.sigma.is_zero) return t;
    b.check_bulk_point(x);
    const auto S = st.sigma.jet<1>(x, x);
    const double a = S[0].d(1, 0), c = S[1].d(0, 1), d = S[1].d(1, 0), e = S[2].d(0, 1);
    return detail::vec_term({a + c, d + e}, std::max({std::abs(a), std::abs(c), std::abs(d), std::abs(e)}));
  });
  accumulate_many({&jmp, &tn}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    Vec2 js(0, 0);
    double smag = 0.0;  // one-sided stress scale
    if (!st.sigma.is_zero) {
      const auto o = one_sided_tensor(b, st.sigma, S, ip.s);
      js = (o.plus - o.minus) * S.normal(ip.s);
      smag = std::max(o.plus.norm(), o.minus.norm());
    }
    Vec2 dt(0, 0), taunu(0, 0);
    double tmag = 0.0;
    if (st.tau) {
      const Mat2 T = st.tau(ip.iface, ip.s);
      tmag = T.norm();
      taunu = T * S.normal(ip.s);
      for (int r = 0; r < 2; ++r)
        dt(r) = d_ds(b, S, [&](double u) { return (st.tau(ip.iface, u) * S.tangent(u))(r); }, ip.s, 1);
    }
    return std::vector<Term>{detail::vec_term(dt - js, std::max({dt.norm(), js.norm(), smag})), detail::vec_term(taunu, tmag)};
  });
  detail::loop_equations(loop, spread, p, [&](double eps, double& mag) {
    if (st.sigma.is_zero) return Eigen::Vector3d(0, 0, 0);
    auto rot = [](const Mat2& s) {
      Mat2 r;
      r.row(0) = perp(Vec2(s.row(0).transpose())).transpose();
      r.row(1) = perp(Vec2(s.row(1).transpose())).transpose();
      return r;
    };
    std::function<Mat2(std::size_t, double)> v2;
    if (st.tau) v2 = [&](std::size_t i, double s) { return rot(st.tau(i, s)); };
    const Vec2 v = loop_integral_curl_rows(
        b, [&](const Vec2& x) { return rot(st.sigma.value(x, x)); }, v2, eps, 16, 10, &mag);
    return Eigen::Vector3d(v.x(), v.y(), 0.0);
  });
  return rs;
}

/// Moment balance: div div m - <sigma, lambda> = f1 in the bulk; on S the
/// monopole -<[div m], nu> - d/ds [m]_{t nu} - <{sigma}, gamma> = f2 and the
/// dipole [m]_{nu nu} = f2c, with no moment concentration n; at the loop
/// center the moment loop of m + A sym(grad phi (x) grad w) gives (f0, f1).
inline ResidualSet moment_balance_residuals(const StressState& st, const FieldBundle& b, const ProbeSet& p,
                                            const Tolerances& tol = {}) {
  ResidualSet rs;
  rs.suite = "moment";
  auto& bulk = rs.add("bulk", Region::Bulk, tol);
  auto& mono = rs.add("interface.monopole", Region::Interface, tol);
  auto& dip = rs.add("interface.dipole", Region::Interface, tol);
  auto& conc = rs.add("interface.concentration", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& spread = rs.add("point.loop_spread", Region::Point, tol);
  const StrainState ks = strains_from_displacement(b);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    b.check_bulk_point(x);
    Term t = divdiv_bulk(st.m, x);
    if (!st.sigma.is_zero && !b.w.is_zero) {
      const Mat2 S = st.sigma.value(x, x), L = b.w.hess(x);
      t.add(-S(0, 0) * L(0, 0)).add(-2.0 * S(0, 1) * L(0, 1)).add(-S(1, 1) * L(1, 1));
    }
    if (!b.f1.is_zero) t.add(-b.f1.value(x));
    return t;
  });
  accumulate_many({&mono, &dip, &conc}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const double s = ip.s;
    const auto dd = divdiv_interfacial(b, st.m, S, s);
    Term m = dd.monopole, d = dd.dipole;
    const Mat2 G = ks.gamma(ip.iface, s);
    if (!st.sigma.is_zero) {
      const auto o = one_sided_tensor(b, st.sigma, S, s);
      m.add(-inner(0.5 * (o.plus + o.minus), G));
    }
    if (st.tau) {
      const Eigen::VectorXd h = average(b, S, Quantity::HessW, s);
      m.add(-inner(st.tau(ip.iface, s), Mat2{{h(0), h(1)}, {h(1), h(2)}}));
    }
    const LineLoad ld = b.load(ip.iface);
    m.add(-ld.f2);
    d.add(-ld.f2c);
    // moment concentration from the elastic part of the fold strain
    const Mat2 ge = ks.gamma_e(ip.iface, s);
    const double nu = b.material.nu;
    const Mat2 n = b.material.D * ((1 - nu) * ge + nu * ge.trace() * Mat2::Identity());
    Term c;
    c.value = n.norm() + (st.n ? st.n(ip.iface, s).norm() : 0.0);
    c.mag = b.material.D * std::max(G.norm(), ks.gamma_p(ip.iface, s).norm());
    return std::vector<Term>{m, d, c};
  });
  const TensorField a = combine(st.m, 1.0, apply_A(sym_grad_outer(b.phi, b.w)), 1.0);
  const double L = b.scale();
  detail::loop_equations(loop, spread, p, [&](double eps, double& mag) {
    const auto pc = moment_point_content(b, a, eps);
    mag = pc.scale;
    return Eigen::Vector3d(pc.f0 - b.point.f0, (pc.f1.x() - b.point.f1.x()) / L, (pc.f1.y() - b.point.f1.y()) / L);
  });
  return rs;
}

}  // namespace vkp
