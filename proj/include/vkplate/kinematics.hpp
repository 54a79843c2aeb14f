#pragma once

// Strains from displacements, compatibility residuals (bending and
// stretching) and the map from defect densities to incompatibilities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vkplate/residual.hpp"

namespace vkp {

struct InPlaneDisplacement {
  ScalarField u1, u2;
};

/// Bulk strains e, lambda with their elastic/plastic splits, and the fold
/// concentrations gamma = -[grad w] (x) nu and gamma^p = gamma0 nu (x) nu.
struct StrainState {
  FieldBundle bundle;
  TensorField e, lambda;
  TensorField ep, ee, lp, le;
  bool e_from_displacement = false;  // false: e = e^p (elastic inextensibility)

  Mat2 gamma(std::size_t i, double s) const {
    const auto& S = bundle.interfaces.at(i);
    const Eigen::VectorXd j = vkp::jump(bundle, S, Quantity::GradW, s);
    return -outer(Vec2(j(0), j(1)), S.normal(s));
  }
  Mat2 gamma_p(std::size_t i, double s) const {
    const auto& S = bundle.interfaces.at(i);
    const Vec2 nu = S.normal(s);
    return S.gamma0(s) * outer(nu, nu);
  }
  Mat2 gamma_e(std::size_t i, double s) const { return gamma(i, s) - gamma_p(i, s); }
};

/// e = sym grad u + (1/2) grad w (x) grad w and lambda = grad grad w.  For an
/// inextensible bundle without an in-plane displacement e is the prescribed
/// plastic stretch (e^e = 0, u is not reconstructed).
inline StrainState strains_from_displacement(const FieldBundle& b, const std::optional<InPlaneDisplacement>& u = std::nullopt) {
  StrainState st;
  st.bundle = b;
  st.lambda = hessian_field(b.w);
  st.ep = b.ep;
  st.lp = b.lp;
  if (u || !b.inextensible) {
    st.e_from_displacement = true;
    TensorField symgrad = TensorField::zero();
    if (u && !(u->u1.is_zero && u->u2.is_zero)) {
      const ScalarField u1 = u->u1, u2 = u->u2;
      symgrad = TensorField::compose(
          [u1, u2](auto tag) {
            constexpr int N = decltype(tag)::value;
            return [u1, u2](const Vec2& x, const Vec2& r) -> SymJet<N> {
              const auto A = u1.template jet<N + 1>(x, r), B = u2.template jet<N + 1>(x, r);
              return {dx(A), (dy(A) + dx(B)) * 0.5, dy(B)};
            };
          },
          "sym_grad_u");
    }
    st.e = combine(symgrad, 1.0, sym_grad_outer(b.w, b.w, 0.5), 1.0);
  } else {
    st.e = b.ep;
  }
  st.ee = combine(st.e, 1.0, st.ep, -1.0);
  st.le = combine(st.lambda, 1.0, st.lp, -1.0);
  return st;
}

namespace detail {

inline Term vec_term(const Vec2& v, double mag) {
  Term t;
  t.value = v.norm();
  t.mag = std::max(mag, 0.0);
  return t;
}

// Loop statistics over the probe radii: per-radius value and the spread.
template <class Fn>
void loop_equations(EquationResidual& loop, EquationResidual& spread, const ProbeSet& p, Fn&& f) {
  if (p.loop_radii.empty()) {
    loop.note = spread.note = "no singular point: point conditions not applicable";
    return;
  }
  try {
    std::vector<Eigen::Vector3d> vals;
    double scale = 0.0;
    for (double eps : p.loop_radii) {
      double mag = 0.0;
      const Eigen::Vector3d v = f(eps, mag);  // components, already compared to their targets
      vals.push_back(v);
      scale = std::max(scale, mag);
      Term t;
      t.value = v.norm();
      t.mag = mag;
      loop.add(t);
    }
    if (!vals.empty()) {
      loop.components["c0"] = vals[0](0);
      loop.components["c1"] = vals[0](1);
      loop.components["c2"] = vals[0](2);
    }
    double spr = 0.0;
    for (const auto& a : vals)
      for (const auto& c : vals) spr = std::max(spr, (a - c).norm());
    Term t;
    t.value = spr;
    t.mag = scale;
    spread.add(t);
    spread.components["spread"] = spr;
    loop.finish();
    spread.finish();
  } catch (const Error& e) {
    loop.fail(e.what());
    spread.fail(e.what());
  }
}

}  // namespace detail

/// Bending compatibility: curl lambda = 0; [lambda] t + d/ds(gamma nu) = 0;
/// gamma x nu = 0 (gamma = gamma_nn nu (x) nu); loop int lambda t dl + sum gamma nu = 0.
inline ResidualSet bending_compat_residuals(const StrainState& st, const ProbeSet& p, const Tolerances& tol = {}) {
  ResidualSet rs;
  rs.suite = "compat_bending";
  const FieldBundle& b = st.bundle;
  auto& bulk = rs.add("bulk.curl", Region::Bulk, tol);
  auto& jmp = rs.add("interface.jump", Region::Interface, tol);
  auto& crs = rs.add("interface.cross", Region::Interface, tol);
  auto& cont = rs.add("interface.continuity", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& spread = rs.add("point.loop_spread", Region::Point, tol);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    Term t;
    if (st.lambda.is_zero) return t;
    b.check_bulk_point(x);
    const auto L = st.lambda.jet<1>(x, x);
    const double a1 = L[1].d(1, 0), a2 = L[0].d(0, 1), b1 = L[2].d(1, 0), b2 = L[1].d(0, 1);
    t = detail::vec_term({a1 - a2, b1 - b2}, std::max({std::abs(a1), std::abs(a2), std::abs(b1), std::abs(b2)}));
    return t;
  });
  accumulate_many({&jmp, &crs, &cont}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const double s = ip.s;
    const Eigen::VectorXd jl = vkp::jump(b, S, Quantity::HessW, s);
    const Mat2 JL{{jl(0), jl(1)}, {jl(1), jl(2)}};
    const Vec2 t = S.tangent(s), nu = S.normal(s);
    const Vec2 a = JL * t;
    const Vec2 g1(d_ds(b, S, [&](double u) { return (st.gamma(ip.iface, u) * S.normal(u))(0); }, s, 1),
                  d_ds(b, S, [&](double u) { return (st.gamma(ip.iface, u) * S.normal(u))(1); }, s, 1));
    const Mat2 G = st.gamma(ip.iface, s);
    const double gn = G.norm();
    const Mat2 off = G - nu.dot(G * nu) * outer(nu, nu);
    const Eigen::VectorXd al = vkp::average(b, S, Quantity::HessW, s);
    const double ln = Mat2{{al(0), al(1)}, {al(1), al(2)}}.norm() + 0.5 * JL.norm();  // one-sided scale
    return std::vector<Term>{detail::vec_term(a + g1, std::max({a.norm(), g1.norm(), ln})), detail::vec_term(G * t, gn),
                             detail::vec_term(Vec2(off.norm(), 0.0), gn)};
  });
  detail::loop_equations(loop, spread, p, [&](double eps, double& mag) {
    const Vec2 v = loop_integral_curl_rows(
        b, [&](const Vec2& x) { return st.lambda.value(x, x); },
        [&](std::size_t i, double s) { return st.gamma(i, s); }, eps, 16, 10, &mag);
    return Eigen::Vector3d(v.x(), v.y(), 0.0);
  });
  return rs;
}

/// Stretching compatibility: curl curl e + det lambda = 0 in the bulk; on S
/// <{lambda}, t t><gamma, nu nu> + <[grad e], r> + k <[e], s> = 0 and
/// <[e], t t> = 0; point: Curl Curl (e - (1/2) grad w (x) grad w) has no
/// content at the loop center (moment loops on A of it).
inline ResidualSet stretching_compat_residuals(const StrainState& st, const FieldBundle& b, const ProbeSet& p,
                                               const Tolerances& tol = {}) {
  ResidualSet rs;
  rs.suite = "compat_stretching";
  auto& bulk = rs.add("bulk", Region::Bulk, tol);
  auto& mono = rs.add("interface.monopole", Region::Interface, tol);
  auto& dip = rs.add("interface.dipole", Region::Interface, tol);
  auto& loop = rs.add("point.loop", Region::Point, tol);
  auto& spread = rs.add("point.loop_spread", Region::Point, tol);

  accumulate(bulk, p.bulk, [&](const Vec2& x) {
    b.check_bulk_point(x);
    Term t = curlcurl_bulk(st.e, x);
    if (!st.lambda.is_zero) {
      const Mat2 L = st.lambda.value(x, x);
      t.add(L(0, 0) * L(1, 1)).add(-L(0, 1) * L(0, 1));
    }
    return t;
  });
  accumulate_many({&mono, &dip}, p.interface, [&](const InterfaceProbe& ip) {
    const auto& S = b.interfaces[ip.iface];
    const auto de = curlcurl_interfacial(b, st.e, S, ip.s);
    const auto dw = curlcurl_interfacial_product(b, b.w, b.w, S, ip.s);
    Term m = de.monopole, d = de.dipole;
    m.add(dw.monopole, -0.5);
    d.add(dw.dipole, -0.5);
    return std::vector<Term>{m, d};
  });
  const TensorField eps_field = combine(st.e, 1.0, sym_grad_outer(b.w, b.w), -0.5);
  const double L = b.scale();
  detail::loop_equations(loop, spread, p, [&](double eps, double& mag) {
    const auto pc = curlcurl_point_content(b, eps_field, eps);
    mag = pc.scale;
    return Eigen::Vector3d(pc.f0, pc.f1.x() / L, pc.f1.y() / L);
  });
  return rs;
}

// ------------------------------------------------------------- defects

/// Defect densities: bulk/interfacial disclinations theta, dislocations
/// alpha, metric anomaly q and point content at O.
struct DefectSpec {
  ScalarField theta_B;
  std::function<double(std::size_t, double)> theta_S;
  ScalarField alpha_B1, alpha_B2;
  std::function<Vec2(std::size_t, double)> alpha_S;
  TensorField q;
  PointSource point;
};

/// Incompatibility densities of N1: bulk eta, interfacial zeta1 (pairs with
/// psi) and zeta2 (pairs with d psi / d nu), and point content.
struct Incompatibility {
  std::function<Term(const Vec2&)> eta;
  std::function<Term(std::size_t, double)> zeta1, zeta2;
  PointSource point;
};

/// eta = curl alpha_B + theta_B + curl curl q;
/// zeta1 = d/ds <[alpha_B], t> + <alpha_S, nu> + theta_S + <[grad q], r> + k <[q], s>;
/// zeta2 = <alpha_S, t> + <[q], t t>.
inline Incompatibility defect_to_incompatibility(const DefectSpec& d, const FieldBundle& b) {
  Incompatibility n;
  n.point = d.point;
  n.eta = [d](const Vec2& x) {
    Term t;
    if (!d.theta_B.is_zero) t.add(d.theta_B.jet<0>(x, x).value());
    if (!d.alpha_B2.is_zero) t.add(d.alpha_B2.grad(x).x());
    if (!d.alpha_B1.is_zero) t.add(-d.alpha_B1.grad(x).y());
    t.add(curlcurl_bulk(d.q, x));
    return t;
  };
  n.zeta1 = [d, b](std::size_t i, double s) {
    Term t;
    const auto& S = b.interfaces.at(i);
    if (!(d.alpha_B1.is_zero && d.alpha_B2.is_zero)) {
      auto jt = [&](double u) {
        const Vec2 x = S.point(u), nu = S.normal(u), tt = S.tangent(u);
        const double off = side_offset(b);
        const Vec2 rp = x - off * nu, rm = x + off * nu;
        const Vec2 ap(d.alpha_B1.jet<0>(x, rp).value(), d.alpha_B2.jet<0>(x, rp).value());
        const Vec2 am(d.alpha_B1.jet<0>(x, rm).value(), d.alpha_B2.jet<0>(x, rm).value());
        return (ap - am).dot(tt);
      };
      t.add(d_ds(b, S, jt, s, 1));
    }
    if (d.alpha_S) t.add(d.alpha_S(i, s).dot(S.normal(s)));
    if (d.theta_S) t.add(d.theta_S(i, s));
    if (!d.q.is_zero) t.add(curlcurl_interfacial(b, d.q, S, s).monopole);
    return t;
  };
  n.zeta2 = [d, b](std::size_t i, double s) {
    Term t;
    const auto& S = b.interfaces.at(i);
    if (d.alpha_S) t.add(d.alpha_S(i, s).dot(S.tangent(s)));
    if (!d.q.is_zero) t.add(curlcurl_interfacial(b, d.q, S, s).dipole);
    return t;
  };
  return n;
}

}  // namespace vkp
