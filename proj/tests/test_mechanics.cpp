#include <gtest/gtest.h>

#include <random>

#include "vkplate/scenarios.hpp"

using namespace vkp;

namespace {

ProbeSet probes(const FieldBundle& b, int bulk = 40, int iface = 10, unsigned long seed = 12345) {
  ProbeOptions o;
  o.bulk_count = bulk;
  o.interface_count = iface;
  o.seed = seed;
  return make_probes(b, o);
}

double max_raw(const ResidualSet& r) {
  double m = 0.0;
  for (const auto& e : r.equations) m = std::max(m, e.max_raw);
  return m;
}

FieldBundle smooth_bundle() {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.w = ScalarField::analytic([](auto X, auto Y, int) { return sin(X) * cos(Y * 0.5) + X * X * Y; });
  return b;
}

}  // namespace

// ------------------------------------------------------------- kinematics

TEST(Strains, ZeroFieldsGiveZeroStrains) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  const StrainState st = strains_from_displacement(b, InPlaneDisplacement{});
  EXPECT_EQ(st.e.value({0.2, 0.3}).norm(), 0.0);
  EXPECT_EQ(st.lambda.value({0.2, 0.3}).norm(), 0.0);
}

TEST(Strains, TerminatingFoldConcentration) {
  const double g0 = 1.0;
  const Scenario sc = solve_terminating_fold(g0);
  const StrainState st = strains_from_displacement(sc.bundle);
  const auto& S = sc.bundle.interfaces.at(0);
  const Vec2 nu = S.normal(0.5);
  const Mat2 g = st.gamma(0, 0.5);
  const auto j = jump(sc.bundle, S, Quantity::GradW, 0.5);
  EXPECT_NEAR(std::abs(nu.dot(g * nu)), std::abs(Vec2(j(0), j(1)).dot(nu)), 1e-12);
  EXPECT_NEAR(nu.dot(g * nu), g0, 1e-10);
  EXPECT_NEAR((g - g0 * outer(nu, nu)).norm(), 0.0, 1e-10);
}

TEST(Strains, ConicalCurvatureTrace) {
  const Scenario sc = make_disclination(-1.0);
  const StrainState st = strains_from_displacement(sc.bundle);
  const Vec2 x(0.3, 0.45);
  const double r = x.norm();
  const double h = 1e-4;
  const double lap = (eval_w(sc.bundle, x + Vec2(h, 0)) + eval_w(sc.bundle, x - Vec2(h, 0)) + eval_w(sc.bundle, x + Vec2(0, h)) +
                      eval_w(sc.bundle, x - Vec2(0, h)) - 4 * eval_w(sc.bundle, x)) / (h * h);
  EXPECT_NEAR(st.lambda.value(x).trace(), lap, 1e-5);
  EXPECT_GT(r, 0.0);
}

TEST(BendingCompat, SmoothDeflection) {
  const FieldBundle b = smooth_bundle();
  const auto r = bending_compat_residuals(strains_from_displacement(b), probes(b));
  EXPECT_TRUE(r.all_pass());
  EXPECT_LT(max_raw(r), 1e-8);
}

TEST(BendingCompat, ConicalLoopCloses) {
  const FieldBundle b = make_disclination(-1.0).bundle;
  const auto r = bending_compat_residuals(strains_from_displacement(b), probes(b));
  EXPECT_LT(r.at("point.loop").max_raw, 1e-8);
  EXPECT_TRUE(r.all_pass());
}

TEST(BendingCompat, CircularFoldConcentrationIsNormal) {
  const FieldBundle b = make_circular_fold({}).bundle;
  const auto r = bending_compat_residuals(strains_from_displacement(b), probes(b));
  EXPECT_LT(r.at("interface.cross").max_raw, 1e-14);
  EXPECT_TRUE(r.all_pass());
}

TEST(StretchingCompat, FromSmoothDisplacement) {
  FieldBundle b = smooth_bundle();
  b.inextensible = false;
  InPlaneDisplacement u;
  u.u1 = ScalarField::analytic([](auto X, auto Y, int) { return X * Y * Y + sin(Y); });
  u.u2 = ScalarField::analytic([](auto X, auto Y, int) { return cos(X) * Y; });
  const auto r = stretching_compat_residuals(strains_from_displacement(b, u), b, probes(b));
  for (const auto& e : r.equations) EXPECT_LT(e.max_rel, 1e-7) << e.id;
}

TEST(StretchingCompat, CircularFoldWithPlasticStretch) {
  const FieldBundle b = make_circular_fold({}).bundle;
  const auto r = stretching_compat_residuals(strains_from_displacement(b), b, probes(b));
  EXPECT_LT(r.at("interface.monopole").max_raw, 1e-8);
  EXPECT_LT(r.at("interface.dipole").max_raw, 1e-8);
}

TEST(StretchingCompat, CircularFoldWithoutPlasticStretchFails) {
  CircularFoldParams cp;
  FieldBundle b = make_circular_fold(cp).bundle;
  b.ep = TensorField::zero();
  const auto r = stretching_compat_residuals(strains_from_displacement(b), b, probes(b));
  const double raw = r.at("interface.monopole").max_raw;
  EXPECT_GT(raw, 1e-3);
  // the missing interfacial term is of order gamma0^2 / r0
  const double scale = cp.gamma0 * cp.gamma0 / cp.r0;
  EXPECT_GT(raw / scale, 0.1);
  EXPECT_LT(raw / scale, 10.0);
}

TEST(Defects, BulkDisclinationOnly) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.interfaces.push_back(make_segment("S", {-1, 0}, {1, 0}, {0, 1}, 0.0));
  DefectSpec d;
  d.theta_B = ScalarField::analytic([](auto X, auto Y, int) { return X * Y + 2.0; });
  const auto n = defect_to_incompatibility(d, b);
  EXPECT_NEAR(n.eta({0.3, 0.2}).value, 2.06, 1e-14);
  EXPECT_EQ(n.zeta1(0, 0.5).value, 0.0);
  EXPECT_EQ(n.zeta2(0, 0.5).value, 0.0);
}

TEST(Defects, InterfacialDislocation) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.interfaces.push_back(make_segment("S", {-1, 0}, {1, 0}, {0, 1}, 0.0));
  DefectSpec d;
  const double alpha = 0.7;
  d.alpha_S = [&](std::size_t i, double s) { return Vec2(alpha * b.interfaces[i].tangent(s)); };
  const auto n = defect_to_incompatibility(d, b);
  EXPECT_NEAR(n.zeta2(0, 0.4).value, alpha, 1e-15);
  EXPECT_NEAR(n.zeta1(0, 0.4).value, 0.0, 1e-15);
}

TEST(Defects, AllZero) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.interfaces.push_back(make_segment("S", {-1, 0}, {1, 0}, {0, 1}, 0.0));
  const auto n = defect_to_incompatibility(DefectSpec{}, b);
  EXPECT_EQ(n.eta({0.1, 0.1}).value, 0.0);
  EXPECT_EQ(n.zeta1(0, 0.3).value, 0.0);
  EXPECT_EQ(n.zeta2(0, 0.3).value, 0.0);
  EXPECT_EQ(n.point.f0, 0.0);
}

// ------------------------------------------------------------------ statics

TEST(Airy, LogStressFunction) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.origin = Vec2(0, 0);
  LogStressFunction l;
  l.c = 1.5;
  b.phi = ScalarField::wrap(l, "log");
  const Vec2 x(0.4, 0.3);
  const Vec2 er = x.normalized(), et = perp(er);
  const Mat2 s = stress_from_airy(b, x);
  EXPECT_NEAR(et.dot(s * et), -l.c / x.squaredNorm(), 1e-12);
  EXPECT_NEAR(er.dot(s * er), l.c / x.squaredNorm(), 1e-12);
}

TEST(Airy, Quadratic) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.phi = ScalarField::analytic([](auto X, auto, int) { return X * X; });
  Mat2 e22 = Mat2::Zero();
  e22(1, 1) = 2.0;
  EXPECT_TRUE(stress_from_airy(b, {0.2, -0.1}).isApprox(e22));
}

TEST(Airy, DivergenceFreeByFiniteDifferences) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.phi = ScalarField::analytic([](auto X, auto Y, int) { return sin(X * 2.0) * exp(Y) + X * X * X * Y; });
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int k = 0; k < 20; ++k) {
    const Vec2 x(u(rng), u(rng));
    const double h = 1e-3;
    const auto S = [&](const Vec2& y) { return stress_from_airy(b, y); };
    const Vec2 div((S(x + Vec2(h, 0))(0, 0) - S(x - Vec2(h, 0))(0, 0) + S(x + Vec2(0, h))(0, 1) - S(x - Vec2(0, h))(0, 1)) / (2 * h),
                   (S(x + Vec2(h, 0))(1, 0) - S(x - Vec2(h, 0))(1, 0) + S(x + Vec2(0, h))(1, 1) - S(x - Vec2(0, h))(1, 1)) / (2 * h));
    EXPECT_LT(div.norm(), 1e-5);
  }
}

TEST(Constitutive, Examples) {
  Material m;
  const auto [s0, m0] = constitutive(m, Mat2::Zero(), Mat2::Zero());
  EXPECT_EQ(s0.norm() + m0.norm(), 0.0);
  m.nu = 0.0;
  m.E = 2.0;
  m.D = 3.0;
  Mat2 ee, le;
  ee << 0.1, 0.2, 0.2, -0.3;
  le << 1.0, -0.4, -0.4, 0.5;
  const auto [s1, m1] = constitutive(m, ee, le);
  EXPECT_TRUE(s1.isApprox(2.0 * ee));
  EXPECT_TRUE(m1.isApprox(3.0 * le));
  m.nu = 0.3;
  const auto [s2, m2] = constitutive(m, ee, le);
  EXPECT_NEAR(m2.trace(), m.D * (1 + m.nu) * le.trace(), 1e-14);
  (void)s2;
}

TEST(InPlane, AiryStressBalances) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.phi = ScalarField::analytic([](auto X, auto Y, int) { return sin(X) * Y * Y + X * Y; });
  const auto r = inplane_balance_residuals(make_stress_state(b), b, probes(b));
  EXPECT_LT(max_raw(r), 1e-8);
}

TEST(InPlane, LogStressHasNoPointForce) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.origin = Vec2(0, 0);
  LogStressFunction l;
  l.c = -2.0;
  b.phi = ScalarField::wrap(l, "log");
  const auto r = inplane_balance_residuals(make_stress_state(b), b, probes(b));
  EXPECT_LT(r.at("point.loop").max_raw, 1e-8);
  EXPECT_TRUE(r.all_pass());
}

TEST(InPlane, PlantedTractionJump) {
  FieldBundle b;
  b.domain = Domain::rect({-1, -1}, {1, 1});
  b.interfaces.push_back(make_segment("S", {-1, 0}, {1, 0}, {0, 1}, 0.0));
  const double c = 0.8;
  StressState st;
  st.sigma = TensorField::analytic(
      [c](auto X, auto, int r) {
        using J = decltype(X);
        return std::array<J, 3>{J(0.0), J(0.0), J(r == 0 ? c : 0.0)};
      },
      [](const Vec2& x) { return x.y() < 0 ? 0 : 1; });
  const auto r = inplane_balance_residuals(st, b, probes(b));
  EXPECT_NEAR(r.at("interface.jump").max_raw, c, 1e-14);
}

TEST(Moment, ZeroFieldsBalance) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  const auto r = moment_balance_residuals(make_stress_state(b), b, probes(b));
  EXPECT_EQ(max_raw(r), 0.0);
}

TEST(Moment, DisclinationBalances) {
  for (double s : {kPi, -1.5 * kPi}) {
    const FieldBundle b = make_disclination(s).bundle;
    const auto r = moment_balance_residuals(make_stress_state(b), b, probes(b));
    EXPECT_LT(r.at("bulk").max_rel, 1e-6);
    EXPECT_LT(r.at("point.loop").max_rel, 1e-6);
  }
}

// The uncoupled circular fold violates the interfacial balance by the line
// couple the fold needs, D nu |gamma0| / r0 (see README, known deviations).
TEST(Moment, CircularFoldWithoutCoupleFails) {
  CircularFoldParams cp;
  cp.with_couple = false;
  const Scenario sc = make_circular_fold(cp);
  const FieldBundle& b = sc.bundle;
  const auto r = moment_balance_residuals(make_stress_state(b), b, probes(b));
  const double predicted = b.material.D * b.material.nu * std::abs(cp.gamma0) / cp.r0;
  EXPECT_FALSE(r.at("interface.dipole").pass);
  EXPECT_NEAR(r.at("interface.dipole").max_raw, predicted, 1e-8);
  EXPECT_NEAR(sc.bundle.solved.at("predicted_uncoupled_residual"), predicted, 1e-12);
}

// --------------------------------------------------------------- von Karman

TEST(VonKarman, DisclinationBulkEquilibrium) {
  for (double s : {kPi, -1.5 * kPi}) {
    const FieldBundle b = make_disclination(s).bundle;
    SuiteOptions o;
    o.point = false;
    const auto r = vk2_residuals(b, probes(b, 100, 10), o);
    EXPECT_EQ(r.at("bulk").probes, 100);
    EXPECT_LT(r.at("bulk").max_rel, 1e-7);
  }
}

TEST(VonKarman, LinearFoldHingePasses) {
  const FieldBundle b = make_linear_fold({}).bundle;
  for (const auto& r : {vk1_case1_residuals(b, probes(b)), vk2_residuals(b, probes(b)), fold_vk_residuals(b, probes(b))})
    EXPECT_TRUE(r.all_pass()) << r.suite;
}

TEST(VonKarman, FoldSystemNeedsInextensibility) {
  FieldBundle b = make_linear_fold({}).bundle;
  b.inextensible = false;
  EXPECT_THROW(fold_vk_residuals(b, probes(b)), PreconditionError);
}

TEST(VonKarman, PointConditionsNeedASingularPoint) {
  const FieldBundle b = make_linear_fold({}).bundle;
  const auto r = vk2_residuals(b, probes(b));
  EXPECT_TRUE(r.at("point.loop").pass);
  EXPECT_NE(r.at("point.loop").note.find("not applicable"), std::string::npos);
}
