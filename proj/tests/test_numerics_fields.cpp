#include <gtest/gtest.h>

#include <random>

#include "vkplate/scenarios.hpp"

using namespace vkp;

// ------------------------------------------------------------ numerics

TEST(IntegratePeriodic, Constant) { EXPECT_NEAR(integrate_periodic([](double) { return 1.0; }, 64), 2 * kPi, 1e-13); }

TEST(IntegratePeriodic, HalfPower) {
  EXPECT_NEAR(integrate_periodic([](double t) { return std::sin(t) * std::sin(t); }, 64), kPi, 1e-13);
}

TEST(IntegratePeriodic, Orthogonality) { EXPECT_NEAR(integrate_periodic([](double t) { return std::cos(3 * t); }, 64), 0.0, 1e-13); }

TEST(IntegratePeriodic, RejectsNonFinite) {
  EXPECT_THROW(integrate_periodic([](double t) { return t > 1.0 ? std::nan("") : 0.0; }, 64), EvaluationError);
  EXPECT_THROW(integrate_periodic([](double) { return 1.0; }, 4), PreconditionError);
}

TEST(IntegrateInterval, Examples) {
  EXPECT_NEAR(integrate_interval([](double x) { return x * x; }, 0, 1, 1, 3), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(integrate_interval([](double) { return 1.0; }, -2, 5), 7.0, 1e-13);
  EXPECT_NEAR(integrate_interval([](double x) { return std::exp(x); }, 0, 1, 8, 5), std::exp(1.0) - 1.0, 1e-12);
  EXPECT_THROW(integrate_interval([](double) { return std::nan(""); }, 0, 1), EvaluationError);
}

TEST(FindRoot, Examples) {
  EXPECT_NEAR(find_root_bracketed([](double m) { return m - 0.5; }, 0, 1, 1e-14), 0.5, 1e-12);
  const double mu = find_root_bracketed(
      [](double m) { return (1 + m * m) * std::sin(2 * kPi * m) + 2 * kPi * (1 - m * m) * m; }, 0.5, 0.99, 1e-14);
  EXPECT_NEAR(mu, 0.92, 0.005);
  EXPECT_NEAR(find_root_bracketed([](double x) { return std::sin(x); }, 3, 3.5, 1e-14), kPi, 1e-12);
  EXPECT_THROW(find_root_bracketed([](double x) { return x * x + 1; }, -1, 1, 1e-12), BracketError);
}

TEST(FdDerivative, Examples) {
  EXPECT_NEAR(fd_derivative([](double x) { return x * x * x; }, 2.0, 2, 1e-3), 12.0, 1e-6);
  EXPECT_NEAR(fd_derivative([](double x) { return std::sin(x); }, 0.0, 1, 1e-3), 1.0, 1e-8);
  EXPECT_NEAR(fd_derivative([](double x) { return std::log(x); }, 1.0, 4, 0.05), -6.0, 1e-3);
  EXPECT_THROW(fd_derivative([](double x) { return x; }, 0.0, 1, 0.1, [](double t) { return t > 0.05; }), StencilError);
}

TEST(TestFunction, CenterAndSupport) {
  const TestFunction psi = make_bump({0.1, 0.2}, 0.7);
  EXPECT_DOUBLE_EQ(psi.value(psi.center), 1.0);
  const Vec2 edge = psi.center + Vec2(0.7, 0.0);
  const auto J = psi.jet<4>(edge);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j) EXPECT_EQ(J.d(i, j), 0.0);
  EXPECT_THROW(make_bump({0, 0}, 0.0), PreconditionError);
}

TEST(TestFunction, DerivativesMatchFiniteDifferences) {
  const TestFunction psi = make_bump({0.1, 0.2}, 0.7);
  const Vec2 p(0.3, 0.1);
  const double fd12 = fd_derivative([&](double x) { return psi.d(0, 1, {x, p.y()}); }, p.x(), 1, 1e-3);
  const double fd21 = fd_derivative([&](double y) { return psi.d(1, 0, {p.x(), y}); }, p.y(), 1, 1e-3);
  EXPECT_NEAR(psi.d(1, 1, p), fd12, 1e-6);
  EXPECT_NEAR(psi.d(1, 1, p), fd21, 1e-6);
  const double fd4 = fd_derivative([&](double x) { return psi.value({x, p.y()}); }, p.x(), 4, 0.01);
  EXPECT_NEAR(psi.d(4, 0, p), fd4, 1e-3 * std::max(1.0, std::abs(fd4)));
}

// ---------------------------------------------------------------- tensors

TEST(ApplyA, Examples) {
  EXPECT_TRUE(apply_A(Mat2::Identity()).isApprox(Mat2::Identity()));
  Mat2 e11 = Mat2::Zero();
  e11(0, 0) = 1;
  Mat2 e22 = Mat2::Zero();
  e22(1, 1) = 1;
  EXPECT_TRUE(apply_A(e11).isApprox(e22));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    Mat2 t;
    t(0, 0) = n(rng);
    t(0, 1) = t(1, 0) = n(rng);
    t(1, 1) = n(rng);
    const Mat2 a = apply_A(t);
    EXPECT_NEAR((a - a.transpose()).norm(), 0.0, 1e-15);
    EXPECT_NEAR((apply_A(a) - t).norm(), 0.0, 1e-14);
  }
}

TEST(ApplyA, OuterProductRule) {
  const Vec2 v(0.3, -1.2), w(2.0, 0.7);
  EXPECT_TRUE(apply_A(sym(outer(v, w))).isApprox(sym(outer(perp(v), perp(w)))));
}

// ----------------------------------------------------------------- fields

namespace {

FieldBundle cone_bundle(const AngularProfile& p) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.origin = Vec2(0, 0);
  ConicalDisplacement c;
  c.profile = p;
  b.w = ScalarField::wrap(c, "cone");
  return b;
}

}  // namespace

TEST(Fields, ConeSlope) {
  const FieldBundle b = cone_bundle(AngularProfile::harmonic({{1.0, 0.0, 0.0}}));
  const Vec2 x(1.0, 0.0);
  EXPECT_NEAR(eval_w(b, x), 1.0, 1e-14);
  EXPECT_TRUE(eval_grad_w(b, x).isApprox(Vec2(1, 0), 1e-14));
}

TEST(Fields, ConeHessianTrace) {
  const AngularProfile p = AngularProfile::harmonic({{1.0, 2.0, 0.3}, {0.5, 0.0, 0.0}});
  const FieldBundle b = cone_bundle(p);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int k = 0; k < 20; ++k) {
    const Vec2 x(u(rng), u(rng));
    if (x.norm() < 0.05) continue;
    const double r = x.norm(), th = std::atan2(x.y(), x.x());
    EXPECT_NEAR(eval_hess_w(b, x).trace(), (p(th) + p(th, 2)) / r, 1e-10);
  }
}

TEST(Fields, AnalyticDerivativesMatchFiniteDifferences) {
  const FieldBundle b = make_disclination(-1.0).bundle;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  int n = 0;
  while (n < 200) {
    const Vec2 x(u(rng), u(rng));
    if (x.norm() < 0.1) continue;
    ++n;
    const Vec2 g = eval_grad_w(b, x);
    const Mat2 h = eval_hess_w(b, x);
    const double h0 = 1e-3;
    const double gx = fd_derivative([&](double t) { return eval_w(b, {t, x.y()}); }, x.x(), 1, h0);
    const double gy = fd_derivative([&](double t) { return eval_w(b, {x.x(), t}); }, x.y(), 1, h0);
    const double hxy = fd_derivative([&](double t) { return eval_grad_w(b, {t, x.y()}).y(); }, x.x(), 1, h0);
    EXPECT_NEAR(g.x(), gx, 1e-6 * std::max(1.0, g.norm()));
    EXPECT_NEAR(g.y(), gy, 1e-6 * std::max(1.0, g.norm()));
    EXPECT_NEAR(h(0, 1), hxy, 1e-6 * std::max(1.0, h.norm()));
  }
}

TEST(Fields, CylindricalExample) {
  PiecewiseCylindricalField f;
  f.c = Vec2(1, 0);
  f.left = f.right = {0, 0, 1, 0};
  FieldBundle b;
  b.domain = Domain::rect({-5, -5}, {5, 5});
  b.w = ScalarField::wrap(f, "cylindrical");
  EXPECT_NEAR(eval_w(b, {3, 0.4}), 9.0, 1e-14);
  EXPECT_TRUE(eval_grad_w(b, {3, 0.4}).isApprox(Vec2(6, 0)));
}

TEST(Fields, LogStressFunction) {
  LogStressFunction l;
  l.c = 2.5;
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 2.0);
  b.origin = Vec2(0, 0);
  b.phi = ScalarField::wrap(l, "log");
  EXPECT_NEAR(eval_phi(b, {1, 0}), 0.0, 1e-15);
  const Vec2 x(0.6, -0.3);
  const double r2 = x.squaredNorm();
  const Vec2 er = x.normalized(), et = perp(er);
  const Mat2 expected = (outer(et, et) - outer(er, er)) / r2 * 2.5;
  EXPECT_TRUE(eval_hess_phi(b, x).isApprox(expected, 1e-12));
  FieldBundle z;
  EXPECT_EQ(eval_phi(z, {0.2, 0.1}), 0.0);
  EXPECT_EQ(eval_hess_phi(z, {0.2, 0.1}).norm(), 0.0);
}

TEST(Fields, ProximityErrorNamesTheSet) {
  const FieldBundle b = cone_bundle(AngularProfile::harmonic({{1.0, 0.0, 0.0}}));
  try {
    eval_w(b, {1e-9, 0});
    FAIL() << "expected a proximity error";
  } catch (const ProximityError& e) {
    EXPECT_NE(std::string(e.what()).find("singular point O"), std::string::npos);
  }
}

TEST(Jumps, TerminatingFoldSlopeJump) {
  const Scenario sc = solve_terminating_fold(1.0);
  const auto& S = sc.bundle.interfaces.at(0);
  const double s = 0.5 * S.length();
  const auto j = jump(sc.bundle, S, Quantity::GradW, s);
  EXPECT_NEAR(Vec2(j(0), j(1)).dot(S.normal(s)), -1.0, 1e-10);
  EXPECT_NEAR(jump(sc.bundle, S, Quantity::W, s)(0), 0.0, 1e-12);
}

TEST(Jumps, LinearFoldHingeCurvatureContinuous) {
  const FieldBundle b = make_linear_fold({}).bundle;
  const auto& S = b.interfaces.at(0);
  const auto j = jump(b, S, Quantity::HessW, 0.3 * S.length());
  EXPECT_NEAR(j(0), 0.0, 1e-12);
  EXPECT_NEAR(jump(b, S, Quantity::W, 0.3 * S.length())(0), 0.0, 1e-12);
}

// With edge loads the loaded side carries f'' = 2 k1 at the fold while the
// other side is flat, so the curvature jump is 2 k1, not 0.
TEST(Jumps, LoadedLinearFoldCurvatureJump) {
  LinearFoldParams lp;
  lp.b0 = 2.0;
  lp.b1 = 6.0;
  const Scenario sc = make_linear_fold(lp);
  const auto& S = sc.bundle.interfaces.at(0);
  const auto j = jump(sc.bundle, S, Quantity::HessW, 0.3 * S.length());
  EXPECT_NEAR(std::abs(j(0)), 2.0 * std::abs(sc.bundle.solved.at("k1")), 1e-12);
  EXPECT_NEAR(jump(sc.bundle, S, Quantity::W, 0.3 * S.length())(0), 0.0, 1e-12);
}

TEST(Jumps, OffsetLimitsAgreeWithSectorExact) {
  const Scenario sc = solve_terminating_fold(1.0);
  const auto& S = sc.bundle.interfaces.at(0);
  const Sampler q = sampler(sc.bundle, Quantity::GradW);
  const auto a = jump(sc.bundle, S, q, 0.4);
  const auto b = jump_offset(sc.bundle, S, q, 0.4);
  EXPECT_NEAR((a - b).norm(), 0.0, 1e-7);
}

TEST(Jumps, AverageOfContinuousQuantityIsTrace) {
  const FieldBundle b = make_circular_fold({}).bundle;
  const auto& S = b.interfaces.at(0);
  EXPECT_NEAR(average(b, S, Quantity::W, 0.7)(0), b.w.jet<0>(S.point(0.7), S.point(0.7) * 1.01).value(), 1e-12);
}

TEST(Jumps, CircularFoldTangentialCurvatureAverage) {
  CircularFoldParams cp;
  const FieldBundle b = make_circular_fold(cp).bundle;
  const auto& S = b.interfaces.at(0);
  const double s = 0.3;
  const auto h = average(b, S, Quantity::HessW, s);
  Mat2 H;
  H << h(0), h(1), h(1), h(2);
  const Vec2 t = S.tangent(s);
  EXPECT_NEAR(std::abs(t.dot(H * t)), cp.gamma0 / (2 * cp.r0), 1e-10);
}

TEST(Jumps, ProductRule) {
  const Scenario sc = solve_terminating_fold(1.0);
  const FieldBundle& b = sc.bundle;
  const auto& S = b.interfaces.at(0);
  const double s = 0.6;
  const Sampler p1 = sampler(b, Quantity::LapW);
  const Sampler p2 = [&](const Vec2& x, const Vec2& r) {
    Eigen::VectorXd v(1);
    v(0) = b.w.grad(x, r).x();
    return v;
  };
  const Sampler prod = [&](const Vec2& x, const Vec2& r) {
    Eigen::VectorXd v(1);
    v(0) = p1(x, r)(0) * p2(x, r)(0);
    return v;
  };
  const double lhs = jump(b, S, prod, s)(0);
  const double rhs = jump(b, S, p1, s)(0) * average(b, S, p2, s)(0) + jump(b, S, p2, s)(0) * average(b, S, p1, s)(0);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST(Bundle, ValidationRejectsDanglingInterface) {
  FieldBundle b;
  b.domain = Domain::disk({0, 0}, 1.0);
  b.interfaces.push_back(make_segment("dangling", {-0.2, 0}, {0.2, 0}, {0, 1}, 0.1));
  EXPECT_THROW(b.validate(), GeometryError);
}

TEST(Material, Validation) {
  Material m;
  m.nu = 0.6;
  EXPECT_THROW(m.validate(), Error);
  m.nu = 0.3;
  m.D = -1;
  EXPECT_THROW(m.validate(), Error);
}
