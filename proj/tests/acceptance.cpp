// Acceptance checks: one PASS/FAIL line per criterion, details indented below.
// Exit status is 0 only if every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vkplate/scenarios.hpp"

using namespace vkp;

namespace {

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
  void note(const std::string& s) { details.push_back(s); }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ProbeSet probes_for(const FieldBundle& b, int bulk = 100, int iface = 20, unsigned long seed = 12345) {
  ProbeOptions o;
  o.bulk_count = bulk;
  o.interface_count = iface;
  o.seed = seed;
  return make_probes(b, o);
}

const EquationResidual* find_eq(const std::vector<ResidualSet>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (const auto* e = r.find(id)) return e;
  return nullptr;
}

// 1. ridge exponent and runtime
Outcome ridge_exponent() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = solve_terminating_fold(1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double mu = sc.bundle.solved.at("mu");
  o.pass = std::abs(mu - 0.92) <= 0.005 && secs < 1.0;
  o.note("mu = " + num(mu) + " (target 0.92 +- 0.005), runtime " + num(secs) + " s");
  return o;
}

// 2. Gaussian strength of constant and k = 2 profiles
Outcome disclination_charge() {
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (double g0 : {0.5, 1.0, 1.3}) {
    const double q = dirac_gaussian_strength(AngularProfile::harmonic({{g0, 0.0, 0.0}}), 256);
    worst = std::max(worst, std::abs(q - kPi * g0 * g0));
  }
  for (double g2 : {0.4, 1.0}) {
    const double q = dirac_gaussian_strength(AngularProfile::harmonic({{g2, 2.0, 0.0}}), 256);
    worst = std::max(worst, std::abs(q + 1.5 * kPi * g2 * g2));
  }
  o.pass = worst < 1e-10;
  o.note("max |formula - quadrature(n = 256)| = " + num(worst));
  return o;
}

// 3. disclination equilibrium: bulk vk2 and moment loops
Outcome disclination_equilibrium() {
  Outcome o;
  o.pass = true;
  for (double s : {kPi, -1.5 * kPi}) {
    const FieldBundle b = make_disclination(s).bundle;
    SuiteOptions so;
    so.point = false;
    const ResidualSet r = vk2_residuals(b, probes_for(b, 100, 4), so);
    const auto& bulk = r.at("bulk");
    double loop = 0.0;
    const TensorField a = combine(moment_field(b.material, b.w, b.lp), 1.0, apply_A(sym_grad_outer(b.phi, b.w)), 1.0);
    for (double eps : {0.1, 0.5})
      for (const Vec2& x0 : {Vec2(0, 0), Vec2(1, 0)}) loop = std::max(loop, loop_integral_moment(b, a, eps, x0).norm());
    const bool ok = bulk.probes == 100 && bulk.max_rel < 1e-7 && loop < 1e-6;
    o.pass = o.pass && ok;
    o.note("s = " + num(s) + ": bulk max rel " + num(bulk.max_rel) + " over " + std::to_string(bulk.probes) + " probes, max |moment loop| " +
           num(loop));
  }
  return o;
}

// 4. strong (bulk + interfacial densities) vs weak pairing of Curl Curl(grad w (x) grad w)
Outcome identity_strong_weak() {
  Outcome o;
  const Scenario sc = solve_terminating_fold(1.0);
  const FieldBundle& b = sc.bundle;
  // sym(grad w x grad w) alone pairs to ~0 on this developable bundle; the
  // Hessian and isotropic parts give the fold real monopole/dipole content
  const TensorField a = combine(combine(sym_grad_outer(b.w, b.w), 1.0, hessian_field(b.w), 1.0), 1.0, isotropic(b.w), 1.0);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  int n = 0;
  while (n < 20) {
    // bumps straddling the fold, clear of O (point content is a separate criterion)
    const double rho = 0.1 + 0.15 * U(rng);
    const Vec2 c(-0.9 + 0.8 * U(rng), (U(rng) - 0.5) * rho);
    if (c.norm() < 1.5 * rho || c.norm() + rho > 0.98) continue;
    const TestFunction psi = make_bump(c, rho);
    const double weak = weak_pair_curlcurl(b, a, psi);
    const double strong = strong_pair_curlcurl(b, a, psi);
    worst = std::max(worst, std::abs(strong - weak) / std::max(std::abs(weak), 1e-300));
    ++n;
  }
  o.pass = worst < 1e-5;
  o.note("a = sym(grad w x grad w) + hess w + w I; 20 bumps across the fold: max relative difference " + num(worst));
  return o;
}

// 5. loaded linear fold
Outcome linear_fold() {
  Outcome o;
  LinearFoldParams lp;
  lp.b0 = 2.0;
  lp.b1 = 6.0;
  Material m;
  m.D = 1.0;
  const Scenario sc = make_linear_fold(lp, m);
  const auto& s = sc.bundle.solved;
  const bool edges = std::abs(s.at("edge_moment") - lp.b0) < 1e-12 && std::abs(s.at("edge_force") - lp.b1) < 1e-12;
  Tolerances tol;
  tol.bulk = tol.interface = 1e-7;
  SuiteOptions so;
  so.tol = tol;
  const auto rs = run_suites(sc, probes_for(sc.bundle), so);
  std::vector<std::string> failing;
  for (const auto& r : rs)
    for (const auto& e : r.equations)
      if (e.region != Region::Point && !e.pass) failing.push_back(e.id + " (raw " + num(e.max_raw) + ")");
  o.pass = edges && failing.empty();
  o.note("k1 = " + num(s.at("k1")) + ", k2 = " + num(s.at("k2")) + "; edge conditions " + (edges ? "exact" : "violated"));
  for (const auto& f : failing) o.note("fails: " + f);
  if (!failing.empty())
    o.note("known deviation: the loaded side meets a flat side, leaving moment jump 2D|k1| and shear jump 6D|k2| at the fold");
  const Scenario hinge = make_linear_fold({}, m);
  bool hinge_ok = true;
  for (const auto& r : run_suites(hinge, probes_for(hinge.bundle), so)) hinge_ok = hinge_ok && r.all_pass();
  o.note(std::string("unloaded hinge (b0 = b1 = 0): ") + (hinge_ok ? "all equations pass" : "FAILS"));
  return o;
}

// 6. circular fold with and without the couple
Outcome circular_fold() {
  Outcome o;
  CircularFoldParams cp;
  const Scenario with = make_circular_fold(cp);
  bool all = true;
  for (const auto& r : run_suites(with, probes_for(with.bundle))) all = all && r.all_pass();
  cp.with_couple = false;
  const Scenario without = make_circular_fold(cp);
  const auto rs = run_suites(without, probes_for(without.bundle));
  const auto* dip = find_eq(rs, "vk2.interface.dipole");
  const Material& m = without.bundle.material;
  const double stated = m.D * std::abs(cp.gamma0) / cp.r0;
  const bool fails = dip && !dip->pass;
  const bool magnitude = dip && std::abs(dip->max_raw - stated) < 1e-8;
  o.pass = all && fails && magnitude;
  o.note(std::string("with couple: ") + (all ? "all equations pass" : "some equations FAIL"));
  o.note("without couple: [[Delta w]] equation " + std::string(fails ? "fails" : "passes") + " with magnitude " +
         num(dip ? dip->max_raw : 0.0) + " (stated D|gamma0|/r0 = " + num(stated) + ", D nu |gamma0|/r0 = " +
         num(m.D * m.nu * std::abs(cp.gamma0) / cp.r0) + ")");
  const auto& s = with.bundle.solved;
  o.note("stress function coefficient: solved " + num(s.at("phi_coefficient")) + ", quoted " + num(s.at("phi_coefficient_quoted")));
  o.note("couple: solved " + num(s.at("couple")) + ", quoted " + num(s.at("couple_quoted")));
  return o;
}

// 7. terminating fold
Outcome terminating_fold() {
  Outcome o;
  const Scenario sc = solve_terminating_fold(1.0);
  Tolerances tol;
  tol.bulk = tol.interface = 1e-6;
  SuiteOptions so;
  so.tol = tol;
  const auto rs = run_suites(sc, probes_for(sc.bundle), so);
  std::vector<std::string> failing;
  for (const auto& r : rs)
    for (const auto& e : r.equations)
      if (e.region != Region::Point && !e.pass) failing.push_back(e.id);
  const double ridge = std::abs(sc.bundle.solved.at("ridge_compatibility"));
  const auto* pt = find_eq(rs, "vk2.point.loop");
  const bool dipole = pt && !pt->pass && pt->expectation_matched;
  o.pass = failing.empty() && ridge < 1e-6 && dipole;
  o.note("bulk/interface equations failing: " + std::to_string(failing.size()) + "; ridge compatibility " + num(ridge));
  for (const auto& f : failing) o.note("fails: " + f);
  if (pt)
    o.note("point equilibrium: f0 = " + num(pt->components.count("f0") ? pt->components.at("f0") : 0.0) + ", f1 = (" +
           num(pt->components.count("f1_1") ? pt->components.at("f1_1") : 0.0) + ", " +
           num(pt->components.count("f1_2") ? pt->components.at("f1_2") : 0.0) + ") -> " +
           (dipole ? "gradient-of-Dirac signature detected" : "signature NOT detected"));
  return o;
}

// 8. tetrahedral vertex
Outcome tetrahedral() {
  Outcome o;
  const double g = 0.3;
  const Scenario sc = make_tetrahedral_folds(symmetric_vertex(g));
  const double formula = sc.bundle.solved.at("strength_formula");
  const double stated = -std::sqrt(3.0) / 4.0 * g * g;
  const double oracle = weak_strength(sc.bundle);
  const double rel = std::abs(formula - oracle) / std::abs(oracle);
  bool rejected = false;
  try {
    make_tetrahedral_folds({{0.0, 0.3}, {2.0, 0.3}, {4.0, 0.5}});
  } catch (const ClosureError&) {
    rejected = true;
  }
  o.pass = rel < 1e-4 && std::abs(formula - stated) < 1e-12 && rejected;
  o.note("formula " + num(formula) + " (stated -(sqrt 3/4) gamma^2 = " + num(stated) + "), weak-pairing oracle " + num(oracle) +
         ", relative difference " + num(rel));
  o.note(std::string("closure violation ") + (rejected ? "rejected" : "NOT rejected"));
  return o;
}

// 9. conical profiles carry a pure Dirac
Outcome conical_purity() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  int n = 0;
  while (n < 10) {
    std::vector<Harmonic> hs{{0.6 + 0.3 * U(rng), 0.0, 0.0}};
    for (double k : {1.0, 2.0, 3.0}) hs.push_back({0.15 * U(rng), k, kPi * U(rng)});
    const AngularProfile p = AngularProfile::harmonic(hs);
    if (!(dirac_gaussian_strength(p) > 0.0)) continue;
    FieldBundle b;
    b.domain = Domain::disk({0, 0}, 1.0);
    b.origin = Vec2(0, 0);
    ConicalDisplacement c;
    c.profile = p;
    b.w = ScalarField::wrap(c, "cone");
    WeakIntegrand wi;
    wi.bulk = [&](const Vec2& x) {
      LinearForm f;
      const Vec2 gw = b.w.grad(x);
      f.H = apply_A(outer(gw, gw));
      return f;
    };
    const PointFit fit = weak_point_fit(b, wi, {0, 0}, 0.25);
    worst = std::max(worst, fit.b.norm() / (std::abs(fit.e) * b.scale()));
    ++n;
  }
  o.pass = worst < 1e-5;
  o.note("10 random profiles: max |dipole| / |Dirac| = " + num(worst));
  return o;
}

// 10. compatibility closure on every scenario bundle
Outcome compatibility_closure() {
  Outcome o;
  o.pass = true;
  LinearFoldParams loaded;
  loaded.b0 = 2.0;
  loaded.b1 = 6.0;
  CircularFoldParams uncoupled;
  uncoupled.with_couple = false;
  const std::vector<std::pair<std::string, std::function<Scenario()>>> all{
      {"disclination s>0", [] { return make_disclination(kPi); }},
      {"disclination s<0", [] { return make_disclination(-1.5 * kPi); }},
      {"d-cone", [] { return make_dcone(dcone_profile(0.5)); }},
      {"linear fold (hinge)", [] { return make_linear_fold({}); }},
      {"linear fold (loaded)", [&] { return make_linear_fold(loaded); }},
      {"circular fold", [] { return make_circular_fold({}); }},
      {"circular fold (no couple)", [&] { return make_circular_fold(uncoupled); }},
      {"terminating fold", [] { return solve_terminating_fold(1.0); }},
      {"tetrahedral vertex", [] { return make_tetrahedral_folds(symmetric_vertex(0.3)); }},
  };
  Tolerances tol;
  tol.bulk = 1e-7;
  tol.interface = 1e-6;
  tol.point = 1e-6;
  for (const auto& [name, make] : all) {
    const Scenario sc = make();
    const ProbeSet p = probes_for(sc.bundle);
    const StrainState st = strains_from_displacement(sc.bundle);
    bool ok = true;
    double spread = 0.0;
    for (const auto& r : {bending_compat_residuals(st, p, tol), stretching_compat_residuals(st, sc.bundle, p, tol)})
      for (const auto& e : r.equations) {
        if (!e.pass) {
          ok = false;
          o.note(name + ": " + e.id + " fails (rel " + num(e.max_rel) + ")");
        }
        if (e.id.find("loop_spread") != std::string::npos) spread = std::max(spread, e.max_rel);
      }
    o.pass = o.pass && ok;
    o.note(name + ": " + (ok ? "pass" : "FAIL") + ", loop spread " + num(spread));
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ridge exponent", ridge_exponent},
      {"disclination charge balance", disclination_charge},
      {"disclination equilibrium", disclination_equilibrium},
      {"strong/weak curl-curl identity", identity_strong_weak},
      {"linear fold", linear_fold},
      {"circular fold", circular_fold},
      {"terminating fold", terminating_fold},
      {"tetrahedral vertex", tetrahedral},
      {"conical Dirac purity", conical_purity},
      {"compatibility closure", compatibility_closure},
  };
  const auto t0 = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    std::printf("%s  %2zu. %s  (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs);
    for (const auto& d : o.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of %zu criteria passed in %.1f s\n", int(criteria.size()) - failed, criteria.size(), total);
  return failed == 0 ? 0 : 1;
}
