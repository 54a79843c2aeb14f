#pragma once

// Residual bookkeeping shared by the compatibility, balance and von Karman
// suites: seeded probe sets, per-equation statistics and expectations.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vkplate/distcalc.hpp"

namespace vkp {

enum class Region { Bulk, Interface, Point };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::Bulk: return "bulk";
    case Region::Interface: return "interface";
    case Region::Point: return "point";
  }
  return "?";
}

struct Tolerances {
  double bulk = 1e-7;
  double interface = 1e-6;
  double point = 1e-4;
  double of(Region r) const { return r == Region::Bulk ? bulk : r == Region::Interface ? interface : point; }
};

struct InterfaceProbe {
  std::size_t iface;
  double s;
};

struct ProbeSet {
  std::vector<Vec2> bulk;
  std::vector<InterfaceProbe> interface;
  std::vector<double> loop_radii;  // loop radii for point conditions (empty without O)
  unsigned long seed = 0;
};

struct ProbeOptions {
  int bulk_count = 100;
  int interface_count = 20;  // per interface
  unsigned long seed = 12345;
  double min_distance = 1e-3;  // from S and O, relative to the domain scale
};

/// Seeded probes: bulk points drawn uniformly in the domain away from S and O;
/// interface stations uniform in arclength away from ends and from O.
inline ProbeSet make_probes(const FieldBundle& b, const ProbeOptions& o = {}) {
  ProbeSet p;
  p.seed = o.seed;
  std::mt19937_64 rng(o.seed);
  const double L = b.scale();
  int guard = 0;
  while (int(p.bulk.size()) < o.bulk_count) {
    if (++guard > 100000 * std::max(1, o.bulk_count)) throw PreconditionError("could not place bulk probes");
    const Vec2 x = b.domain.sample(rng);
    if (!b.domain.contains(x)) continue;
    if (b.singular_distance(x).first < o.min_distance * L) continue;
    p.bulk.push_back(x);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < b.interfaces.size(); ++i) {
    const auto& S = b.interfaces[i];
    const double len = S.length();
    const double m = S.closed() ? 0.0 : 0.02 * len;
    for (int k = 0; k < o.interface_count; ++k) {
      for (int tries = 0; tries < 1000; ++tries) {
        const double s = m + (len - 2 * m) * u(rng);
        const Vec2 x = S.point(s);
        if (b.origin && (x - *b.origin).norm() < 0.02 * L) continue;
        if (!b.domain.contains(x)) continue;
        p.interface.push_back({i, s});
        break;
      }
    }
  }
  if (b.origin) p.loop_radii = {0.05 * L, 0.1 * L, 0.2 * L, 0.4 * L};
  return p;
}

enum class Expect { Pass, FailWithSignature };

/// Statistics of one equation over its probes.
struct EquationResidual {
  std::string id;
  Region region = Region::Bulk;
  int probes = 0;
  double max_raw = 0.0;
  double mean_raw = 0.0;
  double max_rel = 0.0;
  double tol = 0.0;
  bool pass = true;
  std::map<std::string, double> components;  // measured values (point contents, spreads, ...)
  std::string note;
  // filled when an expectation is applied
  Expect expect = Expect::Pass;
  std::string signature;
  bool expectation_matched = true;

  void add(const Term& t) {
    const double raw = std::abs(t.value);
    const double rel = raw == 0.0 ? 0.0 : raw / std::max(t.mag, std::numeric_limits<double>::min());
    mean_raw = (mean_raw * probes + raw) / (probes + 1);
    ++probes;
    max_raw = std::max(max_raw, raw);
    max_rel = std::max(max_rel, rel);
  }
  void fail(const std::string& why) {
    pass = false;
    max_rel = std::numeric_limits<double>::infinity();
    note = why;
  }
  void finish() {
    if (std::isfinite(max_rel)) pass = max_rel <= tol;
  }
};

struct ResidualSet {
  std::string suite;
  std::deque<EquationResidual> equations;  // stable references across add()

  EquationResidual& add(const std::string& id, Region r, const Tolerances& tol) {
    EquationResidual e;
    e.id = suite + "." + id;
    e.region = r;
    e.tol = tol.of(r);
    equations.push_back(e);
    return equations.back();
  }
  const EquationResidual* find(const std::string& id) const {
    for (const auto& e : equations)
      if (e.id == id || e.id == suite + "." + id) return &e;
    return nullptr;
  }
  const EquationResidual& at(const std::string& id) const {
    const auto* e = find(id);
    if (!e) throw PreconditionError("no equation '" + id + "' in suite " + suite);
    return *e;
  }
  bool all_pass() const {
    return std::all_of(equations.begin(), equations.end(), [](const EquationResidual& e) { return e.pass; });
  }
  bool all_matched() const {
    return std::all_of(equations.begin(), equations.end(), [](const EquationResidual& e) { return e.expectation_matched; });
  }
};

/// Runs f at each probe, collecting Term statistics; numeric errors become failures.
template <class Probe, class Fn>
void accumulate(EquationResidual& eq, const std::vector<Probe>& probes, Fn&& f) {
  try {
    for (const auto& p : probes) eq.add(f(p));
    eq.finish();
  } catch (const Error& e) {
    eq.fail(e.what());
  }
}

/// Several equations sharing the per-probe work: f returns one Term per equation.
template <class Probe, class Fn>
void accumulate_many(std::vector<EquationResidual*> eqs, const std::vector<Probe>& probes, Fn&& f) {
  try {
    for (const auto& p : probes) {
      const std::vector<Term> ts = f(p);
      for (std::size_t i = 0; i < eqs.size(); ++i) eqs[i]->add(ts[i]);
    }
    for (auto* e : eqs) e->finish();
  } catch (const Error& e) {
    for (auto* q : eqs) q->fail(e.what());
  }
}

// ---------------------------------------------------------- expectations

struct ExpectationEntry {
  std::string id;
  Region region = Region::Bulk;
  Expect expect = Expect::Pass;
  std::string signature;
  std::function<bool(const EquationResidual&)> check;  // signature test (fail-with-signature only)
};

struct ScenarioExpectation {
  std::vector<std::string> suites;  // applicable residual suites
  std::vector<ExpectationEntry> entries;

  const ExpectationEntry* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
  bool applies(const std::string& suite) const { return std::find(suites.begin(), suites.end(), suite) != suites.end(); }

  void expect_fail(const std::string& id, std::string signature, std::function<bool(const EquationResidual&)> check) {
    for (auto& e : entries)
      if (e.id == id) {
        e.expect = Expect::FailWithSignature;
        e.signature = std::move(signature);
        e.check = std::move(check);
        return;
      }
    throw PreconditionError("expectation for unknown equation " + id);
  }

  /// Marks each equation with its expectation; an expected failure matches
  /// when the equation fails and its signature test holds.
  void apply(ResidualSet& set) const {
    for (auto& eq : set.equations) {
      const auto* e = find(eq.id);
      if (!e || e->expect == Expect::Pass) {
        eq.expect = Expect::Pass;
        eq.expectation_matched = eq.pass;
        continue;
      }
      eq.expect = Expect::FailWithSignature;
      eq.signature = e->signature;
      eq.expectation_matched = !eq.pass && (!e->check || e->check(eq));
    }
  }
};

// Equation catalog: every id each suite emits, with its region.
inline std::vector<std::pair<std::string, Region>> suite_equations(const std::string& suite) {
  using R = Region;
  std::vector<std::pair<std::string, Region>> v;
  if (suite == "compat_bending")
    v = {{"bulk.curl", R::Bulk}, {"interface.jump", R::Interface}, {"interface.cross", R::Interface},
         {"interface.continuity", R::Interface}, {"point.loop", R::Point}, {"point.loop_spread", R::Point}};
  else if (suite == "compat_stretching")
    v = {{"bulk", R::Bulk}, {"interface.monopole", R::Interface}, {"interface.dipole", R::Interface},
         {"point.loop", R::Point}, {"point.loop_spread", R::Point}};
  else if (suite == "inplane")
    v = {{"bulk.div", R::Bulk}, {"interface.jump", R::Interface}, {"interface.tau_nu", R::Interface},
         {"point.loop", R::Point}, {"point.loop_spread", R::Point}};
  else if (suite == "moment")
    v = {{"bulk", R::Bulk}, {"interface.monopole", R::Interface}, {"interface.dipole", R::Interface},
         {"interface.concentration", R::Interface}, {"point.loop", R::Point}, {"point.loop_spread", R::Point}};
  else if (suite == "vk1_case1")
    v = {{"closure", R::Interface}, {"bulk", R::Bulk}, {"interface.monopole", R::Interface}, {"interface.dipole", R::Interface},
         {"interface.second", R::Interface}, {"point.loop", R::Point}, {"point.weak", R::Point}};
  else if (suite == "vk2")
    v = {{"bulk", R::Bulk}, {"interface.monopole", R::Interface}, {"interface.dipole", R::Interface},
         {"interface.second", R::Interface}, {"point.loop", R::Point}, {"point.weak", R::Point}};
  else if (suite == "vk1_case2")
    v = {{"bulk", R::Bulk}, {"interface.monopole", R::Interface}, {"interface.dipole", R::Interface},
         {"point.loop", R::Point}, {"point.weak", R::Point}};
  else if (suite == "fold_vk")
    v = {{"closure", R::Interface}, {"compat.bulk", R::Bulk}, {"compat.interface.monopole", R::Interface},
         {"compat.interface.dipole", R::Interface}, {"equil.bulk", R::Bulk}, {"equil.interface.monopole", R::Interface},
         {"equil.interface.dipole", R::Interface}, {"equil.interface.second", R::Interface}};
  else
    throw PreconditionError("unknown residual suite " + suite);
  for (auto& [id, r] : v) id = suite + "." + id;
  return v;
}

inline ScenarioExpectation make_expectation(const std::vector<std::string>& suites) {
  ScenarioExpectation e;
  e.suites = suites;
  for (const auto& s : suites)
    for (const auto& [id, r] : suite_equations(s)) e.entries.push_back({id, r, Expect::Pass, "", {}});
  return e;
}

}  // namespace vkp
