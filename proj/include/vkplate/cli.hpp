#pragma once

// Scenario runner: JSON configs, residual reports and surface export.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vkplate/scenarios.hpp"

namespace vkp::cli {

using json = nlohmann::json;

struct Config {
  std::string scenario;
  Material material;
  json params = json::object();
  Tolerances tol;
  ProbeOptions probes;
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double num(const json& j, const std::string& key, double dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
  return v;
}

inline int integer(const json& j, const std::string& key, int dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return j[key].get<int>();
}

inline bool boolean(const json& j, const std::string& key, bool dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return j[key].get<bool>();
}

inline const std::map<std::string, std::set<std::string>>& scenario_params() {
  static const std::map<std::string, std::set<std::string>> m{
      {"disclination", {"s", "phase", "radius"}},
      {"dcone", {"alpha", "harmonics", "radius"}},
      {"linear_fold", {"gamma0", "b0", "b1", "a0", "a1"}},
      {"circular_fold", {"gamma0", "r0", "with_couple", "domain_factor"}},
      {"terminating_fold", {"gamma0", "radius"}},
      {"tetrahedral", {"folds", "gamma", "radius"}},
  };
  return m;
}

}  // namespace detail

/// Parses and validates a config document; unknown keys are rejected.
inline Config parse_config(const json& j) {
  detail::check_keys(j, {"scenario", "material", "params", "tolerances", "probes"}, "config");
  Config c;
  if (!j.contains("scenario") || !j["scenario"].is_string()) throw ConfigError("config.scenario must name a scenario type");
  c.scenario = j["scenario"].get<std::string>();
  const auto& known = detail::scenario_params();
  if (!known.count(c.scenario)) {
    std::string list;
    for (const auto& [k, v] : known) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown scenario type '" + c.scenario + "' (known: " + list + ")");
  }
  if (j.contains("material")) {
    const json& m = j["material"];
    detail::check_keys(m, {"E", "D", "nu"}, "material");
    c.material.E = detail::num(m, "E", c.material.E, "material");
    c.material.D = detail::num(m, "D", c.material.D, "material");
    c.material.nu = detail::num(m, "nu", c.material.nu, "material");
  }
  try {
    c.material.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("material: ") + e.what());
  }
  if (j.contains("params")) {
    c.params = j["params"];
    detail::check_keys(c.params, known.at(c.scenario), "params");
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::check_keys(t, {"bulk", "interface", "point"}, "tolerances");
    c.tol.bulk = detail::num(t, "bulk", c.tol.bulk, "tolerances");
    c.tol.interface = detail::num(t, "interface", c.tol.interface, "tolerances");
    c.tol.point = detail::num(t, "point", c.tol.point, "tolerances");
  }
  if (!(c.tol.bulk > 0 && c.tol.interface > 0 && c.tol.point > 0)) throw ConfigError("tolerances must be positive");
  if (j.contains("probes")) {
    const json& p = j["probes"];
    detail::check_keys(p, {"bulk_count", "interface_count", "seed"}, "probes");
    c.probes.bulk_count = detail::integer(p, "bulk_count", c.probes.bulk_count, "probes");
    c.probes.interface_count = detail::integer(p, "interface_count", c.probes.interface_count, "probes");
    if (p.contains("seed")) {
      if (!p["seed"].is_number_unsigned()) throw ConfigError("probes.seed must be a nonnegative integer");
      c.probes.seed = p["seed"].get<unsigned long>();
    }
  }
  if (c.probes.bulk_count < 1 || c.probes.interface_count < 1) throw ConfigError("probe counts must be positive");
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

/// Builds the scenario a config describes.
inline Scenario build_scenario(const Config& c) {
  const json& p = c.params;
  const std::string w = "params";
  if (c.scenario == "disclination")
    return make_disclination(detail::num(p, "s", kPi, w), c.material, detail::num(p, "phase", 0.0, w), detail::num(p, "radius", 1.0, w));
  if (c.scenario == "dcone") {
    const double R = detail::num(p, "radius", 1.0, w);
    if (p.contains("harmonics")) {
      if (p.contains("alpha")) throw ConfigError("params: give either alpha or harmonics");
      std::vector<Harmonic> hs;
      if (!p["harmonics"].is_array()) throw ConfigError("params.harmonics must be a list of [amplitude, wavenumber, phase]");
      for (const auto& h : p["harmonics"]) {
        if (!h.is_array() || h.size() != 3 || !h[0].is_number() || !h[1].is_number() || !h[2].is_number())
          throw ConfigError("params.harmonics entries must be [amplitude, wavenumber, phase]");
        hs.push_back({h[0].get<double>(), h[1].get<double>(), h[2].get<double>()});
      }
      return make_dcone(AngularProfile::harmonic(hs), c.material, R);
    }
    return make_dcone(dcone_profile(detail::num(p, "alpha", 0.5, w)), c.material, R);
  }
  if (c.scenario == "linear_fold") {
    LinearFoldParams lp;
    lp.gamma0 = detail::num(p, "gamma0", lp.gamma0, w);
    lp.b0 = detail::num(p, "b0", lp.b0, w);
    lp.b1 = detail::num(p, "b1", lp.b1, w);
    lp.a0 = detail::num(p, "a0", lp.a0, w);
    lp.a1 = detail::num(p, "a1", lp.a1, w);
    return make_linear_fold(lp, c.material);
  }
  if (c.scenario == "circular_fold") {
    CircularFoldParams cp;
    cp.gamma0 = detail::num(p, "gamma0", cp.gamma0, w);
    cp.r0 = detail::num(p, "r0", cp.r0, w);
    cp.with_couple = detail::boolean(p, "with_couple", cp.with_couple, w);
    cp.domain_factor = detail::num(p, "domain_factor", cp.domain_factor, w);
    if (!(cp.domain_factor > 1.0)) throw ConfigError("params.domain_factor must exceed 1");
    return make_circular_fold(cp, c.material);
  }
  if (c.scenario == "terminating_fold")
    return solve_terminating_fold(detail::num(p, "gamma0", 1.0, w), c.material, detail::num(p, "radius", 1.0, w));
  if (c.scenario == "tetrahedral") {
    const double R = detail::num(p, "radius", 1.0, w);
    if (p.contains("folds")) {
      if (p.contains("gamma")) throw ConfigError("params: give either folds or gamma");
      if (!p["folds"].is_array()) throw ConfigError("params.folds must be a list of {angle_deg, gamma}");
      std::vector<Fold> fs;
      for (const auto& f : p["folds"]) {
        detail::check_keys(f, {"angle_deg", "gamma"}, "params.folds[]");
        if (!f.contains("angle_deg") || !f.contains("gamma")) throw ConfigError("params.folds[] needs angle_deg and gamma");
        fs.push_back({detail::num(f, "angle_deg", 0, "params.folds[]") * kPi / 180.0, detail::num(f, "gamma", 0, "params.folds[]")});
      }
      return make_tetrahedral_folds(fs, c.material, R);
    }
    return make_tetrahedral_folds(symmetric_vertex(detail::num(p, "gamma", 0.3, w)), c.material, R);
  }
  throw ConfigError("unknown scenario type '" + c.scenario + "'");
}

// ------------------------------------------------------------- reports

struct Report {
  std::string scenario;
  std::vector<ResidualSet> suites;
  std::map<std::string, double> solved;
  std::vector<std::string> notes;
  Tolerances tol;
  ProbeOptions probes;

  bool all_matched() const {
    for (const auto& s : suites)
      if (!s.all_matched()) return false;
    return true;
  }
};

/// Builds the scenario, runs its suites and collects the report.
inline Report run_verify(const Config& c) {
  Scenario sc = build_scenario(c);
  Report r;
  r.scenario = c.scenario;
  r.tol = c.tol;
  r.probes = c.probes;
  const ProbeSet p = make_probes(sc.bundle, c.probes);
  SuiteOptions o;
  o.tol = c.tol;
  r.suites = run_suites(sc, p, o);
  r.solved = sc.bundle.solved;
  r.notes = sc.bundle.notes;
  return r;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Report& r) {
  json eqs = json::array();
  int n = 0, passed = 0, xfail = 0, matched = 0;
  for (const auto& s : r.suites)
    for (const auto& e : s.equations) {
      json comp = json::object();
      for (const auto& [k, v] : e.components) comp[k] = number_or_null(v);
      eqs.push_back({{"id", e.id},
                     {"suite", s.suite},
                     {"region", to_string(e.region)},
                     {"probes", e.probes},
                     {"max_raw", number_or_null(e.max_raw)},
                     {"mean_raw", number_or_null(e.mean_raw)},
                     {"max_rel", number_or_null(e.max_rel)},
                     {"tolerance", e.tol},
                     {"pass", e.pass},
                     {"expectation", e.expect == Expect::Pass ? "pass" : "fail-with-signature"},
                     {"signature", e.signature},
                     {"expectation_matched", e.expectation_matched},
                     {"components", comp},
                     {"note", e.note}});
      ++n;
      passed += e.pass ? 1 : 0;
      xfail += e.expect == Expect::FailWithSignature ? 1 : 0;
      matched += e.expectation_matched ? 1 : 0;
    }
  json solved = json::object();
  for (const auto& [k, v] : r.solved) solved[k] = number_or_null(v);
  return {{"scenario", r.scenario},
          {"equations", eqs},
          {"solved", solved},
          {"conventions",
           {{"jump", "[[b]] = b+ - b-, the normal nu points into the minus side"},
            {"tangent", "t = nu rotated by -pi/2"},
            {"fold", "[grad w] = -gamma0 nu, concentration gamma = -[grad w] (x) nu"},
            {"tolerances", {{"bulk", r.tol.bulk}, {"interface", r.tol.interface}, {"point", r.tol.point}}},
            {"probes", {{"bulk_count", r.probes.bulk_count}, {"interface_count", r.probes.interface_count}, {"seed", r.probes.seed}}}}},
          {"notes", r.notes},
          {"unverified", "point-supported moments above first order (only Dirac and dipole components are checked)"},
          {"summary", {{"equations", n}, {"passed", passed}, {"expected_failures", xfail}, {"matched", matched}, {"all_expectations_matched", r.all_matched()}}}};
}

inline void print_summary(std::ostream& os, const Report& r) {
  os << "scenario: " << r.scenario << "\n";
  os << std::left << std::setw(42) << "equation" << std::setw(10) << "region" << std::right << std::setw(7) << "probes" << std::setw(12)
     << "max_raw" << std::setw(12) << "max_rel" << std::setw(10) << "tol" << "  result  expectation\n";
  for (const auto& s : r.suites)
    for (const auto& e : s.equations) {
      std::ostringstream raw, rel, tol;
      raw << std::scientific << std::setprecision(2) << e.max_raw;
      rel << std::scientific << std::setprecision(2) << e.max_rel;
      tol << std::scientific << std::setprecision(0) << e.tol;
      const std::string exp = e.expect == Expect::Pass ? "pass" : "xfail";
      os << std::left << std::setw(42) << e.id << std::setw(10) << to_string(e.region) << std::right << std::setw(7) << e.probes
         << std::setw(12) << raw.str() << std::setw(12) << rel.str() << std::setw(10) << tol.str() << "  " << (e.pass ? "PASS" : "FAIL")
         << "    " << exp << (e.expectation_matched ? " (matched)" : " (MISMATCH)") << "\n";
    }
  for (const auto& [k, v] : r.solved) os << "  " << k << " = " << std::setprecision(10) << v << "\n";
  os << (r.all_matched() ? "all expectations matched" : "EXPECTATION MISMATCH") << "\n";
}

// ------------------------------------------------------------- surfaces

struct SurfaceVertex {
  double x1, x2, w;
};

struct SurfacePatch {
  std::vector<SurfaceVertex> vertices;
  std::vector<std::array<int, 3>> triangles;  // indices into vertices
};

struct Surface {
  std::vector<SurfacePatch> patches;                      // one per sector between folds
  std::vector<std::vector<SurfaceVertex>> fold_lines;     // sampled fold polylines
};

namespace detail {

// w at x using the closed form of the region of ref; falls back to a point
// slightly towards ref at the cone tip.
inline double w_at(const FieldBundle& b, const Vec2& x, const Vec2& ref) {
  if (b.w.is_zero) return 0.0;
  double v = std::numeric_limits<double>::quiet_NaN();
  try {
    v = b.w.jet<0>(x, ref).value();
  } catch (const Error&) {
  }
  if (std::isfinite(v)) return v;
  const Vec2 d = ref - x;
  const Vec2 y = x + (d.norm() > 0 ? Vec2(1e-12 * b.scale() * d.normalized()) : Vec2(1e-12 * b.scale(), 0.0));
  return b.w.jet<0>(y, ref).value();
}

}  // namespace detail

/// Samples w on a grid split along the folds: polar (nr, nt) about O (or the
/// disk center) with fold rays and fold circles as grid lines, or a
/// rectangular (nq, ns) grid with the fold line as a grid column.
inline Surface sample_surface(const FieldBundle& b, int n1, int n2) {
  if (n1 < 2 || n2 < 3) throw ConfigError("grid needs at least 2 x 3 nodes");
  Surface s;
  const double L = b.scale();
  if (b.domain.kind == Domain::Kind::Disk) {
    const Vec2 P = b.origin ? *b.origin : b.domain.center;
    const double R = b.domain.radius;
    std::vector<double> rays, radii{0.0, R};
    for (const auto& S : b.interfaces) {
      if (S.kind == CurveKind::Circle) {
        radii.push_back(S.r0);
        continue;
      }
      // segments through the pole become angular grid lines
      for (const Vec2& e : {S.a, S.b}) {
        const Vec2 d = e - P;
        if (d.norm() > 1e-9 * L) rays.push_back(std::atan2(d.y(), d.x()));
      }
    }
    std::sort(rays.begin(), rays.end());
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    std::vector<std::pair<double, double>> sectors;
    if (rays.empty()) sectors.push_back({-kPi, kPi});
    for (std::size_t i = 0; i < rays.size(); ++i)
      sectors.push_back({rays[i], i + 1 < rays.size() ? rays[i + 1] : rays[0] + 2 * kPi});
    for (std::size_t ri = 0; ri + 1 < radii.size(); ++ri) {
      const double r0 = radii[ri], r1 = radii[ri + 1];
      const int nr = std::max(2, int(std::lround(n1 * (r1 - r0) / R)) + 1);
      for (const auto& [a0, a1] : sectors) {
        SurfacePatch patch;
        const int nt = std::max(2, int(std::lround(n2 * (a1 - a0) / (2 * kPi))) + 1);
        const double amid = 0.5 * (a0 + a1), rmid = 0.5 * (r0 + r1);
        for (int i = 0; i < nr; ++i)
          for (int k = 0; k < nt; ++k) {
            const double r = r0 + (r1 - r0) * i / (nr - 1), th = a0 + (a1 - a0) * k / (nt - 1);
            const Vec2 x = P + r * Vec2(std::cos(th), std::sin(th));
            // reference point inside this sector and ring
            const double tr = std::clamp(th, a0 + 1e-6 * (a1 - a0), a1 - 1e-6 * (a1 - a0));
            const double rr = std::clamp(r, r0 + 1e-6 * (r1 - r0), r1 - 1e-6 * (r1 - r0));
            const Vec2 ref = P + (r == 0.0 ? rmid : rr) * Vec2(std::cos(r == 0.0 ? amid : tr), std::sin(r == 0.0 ? amid : tr));
            patch.vertices.push_back({x.x(), x.y(), detail::w_at(b, x, ref)});
          }
        for (int i = 0; i + 1 < nr; ++i)
          for (int k = 0; k + 1 < nt; ++k) {
            const int v00 = i * nt + k, v01 = v00 + 1, v10 = v00 + nt, v11 = v10 + 1;
            if (!(i == 0 && r0 == 0.0)) patch.triangles.push_back({v00, v10, v11});
            patch.triangles.push_back({v00, v11, v01});
          }
        s.patches.push_back(std::move(patch));
      }
    }
  } else {
    const Vec2 lo = b.domain.lo, hi = b.domain.hi;
    std::vector<double> cols{lo.x(), hi.x()};
    for (const auto& S : b.interfaces)
      if (S.kind == CurveKind::Segment && std::abs(S.a.x() - S.b.x()) < 1e-12 * L) cols.push_back(S.a.x());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    const int ns = n2;
    for (std::size_t ci = 0; ci + 1 < cols.size(); ++ci) {
      const double q0 = cols[ci], q1 = cols[ci + 1];
      const int nq = std::max(2, int(std::lround(n1 * (q1 - q0) / (hi.x() - lo.x()))) + 1);
      SurfacePatch patch;
      for (int i = 0; i < nq; ++i)
        for (int k = 0; k < ns; ++k) {
          const Vec2 x(q0 + (q1 - q0) * i / (nq - 1), lo.y() + (hi.y() - lo.y()) * k / (ns - 1));
          const Vec2 ref(std::clamp(x.x(), q0 + 1e-6 * (q1 - q0), q1 - 1e-6 * (q1 - q0)), x.y());
          patch.vertices.push_back({x.x(), x.y(), detail::w_at(b, x, ref)});
        }
      for (int i = 0; i + 1 < nq; ++i)
        for (int k = 0; k + 1 < ns; ++k) {
          const int v00 = i * ns + k, v01 = v00 + 1, v10 = v00 + ns, v11 = v10 + 1;
          patch.triangles.push_back({v00, v10, v11});
          patch.triangles.push_back({v00, v11, v01});
        }
      s.patches.push_back(std::move(patch));
    }
  }
  for (const auto& S : b.interfaces) {
    std::vector<SurfaceVertex> line;
    const int n = std::max(n1, n2) + 1;
    const double len = S.length();
    for (int k = 0; k < n; ++k) {
      const double u = len * k / (n - 1);
      const Vec2 x = S.point(u);
      const Vec2 ref = x + 1e-6 * L * S.normal(std::clamp(u, 1e-9 * len, len * (1 - 1e-9)));
      line.push_back({x.x(), x.y(), detail::w_at(b, x, ref)});
    }
    s.fold_lines.push_back(std::move(line));
  }
  return s;
}

inline void write_csv(std::ostream& os, const Surface& s) {
  os << "x1,x2,w\n" << std::setprecision(12);
  for (const auto& p : s.patches)
    for (const auto& v : p.vertices) os << v.x1 << "," << v.x2 << "," << v.w << "\n";
}

inline void write_fold_csv(std::ostream& os, const Surface& s) {
  os << "fold,x1,x2,w\n" << std::setprecision(12);
  for (std::size_t i = 0; i < s.fold_lines.size(); ++i)
    for (const auto& v : s.fold_lines[i]) os << i << "," << v.x1 << "," << v.x2 << "," << v.w << "\n";
}

inline void write_obj(std::ostream& os, const Surface& s, const std::string& name) {
  os << "# " << name << ": deformed surface (x1, x2, w), one group per sector between folds\n" << std::setprecision(12);
  int base = 1;
  for (std::size_t pi = 0; pi < s.patches.size(); ++pi) {
    const auto& p = s.patches[pi];
    os << "g sector" << pi << "\n";
    for (const auto& v : p.vertices) os << "v " << v.x1 << " " << v.x2 << " " << v.w << "\n";
    for (const auto& t : p.triangles) os << "f " << t[0] + base << " " << t[1] + base << " " << t[2] + base << "\n";
    base += int(p.vertices.size());
  }
  for (std::size_t i = 0; i < s.fold_lines.size(); ++i) {
    os << "g fold" << i << "\n";
    for (const auto& v : s.fold_lines[i]) os << "v " << v.x1 << " " << v.x2 << " " << v.w << "\n";
    os << "l";
    for (std::size_t k = 0; k < s.fold_lines[i].size(); ++k) os << " " << base + int(k);
    os << "\n";
    base += int(s.fold_lines[i].size());
  }
}

}  // namespace vkp::cli
