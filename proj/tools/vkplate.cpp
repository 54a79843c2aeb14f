// vkplate: verify singular plate configurations, export surfaces, solve the ridge system.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vkplate/cli.hpp"

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kMismatch = 1;
constexpr int kUsage = 2;
constexpr int kNumeric = 3;

std::pair<int, int> parse_grid(const std::string& g) {
  int a = 0, b = 0;
  char comma = 0, extra = 0;
  if (std::sscanf(g.c_str(), "%d%c%d%c", &a, &comma, &b, &extra) != 3 || comma != ',')
    throw vkp::ConfigError("--grid expects N1,N2 (e.g. 40,96)");
  return {a, b};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vkplate: residual verification of von Karman plates with singular fields"};
  app.require_subcommand(1);

  std::string config_path, out_path, grid = "40,96", format = "csv";
  double tol_bulk = 0, tol_iface = 0, tol_point = 0, gamma = 0;

  auto* verify = app.add_subcommand("verify", "Evaluate all residual suites of a scenario config");
  verify->add_option("config", config_path, "Scenario config (JSON)")->required();
  verify->add_option("--tol-bulk", tol_bulk, "Override the bulk tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--tol-interface", tol_iface, "Override the interface tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--tol-point", tol_point, "Override the point tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--out", out_path, "Report file (JSON)")->default_str("vkplate_report.json");

  auto* surface = app.add_subcommand("surface", "Export the deflection w on a grid split along the folds");
  surface->add_option("config", config_path, "Scenario config (JSON)")->required();
  surface->add_option("--grid", grid, "N1,N2: radial,angular nodes (disk) or x1,x2 nodes (rectangle)");
  surface->add_option("--format", format, "csv or obj")->check(CLI::IsMember({"csv", "obj"}));
  surface->add_option("--out", out_path, "Output file")->required();

  auto* ridge = app.add_subcommand("solve-ridge", "Solve the terminating-fold ridge system");
  ridge->add_option("--gamma", gamma, "Fold strength gamma0 (nonzero)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*verify) {
      vkp::cli::Config cfg = vkp::cli::load_config(config_path);
      if (tol_bulk > 0) cfg.tol.bulk = tol_bulk;
      if (tol_iface > 0) cfg.tol.interface = tol_iface;
      if (tol_point > 0) cfg.tol.point = tol_point;
      const vkp::cli::Report rep = vkp::cli::run_verify(cfg);
      if (out_path.empty()) out_path = "vkplate_report.json";
      std::ofstream os(out_path);
      if (!os) throw vkp::ConfigError("cannot write report '" + out_path + "'");
      os << vkp::cli::to_json(rep).dump(2) << "\n";
      vkp::cli::print_summary(std::cout, rep);
      std::cout << "report: " << out_path << "\n";
      return rep.all_matched() ? kOk : kMismatch;
    }
    if (*surface) {
      const auto [n1, n2] = parse_grid(grid);
      const vkp::cli::Config cfg = vkp::cli::load_config(config_path);
      const vkp::Scenario sc = vkp::cli::build_scenario(cfg);
      const vkp::cli::Surface s = vkp::cli::sample_surface(sc.bundle, n1, n2);
      std::ofstream os(out_path);
      if (!os) throw vkp::ConfigError("cannot write '" + out_path + "'");
      if (format == "obj") {
        vkp::cli::write_obj(os, s, cfg.scenario);
      } else {
        vkp::cli::write_csv(os, s);
        if (!s.fold_lines.empty()) {
          const std::string folds = out_path + ".folds.csv";
          std::ofstream fs(folds);
          if (!fs) throw vkp::ConfigError("cannot write '" + folds + "'");
          vkp::cli::write_fold_csv(fs, s);
          std::cout << "fold polylines: " << folds << "\n";
        }
      }
      std::size_t nv = 0, nt = 0;
      for (const auto& p : s.patches) nv += p.vertices.size(), nt += p.triangles.size();
      std::cout << "wrote " << out_path << " (" << s.patches.size() << " sectors, " << nv << " vertices, " << nt << " triangles, "
                << s.fold_lines.size() << " fold polylines)\n";
      return kOk;
    }
    if (*ridge) {
      const vkp::RidgeSolution r = vkp::solve_ridge(gamma);
      std::cout << std::setprecision(12) << "mu=" << r.mu << " a=" << r.a << " lambda=" << r.lambda << "\n";
      return kOk;
    }
  } catch (const vkp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const vkp::PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return kUsage;
  } catch (const vkp::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
