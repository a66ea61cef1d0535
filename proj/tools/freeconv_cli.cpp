#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "freeconv/freeconv.hpp"

namespace {

using namespace freeconv;

constexpr int kExitTolerance = 1;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;

struct Config {
  std::string a;
  std::string b;
  double tol = 1e-12;
  double eta_min = 1e-8;
  int grid_n = 513;
  std::string out;
  std::uint64_t seed = 42;
  int n_matrix = 500;
  int n_samples = 50;
  double ks_tol = 0.02;
  std::string z;
  bool richardson = false;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

std::string sidecar_path(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".csv") p.replace_extension(".json");
  else p += ".json";
  return p.string();
}

SolverOptions solver_options(const Config& c) {
  if (!(c.tol > 0.0)) throw InvalidArgument("--tol must be positive");
  SolverOptions s;
  s.tol = c.tol;
  return s;
}

DensityOptions density_options(const Config& c) {
  if (!(c.eta_min > 0.0)) throw InvalidArgument("--eta-min must be positive");
  if (c.grid_n < 16) throw InvalidArgument("--grid-n must be at least 16");
  DensityOptions d;
  d.eta_min = c.eta_min;
  d.richardson = c.richardson;
  d.solver = solver_options(c);
  return d;
}

complex parse_z(const std::string& text) {
  const auto parts = detail::parse_number_list(text);
  if (parts.size() != 2) throw InvalidArgument("--z expects re,im");
  return {parts[0], parts[1]};
}

int cmd_measure(const Config& c) {
  write_text(c.out, dump_json(measure_to_json(parse_measure_spec(c.a))) + "\n");
  return 0;
}

int cmd_support(const Config& c) {
  const auto mu_a = parse_measure_spec(c.a), mu_b = parse_measure_spec(c.b);
  const auto s = find_support(mu_a, mu_b, 1e-10, solver_options(c));
  write_text(c.out, dump_json(support_to_json(s)) + "\n");
  return 0;
}

int cmd_density(const Config& c) {
  const auto mu_a = parse_measure_spec(c.a), mu_b = parse_measure_spec(c.b);
  const auto opts = density_options(c);
  const auto s = find_support(mu_a, mu_b, 1e-10, opts.solver);
  const auto grid = density_grid(mu_a, mu_b, s, c.grid_n, opts);
  const auto meta = dump_json(density_metadata(grid)) + "\n";
  write_text(c.out, density_csv(grid));
  if (c.out.empty()) std::cerr << meta;
  else write_text(sidecar_path(c.out), meta);
  return 0;
}

int cmd_subordinate(const Config& c) {
  const auto mu_a = parse_measure_spec(c.a), mu_b = parse_measure_spec(c.b);
  const complex z = parse_z(c.z);
  if (z.imag() < 0.0) throw InvalidArgument("--z needs Im z >= 0");
  const auto opts = solver_options(c);
  const auto p = z.imag() > 0.0 ? solve_point(mu_a, mu_b, z, std::nullopt, opts)
                                : solve_real_outside(mu_a, mu_b, z.real(), std::nullopt, opts);
  write_text(c.out, dump_json(point_to_json(p)) + "\n");
  return 0;
}

int cmd_validate(const Config& c) {
  ValidationOptions v;
  v.tol = solver_options(c).tol;
  v.eta_min = density_options(c).eta_min;
  v.grid_n = c.grid_n;
  const auto results = run_closed_form_suite(v);
  std::string table;
  int failed = 0;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-48s %-24s %-8.0e %s\n", r.name.c_str(),
                  format_double(r.measured).c_str(), r.tolerance, r.passed() ? "PASS" : "FAIL");
    table += line;
    failed += r.passed() ? 0 : 1;
  }
  table += std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) +
           " checks passed\n";
  write_text(c.out, table);
  if (failed && !c.out.empty()) std::cerr << failed << " check(s) failed\n";
  return failed ? kExitTolerance : 0;
}

int cmd_rmt_check(const Config& c) {
  const auto mu_a = parse_measure_spec(c.a), mu_b = parse_measure_spec(c.b);
  const auto opts = density_options(c);
  const auto s = find_support(mu_a, mu_b, 1e-10, opts.solver);
  const auto grid = density_grid(mu_a, mu_b, s, c.grid_n, opts);
  const auto spectrum = rmt_sample(mu_a, mu_b, c.n_matrix, c.n_samples, c.seed);
  const double ks = distance_ks(spectrum, grid);
  const bool ok = ks <= c.ks_tol;

  Json report;
  report["ks"] = ks;
  report["tolerance"] = c.ks_tol;
  report["n_matrix"] = c.n_matrix;
  report["n_samples"] = c.n_samples;
  report["seed"] = c.seed;
  report["passed"] = ok;
  std::cout << dump_json(report) << "\n";
  if (!c.out.empty()) {
    write_text(c.out, spectrum_csv(spectrum));
    write_text(sidecar_path(c.out), dump_json(spectrum_metadata(spectrum)) + "\n");
  }
  if (!ok) std::cerr << "KS distance " << format_double(ks) << " exceeds " << format_double(c.ks_tol) << "\n";
  return ok ? 0 : kExitTolerance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free additive convolution of Jacobi-type measures"};
  app.require_subcommand(1);
  Config c;

  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--a", c.a, "first measure: shorthand, inline JSON or JSON file")->required();
    sub->add_option("--b", c.b, "second measure")->required();
  };
  auto add_solver = [&](CLI::App* sub) { sub->add_option("--tol", c.tol, "solver tolerance"); };
  auto add_density = [&](CLI::App* sub) {
    sub->add_option("--eta-min", c.eta_min, "imaginary offset for density evaluation");
    sub->add_option("--grid-n", c.grid_n, "density grid size (>= 16)");
    sub->add_flag("--richardson", c.richardson, "extrapolate rho to eta = 0 from 1e-4 and 1e-5");
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", c.out, "output path (default stdout)"); };

  auto* measure = app.add_subcommand("measure", "print the canonical JSON of a measure");
  measure->add_option("--a", c.a, "measure spec")->required();
  add_out(measure);

  auto* support = app.add_subcommand("support", "support endpoints and edge coefficients");
  add_pair(support);
  add_solver(support);
  add_out(support);

  auto* density = app.add_subcommand("density", "density grid as CSV with a JSON sidecar");
  add_pair(density);
  add_solver(density);
  add_density(density);
  add_out(density);

  auto* subordinate = app.add_subcommand("subordinate", "subordination functions at one z");
  add_pair(subordinate);
  add_solver(subordinate);
  subordinate->add_option("--z", c.z, "spectral parameter re,im")->required();
  add_out(subordinate);

  auto* validate = app.add_subcommand("validate", "closed-form validation suite");
  add_solver(validate);
  add_density(validate);
  add_out(validate);

  auto* rmt = app.add_subcommand("rmt-check", "random-matrix comparison");
  add_pair(rmt);
  add_solver(rmt);
  add_density(rmt);
  rmt->add_option("--seed", c.seed, "random seed");
  rmt->add_option("--n-matrix", c.n_matrix, "matrix size");
  rmt->add_option("--n-samples", c.n_samples, "number of samples");
  rmt->add_option("--ks-tol", c.ks_tol, "maximal KS distance");
  add_out(rmt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitParse;
  }

  try {
    if (*measure) return cmd_measure(c);
    if (*support) return cmd_support(c);
    if (*density) return cmd_density(c);
    if (*subordinate) return cmd_subordinate(c);
    if (*validate) return cmd_validate(c);
    if (*rmt) return cmd_rmt_check(c);
  } catch (const SpecParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const GridFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& entry : e.entries()) std::cerr << "  point " << entry.index << ": " << entry.message << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitParse;
}
