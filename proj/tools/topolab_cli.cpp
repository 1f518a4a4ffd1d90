// topolab: command-line runner for the particle system, the kinetic solver,
// the coupled process and the convergence study.

#include "topolab/coupling.hpp"
#include "topolab/errors.hpp"
#include "topolab/lab.hpp"
#include "topolab/oracle.hpp"
#include "topolab/particle_system.hpp"
#include "topolab/reference.hpp"
#include "topolab/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace topolab;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitOracle = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config, "JSON experiment configuration");
  app->add_option("--seed", flags.seed, "Master seed (overrides the configuration)");
  app->add_option("--out", flags.out, "Output directory (overrides the configuration)");
  app->add_option("--threads", flags.threads, "Worker threads (overrides the configuration)")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig c = flags.config.empty() ? ExperimentConfig::from_json(nlohmann::json::object())
                                            : load_config(flags.config);
  if (flags.seed) c.seed = *flags.seed;
  if (!flags.out.empty()) c.output_dir = flags.out;
  if (flags.threads) c.threads = *flags.threads;
  c.validate();
  return c;
}

std::string to_string(void (*writer)(std::ostream&, const Trajectory&), const Trajectory& t) {
  std::ostringstream out;
  writer(out, t);
  return out.str();
}

int cmd_simulate(const CommonFlags& flags) {
  const auto c = resolve(flags);
  ProcessParams p;
  p.kernel = c.kernel;
  p.n = c.n_values.front();
  p.dim = c.dim;
  p.horizon = c.horizon;
  p.seed = c.seed;
  p.snapshot_times = c.record_times;
  const auto initial = sample_initial(c.initial, p.n, c.dim, c.seed);
  const auto traj = simulate(p, initial);
  const fs::path dir(c.output_dir);
  write_file_atomic(dir / "events.csv", to_string(write_events_csv, traj));
  write_file_atomic(dir / "snapshots.csv", to_string(write_snapshots_csv, traj));
  std::printf("simulate: N=%zu events=%zu -> %s\n", p.n, traj.events.size(), dir.string().c_str());
  return 0;
}

int cmd_kinetic(const CommonFlags& flags) {
  const auto c = resolve(flags);
  if (c.reference != ReferenceKind::Kinetic) throw ValidationError("kinetic: configuration uses a homogeneous reference");
  const GridSpec grid{c.kinetic.nx, c.kinetic.nv, c.kinetic.v_max};
  const auto times = kinetic_snapshot_times(c);
  const auto sol = solve(discretize(c.initial, grid), c.kernel, c.horizon, c.kinetic.dt, times, c.threads);
  const fs::path dir = fs::path(c.output_dir) / "kinetic";
  for (const auto& s : sol.snapshots) {
    std::ostringstream out;
    write_csv(out, s);
    write_file_atomic(dir / snapshot_file_name(s.time(), "csv"), out.str());
  }
  std::ostringstream log;
  log << "# topolab mass v1\nstep,mass_before_renormalization,renormalization\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < sol.steps.size(); ++k) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, sol.steps[k].mass_before_renormalization,
                  sol.steps[k].renormalization);
    log << buf;
    worst = std::max(worst, std::abs(sol.steps[k].mass_before_renormalization - 1.0));
  }
  write_file_atomic(dir / "mass.csv", log.str());
  std::printf("kinetic: %zu snapshots, %zu steps, worst pre-renormalization drift %.3e -> %s\n", sol.snapshots.size(),
              sol.steps.size(), worst, dir.string().c_str());
  return 0;
}

int cmd_couple(const CommonFlags& flags) {
  const auto c = resolve(flags);
  const auto reference = make_reference(c);
  const std::size_t n = c.n_values.front();
  const CouplingModel model(c.kernel, n, *reference);
  CoupledRunOptions options;
  options.record_times = c.record_times;
  options.histogram = c.histogram;
  Rng rng = Rng::stream(c.seed ^ splitmix64(n), 0);
  const auto initial = sample_initial(c.initial, n, c.dim, rng);
  const auto run = run_coupled(model, initial, c.horizon, options, rng);
  std::vector<TrialRow> rows;
  for (const auto& r : run.records) {
    rows.push_back({n, 0, r.t, r.d_n, r.tv, r.counts.joint, r.counts.z_only, r.counts.sigma_only, r.lln, r.rescale});
  }
  std::ostringstream out;
  write_trials_csv(out, rows);
  const fs::path dir(c.output_dir);
  write_file_atomic(dir / "couple.csv", out.str());
  const auto& last = run.records.back();
  std::printf("couple: N=%zu D_N(%g)=%.6g joint=%zu z_only=%zu -> %s\n", n, last.t, last.d_n, last.counts.joint,
              last.counts.z_only, (dir / "couple.csv").string().c_str());
  return 0;
}

int cmd_convergence(const CommonFlags& flags) {
  const auto c = resolve(flags);
  const auto reference = make_reference(c);
  const auto result = run_convergence(c, *reference);
  const fs::path dir(c.output_dir);
  write_convergence(dir, result);
  for (const auto& row : result.aggregate) {
    if (row.t != c.horizon) continue;
    std::printf("N=%-6zu mean D_N(T)=%.6g stderr=%.3g bound=%.6g\n", row.n, row.mean_d_n, row.stderr_d_n, row.bound);
  }
  if (result.fit) {
    const auto& f = result.fit->line;
    std::printf("slope=%.4f 95%% CI [%.4f, %.4f] R^2=%.4f\n", f.slope, f.slope_lo, f.slope_hi, f.r_squared);
  } else {
    std::printf("no rate fit: %s\n", result.fit_status.c_str());
  }
  return 0;
}

int cmd_oracle(const CommonFlags& flags, double alpha_scale, double quadrature_scale) {
  OracleOptions opt;
  if (flags.seed) opt.seed = *flags.seed;
  opt.alpha_scale = alpha_scale;
  opt.quadrature_scale = quadrature_scale;
  const auto results = run_oracle_suite(opt);
  print_oracle_results(std::cout, results);
  for (const auto& r : results) {
    if (!r.passed) return kExitOracle;
  }
  return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& input) {
  const auto c = resolve(flags);
  const fs::path in = input.empty() ? fs::path(c.output_dir) : fs::path(input);
  const fs::path out = fs::path(c.output_dir) / "report.svg";
  render_report_files(in, out);
  std::printf("report -> %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topological-interaction particle system lab"};
  app.require_subcommand(1);
  CommonFlags flags;
  double alpha_scale = 1.0;
  double quadrature_scale = 1.0;
  std::string report_input;

  auto* simulate = app.add_subcommand("simulate", "Simulate the particle system");
  auto* kinetic = app.add_subcommand("kinetic", "Solve the kinetic equation");
  auto* couple = app.add_subcommand("couple", "One coupled trajectory");
  auto* convergence = app.add_subcommand("convergence", "Convergence study of D_N");
  auto* oracle = app.add_subcommand("oracle", "Run the oracle suite");
  auto* report = app.add_subcommand("report", "Render the SVG report");
  for (auto* sub : {simulate, kinetic, couple, convergence, oracle, report}) add_common(sub, flags);
  oracle->add_option("--perturb-alpha", alpha_scale, "Multiply alpha_N in the normalization check");
  oracle->add_option("--perturb-quadrature", quadrature_scale, "Multiply the gain quadrature weight");
  report->add_option("--input", report_input, "Directory holding trials.csv and aggregate.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(flags);
    if (*kinetic) return cmd_kinetic(flags);
    if (*couple) return cmd_couple(flags);
    if (*convergence) return cmd_convergence(flags);
    if (*oracle) return cmd_oracle(flags, alpha_scale, quadrature_scale);
    if (*report) return cmd_report(flags, report_input);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DegenerateNormalization& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
