#include "topolab/oracle.hpp"

#include "topolab/coupling.hpp"
#include "topolab/initial_law.hpp"
#include "topolab/kernel.hpp"
#include "topolab/kinetic.hpp"
#include "topolab/particle_system.hpp"
#include "topolab/reference.hpp"
#include "topolab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace topolab {

namespace {

OracleResult at_most(std::string name, double value, double tolerance) {
  return {std::move(name), value <= tolerance, value, tolerance};
}

OracleResult at_least(std::string name, double value, double tolerance) {
  return {std::move(name), value >= tolerance, value, tolerance};
}

std::vector<Kernel> preset_kernels() {
  return {Kernel::uniform(), Kernel::linear(), Kernel::truncated_linear(0.75),
          Kernel::tabulated({{0.0, 1.5}, {0.5, 1.0}, {1.0, 0.5}})};
}

Configuration random_configuration(std::size_t n, std::uint64_t seed) {
  InitialLaw law;
  return sample_initial(law, n, 1, seed);
}

InitialLaw cosine_law() {
  InitialLaw law;
  law.spatial.form = SpatialLaw::Form::Cosine;
  law.spatial.amplitude = 0.5;
  return law;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

std::size_t brute_rank(const Configuration& c, std::size_t i, std::size_t j) {
  std::size_t r = 1;
  const double dij = torus_distance(c.position(i), c.position(j));
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k == i || k == j) continue;
    const double dik = torus_distance(c.position(i), c.position(k));
    if (dik < dij || (dik == dij && k < j)) ++r;
  }
  return r;
}

void rank_checks(const OracleOptions& opt, std::vector<OracleResult>& out) {
  const auto c64 = random_configuration(64, opt.seed);
  double mismatches = 0.0;
  for (std::size_t i = 0; i < c64.size(); ++i) {
    for (std::size_t j = 0; j < c64.size(); ++j) {
      if (i != j && rank(c64, i, j) != brute_rank(c64, i, j)) mismatches += 1.0;
    }
  }
  out.push_back(at_most("rank_matches_brute_force", mismatches, 0.0));

  const auto c128 = random_configuration(128, opt.seed + 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < c128.size(); ++i) {
    for (std::size_t j = 0; j < c128.size(); ++j) {
      if (i == j) continue;
      const double r = static_cast<double>(rank(c128, i, j)) / 127.0;
      const double m = empirical_mass(c128, i, c128.position(i), torus_distance(c128.position(i), c128.position(j)));
      worst = std::max(worst, std::abs(r - m));
    }
  }
  out.push_back(at_most("empirical_mass_equals_rank", worst, 1e-15));
}

void normalization_checks(const OracleOptions& opt, std::vector<OracleResult>& out) {
  double closed_form = 0.0;
  double bound_excess = 0.0;
  for (std::size_t n = 3; n <= 4096; ++n) {
    closed_form = std::max(closed_form, std::abs(riemann_error(Kernel::linear(), n) - 1.0 / static_cast<double>(n - 1)));
    for (const auto& k : preset_kernels()) {
      bound_excess = std::max(bound_excess, std::abs(riemann_error(k, n)) - k.lipschitz() / static_cast<double>(n - 1));
    }
  }
  out.push_back(at_most("riemann_error_linear_closed_form", closed_form, 1e-12));
  out.push_back(at_most("riemann_error_lipschitz_bound", bound_excess, 1e-15));
  out.push_back(at_most("alpha_linear_n3_n5",
                        std::abs(alpha(Kernel::linear(), 3) - 1.0) + std::abs(alpha(Kernel::linear(), 5) - 1.0 / 3.0),
                        1e-15));

  double row_error = 0.0;
  double form_gap = 0.0;
  Rng rng(opt.seed + 2);
  for (const auto& k : preset_kernels()) {
    for (std::size_t n : {3, 10, 100, 1000}) {
      const auto c = random_configuration(n, opt.seed + 3 + n);
      const std::size_t i = rng.index(n);
      auto p = transition_probs(c, k, i);
      const auto q = transition_probs_direct(c, k, i);
      for (double& x : p) x *= opt.alpha_scale;
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sum += p[j];
        form_gap = std::max(form_gap, std::abs(p[j] - q[j]));
      }
      row_error = std::max(row_error, std::abs(sum - 1.0));
    }
  }
  out.push_back(at_most("transition_rows_sum_to_one", row_error, 1e-12));
  out.push_back(at_most("transition_forms_agree", form_gap, 1e-12));

  double violations = 0.0;
  for (const auto& k : preset_kernels()) violations += kernel_violation(k).empty() ? 0.0 : 1.0;
  out.push_back(at_most("preset_kernels_valid", violations, 0.0));
}

void kinetic_checks(const OracleOptions& opt, std::vector<OracleResult>& out) {
  const auto law = cosine_law();
  const auto f512 = discretize(law, GridSpec{512, 4, 1.0});
  const auto f1024 = discretize(law, GridSpec{1024, 4, 1.0});
  const double r512 = max_of(coarea_check(f512, Kernel::linear(), opt.quadrature_scale));
  const double r1024 = max_of(coarea_check(f1024, Kernel::linear(), opt.quadrature_scale));
  out.push_back(at_most("coarea_residual_nx512", r512, 5e-3));
  out.push_back(at_least("coarea_refinement_ratio", r512 / r1024, 1.8));

  InitialLaw bimodal;
  bimodal.spatial.form = SpatialLaw::Form::Bimodal;
  const auto fb = discretize(bimodal, GridSpec{512, 4, 1.0});
  out.push_back(at_most("coarea_residual_bimodal_nx512", max_of(coarea_check(fb, Kernel::linear(), opt.quadrature_scale)), 5e-3));

  InitialLaw flat;
  flat.velocity.form = VelocityLaw::Form::Uniform;
  flat.velocity.half_width = 0.75;
  auto h = discretize(flat, GridSpec{512, 16, 1.0});
  const auto h0 = h;
  step(h, Kernel::linear(), 0.01);
  double sup = 0.0;
  for (std::size_t k = 0; k < h.values().size(); ++k) sup = std::max(sup, std::abs(h.values()[k] - h0.values()[k]));
  out.push_back(at_most("homogeneous_step_sup_change", sup, 1e-8));

  auto g = discretize(flat, GridSpec{128, 16, 1.0});
  const auto g0 = g;
  const std::vector<double> end{1.0};
  const auto sol = solve(g, Kernel::linear(), 1.0, 0.01, end);
  double l1 = 0.0;
  for (std::size_t k = 0; k < g0.values().size(); ++k) l1 += std::abs(sol.snapshots.back().values()[k] - g0.values()[k]);
  out.push_back(at_most("homogeneous_l1_change_t1", l1 * g0.dx() * g0.dv(), 1e-6));

  const auto c0 = discretize(law, GridSpec{640, 8, 1.0});
  std::vector<GridDensity> ends;
  const std::vector<double> half{0.5};
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) ends.push_back(solve(c0, Kernel::linear(), 0.5, dt, half).snapshots.back());
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < c0.values().size(); ++m) s += std::abs(ends[k].values()[m] - ends[k + 1].values()[m]);
    diffs.push_back(s * c0.dx() * c0.dv());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < diffs.size(); ++k) {
    const double ratio = diffs[k] / diffs[k + 1];
    worst = std::max(worst, ratio < 1.7 ? 1.7 - ratio : (ratio > 4.3 ? ratio - 4.3 : 0.0));
  }
  out.push_back(at_most("dt_self_convergence_ratio_outside_band", worst, 0.0));
}

void particle_checks(const OracleOptions& opt, std::vector<OracleResult>& out) {
  const std::vector<double> alphabet{-0.5, 0.0, 0.5};
  const Configuration frozen(1, {0.1, 0.35, 0.8}, {-0.5, 0.0, 0.5});
  const auto exact = master_equation_law(Kernel::linear(), frozen, alphabet, 1.0);
  ProcessParams p;
  p.kernel = Kernel::linear();
  p.n = 3;
  p.horizon = 1.0;
  p.frozen_positions = true;
  const std::size_t runs = 100000;
  std::vector<double> counts(exact.size(), 0.0);
  Rng rng(opt.seed + 10);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto traj = simulate(p, frozen, rng);
    counts[label_state(traj.final_state, alphabet)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(runs);
  out.push_back(at_most("master_equation_tv_n3", tv_distance(counts, exact), 0.01));

  ProcessParams u;
  u.kernel = Kernel::uniform();
  u.n = 10;
  u.horizon = 10000.0;
  Rng urng(opt.seed + 11);
  const auto traj = simulate(u, random_configuration(10, opt.seed + 12), urng);
  std::vector<double> pairs(90, 0.0);
  for (const auto& e : traj.events) {
    const std::size_t j = e.partner < e.focal ? e.partner : e.partner - 1;
    pairs[e.focal * 9 + j] += 1.0;
  }
  const std::vector<double> flat(90, 1.0 / 90.0);
  out.push_back(at_least("uniform_kernel_pairs_p_value", stats::chi_square_gof(pairs, flat).p_value, 0.01));
}

// Tabulated kernel constant on [1/7, 2/7], [3/7, 4/7], [5/7, 6/7] and at 1,
// the plateaus that contain both the normalized ranks and the ball masses
// of the 8-point lattice.
Kernel staircase_kernel() {
  std::vector<std::pair<double, double>> t{{0.0, 4.0},       {1.0 / 7.0, 4.0}, {2.0 / 7.0, 4.0}, {3.0 / 7.0, 3.0},
                                           {4.0 / 7.0, 3.0}, {5.0 / 7.0, 2.0}, {6.0 / 7.0, 2.0}, {1.0, 1.0}};
  double integral = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) integral += 0.5 * (t[k].first - t[k - 1].first) * (t[k].second + t[k - 1].second);
  for (auto& [x, y] : t) y /= integral;
  return Kernel::tabulated(t);
}

void coupling_checks(const OracleOptions& opt, std::vector<OracleResult>& out) {
  VelocityLaw still;
  still.form = VelocityLaw::Form::Discrete;
  still.atoms = {0.25};
  still.weights = {1.0};
  const HomogeneousReference lattice_ref(1, still, 2.0);
  std::vector<double> x;
  for (int k = 0; k < 8; ++k) x.push_back(k / 8.0);
  const Configuration lattice(1, x, std::vector<double>(8, 0.25));
  const CouplingModel model(staircase_kernel(), 8, lattice_ref);
  Rng rng(opt.seed + 20);
  CoupledRunOptions ro;
  ro.record_times = {2.0};
  ro.lln = false;
  const auto run = run_coupled(model, lattice, 2.0, ro, rng);
  out.push_back(at_most("lattice_one_sided_events", static_cast<double>(run.final_state.counts().z_only), 0.0));
  out.push_back(at_most("lattice_d_n", run.records.back().d_n, 0.0));

  const auto law = cosine_law();
  const auto f = discretize(law, GridSpec{512, 4, 1.0});
  const KineticReference ref({f});
  const std::size_t n = 2049;
  std::vector<double> pos(n);
  pos[0] = 0.3;
  for (std::size_t k = 1; k < n; ++k) {
    const double q = (static_cast<double>(k) - 0.5) / static_cast<double>(n - 1);
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (law.spatial.cdf(mid) < q ? lo : hi) = mid;
    }
    pos[k] = 0.5 * (lo + hi);
  }
  const Configuration quantiles(1, pos, std::vector<double>(n, 0.0));
  out.push_back(at_most("lln_quantile_configuration", lln_diagnostic(quantiles, ref, 0.0), f.dx()));

  const std::vector<double> a{0.5, 0.5, 0.0, 0.0};
  const std::vector<double> b{0.0, 0.0, 0.25, 0.75};
  out.push_back(at_most("tv_identical", tv_distance(a, a), 0.0));
  out.push_back(at_most("tv_disjoint_minus_one", std::abs(tv_distance(a, b) - 1.0), 0.0));

  MarginalCheckParams mp;
  mp.initial = cosine_law();
  mp.seed = opt.seed + 21;
  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto sol = solve(discretize(mp.initial, GridSpec{128, 16, 1.0}), mp.kernel, 1.0, 0.01, times);
  const KineticReference kref(sol.snapshots);
  const auto report = z_marginal_exactness_check(mp, kref);
  const double p_min = std::min({report.event_count_p, report.rank_frequencies.p_value, report.velocity_half.p_value,
                                 report.velocity_end.p_value});
  out.push_back(at_least("z_marginal_min_p_value", p_min, 0.01));
}

}  // namespace

std::vector<OracleResult> run_oracle_suite(const OracleOptions& options) {
  std::vector<OracleResult> out;
  rank_checks(options, out);
  normalization_checks(options, out);
  kinetic_checks(options, out);
  particle_checks(options, out);
  coupling_checks(options, out);
  return out;
}

void print_oracle_results(std::ostream& out, const std::vector<OracleResult>& results) {
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, " %.6g (tolerance %.6g)", r.value, r.tolerance);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << buf << '\n';
  }
}

}  // namespace topolab
