#include "topolab/coupling.hpp"

#include "topolab/errors.hpp"
#include "topolab/initial_law.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace topolab {

CoupledState::CoupledState(const Configuration& initial)
    : z_(initial, false), sigma_(initial, false), coupled_(initial.size(), 1) {}

void CoupledState::check_invariants(double t) const {
  std::vector<double> zi(z_.dim());
  std::vector<double> si(z_.dim());
  for (std::size_t i = 0; i < coupled_.size(); ++i) {
    if (!coupled_[i]) continue;
    z_.position(i, t, zi);
    sigma_.position(i, t, si);
    const auto zv = z_.velocity(i);
    const auto sv = sigma_.velocity(i);
    if (zi != si || !std::equal(zv.begin(), zv.end(), sv.begin())) {
      std::ostringstream msg;
      msg << "coupled pair " << i << " differs at t=" << t;
      throw InvariantViolation(msg.str());
    }
  }
}

CouplingModel::CouplingModel(Kernel kernel, std::size_t n, const Reference& reference)
    : kernel_(std::move(kernel)), law_(kernel_, n), reference_(reference) {}

ReferenceRates CouplingModel::reference_rates(const CoupledState& state, std::size_t focal, double t) const {
  const int dim = state.sigma().dim();
  const std::size_t n = state.size();
  std::vector<double> positions;
  state.sigma().positions(t, positions);
  const std::span<const double> all(positions);
  const auto origin = all.subspan(focal * dim, dim);
  ReferenceRates rates;
  rates.values.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == focal) continue;
    const double radius = torus_distance(origin, all.subspan(j * dim, dim));
    rates.values[j] = law_.alpha() * kernel_(reference_.ball_mass(t, origin, radius));
    rates.row_sum += rates.values[j];
  }
  return rates;
}

namespace {

// Ranks of all particles relative to `focal`, with the (distance, index)
// order used by nth_closest.
void fill_ranks(std::span<const double> positions, int dim, std::size_t focal, std::vector<std::size_t>& ranks,
                std::vector<std::pair<double, std::size_t>>& keyed) {
  const std::size_t n = positions.size() / dim;
  const auto origin = positions.subspan(focal * dim, dim);
  keyed.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != focal) keyed.emplace_back(torus_distance(origin, positions.subspan(j * dim, dim)), j);
  }
  std::sort(keyed.begin(), keyed.end());
  ranks.assign(n, 0);
  for (std::size_t h = 0; h < keyed.size(); ++h) ranks[keyed[h].second] = h + 1;
}

struct Scratch {
  std::vector<double> z_positions;
  std::vector<double> sigma_positions;
  std::vector<double> lambda;
  std::vector<double> residual;
  std::vector<std::size_t> ranks;
  std::vector<std::pair<double, std::size_t>> keyed;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

CoupledEvent CouplingModel::jump(CoupledState& state, double t, Rng& rng) const {
  const std::size_t n = state.size();
  const int dim = state.z_.dim();
  if (n != law_.n()) throw ValidationError("coupled jump: state size does not match the model");
  if (t < state.t_) throw DomainError("coupled jump: time runs backwards");
  state.t_ = t;
  auto& s = scratch();

  const std::size_t i = rng.index(n);
  const std::size_t h = law_.sample(rng.uniform());
  state.z_.positions(t, s.z_positions);
  const std::size_t j = nth_closest(s.z_positions, dim, i, h);

  std::vector<double> yi(dim);
  std::vector<double> yj(dim);
  state.sigma_.position(i, t, yi);
  state.sigma_.position(j, t, yj);
  const double pi_n = law_.prob(h);
  const double pi_rho = law_.alpha() * kernel_(reference_.ball_mass(t, yi, torus_distance(yi, yj)));
  const double lambda = joint_rate(pi_n, pi_rho);

  const std::vector<double> v_j(state.z_.velocity(j).begin(), state.z_.velocity(j).end());
  const bool was_coupled = state.coupled_[i] != 0;
  auto decouple = [&](std::size_t& counter) {
    if (!was_coupled) return;
    state.coupled_[i] = 0;
    ++state.decoupled_;
    ++counter;
  };

  if (rng.uniform() * pi_n < lambda) {
    const std::vector<double> w_j(state.sigma_.velocity(j).begin(), state.sigma_.velocity(j).end());
    state.z_.set_velocity(i, t, v_j);
    state.sigma_.set_velocity(i, t, w_j);
    ++state.counts_.joint;
    if (!state.coupled_[j]) decouple(state.counts_.decoupled_by_partner);
    return {t, i, j, h, SigmaMove::Joint, j};
  }

  // Z jumps alone; Sigma takes its residual jump.
  state.z_.set_velocity(i, t, v_j);
  ++state.counts_.z_only;
  decouple(state.counts_.decoupled_one_sided);

  fill_ranks(s.z_positions, dim, i, s.ranks, s.keyed);
  state.sigma_.positions(t, s.sigma_positions);
  const std::span<const double> sigma_all(s.sigma_positions);
  const auto origin = sigma_all.subspan(i * dim, dim);
  s.lambda.assign(n, 0.0);
  s.residual.assign(n, 0.0);
  double joint_mass = 0.0;
  double residual_mass = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    const double pn = law_.prob(s.ranks[k]);
    const double pr = law_.alpha() * kernel_(reference_.ball_mass(t, origin, torus_distance(origin, sigma_all.subspan(k * dim, dim))));
    const double lk = joint_rate(pn, pr);
    double rk = pr - lk;
    if (rk < 0.0) {
      if (rk < -1e-12) throw InvariantViolation("coupled jump: negative residual rate");
      rk = 0.0;
    }
    s.lambda[k] = lk;
    s.residual[k] = rk;
    joint_mass += lk;
    residual_mass += rk;
  }
  if (!(joint_mass < 1.0)) throw InvariantViolation("coupled jump: one-sided branch with full joint mass");

  auto& counts = state.counts_;
  const double row_mass = joint_mass + residual_mass;
  double scale = 1.0;
  if (row_mass > 1.0 && residual_mass > 0.0) scale = (1.0 - joint_mass) / residual_mass;
  ++counts.residual_events;
  counts.row_mass_deviation_sum += std::abs(row_mass - 1.0);
  counts.rescale_sum += 1.0 - scale;
  counts.rescale_max = std::max(counts.rescale_max, 1.0 - scale);

  const double atom_probability = std::min(1.0, scale * residual_mass / (1.0 - joint_mass));
  ++counts.sigma_only;
  if (rng.uniform() < atom_probability) {
    const double target = rng.uniform() * residual_mass;
    double acc = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (s.residual[k] <= 0.0) continue;
      last_positive = k;
      acc += s.residual[k];
      if (target < acc) {
        pick = k;
        break;
      }
    }
    if (pick == n) pick = last_positive;
    const std::vector<double> w(state.sigma_.velocity(pick).begin(), state.sigma_.velocity(pick).end());
    state.sigma_.set_velocity(i, t, w);
    ++counts.sigma_atom;
    return {t, i, j, h, SigmaMove::ResidualAtom, pick};
  }
  std::vector<double> w(dim);
  reference_.sample_velocity(t, origin, kernel_, rng, w);
  state.sigma_.set_velocity(i, t, w);
  ++counts.e_term;
  return {t, i, j, h, SigmaMove::KineticDraw, n};
}

CoupledEvent CouplingModel::event(CoupledState& state, Rng& rng) const {
  const double t = state.time() + rng.exponential(static_cast<double>(state.size()));
  return jump(state, t, rng);
}

double d_n(const CoupledState& state) {
  return static_cast<double>(state.decoupled_count()) / static_cast<double>(state.size());
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("tv_distance: histograms differ in size");
  std::vector<double> diff(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) diff[k] = std::abs(p[k] - q[k]);
  return 0.5 * stats::pairwise_sum(diff);
}

std::vector<double> bin_density(const GridDensity& f, const HistogramSpec& spec) {
  if (spec.nbx == 0 || spec.nbv == 0 || f.nx() % spec.nbx != 0 || f.nv() % spec.nbv != 0 ||
      f.spec().v_max != spec.v_max) {
    throw ValidationError("bin_density: grid does not refine the histogram bins");
  }
  const std::size_t rx = f.nx() / spec.nbx;
  const std::size_t rv = f.nv() / spec.nbv;
  std::vector<double> bins(spec.nbx * spec.nbv, 0.0);
  const double cell = f.dx() * f.dv();
  for (std::size_t ix = 0; ix < f.nx(); ++ix) {
    for (std::size_t iv = 0; iv < f.nv(); ++iv) bins[(ix / rx) * spec.nbv + iv / rv] += f.at(ix, iv) * cell;
  }
  return bins;
}

double tv_estimate(std::span<const double> histogram, const GridDensity& f, const HistogramSpec& spec) {
  const auto binned = bin_density(f, spec);
  return tv_distance(histogram, binned);
}

double lln_diagnostic(const Configuration& sigma, const Reference& reference, double t, std::size_t focal) {
  const std::size_t n = sigma.size();
  if (n < 2) throw DomainError("lln_diagnostic: need at least two particles");
  const auto table = rank_table(sigma, focal);
  const auto origin = sigma.position(focal);
  std::vector<double> gaps(n - 1);
  for (std::size_t h = 0; h < n - 1; ++h) {
    const double r = static_cast<double>(h + 1) / static_cast<double>(n - 1);
    gaps[h] = std::abs(r - reference.ball_mass(t, origin, table.distances[h]));
  }
  return stats::mean(gaps);
}

CoupledRun run_coupled(const CouplingModel& model, const Configuration& initial, double horizon,
                       const CoupledRunOptions& options, Rng& rng) {
  if (initial.size() != model.rank_law().n()) throw ValidationError("run_coupled: configuration size mismatch");
  if (initial.dim() != model.reference().dim()) throw ValidationError("run_coupled: dimension mismatch with reference");
  if (!(horizon >= 0.0)) throw ValidationError("run_coupled: horizon must be non-negative");
  if (model.reference().end_time() < horizon - 1e-9 || model.reference().start_time() > 1e-9) {
    throw ValidationError("run_coupled: reference does not cover [0, horizon]");
  }
  std::vector<double> times = options.record_times;
  std::sort(times.begin(), times.end());
  for (double s : times) {
    if (s < 0.0 || s > horizon) throw ValidationError("run_coupled: record time outside [0, horizon]");
  }

  CoupledRun run;
  run.final_state = CoupledState(initial);
  auto& state = run.final_state;
  const double rate = static_cast<double>(initial.size());

  auto record = [&](double t) {
    CoupledRecord rec;
    rec.t = t;
    rec.d_n = d_n(state);
    rec.counts = state.counts();
    rec.rescale = state.counts().mean_rescale();
    rec.tv = std::nan("");
    if (options.histogram && initial.dim() == 1) {
      const auto& spec = *options.histogram;
      const auto hist = empirical_marginal(state.z_snapshot(t), spec);
      const auto f = model.reference().grid_density(t, GridSpec{spec.nbx, spec.nbv, spec.v_max});
      rec.tv = tv_estimate(hist, f, spec);
    }
    rec.lln = options.lln ? lln_diagnostic(state.sigma_snapshot(t), model.reference(), t) : std::nan("");
    run.records.push_back(rec);
  };

  std::size_t next = 0;
  while (true) {
    const double t_next = state.time() + rng.exponential(rate);
    while (next < times.size() && times[next] < t_next) record(times[next++]);
    if (t_next > horizon) break;
    auto ev = model.jump(state, t_next, rng);
    if (options.keep_events) run.events.push_back(ev);
    if (options.check_invariants) state.check_invariants(t_next);
  }
  return run;
}

MarginalCheckReport z_marginal_exactness_check(const MarginalCheckParams& params, const Reference& reference) {
  const std::size_t n = params.n;
  const double expected_per_trial = static_cast<double>(n) * params.horizon;
  const auto trials = static_cast<std::size_t>(std::ceil(static_cast<double>(params.target_events) / expected_per_trial));
  const CouplingModel model(params.kernel, n, reference);
  const double half = 0.5 * params.horizon;

  MarginalCheckReport report;
  report.trials = trials;
  std::vector<double> ranks_coupled(n - 1, 0.0);
  std::vector<double> ranks_standalone(n - 1, 0.0);
  std::vector<double> vc_half, vc_end, vs_half, vs_end;

  ProcessParams process;
  process.kernel = params.kernel;
  process.n = n;
  process.dim = 1;
  process.horizon = params.horizon;
  process.snapshot_times = {half, params.horizon};

  for (std::size_t k = 0; k < trials; ++k) {
    Rng standalone_rng = Rng::stream(params.seed, 2 * k);
    const auto init_s = sample_initial(params.initial, n, 1, standalone_rng);
    const auto traj = simulate(process, init_s, standalone_rng);
    for (const auto& e : traj.events) ranks_standalone[e.rank - 1] += 1.0;
    report.standalone_events += traj.events.size();
    vs_half.push_back(traj.snapshots.at(0).state.velocity(0)[0]);
    vs_end.push_back(traj.snapshots.at(1).state.velocity(0)[0]);

    Rng coupled_rng = Rng::stream(params.seed, 2 * k + 1);
    const auto init_c = sample_initial(params.initial, n, 1, coupled_rng);
    CoupledState state(init_c);
    bool half_taken = false;
    while (true) {
      const double t_next = state.time() + coupled_rng.exponential(static_cast<double>(n));
      if (!half_taken && t_next > half) {
        vc_half.push_back(state.z().velocity(0)[0]);
        half_taken = true;
      }
      if (t_next > params.horizon) break;
      const auto ev = model.jump(state, t_next, coupled_rng);
      ranks_coupled[ev.rank - 1] += 1.0;
      ++report.coupled_events;
    }
    vc_end.push_back(state.z().velocity(0)[0]);
  }

  const double a = static_cast<double>(report.coupled_events);
  const double b = static_cast<double>(report.standalone_events);
  report.event_count_p = std::erfc(std::abs(a - b) / std::sqrt(a + b) / std::sqrt(2.0));
  report.rank_frequencies = stats::chi_square_two_sample(ranks_coupled, ranks_standalone);
  report.velocity_half = stats::ks_two_sample(vc_half, vs_half);
  report.velocity_end = stats::ks_two_sample(vc_end, vs_end);
  return report;
}

}  // namespace topolab
