#include "topolab/particle_system.hpp"

#include "topolab/errors.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace topolab {

FreeStream::FreeStream(const Configuration& initial, bool frozen)
    : dim_(initial.dim()),
      frozen_(frozen),
      anchor_(initial.positions().begin(), initial.positions().end()),
      t0_(initial.size(), 0.0),
      velocity_(initial.velocities().begin(), initial.velocities().end()) {}

double FreeStream::coordinate(std::size_t i, int k, double t) const {
  const std::size_t idx = i * dim_ + k;
  if (frozen_) return anchor_[idx];
  return wrap_unit(anchor_[idx] + velocity_[idx] * (t - t0_[i]));
}

void FreeStream::position(std::size_t i, double t, std::span<double> out) const {
  for (int k = 0; k < dim_; ++k) out[k] = coordinate(i, k, t);
}

void FreeStream::positions(double t, std::vector<double>& out) const {
  out.resize(anchor_.size());
  for (std::size_t i = 0; i < t0_.size(); ++i) {
    for (int k = 0; k < dim_; ++k) out[i * dim_ + k] = coordinate(i, k, t);
  }
}

void FreeStream::set_velocity(std::size_t i, double t, std::span<const double> v) {
  for (int k = 0; k < dim_; ++k) {
    anchor_[i * dim_ + k] = coordinate(i, k, t);
    velocity_[i * dim_ + k] = v[k];
  }
  t0_[i] = t;
}

Configuration FreeStream::snapshot(double t) const {
  std::vector<double> x;
  positions(t, x);
  return Configuration(dim_, std::move(x), velocity_);
}

Trajectory simulate(const ProcessParams& params, const Configuration& initial) {
  Rng rng(params.seed);
  return simulate(params, initial, rng);
}

Trajectory simulate(const ProcessParams& params, const Configuration& initial, Rng& rng) {
  if (initial.size() != params.n) throw ValidationError("simulate: initial configuration has the wrong size");
  if (params.n < 2) throw ValidationError("simulate: n must be at least 2");
  if (initial.dim() != params.dim) throw ValidationError("simulate: dimension mismatch");
  if (!(params.horizon >= 0.0)) throw ValidationError("simulate: horizon must be non-negative");
  std::vector<double> pending = params.snapshot_times;
  std::sort(pending.begin(), pending.end());
  for (double s : pending) {
    if (s < 0.0 || s > params.horizon) throw ValidationError("simulate: snapshot time outside [0, horizon]");
  }

  const RankLaw law(params.kernel, params.n);
  FreeStream world(initial, params.frozen_positions);
  Trajectory out;
  std::vector<double> scratch;
  std::vector<double> adopted(params.dim);
  std::size_t next_snapshot = 0;
  double t = 0.0;
  const double rate = static_cast<double>(params.n);

  while (true) {
    const double t_next = t + rng.exponential(rate);
    while (next_snapshot < pending.size() && pending[next_snapshot] < t_next) {
      out.snapshots.push_back({pending[next_snapshot], world.snapshot(pending[next_snapshot])});
      ++next_snapshot;
    }
    if (t_next > params.horizon) break;
    t = t_next;
    const std::size_t i = rng.index(params.n);
    const std::size_t h = law.sample(rng.uniform());
    world.positions(t, scratch);
    const std::size_t j = nth_closest(scratch, params.dim, i, h);
    std::copy(world.velocity(j).begin(), world.velocity(j).end(), adopted.begin());
    world.set_velocity(i, t, adopted);
    out.events.push_back({t, i, j, h});
  }
  out.final_state = world.snapshot(params.horizon);
  return out;
}

void write_events_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "# topolab events v1\nt,i,j\n";
  char buf[64];
  for (const auto& e : trajectory.events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time);
    out << buf << ',' << e.focal << ',' << e.partner << '\n';
  }
}

void write_snapshots_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "# topolab snapshots v1\n";
  if (trajectory.snapshots.empty()) {
    out << "t,particle,x,v\n";
    return;
  }
  const int dim = trajectory.snapshots.front().state.dim();
  out << "t,particle";
  for (int k = 0; k < dim; ++k) out << ",x" << k;
  for (int k = 0; k < dim; ++k) out << ",v" << k;
  out << '\n';
  char buf[64];
  for (const auto& snap : trajectory.snapshots) {
    for (std::size_t i = 0; i < snap.state.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", snap.time);
      out << buf << ',' << i;
      for (double x : snap.state.position(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << ',' << buf;
      }
      for (double v : snap.state.velocity(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

namespace {

std::size_t label_of(double v, std::span<const double> alphabet) {
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    if (alphabet[k] == v) return k;
  }
  throw ValidationError("velocity not in the label alphabet");
}

}  // namespace

std::size_t label_state(const Configuration& config, std::span<const double> alphabet) {
  if (config.dim() != 1) throw ValidationError("label_state: only d = 1 is supported");
  std::size_t s = 0;
  for (std::size_t i = 0; i < config.size(); ++i) s = s * alphabet.size() + label_of(config.velocity(i)[0], alphabet);
  return s;
}

std::vector<double> master_equation_law(const Kernel& kernel, const Configuration& frozen,
                                        std::span<const double> alphabet, double t) {
  const std::size_t n = frozen.size();
  const std::size_t a = alphabet.size();
  if (n < 2 || n > 4 || a < 1 || a > 4) {
    throw ValidationError("master_equation_law: state space limited to n <= 4 particles and <= 4 labels");
  }
  if (t < 0.0) throw ValidationError("master_equation_law: negative time");
  std::size_t states = 1;
  for (std::size_t i = 0; i < n; ++i) states *= a;

  std::vector<std::vector<double>> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = transition_probs(frozen, kernel, i);

  // Generator on label states: the ordered pair (i, j) fires at rate
  // N * (1/N) * pi_{i,j} and copies label j onto i.
  Eigen::MatrixXd generator = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  std::vector<std::size_t> digits(n);
  for (std::size_t s = 0; s < states; ++s) {
    std::size_t rem = s;
    for (std::size_t i = n; i-- > 0;) {
      digits[i] = rem % a;
      rem /= a;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || digits[i] == digits[j] || pi[i][j] == 0.0) continue;
        std::size_t target = 0;
        for (std::size_t k = 0; k < n; ++k) target = target * a + (k == i ? digits[j] : digits[k]);
        generator(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(target)) += pi[i][j];
        generator(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) -= pi[i][j];
      }
    }
  }
  const Eigen::MatrixXd propagator = (generator * t).exp();
  const auto start = static_cast<Eigen::Index>(label_state(frozen, alphabet));
  std::vector<double> law(states);
  for (std::size_t s = 0; s < states; ++s) law[s] = std::max(0.0, propagator(start, static_cast<Eigen::Index>(s)));
  return law;
}

std::vector<double> empirical_marginal(const Configuration& state, const HistogramSpec& spec) {
  if (state.dim() != 1) throw ValidationError("empirical_marginal: only d = 1 is supported");
  if (spec.nbx == 0 || spec.nbv == 0 || !(spec.v_max > 0.0)) throw ValidationError("empirical_marginal: bad binning");
  std::vector<double> hist(spec.nbx * spec.nbv, 0.0);
  const double weight = 1.0 / static_cast<double>(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto bx = std::min(static_cast<std::size_t>(state.position(i)[0] * spec.nbx), spec.nbx - 1);
    const double scaled = (state.velocity(i)[0] + spec.v_max) / (2.0 * spec.v_max) * spec.nbv;
    const auto bv = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(spec.nbv - 1)));
    hist[bx * spec.nbv + bv] += weight;
  }
  return hist;
}

std::vector<double> empirical_marginal(const Trajectory& trajectory, double t, const HistogramSpec& spec) {
  for (const auto& snap : trajectory.snapshots) {
    if (snap.time == t) return empirical_marginal(snap.state, spec);
  }
  throw DomainError("empirical_marginal: no snapshot stored at the requested time");
}

}  // namespace topolab
