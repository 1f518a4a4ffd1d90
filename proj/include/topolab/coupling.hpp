#pragma once

// Coupled process (Z_N, Sigma_N): the particle system and a reference
// system driven by the kinetic solution, jumping jointly at rate
// lambda_{i,j} = min(pi^N_{i,j}, pi^rho_{i,j}) and one-sidedly otherwise.
//
// The Z-component is an exact copy in law of the particle system: at every
// event the partner is drawn from pi^N before the coupling decision.

#include "topolab/configuration.hpp"
#include "topolab/kernel.hpp"
#include "topolab/particle_system.hpp"
#include "topolab/reference.hpp"
#include "topolab/rng.hpp"
#include "topolab/stats.hpp"
#include "topolab/topology.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace topolab {

/// lambda = min(pi^N, pi^rho).
inline double joint_rate(double pi_n, double pi_rho) { return pi_n < pi_rho ? pi_n : pi_rho; }

struct CouplingCounts {
  std::size_t joint = 0;
  std::size_t z_only = 0;
  /// Sigma jumps without Z (one per z_only event): residual atoms + grid draws.
  std::size_t sigma_only = 0;
  std::size_t sigma_atom = 0;
  /// Sigma velocities drawn from the kinetic density (the E-term top-up).
  std::size_t e_term = 0;
  /// Coupled pairs broken by a joint jump copying from a decoupled partner.
  std::size_t decoupled_by_partner = 0;
  /// Coupled pairs broken by a one-sided jump.
  std::size_t decoupled_one_sided = 0;
  /// Residual-branch bookkeeping: sum of (1 - scale) of the residual-atom
  /// rescaling and sum of |m_i - 1| with m_i = sum_j pi^rho_{i,j}.
  double rescale_sum = 0.0;
  double rescale_max = 0.0;
  double row_mass_deviation_sum = 0.0;
  std::size_t residual_events = 0;

  std::size_t z_events() const { return joint + z_only; }
  double mean_rescale() const { return residual_events ? rescale_sum / static_cast<double>(residual_events) : 0.0; }
};

/// Paired configurations with the delta initial coupling Sigma(0) = Z(0).
class CoupledState {
 public:
  CoupledState() = default;
  explicit CoupledState(const Configuration& initial);

  std::size_t size() const { return coupled_.size(); }
  double time() const { return t_; }
  const FreeStream& z() const { return z_; }
  const FreeStream& sigma() const { return sigma_; }
  bool coupled(std::size_t i) const { return coupled_[i] != 0; }
  std::size_t decoupled_count() const { return decoupled_; }
  const CouplingCounts& counts() const { return counts_; }

  Configuration z_snapshot(double t) const { return z_.snapshot(t); }
  Configuration sigma_snapshot(double t) const { return sigma_.snapshot(t); }

  /// Throws InvariantViolation if a coupled pair differs in position or
  /// velocity at time t.
  void check_invariants(double t) const;

 private:
  friend class CouplingModel;
  FreeStream z_;
  FreeStream sigma_;
  std::vector<char> coupled_;
  std::size_t decoupled_ = 0;
  double t_ = 0.0;
  CouplingCounts counts_;
};

enum class SigmaMove { Joint, ResidualAtom, KineticDraw };

struct CoupledEvent {
  double time;
  std::size_t focal;
  std::size_t partner;
  std::size_t rank;
  SigmaMove sigma_move;
  /// Sigma partner for Joint and ResidualAtom moves.
  std::size_t sigma_partner;
};

/// pi^rho_{i,.} = alpha_N K(M_rho(B_{|y_i - y_j|}(y_i))) on the Sigma
/// positions, with its row sum.
struct ReferenceRates {
  std::vector<double> values;
  double row_sum = 0.0;
};

class CouplingModel {
 public:
  /// `reference` must outlive the model.
  CouplingModel(Kernel kernel, std::size_t n, const Reference& reference);

  const Kernel& kernel() const { return kernel_; }
  const RankLaw& rank_law() const { return law_; }
  const Reference& reference() const { return reference_; }

  ReferenceRates reference_rates(const CoupledState& state, std::size_t focal, double t) const;

  /// Performs the jump of an event of the rate-N clock at time t (>= the
  /// state's time).
  CoupledEvent jump(CoupledState& state, double t, Rng& rng) const;

  /// Draws the next clock ring and jumps there.
  CoupledEvent event(CoupledState& state, Rng& rng) const;

 private:
  Kernel kernel_;
  RankLaw law_;
  const Reference& reference_;
};

/// (1/n) #{i : pair i decoupled}.
double d_n(const CoupledState& state);

/// Half L1 distance between two histograms.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// Integrates a grid density over the histogram bins. The grid must refine
/// the bins (nx % nbx == 0, nv % nbv == 0) on the same velocity range.
std::vector<double> bin_density(const GridDensity& f, const HistogramSpec& spec);

/// Half L1 distance between a particle histogram and the binned density.
double tv_estimate(std::span<const double> histogram, const GridDensity& f, const HistogramSpec& spec);

/// Mean over j != focal of |r(focal, j) - M_rho(B_{|y_focal - y_j|}(y_focal))|.
double lln_diagnostic(const Configuration& sigma, const Reference& reference, double t, std::size_t focal = 0);

/// One line of the per-trial record.
struct CoupledRecord {
  double t = 0.0;
  double d_n = 0.0;
  double tv = 0.0;
  CouplingCounts counts;
  double lln = 0.0;
  double rescale = 0.0;
};

struct CoupledRunOptions {
  std::vector<double> record_times;
  /// Histogram for the TV estimate; skipped (NaN) when absent or d = 2.
  std::optional<HistogramSpec> histogram;
  bool lln = true;
  /// Check the pair invariants after every event (slow; for tests).
  bool check_invariants = false;
  bool keep_events = false;
};

struct CoupledRun {
  std::vector<CoupledRecord> records;
  std::vector<CoupledEvent> events;
  CoupledState final_state;
};

/// Simulates one coupled trajectory on [0, horizon] from the delta coupling.
CoupledRun run_coupled(const CouplingModel& model, const Configuration& initial, double horizon,
                       const CoupledRunOptions& options, Rng& rng);

struct MarginalCheckParams {
  Kernel kernel = Kernel::linear();
  std::size_t n = 32;
  double horizon = 1.0;
  InitialLaw initial;
  /// Total number of Z events to collect in each simulator.
  std::size_t target_events = 100000;
  std::uint64_t seed = 1;
};

struct MarginalCheckReport {
  std::size_t trials = 0;
  std::size_t coupled_events = 0;
  std::size_t standalone_events = 0;
  /// Two-sided z-test of equal Poisson event rates.
  double event_count_p = 1.0;
  stats::TestResult rank_frequencies;
  stats::TestResult velocity_half;
  stats::TestResult velocity_end;

  bool passed(double significance) const {
    return event_count_p > significance && rank_frequencies.p_value > significance &&
           velocity_half.p_value > significance && velocity_end.p_value > significance;
  }
};

/// Compares the Z-component of the coupled simulator with the standalone
/// particle simulator: event counts, partner-rank frequencies and particle
/// 0's velocity at horizon/2 and horizon (one sample per trial).
MarginalCheckReport z_marginal_exactness_check(const MarginalCheckParams& params, const Reference& reference);

}  // namespace topolab
