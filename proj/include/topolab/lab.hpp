#pragma once

// Experiment orchestration: JSON configuration, the convergence study, the
// kinetic disk cache and the versioned CSV schemas.

#include "topolab/coupling.hpp"
#include "topolab/initial_law.hpp"
#include "topolab/kernel.hpp"
#include "topolab/kinetic.hpp"
#include "topolab/stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace topolab {

struct KineticParams {
  std::size_t nx = 256;
  std::size_t nv = 32;
  double v_max = 1.0;
  double dt = 0.005;
  /// Solver steps between stored snapshots (at most 10).
  std::size_t snapshot_stride = 10;
};

enum class ReferenceKind { Kinetic, Homogeneous };

struct ExperimentConfig {
  Kernel kernel = Kernel::linear();
  std::vector<std::size_t> n_values{64, 128, 256, 512, 1024, 2048};
  std::size_t trials = 200;
  double horizon = 1.0;
  /// Times at which D_N is recorded; defaults to 11 equispaced points.
  std::vector<double> record_times;
  KineticParams kinetic;
  InitialLaw initial;
  HistogramSpec histogram;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  /// Kinetic cache location; empty means <output_dir>/cache.
  std::string cache_dir;
  unsigned threads = 1;
  int dim = 1;
  ReferenceKind reference = ReferenceKind::Kinetic;

  /// Throws ValidationError on malformed or inconsistent input.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Subsection of the configuration that determines the kinetic solution.
nlohmann::json kinetic_key(const ExperimentConfig& config);
std::string kinetic_hash(const ExperimentConfig& config);

/// Snapshot times of the kinetic solve: every snapshot_stride steps up to
/// the horizon, plus the horizon itself.
std::vector<double> kinetic_snapshot_times(const ExperimentConfig& config);

/// Solves the kinetic equation for the configuration, reusing
/// <cache_dir>/<hash>.tlks when present.
KineticSolution cached_kinetic_solution(const ExperimentConfig& config, bool* cache_hit = nullptr);

/// Reference for the configuration (kinetic solution or homogeneous state).
std::unique_ptr<Reference> make_reference(const ExperimentConfig& config);

struct TrialRow {
  std::size_t n = 0;
  std::size_t trial = 0;
  double t = 0.0;
  double d_n = 0.0;
  double tv = 0.0;
  std::size_t joint = 0;
  std::size_t z_only = 0;
  std::size_t sigma_only = 0;
  double lln = 0.0;
  double rescale = 0.0;
};

struct AggregateRow {
  std::size_t n = 0;
  double t = 0.0;
  double mean_d_n = 0.0;
  double stderr_d_n = 0.0;
  double bound = 0.0;
};

struct RateFit {
  std::size_t points = 0;
  stats::LineFit line;
};

/// e^{C_K t}/sqrt(n-1).
double theorem_bound(const Kernel& kernel, std::size_t n, double t);

/// Log-log fit of mean D_N(T) against N-1 at the largest recorded time.
/// Throws ValidationError with fewer than four values of N or a zero mean.
RateFit fit_rate(const std::vector<AggregateRow>& aggregate);

struct ConvergenceResult {
  std::vector<TrialRow> trials;
  std::vector<AggregateRow> aggregate;
  std::optional<RateFit> fit;
  /// Reason when the fit is absent.
  std::string fit_status;
};

/// Runs the coupled simulator for every N against one shared reference.
/// Output is independent of the thread count.
ConvergenceResult run_convergence(const ExperimentConfig& config, const Reference& reference);

std::vector<AggregateRow> aggregate_trials(const ExperimentConfig& config, const std::vector<TrialRow>& trials);

/// CSV schemas. Every file starts with "# topolab <schema> v1".
void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_fit_csv(std::ostream& out, const ConvergenceResult& result);
/// Throw SchemaError on an unknown version or header.
std::vector<TrialRow> read_trials_csv(std::istream& in);
std::vector<AggregateRow> read_aggregate_csv(std::istream& in);

/// Writes trials.csv, aggregate.csv and fit.csv into `dir`.
void write_convergence(const std::filesystem::path& dir, const ConvergenceResult& result);

/// Writes `content` to `path` through a temporary file, so a failure never
/// leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace topolab
