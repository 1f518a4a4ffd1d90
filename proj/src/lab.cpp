#include "topolab/lab.hpp"

#include "topolab/errors.hpp"
#include "topolab/reference.hpp"
#include "topolab/topology.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace topolab {

namespace fs = std::filesystem;

namespace {

const char* reference_name(ReferenceKind kind) { return kind == ReferenceKind::Kinetic ? "kinetic" : "homogeneous"; }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    if (j.contains("kernel")) c.kernel = Kernel::from_json(j.at("kernel"));
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    c.trials = j.value("trials", c.trials);
    c.horizon = j.value("horizon", c.horizon);
    if (j.contains("record_times")) c.record_times = j.at("record_times").get<std::vector<double>>();
    if (j.contains("kinetic")) {
      const auto& k = j.at("kinetic");
      c.kinetic.nx = k.value("nx", c.kinetic.nx);
      c.kinetic.nv = k.value("nv", c.kinetic.nv);
      c.kinetic.v_max = k.value("v_max", c.kinetic.v_max);
      c.kinetic.dt = k.value("dt", c.kinetic.dt);
      c.kinetic.snapshot_stride = k.value("snapshot_stride", c.kinetic.snapshot_stride);
    }
    if (j.contains("initial")) c.initial = InitialLaw::from_json(j.at("initial"));
    c.histogram.v_max = c.kinetic.v_max;
    if (j.contains("histogram")) {
      const auto& h = j.at("histogram");
      c.histogram.nbx = h.value("nbx", c.histogram.nbx);
      c.histogram.nbv = h.value("nbv", c.histogram.nbv);
    }
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.threads = j.value("threads", c.threads);
    c.dim = j.value("dim", c.dim);
    const auto ref = j.value("reference", std::string("kinetic"));
    if (ref == "kinetic") {
      c.reference = ReferenceKind::Kinetic;
    } else if (ref == "homogeneous") {
      c.reference = ReferenceKind::Homogeneous;
    } else {
      throw ValidationError("config: unknown reference '" + ref + "'");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.record_times.empty()) {
    for (int k = 0; k <= 10; ++k) c.record_times.push_back(c.horizon * k / 10.0);
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"kernel", kernel.to_json()},
          {"n_values", n_values},
          {"trials", trials},
          {"horizon", horizon},
          {"record_times", record_times},
          {"kinetic",
           {{"nx", kinetic.nx},
            {"nv", kinetic.nv},
            {"v_max", kinetic.v_max},
            {"dt", kinetic.dt},
            {"snapshot_stride", kinetic.snapshot_stride}}},
          {"initial", initial.to_json()},
          {"histogram", {{"nbx", histogram.nbx}, {"nbv", histogram.nbv}}},
          {"seed", seed},
          {"output_dir", output_dir},
          {"cache_dir", cache_dir},
          {"threads", threads},
          {"dim", dim},
          {"reference", reference_name(reference)}};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (n_values.empty()) fail("n_values is empty");
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    if (n_values[k] < 2) fail("every N must be at least 2");
    if (k > 0 && n_values[k] <= n_values[k - 1]) fail("n_values must be strictly increasing");
  }
  for (std::size_t n : n_values) {
    try {
      (void)alpha(kernel, n);
    } catch (const DegenerateNormalization&) {
      fail("kernel vanishes on every rank for N = " + std::to_string(n));
    }
  }
  if (trials < 1) fail("trials must be at least 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("horizon must be positive");
  if (record_times.empty()) fail("record_times is empty");
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    if (!(record_times[k] >= 0.0 && record_times[k] <= horizon)) fail("record times must lie in [0, horizon]");
    if (k > 0 && record_times[k] <= record_times[k - 1]) fail("record_times must be strictly increasing");
  }
  if (kinetic.nx < 2 || kinetic.nv < 1) fail("kinetic grid too small");
  if (!(kinetic.v_max > 0.0)) fail("kinetic.v_max must be positive");
  if (!(kinetic.dt > 0.0 && kinetic.dt <= 1.0)) fail("kinetic.dt must lie in (0, 1]");
  if (kinetic.snapshot_stride < 1 || kinetic.snapshot_stride > 10) fail("kinetic.snapshot_stride must lie in [1, 10]");
  if (histogram.nbx < 2 || histogram.nbv < 1) fail("histogram too small");
  if (histogram.v_max != kinetic.v_max) fail("histogram and kinetic grid use different v_max");
  if (initial.velocity.support_bound() > kinetic.v_max) fail("velocity support exceeds kinetic.v_max");
  if (threads < 1) fail("threads must be at least 1");
  if (dim != 1 && dim != 2) fail("dim must be 1 or 2");
  if (reference == ReferenceKind::Kinetic) {
    if (dim != 1) fail("the kinetic reference needs dim = 1");
    if (kinetic.nx % histogram.nbx != 0 || kinetic.nv % histogram.nbv != 0) {
      fail("kinetic grid must refine the histogram bins");
    }
  } else if (initial.spatial.form != SpatialLaw::Form::Uniform) {
    fail("the homogeneous reference needs a uniform spatial law");
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json kinetic_key(const ExperimentConfig& c) {
  return {{"kernel", c.kernel.to_json()},
          {"initial", c.initial.to_json()},
          {"horizon", c.horizon},
          {"grid",
           {{"nx", c.kinetic.nx},
            {"nv", c.kinetic.nv},
            {"v_max", c.kinetic.v_max},
            {"dt", c.kinetic.dt},
            {"snapshot_stride", c.kinetic.snapshot_stride}}}};
}

std::string kinetic_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(kinetic_key(config).dump()));
  return buf;
}

std::vector<double> kinetic_snapshot_times(const ExperimentConfig& config) {
  const double spacing = config.kinetic.dt * static_cast<double>(config.kinetic.snapshot_stride);
  std::vector<double> times;
  for (std::size_t k = 0;; ++k) {
    const double t = spacing * static_cast<double>(k);
    if (t >= config.horizon - 1e-12) break;
    times.push_back(t);
  }
  times.push_back(config.horizon);
  return times;
}

namespace {

constexpr char kCacheMagic[4] = {'T', 'L', 'K', 'S'};
constexpr std::uint32_t kCacheVersion = 1;

std::optional<KineticSolution> read_cache(const fs::path& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t key_size = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&key_size), sizeof key_size);
  if (!in || !std::equal(magic, magic + 4, kCacheMagic) || version != kCacheVersion || key_size > (1u << 20)) {
    return std::nullopt;
  }
  std::string stored(key_size, '\0');
  in.read(stored.data(), static_cast<std::streamsize>(key_size));
  if (!in || stored != key) return std::nullopt;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  KineticSolution sol;
  try {
    for (std::uint64_t k = 0; k < count; ++k) sol.snapshots.push_back(read_binary(in));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return sol;
}

void write_cache(const fs::path& path, const std::string& key, const KineticSolution& sol) {
  std::ostringstream out(std::ios::binary);
  out.write(kCacheMagic, 4);
  out.write(reinterpret_cast<const char*>(&kCacheVersion), sizeof kCacheVersion);
  const std::uint64_t key_size = key.size();
  out.write(reinterpret_cast<const char*>(&key_size), sizeof key_size);
  out.write(key.data(), static_cast<std::streamsize>(key.size()));
  const std::uint64_t count = sol.snapshots.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& s : sol.snapshots) write_binary(out, s);
  write_file_atomic(path, out.str());
}

}  // namespace

KineticSolution cached_kinetic_solution(const ExperimentConfig& config, bool* cache_hit) {
  const fs::path dir = config.cache_dir.empty() ? fs::path(config.output_dir) / "cache" : fs::path(config.cache_dir);
  const std::string key = kinetic_key(config).dump();
  const fs::path path = dir / (kinetic_hash(config) + ".tlks");
  if (auto cached = read_cache(path, key)) {
    if (cache_hit) *cache_hit = true;
    return std::move(*cached);
  }
  if (cache_hit) *cache_hit = false;
  const GridSpec grid{config.kinetic.nx, config.kinetic.nv, config.kinetic.v_max};
  const auto f0 = discretize(config.initial, grid);
  const auto times = kinetic_snapshot_times(config);
  auto sol = solve(f0, config.kernel, config.horizon, config.kinetic.dt, times, config.threads);
  fs::create_directories(dir);
  write_cache(path, key, sol);
  return sol;
}

std::unique_ptr<Reference> make_reference(const ExperimentConfig& config) {
  if (config.reference == ReferenceKind::Homogeneous) {
    return std::make_unique<HomogeneousReference>(config.dim, config.initial.velocity, config.horizon);
  }
  return std::make_unique<KineticReference>(cached_kinetic_solution(config).snapshots);
}

double theorem_bound(const Kernel& kernel, std::size_t n, double t) {
  return std::exp(growth_constant(kernel) * t) / std::sqrt(static_cast<double>(n - 1));
}

RateFit fit_rate(const std::vector<AggregateRow>& aggregate) {
  if (aggregate.empty()) throw ValidationError("rate fit: no aggregate rows");
  double t_end = 0.0;
  for (const auto& row : aggregate) t_end = std::max(t_end, row.t);
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& row : aggregate) {
    if (row.t != t_end) continue;
    if (!(row.mean_d_n > 0.0)) throw ValidationError("rate fit: mean D_N vanishes at N = " + std::to_string(row.n));
    x.push_back(std::log(static_cast<double>(row.n - 1)));
    y.push_back(std::log(row.mean_d_n));
  }
  if (x.size() < 4) throw ValidationError("rate fit: needs at least four values of N");
  return {x.size(), stats::fit_line(x, y)};
}

std::vector<AggregateRow> aggregate_trials(const ExperimentConfig& config, const std::vector<TrialRow>& trials) {
  std::vector<AggregateRow> out;
  for (std::size_t n : config.n_values) {
    for (double t : config.record_times) {
      std::vector<double> values;
      for (const auto& row : trials) {
        if (row.n == n && row.t == t) values.push_back(row.d_n);
      }
      out.push_back({n, t, stats::mean(values), stats::standard_error(values), theorem_bound(config.kernel, n, t)});
    }
  }
  return out;
}

ConvergenceResult run_convergence(const ExperimentConfig& config, const Reference& reference) {
  config.validate();
  if (reference.dim() != config.dim) throw ValidationError("convergence: reference dimension mismatch");

  struct Job {
    std::size_t n_index;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  // Largest N first so long trials do not trail at the end.
  for (std::size_t a = config.n_values.size(); a-- > 0;) {
    for (std::size_t k = 0; k < config.trials; ++k) jobs.push_back({a, k});
  }
  std::vector<CouplingModel> models;
  models.reserve(config.n_values.size());
  for (std::size_t n : config.n_values) models.emplace_back(config.kernel, n, reference);

  CoupledRunOptions options;
  options.record_times = config.record_times;
  options.histogram = config.histogram;

  std::vector<std::vector<CoupledRecord>> records(config.n_values.size() * config.trials);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const auto [a, trial] = jobs[k];
      try {
        const std::size_t n = config.n_values[a];
        Rng rng = Rng::stream(config.seed ^ splitmix64(n), trial);
        const auto initial = sample_initial(config.initial, n, config.dim, rng);
        auto run = run_coupled(models[a], initial, config.horizon, options, rng);
        records[a * config.trials + trial] = std::move(run.records);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(jobs.size());
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  ConvergenceResult result;
  for (std::size_t a = 0; a < config.n_values.size(); ++a) {
    for (std::size_t k = 0; k < config.trials; ++k) {
      for (const auto& rec : records[a * config.trials + k]) {
        result.trials.push_back({config.n_values[a], k, rec.t, rec.d_n, rec.tv, rec.counts.joint, rec.counts.z_only,
                                 rec.counts.sigma_only, rec.lln, rec.rescale});
      }
    }
  }
  result.aggregate = aggregate_trials(config, result.trials);
  try {
    result.fit = fit_rate(result.aggregate);
    result.fit_status = "ok";
  } catch (const ValidationError& e) {
    result.fit_status = e.what();
  }
  return result;
}

namespace {

const char* kTrialsHeader = "# topolab trials v1";
const char* kTrialsColumns = "N,trial,t,D_N,tv_estimate,joint_count,z_only_count,sigma_only_count,lln_diag,rescale_mag";
const char* kAggregateHeader = "# topolab aggregate v1";
const char* kAggregateColumns = "N,t,mean_D_N,stderr,bound";
const char* kFitHeader = "# topolab fit v1";
const char* kFitColumns = "status,points,slope,intercept,r_squared,slope_lo,slope_hi";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void expect_header(std::istream& in, const char* header, const char* columns) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("csv: empty file");
  if (line.rfind("# topolab ", 0) != 0) throw SchemaError("csv: missing version line");
  if (line != header) throw SchemaError("csv: unsupported schema '" + line + "'");
  if (!std::getline(in, line) || line != columns) throw SchemaError("csv: unexpected column header");
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw SchemaError("csv: bad number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw SchemaError("csv: bad number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw SchemaError("csv: number out of range '" + s + "'");
  }
}

std::size_t parse_size(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw SchemaError("csv: bad count '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kTrialsHeader << '\n' << kTrialsColumns << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << r.trial << ',' << format_double(r.t) << ',' << format_double(r.d_n) << ','
        << format_double(r.tv) << ',' << r.joint << ',' << r.z_only << ',' << r.sigma_only << ','
        << format_double(r.lln) << ',' << format_double(r.rescale) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n' << kAggregateColumns << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << format_double(r.t) << ',' << format_double(r.mean_d_n) << ','
        << format_double(r.stderr_d_n) << ',' << format_double(r.bound) << '\n';
  }
}

void write_fit_csv(std::ostream& out, const ConvergenceResult& result) {
  out << kFitHeader << '\n' << kFitColumns << '\n';
  if (result.fit) {
    const auto& f = result.fit->line;
    out << "ok," << result.fit->points << ',' << format_double(f.slope) << ',' << format_double(f.intercept) << ','
        << format_double(f.r_squared) << ',' << format_double(f.slope_lo) << ',' << format_double(f.slope_hi) << '\n';
  } else {
    std::string status = result.fit_status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << '"' << status << "\",0,nan,nan,nan,nan,nan\n";
  }
}

std::vector<TrialRow> read_trials_csv(std::istream& in) {
  expect_header(in, kTrialsHeader, kTrialsColumns);
  std::vector<TrialRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 10) throw SchemaError("trials csv: expected 10 columns");
    rows.push_back({parse_size(c[0]), parse_size(c[1]), parse_double(c[2]), parse_double(c[3]), parse_double(c[4]),
                    parse_size(c[5]), parse_size(c[6]), parse_size(c[7]), parse_double(c[8]), parse_double(c[9])});
  }
  return rows;
}

std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  expect_header(in, kAggregateHeader, kAggregateColumns);
  std::vector<AggregateRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 5) throw SchemaError("aggregate csv: expected 5 columns");
    rows.push_back({parse_size(c[0]), parse_double(c[1]), parse_double(c[2]), parse_double(c[3]), parse_double(c[4])});
  }
  return rows;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void write_convergence(const fs::path& dir, const ConvergenceResult& result) {
  std::ostringstream trials;
  write_trials_csv(trials, result.trials);
  std::ostringstream aggregate;
  write_aggregate_csv(aggregate, result.aggregate);
  std::ostringstream fit;
  write_fit_csv(fit, result);
  write_file_atomic(dir / "trials.csv", trials.str());
  write_file_atomic(dir / "aggregate.csv", aggregate.str());
  write_file_atomic(dir / "fit.csv", fit.str());
}

}  // namespace topolab
