#include "topolab/kinetic.hpp"

#include "topolab/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace topolab {

static_assert(std::endian::native == std::endian::little, "binary snapshot I/O assumes a little-endian host");

GridDensity::GridDensity(GridSpec spec, double t) : GridDensity(spec, t, std::vector<double>(spec.nx * spec.nv, 0.0)) {}

GridDensity::GridDensity(GridSpec spec, double t, std::vector<double> values)
    : spec_(spec), t_(t), values_(std::move(values)) {
  if (spec.nx < 2 || spec.nv < 1 || !(spec.v_max > 0.0)) throw ValidationError("grid: need nx >= 2, nv >= 1, v_max > 0");
  if (values_.size() != spec.nx * spec.nv) throw ValidationError("grid: value count does not match nx * nv");
}

double GridDensity::total_mass() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * dx() * dv();
}

GridDensity discretize(const InitialLaw& law, const GridSpec& spec) {
  GridDensity f(spec, 0.0);
  std::vector<double> g(spec.nv);
  double g_total = 0.0;
  for (std::size_t iv = 0; iv < spec.nv; ++iv) {
    const double lo = -spec.v_max + static_cast<double>(iv) * f.dv();
    const double hi = iv + 1 == spec.nv ? spec.v_max + 1e-12 : lo + f.dv();
    g[iv] = law.velocity.mass(lo, hi);
    g_total += g[iv];
  }
  if (std::abs(g_total - 1.0) > 1e-12) throw ValidationError("discretize: velocity law has mass outside the grid");
  for (std::size_t ix = 0; ix < spec.nx; ++ix) {
    const double rho = (law.spatial.cdf((ix + 1) * f.dx()) - law.spatial.cdf(ix * f.dx())) / f.dx();
    for (std::size_t iv = 0; iv < spec.nv; ++iv) f.at(ix, iv) = rho * g[iv] / f.dv();
  }
  return f;
}

std::vector<double> density(const GridDensity& f) {
  std::vector<double> rho(f.nx(), 0.0);
  for (std::size_t ix = 0; ix < f.nx(); ++ix) {
    double sum = 0.0;
    for (double value : f.row(ix)) sum += value;
    rho[ix] = sum * f.dv();
  }
  return rho;
}

MassFunction::MassFunction(std::span<const double> rho, double dx) : dx_(dx), rho_(rho.begin(), rho.end()) {
  prefix_.assign(rho.size() + 1, 0.0);
  for (std::size_t k = 0; k < rho.size(); ++k) prefix_[k + 1] = prefix_[k] + rho[k] * dx;
}

double MassFunction::cumulative(double y) const {
  const double whole = std::floor(y);
  const double frac = y - whole;
  const std::size_t n = rho_.size();
  auto cell = static_cast<std::size_t>(frac / dx_);
  if (cell >= n) cell = n - 1;
  const double within = prefix_[cell] + rho_[cell] * (frac - static_cast<double>(cell) * dx_);
  return whole * total() + within;
}

double MassFunction::ball_mass(double center, double radius) const {
  if (radius <= 0.0) return 0.0;
  if (radius >= 0.5) return total();
  return std::max(0.0, cumulative(center + radius) - cumulative(center - radius));
}

namespace {

// K(m(x, k dx)) for the cell-centre distances k = 0..nx/2 of x-cell ix.
void kernel_profile(const MassFunction& mass, const Kernel& kernel, std::size_t ix, double dx, std::vector<double>& out) {
  const std::size_t half = mass.cells() / 2;
  out.resize(half + 1);
  const double center = (static_cast<double>(ix) + 0.5) * dx;
  for (std::size_t k = 0; k <= half; ++k) out[k] = kernel(mass.ball_mass(center, static_cast<double>(k) * dx));
}

template <typename Body>
void parallel_rows(std::size_t rows, unsigned threads, Body body) {
  if (threads <= 1 || rows < 2) {
    body(std::size_t{0}, rows);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, rows);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = rows * w / workers;
    const std::size_t end = rows * (w + 1) / workers;
    pool.emplace_back([=] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

GridDensity gain(const GridDensity& f, const Kernel& kernel, unsigned threads, double quadrature_scale) {
  const std::size_t nx = f.nx();
  const std::size_t nv = f.nv();
  const auto rho = density(f);
  const MassFunction mass(rho, f.dx());
  const double weight = f.dx() * quadrature_scale;
  GridDensity g(f.spec(), f.time());

  parallel_rows(nx, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> profile;
    std::vector<double> acc(nv);
    for (std::size_t ix = begin; ix < end; ++ix) {
      kernel_profile(mass, kernel, ix, f.dx(), profile);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t iy = 0; iy < nx; ++iy) {
        const std::size_t gap = iy > ix ? iy - ix : ix - iy;
        const double w = profile[std::min(gap, nx - gap)];
        if (w == 0.0) continue;
        const auto source = f.row(iy);
        for (std::size_t iv = 0; iv < nv; ++iv) acc[iv] += w * source[iv];
      }
      const double scale = rho[ix] * weight;
      for (std::size_t iv = 0; iv < nv; ++iv) g.at(ix, iv) = scale * acc[iv];
    }
  });
  return g;
}

std::vector<double> coarea_integral(const GridDensity& f, const Kernel& kernel, double quadrature_scale) {
  const std::size_t nx = f.nx();
  const auto rho = density(f);
  const MassFunction mass(rho, f.dx());
  std::vector<double> out(nx);
  std::vector<double> profile;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    kernel_profile(mass, kernel, ix, f.dx(), profile);
    double sum = 0.0;
    for (std::size_t iy = 0; iy < nx; ++iy) {
      const std::size_t gap = iy > ix ? iy - ix : ix - iy;
      sum += profile[std::min(gap, nx - gap)] * rho[iy];
    }
    out[ix] = sum * f.dx() * quadrature_scale;
  }
  return out;
}

std::vector<double> coarea_check(const GridDensity& f, const Kernel& kernel, double quadrature_scale) {
  auto out = coarea_integral(f, kernel, quadrature_scale);
  for (double& r : out) r = std::abs(r - 1.0);
  return out;
}

void transport(GridDensity& f, double tau) {
  const std::size_t nx = f.nx();
  const std::size_t nv = f.nv();
  std::vector<double> column(nx);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    // new[ix] = old at x_ix - v tau, i.e. at fractional cell ix - shift.
    const double back = -f.v_center(iv) * tau / f.dx();
    const double base = std::floor(back);
    const double theta = back - base;
    const auto offset = static_cast<long long>(base);
    const auto n = static_cast<long long>(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) column[ix] = f.at(ix, iv);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const long long i0 = ((static_cast<long long>(ix) + offset) % n + n) % n;
      const long long i1 = (i0 + 1) % n;
      f.at(ix, iv) = (1.0 - theta) * column[static_cast<std::size_t>(i0)] + theta * column[static_cast<std::size_t>(i1)];
    }
  }
}

StepReport step(GridDensity& f, const Kernel& kernel, double dt, unsigned threads) {
  if (!(dt > 0.0 && dt <= 1.0)) throw ValidationError("step: dt must lie in (0, 1]");
  transport(f, 0.5 * dt);
  const GridDensity g = gain(f, kernel, threads);
  auto& values = f.values();
  const auto& gained = g.values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    double next = values[k] + dt * (gained[k] - values[k]);
    if (next < 0.0) {
      if (next < -1e-12) {
        std::ostringstream msg;
        msg << "step: negative density " << next << " after the collision substep";
        throw SolverInstability(msg.str());
      }
      next = 0.0;
    }
    values[k] = next;
  }
  StepReport report;
  report.mass_before_renormalization = f.total_mass();
  report.renormalization = 1.0 / report.mass_before_renormalization;
  for (double& v : values) v *= report.renormalization;
  transport(f, 0.5 * dt);
  f.set_time(f.time() + dt);
  return report;
}

KineticSolution solve(const GridDensity& f0, const Kernel& kernel, double horizon, double dt,
                      std::span<const double> snapshot_times, unsigned threads) {
  if (!(horizon >= 0.0)) throw ValidationError("solve: horizon must be non-negative");
  if (!(dt > 0.0 && dt <= 1.0)) throw ValidationError("solve: dt must lie in (0, 1]");
  std::vector<double> times(snapshot_times.begin(), snapshot_times.end());
  for (double s : times) {
    if (s < 0.0 || s > horizon) throw ValidationError("solve: snapshot time outside [0, T]");
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  KineticSolution out;
  GridDensity f = f0;
  double t = f0.time();
  for (double target : times) {
    const double span = target - t;
    if (span > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
      const double h = span / static_cast<double>(steps);
      for (std::size_t k = 0; k < steps; ++k) out.steps.push_back(step(f, kernel, h, threads));
    }
    t = target;
    f.set_time(target);
    out.snapshots.push_back(f);
  }
  return out;
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw SchemaError("grid density: truncated binary input");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_binary(std::ostream& out, const GridDensity& f) {
  out.write("TLGD", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, f.nx());
  put<std::uint64_t>(out, f.nv());
  put<double>(out, f.spec().v_max);
  put<double>(out, f.time());
  for (double v : f.values()) put<double>(out, v);
}

GridDensity read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TLGD", 4) != 0) throw SchemaError("grid density: bad magic");
  if (get<std::uint32_t>(in) != 1) throw SchemaError("grid density: unsupported version");
  GridSpec spec;
  spec.nx = get<std::uint64_t>(in);
  spec.nv = get<std::uint64_t>(in);
  spec.v_max = get<double>(in);
  const double t = get<double>(in);
  if (spec.nx == 0 || spec.nv == 0 || spec.nx * spec.nv > (std::size_t{1} << 32)) throw SchemaError("grid density: bad size");
  std::vector<double> values(spec.nx * spec.nv);
  for (double& v : values) v = get<double>(in);
  return GridDensity(spec, t, std::move(values));
}

void write_csv(std::ostream& out, const GridDensity& f) {
  char buf[64];
  out << "# topolab grid v1\nnx,nv,v_max,t\n" << f.nx() << ',' << f.nv() << ',';
  std::snprintf(buf, sizeof buf, "%.17g,", f.spec().v_max);
  out << buf;
  std::snprintf(buf, sizeof buf, "%.17g", f.time());
  out << buf << '\n';
  for (std::size_t ix = 0; ix < f.nx(); ++ix) {
    for (std::size_t iv = 0; iv < f.nv(); ++iv) {
      std::snprintf(buf, sizeof buf, "%.17g", f.at(ix, iv));
      out << (iv ? "," : "") << buf;
    }
    out << '\n';
  }
}

GridDensity read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# topolab ", 0) != 0) throw SchemaError("grid density csv: missing version line");
  if (line != "# topolab grid v1") throw SchemaError("grid density csv: unsupported schema '" + line + "'");
  if (!std::getline(in, line) || line != "nx,nv,v_max,t") throw SchemaError("grid density csv: bad header");
  if (!std::getline(in, line)) throw SchemaError("grid density csv: missing sizes");
  GridSpec spec;
  double t = 0.0;
  char c1, c2, c3;
  std::istringstream head(line);
  if (!(head >> spec.nx >> c1 >> spec.nv >> c2 >> spec.v_max >> c3 >> t)) throw SchemaError("grid density csv: bad sizes");
  std::vector<double> values;
  values.reserve(spec.nx * spec.nv);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
  }
  if (values.size() != spec.nx * spec.nv) throw SchemaError("grid density csv: value count mismatch");
  return GridDensity(spec, t, std::move(values));
}

std::string snapshot_file_name(double t, const std::string& extension) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "f_t%.6f.%s", t, extension.c_str());
  return buf;
}

}  // namespace topolab
