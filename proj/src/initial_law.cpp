#include "topolab/initial_law.hpp"

#include "topolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace topolab {

namespace {

// Bimodal preset: two sin^2 bumps of width 0.3 starting at 0.05 and 0.55,
// empty in between.
constexpr double kBumpWidth = 0.3;
constexpr double kBumpStarts[] = {0.05, 0.55};
constexpr double kBumpHeight = 1.0 / kBumpWidth;

double bump_primitive(double s) {
  // int_0^s sin^2(pi u / w) du
  return 0.5 * s - kBumpWidth / (4.0 * std::numbers::pi) * std::sin(2.0 * std::numbers::pi * s / kBumpWidth);
}

}  // namespace

double SpatialLaw::density(double x) const {
  x = wrap_unit(x);
  switch (form) {
    case Form::Uniform:
      return 1.0;
    case Form::Cosine:
      return 1.0 + amplitude * std::cos(2.0 * std::numbers::pi * x);
    case Form::Bimodal:
      for (double a : kBumpStarts) {
        if (x >= a && x <= a + kBumpWidth) {
          const double s = std::sin(std::numbers::pi * (x - a) / kBumpWidth);
          return kBumpHeight * s * s;
        }
      }
      return 0.0;
  }
  return 0.0;
}

double SpatialLaw::cdf(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  switch (form) {
    case Form::Uniform:
      return x;
    case Form::Cosine:
      return x + amplitude * std::sin(2.0 * std::numbers::pi * x) / (2.0 * std::numbers::pi);
    case Form::Bimodal: {
      double acc = 0.0;
      for (double a : kBumpStarts) acc += kBumpHeight * bump_primitive(std::clamp(x - a, 0.0, kBumpWidth));
      return acc;
    }
  }
  return x;
}

double SpatialLaw::sup() const {
  switch (form) {
    case Form::Uniform:
      return 1.0;
    case Form::Cosine:
      return 1.0 + std::abs(amplitude);
    case Form::Bimodal:
      return kBumpHeight;
  }
  return 1.0;
}

SpatialLaw SpatialLaw::from_json(const nlohmann::json& j) {
  SpatialLaw law;
  const auto form = j.value("form", std::string("uniform"));
  if (form == "uniform") {
    law.form = Form::Uniform;
  } else if (form == "cosine") {
    law.form = Form::Cosine;
    law.amplitude = j.value("amplitude", 0.5);
    if (!(std::abs(law.amplitude) < 1.0)) throw ValidationError("spatial law: cosine amplitude must be below 1");
  } else if (form == "bimodal") {
    law.form = Form::Bimodal;
  } else {
    throw ValidationError("spatial law: unknown form '" + form + "'");
  }
  return law;
}

nlohmann::json SpatialLaw::to_json() const {
  switch (form) {
    case Form::Uniform:
      return {{"form", "uniform"}};
    case Form::Cosine:
      return {{"form", "cosine"}, {"amplitude", amplitude}};
    case Form::Bimodal:
      return {{"form", "bimodal"}};
  }
  return {};
}

double VelocityLaw::sample(Rng& rng) const {
  switch (form) {
    case Form::TwoPoint:
      return rng.uniform() < 0.5 ? -half_width : half_width;
    case Form::Uniform:
      return half_width * (2.0 * rng.uniform() - 1.0);
    case Form::Discrete: {
      double total = 0.0;
      for (double w : weights) total += w;
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        acc += weights[k];
        if (u < acc) return atoms[k];
      }
      return atoms.back();
    }
  }
  return 0.0;
}

double VelocityLaw::mass(double lo, double hi) const {
  auto atom_mass = [&](double atom, double w) { return (atom >= lo && atom < hi) ? w : 0.0; };
  switch (form) {
    case Form::TwoPoint:
      return atom_mass(-half_width, 0.5) + atom_mass(half_width, 0.5);
    case Form::Uniform: {
      const double overlap = std::min(hi, half_width) - std::max(lo, -half_width);
      return overlap > 0.0 ? overlap / (2.0 * half_width) : 0.0;
    }
    case Form::Discrete: {
      double total = 0.0;
      for (double w : weights) total += w;
      double m = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) m += atom_mass(atoms[k], weights[k] / total);
      return m;
    }
  }
  return 0.0;
}

double VelocityLaw::support_bound() const {
  if (form != Form::Discrete) return half_width;
  double bound = 0.0;
  for (double a : atoms) bound = std::max(bound, std::abs(a));
  return bound;
}

VelocityLaw VelocityLaw::from_json(const nlohmann::json& j) {
  VelocityLaw law;
  const auto form = j.value("form", std::string("uniform"));
  law.half_width = j.value("half_width", 1.0);
  if (form == "two_point") {
    law.form = Form::TwoPoint;
  } else if (form == "uniform") {
    law.form = Form::Uniform;
  } else if (form == "discrete") {
    law.form = Form::Discrete;
    law.atoms = j.at("atoms").get<std::vector<double>>();
    law.weights = j.contains("weights") ? j.at("weights").get<std::vector<double>>()
                                        : std::vector<double>(law.atoms.size(), 1.0);
    if (law.atoms.empty() || law.weights.size() != law.atoms.size()) {
      throw ValidationError("velocity law: atoms and weights must be non-empty and of equal length");
    }
    if (std::any_of(law.weights.begin(), law.weights.end(), [](double w) { return !(w >= 0.0); })) {
      throw ValidationError("velocity law: weights must be non-negative");
    }
  } else {
    throw ValidationError("velocity law: unknown form '" + form + "'");
  }
  if (law.form != Form::Discrete && !(law.half_width > 0.0)) {
    throw ValidationError("velocity law: half_width must be positive");
  }
  return law;
}

nlohmann::json VelocityLaw::to_json() const {
  switch (form) {
    case Form::TwoPoint:
      return {{"form", "two_point"}, {"half_width", half_width}};
    case Form::Uniform:
      return {{"form", "uniform"}, {"half_width", half_width}};
    case Form::Discrete:
      return {{"form", "discrete"}, {"atoms", atoms}, {"weights", weights}};
  }
  return {};
}

InitialLaw InitialLaw::from_json(const nlohmann::json& j) {
  InitialLaw law;
  if (j.contains("spatial")) law.spatial = SpatialLaw::from_json(j.at("spatial"));
  if (j.contains("velocity")) law.velocity = VelocityLaw::from_json(j.at("velocity"));
  return law;
}

nlohmann::json InitialLaw::to_json() const { return {{"spatial", spatial.to_json()}, {"velocity", velocity.to_json()}}; }

Configuration sample_initial(const InitialLaw& law, std::size_t n, int dim, Rng& rng) {
  if (n < 1) throw DomainError("sample_initial: n must be positive");
  std::vector<double> x(n * dim);
  std::vector<double> v(n * dim);
  const double bound = law.spatial.sup();
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      double candidate = rng.uniform();
      if (law.spatial.form != SpatialLaw::Form::Uniform) {
        while (rng.uniform() * bound >= law.spatial.density(candidate)) candidate = rng.uniform();
      }
      x[i * dim + k] = candidate;
    }
    for (int k = 0; k < dim; ++k) v[i * dim + k] = law.velocity.sample(rng);
  }
  return Configuration(dim, std::move(x), std::move(v));
}

Configuration sample_initial(const InitialLaw& law, std::size_t n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  return sample_initial(law, n, dim, rng);
}

}  // namespace topolab
