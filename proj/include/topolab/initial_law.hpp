#pragma once

#include "topolab/configuration.hpp"
#include "topolab/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace topolab {

/// Spatial density on the unit circle; in d = 2 the same law is used for
/// each coordinate independently.
struct SpatialLaw {
  enum class Form { Uniform, Cosine, Bimodal };
  Form form = Form::Uniform;
  /// Cosine: rho(x) = 1 + amplitude cos(2 pi x), |amplitude| < 1.
  double amplitude = 0.0;

  double density(double x) const;
  /// int_0^x rho, for x in [0,1].
  double cdf(double x) const;
  double sup() const;

  static SpatialLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Velocity law, applied componentwise in d = 2.
struct VelocityLaw {
  enum class Form { TwoPoint, Uniform, Discrete };
  Form form = Form::Uniform;
  /// TwoPoint: +-half_width with probability 1/2 each; Uniform: U[-half_width, half_width].
  double half_width = 1.0;
  /// Discrete: atoms and weights (weights are normalized on use).
  std::vector<double> atoms;
  std::vector<double> weights;

  double sample(Rng& rng) const;
  /// Probability mass that falls in [lo, hi).
  double mass(double lo, double hi) const;
  /// Smallest v_max with the support inside [-v_max, v_max].
  double support_bound() const;

  static VelocityLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Product law rho_0(x) g_0(v).
struct InitialLaw {
  SpatialLaw spatial;
  VelocityLaw velocity;

  static InitialLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// n i.i.d. draws from `law`; bitwise deterministic given the seed.
Configuration sample_initial(const InitialLaw& law, std::size_t n, int dim, std::uint64_t seed);
Configuration sample_initial(const InitialLaw& law, std::size_t n, int dim, Rng& rng);

}  // namespace topolab
