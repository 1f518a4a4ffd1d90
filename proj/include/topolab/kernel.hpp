#pragma once

#include <nlohmann/json.hpp>

#include <utility>
#include <vector>

namespace topolab {

enum class KernelForm { Uniform, Linear, TruncatedLinear, Tabulated };

/// Interaction function K on [0,1]: non-negative, non-increasing, Lipschitz,
/// with unit integral. Arguments outside [0,1] are clamped.
///
/// Presets:
///   Uniform             K(r) = 1                       Lip 0
///   Linear              K(r) = 2(1 - r)                Lip 2
///   TruncatedLinear(e)  K(r) = (2/e) max(0, 1 - r/e)   Lip 2/e^2
///   Tabulated           piecewise-linear through breakpoints, rescaled to
///                       unit trapezoid integral
class Kernel {
 public:
  static Kernel uniform();
  static Kernel linear();
  static Kernel truncated_linear(double epsilon);
  /// Breakpoints (r_k, K_k) with r_0 = 0 < r_1 < ... < r_m = 1. Throws
  /// ValidationError if the table is not admissible or its integral is off
  /// from 1 by more than 1e-9.
  static Kernel tabulated(std::vector<std::pair<double, double>> table);

  /// {"form": "uniform"|"linear"|"truncated_linear"|"tabulated",
  ///  "epsilon": e, "table": [[r, K], ...]}
  static Kernel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  double operator()(double r) const;

  KernelForm form() const { return form_; }
  double lipschitz() const { return lipschitz_; }
  double integral() const { return integral_; }
  double sup() const { return (*this)(0.0); }
  double epsilon() const { return epsilon_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

 private:
  Kernel(KernelForm form, double lipschitz, double integral)
      : form_(form), lipschitz_(lipschitz), integral_(integral) {}

  KernelForm form_;
  double lipschitz_;
  double integral_;
  double epsilon_ = 1.0;
  std::vector<std::pair<double, double>> table_;
};

/// C_K = 8 sqrt(e) Lip(K), the growth rate in the chaos bound.
double growth_constant(const Kernel& kernel);

/// Checks the admissibility properties on a grid of `points` nodes and
/// returns a description of the first violation, or an empty string.
std::string kernel_violation(const Kernel& kernel, int points = 1000);

}  // namespace topolab
