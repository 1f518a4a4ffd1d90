#include "topolab/kernel.hpp"

#include "topolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace topolab {

Kernel Kernel::uniform() { return Kernel(KernelForm::Uniform, 0.0, 1.0); }

Kernel Kernel::linear() { return Kernel(KernelForm::Linear, 2.0, 1.0); }

Kernel Kernel::truncated_linear(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ValidationError("truncated_linear: epsilon must lie in (0, 1]");
  }
  Kernel k(KernelForm::TruncatedLinear, 2.0 / (epsilon * epsilon), 1.0);
  k.epsilon_ = epsilon;
  return k;
}

Kernel Kernel::tabulated(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) throw ValidationError("tabulated kernel needs at least two breakpoints");
  if (table.front().first != 0.0 || table.back().first != 1.0) {
    throw ValidationError("tabulated kernel breakpoints must span [0, 1]");
  }
  double integral = 0.0;
  double lip = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto [r, value] = table[k];
    if (!std::isfinite(value) || value < 0.0) throw ValidationError("tabulated kernel has a negative value");
    if (k == 0) continue;
    const auto [r_prev, value_prev] = table[k - 1];
    if (!(r > r_prev)) throw ValidationError("tabulated kernel breakpoints must increase strictly");
    if (value > value_prev) throw ValidationError("tabulated kernel must be non-increasing");
    integral += 0.5 * (r - r_prev) * (value + value_prev);
    lip = std::max(lip, (value_prev - value) / (r - r_prev));
  }
  if (std::abs(integral - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "tabulated kernel integral " << integral << " differs from 1 by more than 1e-9";
    throw ValidationError(msg.str());
  }
  // Remove the residual normalization error so the two forms of the
  // transition probabilities agree to rounding.
  double rescaled = 0.0;
  for (auto& entry : table) entry.second /= integral;
  for (std::size_t k = 1; k < table.size(); ++k) {
    rescaled += 0.5 * (table[k].first - table[k - 1].first) * (table[k].second + table[k - 1].second);
  }
  Kernel kernel(KernelForm::Tabulated, lip / integral, rescaled);
  kernel.table_ = std::move(table);
  return kernel;
}

double Kernel::operator()(double r) const {
  r = std::clamp(r, 0.0, 1.0);
  switch (form_) {
    case KernelForm::Uniform:
      return 1.0;
    case KernelForm::Linear:
      return 2.0 * (1.0 - r);
    case KernelForm::TruncatedLinear:
      return r >= epsilon_ ? 0.0 : (2.0 / epsilon_) * (1.0 - r / epsilon_);
    case KernelForm::Tabulated: {
      auto it = std::upper_bound(table_.begin(), table_.end(), r,
                                 [](double x, const auto& entry) { return x < entry.first; });
      if (it == table_.end()) return table_.back().second;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (r - lo.first) / (hi.first - lo.first);
      return lo.second + w * (hi.second - lo.second);
    }
  }
  return 0.0;
}

Kernel Kernel::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("form")) throw ValidationError("kernel: missing 'form'");
  const auto form = j.at("form").get<std::string>();
  if (form == "uniform") return uniform();
  if (form == "linear") return linear();
  if (form == "truncated_linear") {
    if (!j.contains("epsilon")) throw ValidationError("kernel: truncated_linear needs 'epsilon'");
    return truncated_linear(j.at("epsilon").get<double>());
  }
  if (form == "tabulated") {
    if (!j.contains("table") || !j.at("table").is_array()) throw ValidationError("kernel: tabulated needs 'table'");
    std::vector<std::pair<double, double>> table;
    for (const auto& row : j.at("table")) {
      if (!row.is_array() || row.size() != 2) throw ValidationError("kernel: table rows must be [r, K]");
      table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return tabulated(std::move(table));
  }
  throw ValidationError("kernel: unknown form '" + form + "'");
}

nlohmann::json Kernel::to_json() const {
  switch (form_) {
    case KernelForm::Uniform:
      return {{"form", "uniform"}};
    case KernelForm::Linear:
      return {{"form", "linear"}};
    case KernelForm::TruncatedLinear:
      return {{"form", "truncated_linear"}, {"epsilon", epsilon_}};
    case KernelForm::Tabulated: {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& [r, v] : table_) rows.push_back({r, v});
      return {{"form", "tabulated"}, {"table", rows}};
    }
  }
  return {};
}

double growth_constant(const Kernel& kernel) { return 8.0 * std::sqrt(std::exp(1.0)) * kernel.lipschitz(); }

std::string kernel_violation(const Kernel& kernel, int points) {
  std::ostringstream msg;
  double prev = kernel(0.0);
  double trapezoid = 0.0;
  const double h = 1.0 / points;
  for (int k = 0; k <= points; ++k) {
    const double r = k * h;
    const double value = kernel(r);
    if (value < 0.0) {
      msg << "K(" << r << ") < 0";
      return msg.str();
    }
    if (value > prev + 1e-15) {
      msg << "K increases at r=" << r;
      return msg.str();
    }
    if (k > 0) {
      if (std::abs(value - prev) > kernel.lipschitz() * h * (1.0 + 1e-9) + 1e-12) {
        msg << "Lipschitz bound violated near r=" << r;
        return msg.str();
      }
      trapezoid += 0.5 * h * (value + prev);
    }
    prev = value;
  }
  // The trapezoid rule is exact for piecewise-linear kernels whose kinks sit
  // on the check grid; otherwise its error is at most Lip h^2 / 4.
  const double tolerance = kernel.form() == KernelForm::Tabulated ? 1e-9 : 1e-12;
  const double quadrature_slack = kernel.lipschitz() * h * h / 4;
  if (std::abs(kernel.integral() - 1.0) > tolerance) return "integral differs from 1";
  if (std::abs(trapezoid - 1.0) > tolerance + quadrature_slack) {
    msg << "trapezoid integral " << trapezoid << " differs from 1";
    return msg.str();
  }
  return {};
}

}  // namespace topolab
