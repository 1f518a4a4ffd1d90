#include "topolab/configuration.hpp"

#include "topolab/errors.hpp"

namespace topolab {

Configuration::Configuration(int dim, std::vector<double> positions, std::vector<double> velocities)
    : dim_(dim), positions_(std::move(positions)), velocities_(std::move(velocities)) {
  if (dim != 1 && dim != 2) throw DomainError("configuration: dimension must be 1 or 2");
  if (positions_.empty() || positions_.size() % dim != 0) throw DomainError("configuration: bad position count");
  if (velocities_.size() != positions_.size()) throw DomainError("configuration: velocity count mismatch");
  for (double& x : positions_) x = wrap_unit(x);
}

}  // namespace topolab
