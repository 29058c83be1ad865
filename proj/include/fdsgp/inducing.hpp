#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fdsgp {

/// Inducing inputs x_m together with where they came from.
struct InducingSet {
  std::vector<double> inputs;        // densities, veh/mi
  std::vector<std::size_t> indices;  // rows of the source dataset; empty when not drawn from one
  std::string provenance;            // e.g. "cs seed=3"

  std::size_t size() const { return inputs.size(); }
};

}  // namespace fdsgp
