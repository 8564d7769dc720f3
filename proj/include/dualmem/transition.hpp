#pragma once

#include <cstddef>
#include <vector>

namespace dualmem {

using Observation = std::vector<double>;

// One unit of experience. state and next_state share the environment's
// observation dimension; action is below the environment's action count.
struct Transition {
  Observation state;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next_state;
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

}  // namespace dualmem
