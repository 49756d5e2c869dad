#pragma once

#include "adgda/types.hpp"

namespace adgda {

// Per-node variables of the compressed gossip scheme.
struct NodeState {
  Vec theta;      // private primal iterate
  Vec lambda;     // private dual iterate, on the simplex
  Vec theta_hat;  // public copy known to the neighbours
  Vec s;          // tracker of sum_j w_ij theta_hat_j
};

}  // namespace adgda
