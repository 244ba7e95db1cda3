// SPDX-License-Identifier: Apache-2.0
#include "stormdist/estimator.hpp"

#include <string>

#include "stormdist/errors.hpp"

namespace stormdist {

DirectionState init_direction(const ParamVector& grad_at_x1) {
  require_finite(grad_at_x1, "init_direction");
  return DirectionState{grad_at_x1, grad_at_x1, 1};
}

DirectionState update_direction(const DirectionState& state, const ParamVector& grad_new_at_xnew,
                                const ParamVector& grad_new_at_xold, double a) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw ContractViolation("update_direction: momentum a = " + std::to_string(a) +
                            " outside (0, 1]");
  }
  require_same_size(state.direction, grad_new_at_xnew, "update_direction");
  require_same_size(state.direction, grad_new_at_xold, "update_direction");

  const double keep = 1.0 - a;
  DirectionState next;
  next.direction = ParamVector(state.direction.size());
  for (std::size_t i = 0; i < state.direction.size(); ++i) {
    next.direction[i] =
        grad_new_at_xnew[i] + keep * (state.direction[i] - grad_new_at_xold[i]);
  }
  require_finite(next.direction, "update_direction");
  next.cached_grad_new = grad_new_at_xnew;
  next.iteration = state.iteration + 1;
  return next;
}

ParamVector error_vector(const ParamVector& d_bar, const ParamVector& full_grad) {
  return d_bar - full_grad;
}

}  // namespace stormdist
