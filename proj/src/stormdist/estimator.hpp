// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "stormdist/param_vector.hpp"

namespace stormdist {

/// Worker-local state of the momentum-based variance-reduced direction.
///
/// The recursion mixes an SGD step with a SARAH correction:
///   d_{t+1} = g(x_{t+1}; xi) + (1 - a) * (d_t - g(x_t; xi))
/// where both gradients use the same fresh sample xi.
struct DirectionState {
  ParamVector direction;
  /// Stochastic gradient at the current iterate, kept from the last update so
  /// the adaptive schedule can read its norm without another oracle call.
  ParamVector cached_grad_new;
  std::uint64_t iteration = 1;
};

DirectionState init_direction(const ParamVector& grad_at_x1);

/// Requires 0 < a <= 1; the schedule clamps before calling.
DirectionState update_direction(const DirectionState& state, const ParamVector& grad_new_at_xnew,
                                const ParamVector& grad_new_at_xold, double a);

/// d_bar - grad f. Diagnostic only.
ParamVector error_vector(const ParamVector& d_bar, const ParamVector& full_grad);

}  // namespace stormdist
