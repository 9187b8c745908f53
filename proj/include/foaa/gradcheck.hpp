#pragma once

#include <functional>
#include <span>
#include <string>

#include "foaa/tape.hpp"

namespace foaa {

// Builds a scalar loss on the given tape. Parameters are bound with
// tape.leaf(); the objective must be deterministic.
using Objective = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients against central differences over every
/// coordinate of every listed parameter. Error per coordinate is
/// |analytic - numeric| / max(1, |numeric|). Throws NumericError when the
/// objective evaluates to a non-finite value.
GradCheckResult finite_diff_check(const Objective& objective, std::span<Parameter* const> params,
                                  double h = 1e-5);

// Value of the objective without differentiation.
double evaluate_objective(const Objective& objective);

}  // namespace foaa
