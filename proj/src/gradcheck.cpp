#include "foaa/gradcheck.hpp"

#include <cmath>

#include "foaa/errors.hpp"

namespace foaa {

double evaluate_objective(const Objective& objective) {
  Tape tape;
  Var loss = objective(tape);
  if (loss.value().numel() != 1) throw ContractError("objective must return a scalar");
  const double v = loss.value()[0];
  if (!std::isfinite(v)) {
    auto op = tape.first_non_finite();
    throw NumericError("objective is not finite (first offending op: " + op.value_or("?") + ")");
  }
  return v;
}

GradCheckResult finite_diff_check(const Objective& objective, std::span<Parameter* const> params,
                                  double h) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = objective(tape);
    if (!loss.value().all_finite()) throw NumericError("objective is not finite");
    tape.backward(loss);
  }

  GradCheckResult result;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = evaluate_objective(objective);
      p->value[i] = orig - h;
      const double down = evaluate_objective(objective);
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coordinates;
      if (result.worst_parameter.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_parameter = p->name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace foaa
