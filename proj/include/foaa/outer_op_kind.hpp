#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace foaa {

/// Score operator of one FOAA head: entry (i,j) of the score matrix is
/// q_i + k_j, q_i - k_j, q_i * k_j or q_i / k_j.
enum class OuterOpKind { Add, Sub, Mul, Div };

inline constexpr std::array<OuterOpKind, 4> kAllOuterOps = {
    OuterOpKind::Add, OuterOpKind::Sub, OuterOpKind::Mul, OuterOpKind::Div};

constexpr std::string_view to_string(OuterOpKind kind) {
  switch (kind) {
    case OuterOpKind::Add: return "add";
    case OuterOpKind::Sub: return "sub";
    case OuterOpKind::Mul: return "mul";
    case OuterOpKind::Div: return "div";
  }
  return "?";
}

std::optional<OuterOpKind> parse_outer_op(std::string_view name);

/// Denominator guard for outer division: values with |x| < eps are replaced by
/// eps carrying the sign of x, with sign(0) taken as +1.
constexpr double division_guard(double x, double eps) {
  if (x >= eps || x <= -eps) return x;
  return x < 0.0 ? -eps : eps;
}

// d guard(x) / dx: 1 outside the clamp band, 0 inside.
constexpr double division_guard_slope(double x, double eps) {
  return (x >= eps || x <= -eps) ? 1.0 : 0.0;
}

}  // namespace foaa
