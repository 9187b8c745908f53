#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace foaa {

struct GradCheckEntry {
  std::string op_class;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckSuiteConfig {
  std::uint64_t seed = 0;
  std::size_t instances = 10;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Embedding width for the attention classes; small enough that checking
  // every coordinate stays fast.
  std::size_t dim = 6;
};

/// Runs finite_diff_check on random instances of every differentiable
/// operation class, one entry per class.
std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckSuiteConfig& config);

}  // namespace foaa
