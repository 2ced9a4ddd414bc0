#pragma once

#include <cstddef>
#include <cstdint>

namespace w3ar {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  double eps = 1e-5;
  double gamma_kl = 0.1;
  /// Added to one analytic gradient coordinate. Negative-control hook: a
  /// nonzero value must make the check fail.
  double inject_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t n_parameters = 0;
};

/// Relative error used by the check: |a - n| / max(|a|, |n|, kGradCheckFloor).
inline constexpr double kGradCheckFloor = 1e-6;
inline constexpr double kGradCheckTolerance = 1e-4;

/// Compares surrogate_gradient() against central differences of
/// surrogate_loss().total for a randomly parameterized policy/reference pair on
/// the default toy world, with one sampled group held fixed.
GradCheckResult gradient_check(const GradCheckOptions& options);

}  // namespace w3ar
