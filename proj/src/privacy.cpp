#include "dqsgd/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dqsgd/quantizer.hpp"

namespace dqsgd {

double per_step_delta(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::domain_error("privacy: threshold r must be positive and finite, got " +
                            std::to_string(r));
  }
  return 1.0 / r;
}

DpSweepResult dp_sweep(double r, double grid_step) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::domain_error("privacy: threshold r must be positive and finite, got " +
                            std::to_string(r));
  }
  if (!(grid_step > 0.0) || grid_step > 0.01) {
    throw std::invalid_argument("privacy: grid step must lie in (0, 0.01], got " +
                                std::to_string(grid_step));
  }
  const double delta = 1.0 / r;

  // Indices rather than accumulated doubles keep grid points exact multiples
  // of the step; |i - j| <= span enforces the adjacency constraint |x-y| <= 1.
  const long half = std::lround(r / grid_step);
  const long span = std::lround(1.0 / grid_step);

  DpSweepResult result;
  result.r = r;
  result.grid_step = grid_step;
  result.max_violation = -std::numeric_limits<double>::infinity();

  for (long i = -half; i <= half; ++i) {
    const double x = std::clamp(static_cast<double>(i) * grid_step, -r, r);
    const TritDistribution px = element_distribution(x, r);
    const long j_lo = std::max(-half, i - span);
    const long j_hi = std::min(half, i + span);
    for (long j = j_lo; j <= j_hi; ++j) {
      const double y = std::clamp(static_cast<double>(j) * grid_step, -r, r);
      const TritDistribution py = element_distribution(y, r);
      const double diff = std::max({std::abs(px.p_minus - py.p_minus),
                                    std::abs(px.p_zero - py.p_zero),
                                    std::abs(px.p_plus - py.p_plus)});
      result.sup_difference = std::max(result.sup_difference, diff);
      result.max_violation = std::max(result.max_violation, diff - delta);
      ++result.pairs_checked;
    }
  }
  if (result.pairs_checked == 0) {
    throw std::runtime_error("privacy: sweep produced no pairs");
  }
  return result;
}

double verify_dp_exact(double r, double grid_step) {
  return dp_sweep(r, grid_step).max_violation;
}

PrivacyLedger compose(long steps, double r) {
  if (steps < 0) {
    throw std::invalid_argument("privacy: step count must be nonnegative");
  }
  PrivacyLedger ledger;
  ledger.r = r;
  ledger.per_step = per_step_delta(r);
  ledger.steps = steps;
  ledger.composed = static_cast<double>(steps) / r;
  ledger.advisory =
      "basic composition; advanced composition tightens the total toward sqrt(T)/r";
  return ledger;
}

}  // namespace dqsgd
