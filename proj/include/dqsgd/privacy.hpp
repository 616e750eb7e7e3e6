#pragma once

#include <string>

namespace dqsgd {

/// Additive privacy parameter of one ternary-quantized broadcast: any two
/// inputs x, y with ||x - y||_1 <= 1 and both within the threshold satisfy
///   P(Q(x) = q)  <=  P(Q(y) = q) + 1/r      for every outcome q,
/// i.e. the message is (0, 1/r)-differentially private, and the bound is
/// attained (a unit change of one coordinate moves that coordinate's
/// outcome probability by exactly 1/r).
double per_step_delta(double r);

/// Exhaustive grid check of the bound above for scalar coordinates, which is
/// exact because the quantizer acts elementwise and adjacency constrains one
/// coordinate pair at a time.  Sweeps x over [-r, r] and y over
/// [x - 1, x + 1] (clamped) on a grid of the given step, covering same-sign
/// and opposite-sign pairs, and evaluates the exact outcome distribution on
/// both sides for all three outcomes.
struct DpSweepResult {
  double r = 0.0;
  double grid_step = 0.0;
  long pairs_checked = 0;
  // max over pairs and outcomes of |P(q|x) - P(q|y)| - 1/r; <= 0 when the
  // advertised bound holds.
  double max_violation = 0.0;
  // max over pairs and outcomes of |P(q|x) - P(q|y)|; equals 1/r at the
  // extremes, witnessing tightness.
  double sup_difference = 0.0;
};

DpSweepResult dp_sweep(double r, double grid_step);

/// Convenience wrapper returning only the violation margin.
double verify_dp_exact(double r, double grid_step);

/// Cumulative privacy spend across a run of T broadcasts under basic
/// composition, with the standard caveat that advanced composition scales
/// with sqrt(T) instead.
struct PrivacyLedger {
  double r = 0.0;
  double per_step = 0.0;      // 1/r
  long steps = 0;             // T
  double composed = 0.0;      // T/r, basic composition
  std::string advisory;       // sqrt(T) note
};

PrivacyLedger compose(long steps, double r);

}  // namespace dqsgd
