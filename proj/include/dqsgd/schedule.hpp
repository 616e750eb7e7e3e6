#pragma once

#include <string>
#include <vector>

namespace dqsgd {

class Topology;

/// Polynomially decaying step-size pair
///   lambda_k  = a1 / (a3*k + 1)^delta1   (gradient step)
///   epsilon_k = a2 / (a3*k + 1)^delta2   (consensus step)
struct Schedule {
  double a1 = 1.0;
  double a2 = 1.0;
  double a3 = 0.3;
  double delta1 = 0.3;
  double delta2 = 0.6;

  void validate() const;  // positive coefficients, exponents in (0, 1]

  double lambda_at(long k) const;
  double epsilon_at(long k) const;
};

/// Outcome of the symbolic step-size check.  The admissibility conditions are
/// inequalities on the decay exponents alone, so they are evaluated exactly
/// rather than through partial sums:
///   nonconvex_ok    <=>  delta1 + delta2 <= 1,  delta2 > 0.5,  2*delta1 + delta2 > 1
///   convex_value_ok <=>  nonconvex_ok  and  delta1 + 1.5*delta2 >= 1
struct ConditionReport {
  bool nonconvex_ok = false;
  bool convex_value_ok = false;
  // Predicted decay exponents for, respectively, the weighted gradient-norm
  // statistic and the function-value gap of the weighted averaged iterate.
  double rate_gradient = 0.0;  // min(2*delta1, delta2)
  double rate_value = 0.0;     // min(delta1, delta2/2)
  // Human-readable names of every violated inequality, e.g. "delta2 > 0.5".
  std::vector<std::string> violations;
  // Mixing stability on the given topology: epsilon_0 * max_degree <= 1.
  bool mixing_stable = false;
  double stability_bound = 0.0;  // admissible epsilon_0 upper bound
};

ConditionReport validate(const Schedule& schedule, const Topology& topology);

}  // namespace dqsgd
