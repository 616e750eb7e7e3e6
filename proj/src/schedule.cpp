#include "dqsgd/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dqsgd/topology.hpp"

namespace dqsgd {

void Schedule::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("schedule: ") + name +
                                  " must be positive and finite, got " + std::to_string(v));
    }
  };
  positive(a1, "a1");
  positive(a2, "a2");
  positive(a3, "a3");
  positive(delta1, "delta1");
  positive(delta2, "delta2");
  if (delta1 > 1.0 || delta2 > 1.0) {
    throw std::invalid_argument("schedule: decay exponents must lie in (0, 1]");
  }
}

double Schedule::lambda_at(long k) const {
  if (k < 0) {
    throw std::invalid_argument("schedule: iteration index must be nonnegative");
  }
  return a1 / std::pow(a3 * static_cast<double>(k) + 1.0, delta1);
}

double Schedule::epsilon_at(long k) const {
  if (k < 0) {
    throw std::invalid_argument("schedule: iteration index must be nonnegative");
  }
  return a2 / std::pow(a3 * static_cast<double>(k) + 1.0, delta2);
}

ConditionReport validate(const Schedule& schedule, const Topology& topology) {
  schedule.validate();
  ConditionReport report;
  const double d1 = schedule.delta1;
  const double d2 = schedule.delta2;

  if (!(d1 + d2 <= 1.0)) report.violations.push_back("delta1 + delta2 <= 1");
  if (!(d2 > 0.5)) report.violations.push_back("delta2 > 0.5");
  if (!(2.0 * d1 + d2 > 1.0)) report.violations.push_back("2*delta1 + delta2 > 1");
  report.nonconvex_ok = report.violations.empty();

  const bool value_extra = d1 + 1.5 * d2 >= 1.0;
  if (!value_extra) report.violations.push_back("delta1 + 1.5*delta2 >= 1");
  report.convex_value_ok = report.nonconvex_ok && value_extra;

  report.rate_gradient = std::min(2.0 * d1, d2);
  report.rate_value = std::min(d1, d2 / 2.0);

  report.stability_bound = 1.0 / topology.max_degree();
  report.mixing_stable = schedule.epsilon_at(0) * topology.max_degree() <= 1.0;
  return report;
}

}  // namespace dqsgd
