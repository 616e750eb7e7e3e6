#include <doctest.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "dqsgd/schedule.hpp"
#include "dqsgd/topology.hpp"
#include "test_util.hpp"

using dqsgd::ConditionReport;
using dqsgd::Schedule;
using dqsgd::Topology;

namespace {

Schedule make(double delta1, double delta2, double a1 = 1.0, double a2 = 1.0,
              double a3 = 0.3) {
  Schedule s;
  s.a1 = a1;
  s.a2 = a2;
  s.a3 = a3;
  s.delta1 = delta1;
  s.delta2 = delta2;
  return s;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("step values at k = 10 match the frozen decimals") {
    const Schedule s = make(0.3, 0.6);
    // 0.3 * 10 + 1 rounds to exactly 4.0, so both steps are powers of 1/4.
    CHECK(s.lambda_at(10) == doctest::Approx(0.6597539553864471).epsilon(1e-15));
    CHECK(s.epsilon_at(10) == doctest::Approx(0.43527528164806206).epsilon(1e-15));
    CHECK(s.lambda_at(0) == 1.0);  // (a3*0 + 1)^delta = 1 exactly
    CHECK(s.epsilon_at(0) == 1.0);

    const Schedule scaled = make(0.45, 0.45, 2.0, 2.0);
    CHECK(scaled.lambda_at(7) == doctest::Approx(1.2020353324389561).epsilon(1e-15));
    CHECK(scaled.lambda_at(7) == scaled.epsilon_at(7));
  }

  TEST_CASE("steps decrease monotonically") {
    const Schedule s = make(0.3, 0.6);
    double prev_l = s.lambda_at(0);
    double prev_e = s.epsilon_at(0);
    for (long k = 1; k <= 1000; k += 7) {
      CHECK(s.lambda_at(k) < prev_l);
      CHECK(s.epsilon_at(k) < prev_e);
      prev_l = s.lambda_at(k);
      prev_e = s.epsilon_at(k);
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(make(0.3, 0.6).validate());
    CHECK_THROWS_CONTAINS(make(0.3, 0.6, 0.0).validate(), std::invalid_argument,
                          "must be positive");
    CHECK_THROWS_CONTAINS(make(0.3, 0.6, 1.0, -2.0).validate(), std::invalid_argument,
                          "must be positive");
    CHECK_THROWS_CONTAINS(make(1.2, 0.6).validate(), std::invalid_argument, "(0, 1]");
    CHECK_THROWS_CONTAINS(make(0.0, 0.6).validate(), std::invalid_argument,
                          "must be positive");
    CHECK_THROWS_CONTAINS(make(0.3, 0.6).lambda_at(-1), std::invalid_argument,
                          "nonnegative");
    CHECK_THROWS_CONTAINS(make(0.3, 0.6).epsilon_at(-2), std::invalid_argument,
                          "nonnegative");
  }

  TEST_CASE("exponent pair (0.3, 0.6) satisfies every decay condition") {
    const Topology t = dqsgd::topology_preset("fig1");
    const ConditionReport report = dqsgd::validate(make(0.3, 0.6), t);
    CHECK(report.nonconvex_ok);
    CHECK(report.convex_value_ok);  // 0.3 + 1.5*0.6 = 1.2 >= 1
    CHECK(report.violations.empty());
    CHECK(report.rate_gradient == 0.6);  // min(2*0.3, 0.6)
    CHECK(report.rate_value == 0.3);     // min(0.3, 0.6/2)
    CHECK(report.mixing_stable);         // epsilon_0 = 1 <= 1/max_degree = 4/3
    CHECK(report.stability_bound == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("exponent pair (0.5, 0.5) violates only the consensus-decay bound") {
    const Topology t = dqsgd::topology_preset("fig1");
    const ConditionReport report = dqsgd::validate(make(0.5, 0.5), t);
    CHECK_FALSE(report.nonconvex_ok);
    CHECK_FALSE(report.convex_value_ok);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0] == "delta2 > 0.5");
  }

  TEST_CASE("exponent pair (0.3, 0.4) violates both base conditions and the value rate") {
    const Topology t = dqsgd::topology_preset("fig1");
    const ConditionReport report = dqsgd::validate(make(0.3, 0.4), t);
    CHECK_FALSE(report.nonconvex_ok);
    CHECK_FALSE(report.convex_value_ok);
    REQUIRE(report.violations.size() == 3);
    CHECK(report.violations[0] == "delta2 > 0.5");
    // 2*0.3 + 0.4 evaluates to exactly 1.0 in double arithmetic, and the
    // condition is strict, so it is reported as violated.
    CHECK(report.violations[1] == "2*delta1 + delta2 > 1");
    // 0.3 + 1.5*0.4 = 0.9 < 1, so the value-rate condition fails as well.
    CHECK(report.violations[2] == "delta1 + 1.5*delta2 >= 1");
  }

  TEST_CASE("exponent sum above one is caught") {
    const Topology t = dqsgd::topology_preset("fig1");
    const ConditionReport report = dqsgd::validate(make(0.7, 0.6), t);
    CHECK_FALSE(report.nonconvex_ok);
    REQUIRE(report.violations.size() >= 1);
    CHECK(report.violations[0] == "delta1 + delta2 <= 1");
  }

  TEST_CASE("boundary pair (0.4, 0.6): exact sum of one passes the sum condition") {
    const Topology t = dqsgd::topology_preset("fig1");
    const ConditionReport report = dqsgd::validate(make(0.4, 0.6), t);
    CHECK(report.nonconvex_ok);  // 0.4 + 0.6 == 1.0 exactly in doubles
    CHECK(report.violations.empty());
    CHECK(report.rate_gradient == 0.6);  // min(0.8, 0.6)
    CHECK(report.rate_value == 0.3);     // min(0.4, 0.3)
  }

  TEST_CASE("mixing stability flags an oversized consensus coefficient") {
    const Topology k2 = Topology::metropolis(2, {{0, 1}});
    const ConditionReport ok = dqsgd::validate(make(0.3, 0.6, 1.0, 2.0), k2);
    CHECK(ok.mixing_stable);  // 2.0 * 0.5 = 1.0 <= 1
    CHECK(ok.stability_bound == 2.0);

    const ConditionReport bad = dqsgd::validate(make(0.3, 0.6, 1.0, 2.5), k2);
    CHECK_FALSE(bad.mixing_stable);  // 2.5 * 0.5 > 1
    CHECK(bad.stability_bound == 2.0);
  }

  TEST_CASE("base conditions imply the convex-value condition") {
    // If delta2 > 0.5 and 2*delta1 + delta2 > 1 then
    // delta1 + 1.5*delta2 = (2*delta1 + delta2)/2 + delta2 > 0.5 + 0.5 = 1,
    // so nonconvex_ok should never hold without convex_value_ok.
    const Topology t = dqsgd::topology_preset("fig1");
    for (double d1 : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      for (double d2 : {0.51, 0.6, 0.7, 0.8, 0.9}) {
        if (d1 + d2 > 1.0) continue;
        const ConditionReport r = dqsgd::validate(make(d1, d2), t);
        if (r.nonconvex_ok) CHECK(r.convex_value_ok);
      }
    }
  }
}
