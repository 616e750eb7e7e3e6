#include "dqsgd/quantizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dqsgd {

void QuantizerSpec::validate() const {
  if (kind == QuantizerKind::Ternary && !(r > 0.0 && std::isfinite(r))) {
    throw std::invalid_argument("quantizer: threshold r must be positive and finite, got " +
                                std::to_string(r));
  }
}

TritDistribution element_distribution(double x, double r) {
  if (!(r > 0.0 && std::isfinite(r))) {
    throw std::domain_error("quantizer: threshold r must be positive and finite, got " +
                            std::to_string(r));
  }
  if (!(std::abs(x) <= r)) {
    throw std::domain_error("quantizer: |x| = " + std::to_string(std::abs(x)) +
                            " exceeds threshold r = " + std::to_string(r));
  }
  const double p = std::abs(x) / r;
  TritDistribution d;
  d.p_zero = 1.0 - p;
  if (x >= 0.0) {
    d.p_plus = p;
  } else {
    d.p_minus = p;
  }
  return d;
}

double element_variance(double x, double r) {
  if (!(r > 0.0 && std::isfinite(r))) {
    throw std::domain_error("quantizer: threshold r must be positive and finite, got " +
                            std::to_string(r));
  }
  if (!(std::abs(x) <= r)) {
    throw std::domain_error("quantizer: |x| = " + std::to_string(std::abs(x)) +
                            " exceeds threshold r = " + std::to_string(r));
  }
  return r * std::abs(x) - x * x;
}

TernaryOutput ternary_quantize(double r, ClampPolicy clamp, const Eigen::VectorXd& x,
                               RngStream& rng, QuantizeStats* stats) {
  if (!(r > 0.0 && std::isfinite(r))) {
    throw std::invalid_argument("quantizer: threshold r must be positive and finite, got " +
                                std::to_string(r));
  }
  const Eigen::Index d = x.size();
  if (clamp == ClampPolicy::Error) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(std::abs(x(i)) <= r)) {
        throw std::domain_error("quantizer: |x[" + std::to_string(i) + "]| = " +
                                std::to_string(std::abs(x(i))) +
                                " exceeds threshold r = " + std::to_string(r));
      }
    }
  }
  TernaryOutput out;
  out.r = r;
  out.levels.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double xi = x(i);
    if (std::abs(xi) > r) {  // only reachable under ClampPolicy::Saturate
      xi = std::copysign(r, xi);
      if (stats) ++stats->clamped;
    }
    const double p = std::abs(xi) / r;
    // One draw per element regardless of p, so stream positions stay fixed.
    const bool fire = rng.bernoulli(p);
    out.levels(i) = fire ? (xi < 0.0 ? -1 : 1) : 0;
  }
  return out;
}

Eigen::VectorXd quantize(const QuantizerSpec& spec, const Eigen::VectorXd& x,
                         RngStream& rng, QuantizeStats* stats) {
  spec.validate();
  if (spec.kind == QuantizerKind::Identity) {
    return x;
  }
  return ternary_quantize(spec.r, spec.clamp, x, rng, stats).values();
}

}  // namespace dqsgd
