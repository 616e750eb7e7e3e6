#pragma once

#include <Eigen/Dense>

#include "dqsgd/rng.hpp"

namespace dqsgd {

enum class QuantizerKind { Identity, Ternary };
enum class ClampPolicy { Error, Saturate };

struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::Ternary;
  // Quantization threshold; each output element lies in {-r, 0, +r}.  The
  // input must satisfy |x_i| <= r elementwise (see ClampPolicy).  Ignored by
  // the identity quantizer.
  double r = 1.0;
  // Error: reject inputs exceeding the threshold, naming the offending index.
  // Saturate: clamp such elements to +/-r first; meant for exploratory runs
  // and surfaced in run metadata, since clamping sacrifices unbiasedness.
  ClampPolicy clamp = ClampPolicy::Error;

  void validate() const;
};

struct QuantizeStats {
  long clamped = 0;  // elements saturated so far
};

// Exact per-element law of the ternary quantizer: for |x| <= r the output is
//   -r with probability p_minus, 0 with p_zero, +r with p_plus,
// where the nonzero side matches sign(x) and carries probability |x|/r.
// The three probabilities sum to 1.0 exactly in double arithmetic.
struct TritDistribution {
  double p_minus = 0.0;
  double p_zero = 0.0;
  double p_plus = 0.0;
};

TritDistribution element_distribution(double x, double r);

// Variance of one quantized element: r*|x| - x^2.  Zero exactly at
// x in {-r, 0, +r}; maximal (r^2/4) at |x| = r/2.
double element_variance(double x, double r);

// Ternary quantization result in level form: levels[i] in {-1, 0, +1} and
// the threshold that scales them back to values.
struct TernaryOutput {
  Eigen::VectorXi levels;
  double r = 1.0;

  Eigen::VectorXd values() const { return levels.cast<double>() * r; }
};

// Draws one ternary quantization of x.  Consumes exactly one uniform draw per
// element, in ascending index order, so paired runs that share a stream stay
// aligned.  Elements equal to 0 or +/-r are reproduced deterministically.
TernaryOutput ternary_quantize(double r, ClampPolicy clamp,
                               const Eigen::VectorXd& x, RngStream& rng,
                               QuantizeStats* stats = nullptr);

// Applies the configured quantizer.  Identity returns x unchanged and
// consumes no randomness.
Eigen::VectorXd quantize(const QuantizerSpec& spec, const Eigen::VectorXd& x,
                         RngStream& rng, QuantizeStats* stats = nullptr);

}  // namespace dqsgd
