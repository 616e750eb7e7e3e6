#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dqsgd/engine.hpp"
#include "dqsgd/quantizer.hpp"

namespace dqsgd {

/// What the attacker is assumed to see.
///  - Eavesdropper: wire traffic only.  Against a ternary run the target's
///    endpoint states are known only through its quantized broadcasts.
///  - HonestButCurious: a deliberately stronger insider that additionally
///    reads the target's exact states x_i^k and x_i^{k+1}; neighbor states
///    are still known only through their broadcasts.
enum class AdversaryMode { Eavesdropper, HonestButCurious };

/// Exactly the information the inference step is allowed to touch.  Private
/// gradient logs are deliberately absent; truth enters only afterwards, when
/// a result is scored against the trajectory.
struct AttackObservation {
  long k = 0;
  int target = 0;
  AdversaryMode mode = AdversaryMode::Eavesdropper;
  QuantizerKind run_quantizer = QuantizerKind::Identity;
  Eigen::MatrixXd broadcasts;        // round-k messages, m x d
  Eigen::VectorXd target_state_k;    // target's round-k state as observed
  Eigen::VectorXd target_state_k1;   // target's round-(k+1) state as observed
  Eigen::MatrixXd weights;           // public coupling matrix W
  double epsilon = 0.0;
  double lambda = 0.0;
};

/// Builds the observation for round k of a fully logged trajectory.  Against
/// a ternary run the eavesdropper needs the target's round-(k+1) broadcast,
/// so the last executed round is observable only in the other cases.
AttackObservation make_observation(const Trajectory& trajectory, long k, int target,
                                   AdversaryMode mode);

/// Rounds of `trajectory` for which make_observation succeeds, ascending.
std::vector<long> observable_rounds(const Trajectory& trajectory, AdversaryMode mode);

/// Inverts the public update rule around the observed states:
///   g_hat = [ s_i + eps * sum_j w_ij (b_j - s_i) - s_i' ] / (eps * lam)
/// with s_i, s_i' the observed endpoint states and b_j the round-k messages.
/// Exact against an identity-quantizer run; against a ternary run every
/// substituted broadcast carries quantization error that lands in g_hat.
/// Throws when eps * lam is too small to invert (< 1e-12).
Eigen::VectorXd infer_gradient(const AttackObservation& observation);

/// Same inversion with the precondition that the observed run used the
/// identity quantizer (recovery should be exact) respectively the ternary
/// quantizer (recovery is contaminated).  Both reject mismatched runs.
Eigen::VectorXd infer_gradient_baseline(const AttackObservation& observation);
Eigen::VectorXd infer_gradient_quantized(const AttackObservation& observation);

struct AttackResult {
  long k = 0;
  int target = 0;
  AdversaryMode mode = AdversaryMode::Eavesdropper;
  Eigen::VectorXd inferred;
  Eigen::VectorXd truth;        // from the private log, scoring only
  double relative_error = 0.0;  // ||inferred - truth|| / max(||truth||, 1e-12)
};

/// Scores one observation against the trajectory's private gradient log.
AttackResult evaluate_attack(const Trajectory& trajectory,
                             const AttackObservation& observation);

/// Runs the attack on every observable round for one target.
std::vector<AttackResult> attack_report(const Trajectory& trajectory, int target,
                                        AdversaryMode mode);

/// Monte Carlo estimate of the expected relative inference error at round k
/// when the quantization of that round is redrawn `redraws` times from fresh
/// randomness (states, gradients, and step sizes stay fixed).
struct NonrecoveryEstimate {
  double mean_relative_error = 0.0;
  double std_error = 0.0;  // standard error of the mean
  int redraws = 0;
};

NonrecoveryEstimate monte_carlo_nonrecovery(const Trajectory& trajectory, long k, int target,
                                            const QuantizerSpec& quantizer, int redraws,
                                            std::uint64_t seed, AdversaryMode mode);

/// First round index >= `from` whose endpoint states fit within threshold r
/// (so an error-policy redraw cannot trip), or -1 when none exists.
long first_redrawable_round(const Trajectory& trajectory, double r, long from);

}  // namespace dqsgd
