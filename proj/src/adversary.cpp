#include "dqsgd/adversary.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dqsgd {
namespace {

constexpr double kEtaFloor = 1e-12;
constexpr double kErrorFloor = 1e-12;

void require_full_log(const Trajectory& trajectory) {
  if (trajectory.rounds.empty() || trajectory.states.empty()) {
    throw std::runtime_error(
        "adversary: trajectory has no round logs; rerun with full logging");
  }
}

void check_target(const Trajectory& trajectory, int target) {
  const int m = static_cast<int>(trajectory.weights.rows());
  if (target < 0 || target >= m) {
    throw std::invalid_argument("adversary: target " + std::to_string(target) +
                                " out of range [0, " + std::to_string(m) + ")");
  }
}

double relative_error(const Eigen::VectorXd& inferred, const Eigen::VectorXd& truth) {
  return (inferred - truth).norm() / std::max(truth.norm(), kErrorFloor);
}

}  // namespace

AttackObservation make_observation(const Trajectory& trajectory, long k, int target,
                                   AdversaryMode mode) {
  require_full_log(trajectory);
  check_target(trajectory, target);
  const long rounds = static_cast<long>(trajectory.rounds.size());
  if (k < 0 || k >= rounds) {
    throw std::invalid_argument("adversary: round " + std::to_string(k) +
                                " out of range [0, " + std::to_string(rounds) + ")");
  }
  const RoundLog& log = trajectory.rounds[static_cast<std::size_t>(k)];

  AttackObservation obs;
  obs.k = k;
  obs.target = target;
  obs.mode = mode;
  obs.run_quantizer = trajectory.meta.quantizer.kind;
  obs.broadcasts = log.broadcast;
  obs.weights = trajectory.weights;
  obs.epsilon = log.epsilon;
  obs.lambda = log.lambda;

  const bool quantized_run = obs.run_quantizer == QuantizerKind::Ternary;
  if (!quantized_run || mode == AdversaryMode::HonestButCurious) {
    // States are either broadcast in the clear or granted by the threat model.
    obs.target_state_k = trajectory.states[static_cast<std::size_t>(k)].row(target).transpose();
    obs.target_state_k1 =
        trajectory.states[static_cast<std::size_t>(k + 1)].row(target).transpose();
  } else {
    // Wire-only view: both endpoints exist solely as quantized messages.
    if (k + 1 >= rounds) {
      throw std::runtime_error("adversary: round " + std::to_string(k) +
                               " needs the round-" + std::to_string(k + 1) +
                               " broadcast, which was never sent");
    }
    obs.target_state_k = log.broadcast.row(target).transpose();
    obs.target_state_k1 =
        trajectory.rounds[static_cast<std::size_t>(k + 1)].broadcast.row(target).transpose();
  }
  return obs;
}

std::vector<long> observable_rounds(const Trajectory& trajectory, AdversaryMode mode) {
  require_full_log(trajectory);
  long rounds = static_cast<long>(trajectory.rounds.size());
  if (trajectory.meta.quantizer.kind == QuantizerKind::Ternary &&
      mode == AdversaryMode::Eavesdropper) {
    --rounds;  // the final round's successor broadcast does not exist
  }
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(std::max(rounds, 0L)));
  for (long k = 0; k < rounds; ++k) out.push_back(k);
  return out;
}

Eigen::VectorXd infer_gradient(const AttackObservation& observation) {
  const double eta = observation.epsilon * observation.lambda;
  if (!(eta >= kEtaFloor)) {
    throw std::runtime_error("adversary: step product " + std::to_string(eta) +
                             " is too small to invert (< 1e-12)");
  }
  const int m = static_cast<int>(observation.weights.rows());
  const Eigen::Index d = observation.target_state_k.size();
  const int i = observation.target;
  // Same neighbor order and arithmetic as the engine's update.
  Eigen::VectorXd coupling = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < m; ++j) {
    const double wij = observation.weights(i, j);
    if (wij > 0.0) {
      coupling += wij * (observation.broadcasts.row(j).transpose() - observation.target_state_k);
    }
  }
  return (observation.target_state_k + observation.epsilon * coupling -
          observation.target_state_k1) /
         eta;
}

Eigen::VectorXd infer_gradient_baseline(const AttackObservation& observation) {
  if (observation.run_quantizer != QuantizerKind::Identity) {
    throw std::invalid_argument(
        "adversary: baseline inference expects an identity-quantizer run");
  }
  return infer_gradient(observation);
}

Eigen::VectorXd infer_gradient_quantized(const AttackObservation& observation) {
  if (observation.run_quantizer != QuantizerKind::Ternary) {
    throw std::invalid_argument(
        "adversary: quantized inference expects a ternary-quantizer run");
  }
  return infer_gradient(observation);
}

AttackResult evaluate_attack(const Trajectory& trajectory,
                             const AttackObservation& observation) {
  require_full_log(trajectory);
  AttackResult result;
  result.k = observation.k;
  result.target = observation.target;
  result.mode = observation.mode;
  result.inferred = infer_gradient(observation);
  result.truth = trajectory.rounds[static_cast<std::size_t>(observation.k)]
                     .gradients.row(observation.target)
                     .transpose();
  result.relative_error = relative_error(result.inferred, result.truth);
  return result;
}

std::vector<AttackResult> attack_report(const Trajectory& trajectory, int target,
                                        AdversaryMode mode) {
  std::vector<AttackResult> report;
  for (long k : observable_rounds(trajectory, mode)) {
    report.push_back(evaluate_attack(trajectory, make_observation(trajectory, k, target, mode)));
  }
  return report;
}

NonrecoveryEstimate monte_carlo_nonrecovery(const Trajectory& trajectory, long k, int target,
                                            const QuantizerSpec& quantizer, int redraws,
                                            std::uint64_t seed, AdversaryMode mode) {
  require_full_log(trajectory);
  check_target(trajectory, target);
  if (quantizer.kind != QuantizerKind::Ternary) {
    throw std::invalid_argument("adversary: nonrecovery estimate needs a ternary quantizer");
  }
  if (redraws < 2) {
    throw std::invalid_argument("adversary: need at least two redraws");
  }
  if (k < 0 || k + 1 >= static_cast<long>(trajectory.states.size())) {
    throw std::invalid_argument("adversary: round " + std::to_string(k) +
                                " has no recorded successor state");
  }
  const Eigen::MatrixXd& x_k = trajectory.states[static_cast<std::size_t>(k)];
  const Eigen::MatrixXd& x_k1 = trajectory.states[static_cast<std::size_t>(k + 1)];
  const RoundLog& log = trajectory.rounds[static_cast<std::size_t>(k)];
  const int m = static_cast<int>(x_k.rows());

  double sum = 0.0;
  double sum_sq = 0.0;
  for (int t = 0; t < redraws; ++t) {
    RngStream stream = derive_stream(seed, "nonrecovery-redraw", static_cast<std::uint64_t>(t));
    AttackObservation obs;
    obs.k = k;
    obs.target = target;
    obs.mode = mode;
    obs.run_quantizer = QuantizerKind::Ternary;
    obs.weights = trajectory.weights;
    obs.epsilon = log.epsilon;
    obs.lambda = log.lambda;
    obs.broadcasts.resize(m, x_k.cols());
    for (int i = 0; i < m; ++i) {
      obs.broadcasts.row(i) =
          quantize(quantizer, x_k.row(i).transpose(), stream).transpose();
    }
    if (mode == AdversaryMode::HonestButCurious) {
      obs.target_state_k = x_k.row(target).transpose();
      obs.target_state_k1 = x_k1.row(target).transpose();
    } else {
      obs.target_state_k = obs.broadcasts.row(target).transpose();
      obs.target_state_k1 = quantize(quantizer, x_k1.row(target).transpose(), stream);
    }
    const double err =
        relative_error(infer_gradient(obs), log.gradients.row(target).transpose());
    sum += err;
    sum_sq += err * err;
  }
  NonrecoveryEstimate estimate;
  estimate.redraws = redraws;
  estimate.mean_relative_error = sum / redraws;
  const double variance =
      std::max(0.0, (sum_sq - sum * sum / redraws) / static_cast<double>(redraws - 1));
  estimate.std_error = std::sqrt(variance / redraws);
  return estimate;
}

long first_redrawable_round(const Trajectory& trajectory, double r, long from) {
  require_full_log(trajectory);
  const long rounds =
      std::min(static_cast<long>(trajectory.rounds.size()),
               static_cast<long>(trajectory.states.size()) - 1);
  for (long k = std::max(from, 0L); k < rounds; ++k) {
    const double lo = trajectory.states[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff();
    const double hi = trajectory.states[static_cast<std::size_t>(k + 1)].cwiseAbs().maxCoeff();
    if (std::max(lo, hi) <= r) return k;
  }
  return -1;
}

}  // namespace dqsgd
