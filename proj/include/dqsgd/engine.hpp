#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dqsgd/problems.hpp"
#include "dqsgd/quantizer.hpp"
#include "dqsgd/rng.hpp"
#include "dqsgd/schedule.hpp"
#include "dqsgd/topology.hpp"

namespace dqsgd {

/// Stacked per-agent states: row i is agent i's current point.
struct NetworkState {
  long k = 0;
  Eigen::MatrixXd x;  // m x d
};

/// Everything exchanged and consumed during one synchronous round.
/// `broadcast` is public wire traffic; `gradients` is private per-agent data
/// retained for evaluation only and never handed to attack code.
struct RoundLog {
  long k = 0;
  double epsilon = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd broadcast;  // m x d, entries in {-r, 0, +r} for ternary runs
  Eigen::MatrixXd gradients;  // m x d
};

enum class LogMode { Metrics, Full };

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string config_digest;
  QuantizerSpec quantizer;
  int batch = 1;
  long saturation_events = 0;
  // Measured E||Q(x) - x||^2 / ||x||^2 over the whole run; the variance of
  // this quantizer is input dependent, so the factor is reported per run
  // rather than assumed.
  double empirical_beta = 0.0;
  ConditionReport conditions;
  bool aborted = false;
  std::string abort_reason;
  long abort_iteration = -1;
};

/// One run's recorded output.  Metric vectors have one entry per recorded
/// state (iterations + 1 when the run completes); `rounds` and `states` are
/// populated only in LogMode::Full.
struct Trajectory {
  long iterations = 0;  // requested iteration count
  std::vector<double> epsilons;
  std::vector<double> lambdas;
  std::vector<double> consensus_error;   // || x^k - 1 xbar^T ||_F
  std::vector<double> optimality_gap;    // || xbar^k - x* ||, NaN when x* unknown
  std::vector<double> avg_grad_norm;     // || (1/m) sum_i grad f_i(xbar^k) ||
  std::vector<Eigen::MatrixXd> states;   // x^0 .. x^t (Full mode)
  std::vector<RoundLog> rounds;          // one per executed iteration (Full mode)
  Eigen::MatrixXd final_state;
  Eigen::MatrixXd weights;               // coupling matrix W of the run
  // Running sums over recorded states: sum_k eps_k*lam_k*x^k and its weight,
  // kept in every log mode so weighted averages survive Metrics-only runs.
  Eigen::MatrixXd weighted_state_sum;
  double weight_sum = 0.0;
  std::optional<Eigen::VectorXd> optimum;
  RunMetadata meta;

  long recorded() const { return static_cast<long>(epsilons.size()); }
};

/// Per-agent random streams.  Gradient and quantization draws come from
/// disjoint substreams of one master seed, so two runs that share the seed
/// but differ in quantizer consume identical gradient randomness.
struct AgentStreams {
  std::vector<RngStream> gradient;
  std::vector<RngStream> quantization;
};

AgentStreams make_agent_streams(std::uint64_t master_seed, int agents);

struct StepResult {
  NetworkState next;
  Eigen::MatrixXd broadcast;  // what each agent put on the wire this round
  Eigen::MatrixXd gradients;  // stochastic gradients consumed this round
  long clamped = 0;
};

/// One synchronous round:
///   x_i  <-  x_i + eps_k * sum_j w_ij (q_j - q_i) - eps_k * lam_k * g_i
/// where q = quantize(x) is drawn once per agent and reused by every
/// neighbor term, and g_i is evaluated at the pre-update state.  Throws on
/// quantizer threshold violations and when the next state exceeds the
/// divergence guard.
StepResult step(const NetworkState& state, const Topology& topology,
                const Schedule& schedule, const QuantizerSpec& quantizer,
                const Problem& problem, int batch, AgentStreams& streams,
                double divergence_guard = 1e12);

struct RunSpec {
  Topology topology;
  Schedule schedule;
  QuantizerSpec quantizer;
  std::shared_ptr<const Problem> problem;
  long iterations = 0;
  std::uint64_t seed = 1;
  int batch = 1;
  LogMode logging = LogMode::Metrics;
  double divergence_guard = 1e12;
  std::string config_digest;
};

/// Runs the full protocol from x^0 = 0.  Step-size admissibility is checked
/// and attached to the metadata but does not block the run; quantizer
/// threshold violations and divergence turn into an aborted trajectory that
/// keeps everything recorded so far.
Trajectory run(const RunSpec& spec);

/// Column mean of the stacked states: the network average point.
Eigen::VectorXd average_state(const Eigen::MatrixXd& x);

/// Step-size-weighted average of agent p's recorded states:
///   sum_k eps_k lam_k x_p^k / sum_k eps_k lam_k.
Eigen::VectorXd weighted_average_iterate(const Trajectory& trajectory, int agent);

}  // namespace dqsgd
