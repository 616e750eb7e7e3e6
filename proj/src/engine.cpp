#include "dqsgd/engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dqsgd {
namespace {

void append_metrics(Trajectory& traj, const NetworkState& state, const Schedule& schedule,
                    const Problem& problem) {
  const double eps = schedule.epsilon_at(state.k);
  const double lam = schedule.lambda_at(state.k);
  traj.epsilons.push_back(eps);
  traj.lambdas.push_back(lam);

  const Eigen::VectorXd xbar = average_state(state.x);
  traj.consensus_error.push_back((state.x.rowwise() - xbar.transpose()).norm());
  if (traj.optimum) {
    traj.optimality_gap.push_back((xbar - *traj.optimum).norm());
  } else {
    traj.optimality_gap.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  traj.avg_grad_norm.push_back(problem.average_gradient(xbar).norm());

  const double weight = eps * lam;
  traj.weighted_state_sum += weight * state.x;
  traj.weight_sum += weight;
}

}  // namespace

AgentStreams make_agent_streams(std::uint64_t master_seed, int agents) {
  if (agents < 1) {
    throw std::invalid_argument("engine: agent count must be positive");
  }
  AgentStreams streams;
  streams.gradient.reserve(static_cast<std::size_t>(agents));
  streams.quantization.reserve(static_cast<std::size_t>(agents));
  for (int i = 0; i < agents; ++i) {
    streams.gradient.push_back(derive_stream(master_seed, "gradient", static_cast<std::uint64_t>(i)));
    streams.quantization.push_back(
        derive_stream(master_seed, "quantization", static_cast<std::uint64_t>(i)));
  }
  return streams;
}

StepResult step(const NetworkState& state, const Topology& topology, const Schedule& schedule,
                const QuantizerSpec& quantizer, const Problem& problem, int batch,
                AgentStreams& streams, double divergence_guard) {
  const int m = topology.size();
  const Eigen::Index d = state.x.cols();
  if (state.x.rows() != m) {
    throw std::invalid_argument("engine: state has " + std::to_string(state.x.rows()) +
                                " rows but the topology has " + std::to_string(m) + " nodes");
  }
  if (problem.agent_count() != m) {
    throw std::invalid_argument("engine: problem has " + std::to_string(problem.agent_count()) +
                                " agents but the topology has " + std::to_string(m) + " nodes");
  }
  if (static_cast<int>(streams.gradient.size()) != m ||
      static_cast<int>(streams.quantization.size()) != m) {
    throw std::invalid_argument("engine: stream count does not match the agent count");
  }

  const double eps = schedule.epsilon_at(state.k);
  const double lam = schedule.lambda_at(state.k);

  StepResult result;
  result.broadcast.resize(m, d);
  result.gradients.resize(m, d);

  // Every agent quantizes once; the same draw serves its broadcast and the
  // q_i side of each neighbor difference.  Threshold violations surface here.
  QuantizeStats qstats;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd xi = state.x.row(i).transpose();
    try {
      result.broadcast.row(i) =
          quantize(quantizer, xi, streams.quantization[static_cast<std::size_t>(i)], &qstats)
              .transpose();
    } catch (const std::domain_error& e) {
      throw std::domain_error("engine: iteration " + std::to_string(state.k) + ", agent " +
                              std::to_string(i) + ": " + e.what());
    }
  }
  result.clamped = qstats.clamped;

  // Gradients are evaluated at the pre-update states.
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd xi = state.x.row(i).transpose();
    result.gradients.row(i) =
        problem.stochastic_gradient(i, xi, batch, streams.gradient[static_cast<std::size_t>(i)])
            .transpose();
  }

  result.next.k = state.k + 1;
  result.next.x.resize(m, d);
  const Eigen::MatrixXd& w = topology.weights();
  for (int i = 0; i < m; ++i) {
    Eigen::RowVectorXd coupling = Eigen::RowVectorXd::Zero(d);
    for (int j : topology.neighbors(i)) {
      coupling += w(i, j) * (result.broadcast.row(j) - result.broadcast.row(i));
    }
    result.next.x.row(i) =
        state.x.row(i) + eps * coupling - (eps * lam) * result.gradients.row(i);
  }

  const double magnitude = result.next.x.cwiseAbs().maxCoeff();
  if (!std::isfinite(magnitude) || magnitude > divergence_guard) {
    throw std::runtime_error("engine: state diverged at iteration " +
                             std::to_string(result.next.k) + " (max |x| = " +
                             std::to_string(magnitude) + ")");
  }
  return result;
}

Trajectory run(const RunSpec& spec) {
  if (!spec.problem) {
    throw std::invalid_argument("engine: run spec has no problem");
  }
  if (spec.iterations < 0) {
    throw std::invalid_argument("engine: iteration count must be nonnegative");
  }
  spec.quantizer.validate();
  const int m = spec.topology.size();
  const int d = spec.problem->dimension();

  Trajectory traj;
  traj.iterations = spec.iterations;
  traj.meta.seed = spec.seed;
  traj.meta.config_digest = spec.config_digest;
  traj.meta.quantizer = spec.quantizer;
  traj.meta.batch = spec.batch;
  traj.meta.conditions = validate(spec.schedule, spec.topology);
  traj.optimum = spec.problem->optimum();
  traj.weights = spec.topology.weights();
  traj.weighted_state_sum = Eigen::MatrixXd::Zero(m, d);

  NetworkState state;
  state.k = 0;
  state.x = Eigen::MatrixXd::Zero(m, d);

  AgentStreams streams = make_agent_streams(spec.seed, m);

  append_metrics(traj, state, spec.schedule, *spec.problem);
  if (spec.logging == LogMode::Full) {
    traj.states.push_back(state.x);
  }

  double quantization_error_sq = 0.0;
  double state_norm_sq = 0.0;

  for (long k = 0; k < spec.iterations; ++k) {
    StepResult sr;
    try {
      sr = step(state, spec.topology, spec.schedule, spec.quantizer, *spec.problem, spec.batch,
                streams, spec.divergence_guard);
    } catch (const std::domain_error& e) {  // quantizer threshold violation
      traj.meta.aborted = true;
      traj.meta.abort_reason = e.what();
      traj.meta.abort_iteration = k;
      break;
    } catch (const std::runtime_error& e) {  // divergence guard
      traj.meta.aborted = true;
      traj.meta.abort_reason = e.what();
      traj.meta.abort_iteration = k;
      break;
    }
    traj.meta.saturation_events += sr.clamped;
    quantization_error_sq += (sr.broadcast - state.x).squaredNorm();
    state_norm_sq += state.x.squaredNorm();

    if (spec.logging == LogMode::Full) {
      RoundLog log;
      log.k = k;
      log.epsilon = spec.schedule.epsilon_at(k);
      log.lambda = spec.schedule.lambda_at(k);
      log.broadcast = sr.broadcast;
      log.gradients = sr.gradients;
      traj.rounds.push_back(std::move(log));
    }

    state = std::move(sr.next);
    append_metrics(traj, state, spec.schedule, *spec.problem);
    if (spec.logging == LogMode::Full) {
      traj.states.push_back(state.x);
    }
  }

  traj.final_state = state.x;
  traj.meta.empirical_beta = state_norm_sq > 0.0 ? quantization_error_sq / state_norm_sq : 0.0;
  return traj;
}

Eigen::VectorXd average_state(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) {
    throw std::invalid_argument("engine: cannot average an empty state");
  }
  return x.colwise().mean();
}

Eigen::VectorXd weighted_average_iterate(const Trajectory& trajectory, int agent) {
  if (trajectory.recorded() == 0) {
    throw std::invalid_argument("engine: trajectory has no recorded states");
  }
  if (!trajectory.states.empty()) {
    const Eigen::Index d = trajectory.states.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    double weight = 0.0;
    for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
      const double w = trajectory.epsilons[k] * trajectory.lambdas[k];
      sum += w * trajectory.states[k].row(agent).transpose();
      weight += w;
    }
    return sum / weight;
  }
  if (agent < 0 || agent >= trajectory.weighted_state_sum.rows()) {
    throw std::invalid_argument("engine: agent index " + std::to_string(agent) + " out of range");
  }
  return trajectory.weighted_state_sum.row(agent).transpose() / trajectory.weight_sum;
}

}  // namespace dqsgd
