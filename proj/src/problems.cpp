#include "dqsgd/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace dqsgd {
namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kOptimumResidualBound = 1e-10;
constexpr int kMaxInstanceAttempts = 32;

void check_agent_index(int agent, int count) {
  if (agent < 0 || agent >= count) {
    throw std::invalid_argument("problem: agent index " + std::to_string(agent) +
                                " out of range [0, " + std::to_string(count) + ")");
  }
}

}  // namespace

Eigen::VectorXd Problem::average_gradient(const Eigen::VectorXd& x) const {
  const int m = agent_count();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension());
  for (int i = 0; i < m; ++i) {
    g += exact_gradient(i, x);
  }
  return g / static_cast<double>(m);
}

SensorEstimationProblem::SensorEstimationProblem(std::vector<AgentData> agents)
    : agents_(std::move(agents)) {
  if (agents_.empty()) {
    throw std::invalid_argument("sensor problem: need at least one agent");
  }
  d_ = static_cast<int>(agents_.front().measurement.cols());
  n_ = static_cast<int>(agents_.front().observations.cols());
  if (d_ < 1 || n_ < 1) {
    throw std::invalid_argument("sensor problem: dimension and measurement count must be positive");
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentData& a = agents_[i];
    if (a.measurement.cols() != d_ || a.observations.cols() != n_ ||
        a.observations.rows() != a.measurement.rows()) {
      throw std::invalid_argument("sensor problem: inconsistent shapes for agent " +
                                  std::to_string(i));
    }
    if (!(a.regularization >= 0.0) || !std::isfinite(a.regularization)) {
      throw std::invalid_argument("sensor problem: regularization must be nonnegative");
    }
  }
  mtm_.reserve(agents_.size());
  mt_obs_.reserve(agents_.size());
  mt_obs_mean_.reserve(agents_.size());
  for (const AgentData& a : agents_) {
    mtm_.push_back(a.measurement.transpose() * a.measurement);
    mt_obs_.push_back(a.measurement.transpose() * a.observations);  // d x n
    mt_obs_mean_.push_back(mt_obs_.back().rowwise().mean());
  }
}

Eigen::VectorXd SensorEstimationProblem::exact_gradient(int agent,
                                                        const Eigen::VectorXd& x) const {
  check_agent_index(agent, agent_count());
  if (x.size() != d_) {
    throw std::invalid_argument("sensor problem: point has dimension " +
                                std::to_string(x.size()) + ", expected " + std::to_string(d_));
  }
  const double reg = agents_[agent].regularization;
  return 2.0 * (mtm_[agent] * x - mt_obs_mean_[agent]) + 2.0 * reg * x;
}

Eigen::VectorXd SensorEstimationProblem::stochastic_gradient(int agent,
                                                             const Eigen::VectorXd& x,
                                                             int batch,
                                                             RngStream& rng) const {
  check_agent_index(agent, agent_count());
  if (batch < 1 || batch > n_) {
    throw std::invalid_argument("sensor problem: batch size " + std::to_string(batch) +
                                " must lie in [1, " + std::to_string(n_) + "]");
  }
  if (batch == n_) {
    return exact_gradient(agent, x);  // same arithmetic path, no randomness
  }
  // Partial Fisher-Yates over measurement indices: uniform without replacement.
  thread_local std::vector<int> indices;
  indices.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) indices[static_cast<std::size_t>(j)] = j;
  Eigen::VectorXd mt_batch_mean = Eigen::VectorXd::Zero(d_);
  for (int j = 0; j < batch; ++j) {
    const int pick = j + rng.uniform_int(n_ - j);
    std::swap(indices[static_cast<std::size_t>(j)], indices[static_cast<std::size_t>(pick)]);
    mt_batch_mean += mt_obs_[agent].col(indices[static_cast<std::size_t>(j)]);
  }
  mt_batch_mean /= static_cast<double>(batch);
  const double reg = agents_[agent].regularization;
  return 2.0 * (mtm_[agent] * x - mt_batch_mean) + 2.0 * reg * x;
}

double SensorEstimationProblem::f_value(int agent, const Eigen::VectorXd& x) const {
  check_agent_index(agent, agent_count());
  const AgentData& a = agents_[agent];
  const Eigen::VectorXd predicted = a.measurement * x;
  const double residual = (a.observations.colwise() - predicted).squaredNorm();
  return residual / static_cast<double>(n_) + a.regularization * x.squaredNorm();
}

Eigen::VectorXd SensorEstimationProblem::closed_form_optimum() const {
  const int m = agent_count();
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(d_, d_);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d_);
  for (int i = 0; i < m; ++i) {
    normal += mtm_[i];
    normal += agents_[i].regularization * Eigen::MatrixXd::Identity(d_, d_);
    rhs += mt_obs_mean_[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normal);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sensor problem: eigenvalue computation failed");
  }
  const Eigen::VectorXd& eigenvalues = solver.eigenvalues();
  const double scale = std::max(eigenvalues.cwiseAbs().maxCoeff(), 1.0);
  int rank = 0;
  for (int i = 0; i < d_; ++i) {
    if (eigenvalues(i) > kRankTolerance * scale) ++rank;
  }
  if (rank < d_) {
    throw std::runtime_error("sensor problem: aggregate normal matrix is rank deficient (rank " +
                             std::to_string(rank) + " of " + std::to_string(d_) + ")");
  }
  const Eigen::VectorXd theta = solver.eigenvectors() *
                                (solver.eigenvectors().transpose() * rhs).cwiseQuotient(eigenvalues);
  // Aggregate first-order condition; failure here means ill conditioning.
  Eigen::VectorXd aggregate = Eigen::VectorXd::Zero(d_);
  for (int i = 0; i < m; ++i) {
    aggregate += exact_gradient(i, theta);
  }
  if (aggregate.norm() > kOptimumResidualBound * std::max(1.0, rhs.norm())) {
    throw std::runtime_error("sensor problem: optimum residual " +
                             std::to_string(aggregate.norm()) + " exceeds 1e-10");
  }
  return theta;
}

std::optional<Eigen::VectorXd> SensorEstimationProblem::optimum() const {
  if (!cached_optimum_) {
    cached_optimum_ = closed_form_optimum();
  }
  return cached_optimum_;
}

double SensorEstimationProblem::gradient_noise_bound(int batch) const {
  if (batch < 1 || batch > n_) {
    throw std::invalid_argument("sensor problem: batch size " + std::to_string(batch) +
                                " must lie in [1, " + std::to_string(n_) + "]");
  }
  if (batch == n_ || n_ == 1) return 0.0;
  // The only randomness is the sampled mean of M^T z_ij, so the gradient
  // variance is 4x the without-replacement variance of that mean.
  double worst = 0.0;
  for (int i = 0; i < agent_count(); ++i) {
    const Eigen::MatrixXd centered = mt_obs_[i].colwise() - mt_obs_mean_[i];
    const double population = centered.squaredNorm() / static_cast<double>(n_);
    const double correction = static_cast<double>(n_ - batch) / static_cast<double>(n_ - 1);
    worst = std::max(worst, 4.0 * population * correction / static_cast<double>(batch));
  }
  return worst;
}

std::shared_ptr<SensorEstimationProblem> make_sensor_problem(const SensorParams& params) {
  if (params.m < 1 || params.s < 1 || params.d < 1 || params.n < 1) {
    throw std::invalid_argument("sensor problem: m, s, d, n must all be positive");
  }
  if (!(params.noise_scale >= 0.0)) {
    throw std::invalid_argument("sensor problem: noise_scale must be nonnegative");
  }
  const double mscale = params.measurement_scale > 0.0
                            ? params.measurement_scale
                            : 1.0 / std::sqrt(static_cast<double>(params.s));

  for (int attempt = 0; attempt < kMaxInstanceAttempts; ++attempt) {
    const std::uint64_t used_seed = params.seed + static_cast<std::uint64_t>(attempt);
    RngStream rng = derive_stream(used_seed, "sensor-instance", 0);

    Eigen::VectorXd theta_true(params.d);
    for (int j = 0; j < params.d; ++j) theta_true(j) = rng.uniform(-1.0, 1.0);

    std::vector<SensorEstimationProblem::AgentData> agents;
    agents.reserve(static_cast<std::size_t>(params.m));
    for (int i = 0; i < params.m; ++i) {
      SensorEstimationProblem::AgentData a;
      a.regularization = params.regularization;
      a.measurement.resize(params.s, params.d);
      for (int row = 0; row < params.s; ++row) {
        for (int col = 0; col < params.d; ++col) {
          a.measurement(row, col) = mscale * rng.normal();
        }
      }
      a.observations.resize(params.s, params.n);
      const Eigen::VectorXd clean = a.measurement * theta_true;
      for (int j = 0; j < params.n; ++j) {
        for (int row = 0; row < params.s; ++row) {
          a.observations(row, j) = clean(row) + params.noise_scale * rng.uniform01();
        }
      }
      agents.push_back(std::move(a));
    }

    // Aggregate normal matrix must be positive definite for the closed-form
    // optimum to exist; re-roll the seed otherwise.
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(params.d, params.d);
    for (const auto& a : agents) {
      normal += a.measurement.transpose() * a.measurement;
      normal += a.regularization * Eigen::MatrixXd::Identity(params.d, params.d);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normal, Eigen::EigenvaluesOnly);
    const double floor = 1e-8 * std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
    if (solver.info() != Eigen::Success || solver.eigenvalues()(0) <= floor) {
      continue;
    }

    auto problem = std::make_shared<SensorEstimationProblem>(std::move(agents));
    SensorEstimationProblem::Provenance prov;
    prov.requested_seed = params.seed;
    prov.used_seed = used_seed;
    prov.attempts = attempt + 1;
    prov.theta_true = theta_true;
    prov.noise_scale = params.noise_scale;
    prov.measurement_scale = mscale;
    problem->provenance_ = std::move(prov);
    return problem;
  }
  throw std::runtime_error("sensor problem: failed to draw a full-rank instance after " +
                           std::to_string(kMaxInstanceAttempts) + " attempts");
}

NonconvexToyProblem::NonconvexToyProblem(std::vector<Eigen::MatrixXd> quadratics,
                                         std::vector<double> ripple, double sigma)
    : quadratics_(std::move(quadratics)), ripple_(std::move(ripple)), sigma_(sigma) {
  if (quadratics_.empty() || quadratics_.size() != ripple_.size()) {
    throw std::invalid_argument("toy problem: need matching quadratic and ripple lists");
  }
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw std::invalid_argument("toy problem: sigma must be nonnegative");
  }
  d_ = static_cast<int>(quadratics_.front().rows());
  for (const Eigen::MatrixXd& q : quadratics_) {
    if (q.rows() != d_ || q.cols() != d_ || !q.isApprox(q.transpose(), 1e-12)) {
      throw std::invalid_argument("toy problem: quadratics must be symmetric d x d");
    }
  }
}

Eigen::VectorXd NonconvexToyProblem::exact_gradient(int agent, const Eigen::VectorXd& x) const {
  check_agent_index(agent, agent_count());
  if (x.size() != d_) {
    throw std::invalid_argument("toy problem: point has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(d_));
  }
  return quadratics_[agent] * x + ripple_[agent] * x.array().cos().matrix();
}

Eigen::VectorXd NonconvexToyProblem::stochastic_gradient(int agent, const Eigen::VectorXd& x,
                                                         int batch, RngStream& rng) const {
  if (batch < 1) {
    throw std::invalid_argument("toy problem: batch size must be positive");
  }
  Eigen::VectorXd g = exact_gradient(agent, x);
  const double per_axis = sigma_ / std::sqrt(static_cast<double>(d_));
  for (int j = 0; j < d_; ++j) {
    g(j) += per_axis * rng.normal();
  }
  return g;
}

double NonconvexToyProblem::f_value(int agent, const Eigen::VectorXd& x) const {
  check_agent_index(agent, agent_count());
  return 0.5 * x.dot(quadratics_[agent] * x) + ripple_[agent] * x.array().sin().sum();
}

std::shared_ptr<NonconvexToyProblem> make_nonconvex_problem(const ToyParams& params) {
  if (params.m < 1 || params.d < 1) {
    throw std::invalid_argument("toy problem: m and d must be positive");
  }
  RngStream rng = derive_stream(params.seed, "toy-instance", 0);
  std::vector<Eigen::MatrixXd> quadratics;
  std::vector<double> ripple;
  quadratics.reserve(static_cast<std::size_t>(params.m));
  ripple.reserve(static_cast<std::size_t>(params.m));
  for (int i = 0; i < params.m; ++i) {
    Eigen::MatrixXd a(params.d, params.d);
    for (int r = 0; r < params.d; ++r) {
      for (int c = 0; c < params.d; ++c) a(r, c) = rng.normal();
    }
    Eigen::MatrixXd q = a.transpose() * a;  // symmetric PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q, Eigen::EigenvaluesOnly);
    const double top = solver.eigenvalues().maxCoeff();
    if (top > 0.0) q *= 2.0 / top;  // spectral norm 2 keeps unit steps stable
    quadratics.push_back(std::move(q));
    ripple.push_back(params.ripple * (0.5 + rng.uniform01()));
  }
  return std::make_shared<NonconvexToyProblem>(std::move(quadratics), std::move(ripple),
                                               params.sigma);
}

}  // namespace dqsgd
