#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dqsgd/rng.hpp"

namespace dqsgd {

/// A sum-structured objective f(x) = (1/m) * sum_i f_i(x) where agent i can
/// only evaluate (stochastic) gradients of its own component f_i.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int dimension() const = 0;
  virtual int agent_count() const = 0;

  virtual Eigen::VectorXd exact_gradient(int agent, const Eigen::VectorXd& x) const = 0;

  /// Unbiased estimate of exact_gradient.  `batch` selects the minibatch size
  /// where the component is an empirical risk; implementations must document
  /// how they consume `rng` so paired runs stay stream-aligned.
  virtual Eigen::VectorXd stochastic_gradient(int agent, const Eigen::VectorXd& x,
                                              int batch, RngStream& rng) const = 0;

  virtual double f_value(int agent, const Eigen::VectorXd& x) const = 0;

  /// Minimizer of sum_i f_i when one is available in closed form.
  virtual std::optional<Eigen::VectorXd> optimum() const { return std::nullopt; }

  /// Upper bound on E||g - grad f_i||^2 for the given batch size.
  virtual double gradient_noise_bound(int batch) const = 0;

  /// Average exact gradient (1/m) * sum_i grad f_i(x).
  Eigen::VectorXd average_gradient(const Eigen::VectorXd& x) const;
};

/// Distributed least-squares parameter estimation: agent i holds a
/// measurement matrix M_i (s x d) and n noisy measurements z_ij of an unknown
/// parameter, with component objective
///   f_i(theta) = (1/n) * sum_j ||z_ij - M_i theta||^2 + reg_i * ||theta||^2.
class SensorEstimationProblem : public Problem {
 public:
  struct AgentData {
    Eigen::MatrixXd measurement;    // M_i, s x d
    Eigen::MatrixXd observations;   // z_ij as columns, s x n
    double regularization = 0.0;
  };

  /// Describes how a generated instance came to be.
  struct Provenance {
    std::uint64_t requested_seed = 0;
    std::uint64_t used_seed = 0;
    int attempts = 1;  // > 1 when the seed was re-rolled for rank reasons
    Eigen::VectorXd theta_true;
    double noise_scale = 1.0;
    double measurement_scale = 1.0;
  };

  explicit SensorEstimationProblem(std::vector<AgentData> agents);

  int dimension() const override { return d_; }
  int agent_count() const override { return static_cast<int>(agents_.size()); }

  Eigen::VectorXd exact_gradient(int agent, const Eigen::VectorXd& x) const override;

  /// Averages the gradient over a uniform without-replacement minibatch of
  /// `batch` measurements (1 <= batch <= n).  A full batch reproduces
  /// exact_gradient bit for bit and consumes no randomness; otherwise the
  /// draw consumes exactly `batch` integers from `rng`.
  Eigen::VectorXd stochastic_gradient(int agent, const Eigen::VectorXd& x, int batch,
                                      RngStream& rng) const override;

  double f_value(int agent, const Eigen::VectorXd& x) const override;

  /// Solves the aggregate normal equations
  ///   sum_i (M_i^T M_i + reg_i I) theta = sum_i M_i^T zbar_i
  /// and returns the unique minimizer.  Throws when the aggregate matrix is
  /// rank deficient, naming the numerical rank; the returned point always
  /// satisfies ||sum_i grad f_i|| <= 1e-10.
  Eigen::VectorXd closed_form_optimum() const;

  std::optional<Eigen::VectorXd> optimum() const override;

  double gradient_noise_bound(int batch) const override;

  const AgentData& agent_data(int agent) const { return agents_.at(agent); }
  const std::optional<Provenance>& provenance() const { return provenance_; }

 private:
  friend std::shared_ptr<SensorEstimationProblem> make_sensor_problem(
      const struct SensorParams&);

  std::vector<AgentData> agents_;
  int d_ = 0;
  int n_ = 0;
  // Cached per agent: M^T M, per-measurement M^T z_ij columns, and their mean.
  std::vector<Eigen::MatrixXd> mtm_;
  std::vector<Eigen::MatrixXd> mt_obs_;
  std::vector<Eigen::VectorXd> mt_obs_mean_;
  std::optional<Provenance> provenance_;
  mutable std::optional<Eigen::VectorXd> cached_optimum_;
};

struct SensorParams {
  int m = 5;  // agents
  int s = 3;  // measurement rows per agent
  int d = 2;  // parameter dimension
  int n = 100;  // measurements per agent
  double regularization = 0.01;
  // z_ij = M_i theta_true + noise_scale * U[0,1]^s (componentwise).
  double noise_scale = 1.0;
  // M_i entries are N(0, measurement_scale^2); nonpositive means the default
  // 1/sqrt(s), which calibrates E[M^T M] = I so unit step sizes stay stable.
  double measurement_scale = -1.0;
  std::uint64_t seed = 1;
};

/// Generates a random instance.  theta_true is uniform on [-1, 1]^d.  The
/// aggregate normal matrix is verified positive definite at construction; on
/// failure the seed is re-rolled (recorded in Provenance::attempts).
std::shared_ptr<SensorEstimationProblem> make_sensor_problem(const SensorParams& params);

/// Smooth nonconvex benchmark: f_i(x) = 0.5 * x^T Q_i x + c_i * sum_j sin(x_j)
/// with Q_i symmetric positive semidefinite.  Stochastic gradients add
/// isotropic Gaussian noise with E||noise||^2 = sigma^2 (batch-independent).
class NonconvexToyProblem : public Problem {
 public:
  NonconvexToyProblem(std::vector<Eigen::MatrixXd> quadratics, std::vector<double> ripple,
                      double sigma);

  int dimension() const override { return d_; }
  int agent_count() const override { return static_cast<int>(quadratics_.size()); }

  Eigen::VectorXd exact_gradient(int agent, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd stochastic_gradient(int agent, const Eigen::VectorXd& x, int batch,
                                      RngStream& rng) const override;
  double f_value(int agent, const Eigen::VectorXd& x) const override;
  double gradient_noise_bound(int /*batch*/) const override { return sigma_ * sigma_; }

  const Eigen::MatrixXd& quadratic(int agent) const { return quadratics_.at(agent); }
  double ripple(int agent) const { return ripple_.at(agent); }

 private:
  std::vector<Eigen::MatrixXd> quadratics_;
  std::vector<double> ripple_;
  double sigma_ = 0.0;
  int d_ = 0;
};

struct ToyParams {
  int m = 5;
  int d = 4;
  double sigma = 0.2;   // stochastic-gradient noise scale
  double ripple = 0.1;  // magnitude of the sinusoidal coefficients
  std::uint64_t seed = 1;
};

std::shared_ptr<NonconvexToyProblem> make_nonconvex_problem(const ToyParams& params);

}  // namespace dqsgd
