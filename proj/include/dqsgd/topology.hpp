#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace dqsgd {

/// Undirected communication graph with symmetric nonnegative edge weights and
/// a zero diagonal.  Connectivity is a class invariant: every factory rejects
/// graphs that are not connected, naming the stranded component.
class Topology {
 public:
  /// Builds a topology from an explicit weight matrix.  W must be square,
  /// symmetric, entrywise nonnegative, and zero on the diagonal.
  static Topology from_weights(Eigen::MatrixXd W);

  /// Metropolis weights from a 0/1 adjacency matrix:
  ///   w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, 0 elsewhere.
  static Topology metropolis(const Eigen::MatrixXi& adjacency);

  /// Convenience overload taking an edge list on m nodes.
  static Topology metropolis(int m, const std::vector<std::pair<int, int>>& edges);

  int size() const { return static_cast<int>(w_.rows()); }
  const Eigen::MatrixXd& weights() const { return w_; }

  /// Weighted degree d_ii = sum_j w_ij.
  double degree(int i) const { return degrees_(i); }
  double max_degree() const { return degrees_.maxCoeff(); }

  /// Graph Laplacian D - W.  Row sums vanish to machine precision.
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }

  /// Second-smallest Laplacian eigenvalue.  Strictly positive for any
  /// constructed instance; the accessor re-checks and throws if it ever
  /// falls below 1e-10 (a numerically disconnected graph).
  double algebraic_connectivity() const;

  /// Averaging matrix I - epsilon * L.  Doubly stochastic with nonnegative
  /// entries as long as epsilon * max_degree() <= 1; larger step sizes are
  /// rejected with the admissible bound in the message.
  Eigen::MatrixXd mixing_matrix(double epsilon) const;

  /// Indices j with w_ij > 0, ascending.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }

 private:
  explicit Topology(Eigen::MatrixXd w);

  Eigen::MatrixXd w_;
  Eigen::VectorXd degrees_;
  Eigen::MatrixXd laplacian_;
  std::vector<std::vector<int>> neighbors_;
  double algebraic_connectivity_ = 0.0;
};

/// Named node layouts usable from config files.  "fig1" is a five-node
/// ring-plus-chord stand-in used by the bundled experiment configs.
Topology topology_preset(const std::string& name);

}  // namespace dqsgd
