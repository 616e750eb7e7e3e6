#include "dqsgd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace dqsgd {
namespace {

constexpr double kConnectivityFloor = 1e-10;

// Breadth-first search from node 0; returns the reached set.
std::vector<bool> reachable_from_zero(const Eigen::MatrixXd& w) {
  const int m = static_cast<int>(w.rows());
  std::vector<bool> seen(m, false);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < m; ++v) {
      if (!seen[v] && w(u, v) > 0.0) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

std::string component_string(const std::vector<bool>& in_component, bool value) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (std::size_t i = 0; i < in_component.size(); ++i) {
    if (in_component[i] == value) {
      if (!first) out << ", ";
      out << i;
      first = false;
    }
  }
  out << '}';
  return out.str();
}

}  // namespace

Topology::Topology(Eigen::MatrixXd w) : w_(std::move(w)) {
  const int m = size();
  degrees_ = w_.rowwise().sum();
  laplacian_ = Eigen::MatrixXd(degrees_.asDiagonal()) - w_;
  neighbors_.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (w_(i, j) > 0.0) neighbors_[i].push_back(j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("topology: Laplacian eigenvalue computation failed");
  }
  algebraic_connectivity_ = solver.eigenvalues()(1);
}

Topology Topology::from_weights(Eigen::MatrixXd W) {
  if (W.rows() != W.cols()) {
    throw std::invalid_argument("topology: weight matrix must be square");
  }
  const int m = static_cast<int>(W.rows());
  if (m < 2) {
    throw std::invalid_argument("topology: need at least two nodes");
  }
  for (int i = 0; i < m; ++i) {
    if (W(i, i) != 0.0) {
      throw std::invalid_argument("topology: diagonal must be zero (node " +
                                  std::to_string(i) + ")");
    }
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(W(i, j)) || W(i, j) < 0.0) {
        throw std::invalid_argument("topology: weights must be finite and nonnegative");
      }
      if (W(i, j) != W(j, i)) {
        throw std::invalid_argument("topology: weight matrix must be symmetric (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  const std::vector<bool> seen = reachable_from_zero(W);
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::invalid_argument(
        "topology: graph is disconnected; component " + component_string(seen, true) +
        " has no edge to " + component_string(seen, false));
  }
  Topology t(std::move(W));
  if (t.algebraic_connectivity_ <= kConnectivityFloor) {
    throw std::invalid_argument(
        "topology: graph is numerically disconnected (algebraic connectivity " +
        std::to_string(t.algebraic_connectivity_) + " <= 1e-10)");
  }
  return t;
}

Topology Topology::metropolis(const Eigen::MatrixXi& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("topology: adjacency matrix must be square");
  }
  const int m = static_cast<int>(adjacency.rows());
  Eigen::VectorXi degree = Eigen::VectorXi::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (adjacency(i, i) != 0) {
      throw std::invalid_argument("topology: self-loops are not allowed (node " +
                                  std::to_string(i) + ")");
    }
    for (int j = 0; j < m; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) {
        throw std::invalid_argument("topology: adjacency matrix must be symmetric (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (adjacency(i, j) != 0) ++degree(i);
    }
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (adjacency(i, j) != 0) {
        // One shared value per edge keeps W exactly symmetric.
        const double wij = 1.0 / (1.0 + std::max(degree(i), degree(j)));
        w(i, j) = wij;
        w(j, i) = wij;
      }
    }
  }
  return from_weights(std::move(w));
}

Topology Topology::metropolis(int m, const std::vector<std::pair<int, int>>& edges) {
  if (m < 2) {
    throw std::invalid_argument("topology: need at least two nodes");
  }
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(m, m);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= m || b >= m) {
      throw std::invalid_argument("topology: edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") is out of range for m = " +
                                  std::to_string(m));
    }
    if (a == b) {
      throw std::invalid_argument("topology: self-loops are not allowed (node " +
                                  std::to_string(a) + ")");
    }
    adjacency(a, b) = 1;
    adjacency(b, a) = 1;
  }
  return metropolis(adjacency);
}

double Topology::algebraic_connectivity() const {
  if (algebraic_connectivity_ <= kConnectivityFloor) {
    throw std::runtime_error(
        "topology: graph is numerically disconnected (algebraic connectivity " +
        std::to_string(algebraic_connectivity_) + " <= 1e-10)");
  }
  return algebraic_connectivity_;
}

Eigen::MatrixXd Topology::mixing_matrix(double epsilon) const {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("topology: mixing step size must be positive");
  }
  const double bound = 1.0 / max_degree();
  if (epsilon * max_degree() > 1.0) {
    throw std::invalid_argument(
        "topology: mixing step size " + std::to_string(epsilon) +
        " violates the stability bound epsilon <= 1/max_degree = " +
        std::to_string(bound));
  }
  const int m = size();
  return Eigen::MatrixXd::Identity(m, m) - epsilon * laplacian_;
}

Topology topology_preset(const std::string& name) {
  if (name == "fig1") {
    // Five-node ring with one chord; degrees 2..3, all Metropolis degrees < 1.
    return Topology::metropolis(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}});
  }
  if (name == "ring5") {
    return Topology::metropolis(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  }
  if (name == "complete5") {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) edges.emplace_back(i, j);
    }
    return Topology::metropolis(5, edges);
  }
  if (name == "path3") {
    return Topology::metropolis(3, {{0, 1}, {1, 2}});
  }
  throw std::invalid_argument("topology: unknown preset '" + name +
                              "' (known: fig1, ring5, complete5, path3)");
}

}  // namespace dqsgd
