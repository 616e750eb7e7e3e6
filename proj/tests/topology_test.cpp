#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dqsgd/rng.hpp"
#include "dqsgd/topology.hpp"
#include "test_util.hpp"

using dqsgd::Topology;

namespace {

Eigen::MatrixXi ring_adjacency(int m) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const int j = (i + 1) % m;
    a(i, j) = 1;
    a(j, i) = 1;
  }
  return a;
}

// Random connected graph: a random spanning tree plus a few extra edges.
Eigen::MatrixXi random_connected_adjacency(int m, dqsgd::RngStream& rng) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    const int j = rng.uniform_int(i);
    a(i, j) = 1;
    a(j, i) = 1;
  }
  const int extra = rng.uniform_int(m);
  for (int e = 0; e < extra; ++e) {
    const int i = rng.uniform_int(m);
    const int j = rng.uniform_int(m);
    if (i != j) {
      a(i, j) = 1;
      a(j, i) = 1;
    }
  }
  return a;
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("two nodes: edge weight is one half and connectivity is one") {
    const Topology t = Topology::metropolis(2, {{0, 1}});
    CHECK(t.size() == 2);
    CHECK(t.weights()(0, 1) == 0.5);
    CHECK(t.weights()(1, 0) == 0.5);
    CHECK(t.weights()(0, 0) == 0.0);
    CHECK(t.max_degree() == 0.5);
    CHECK(t.algebraic_connectivity() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("three-node path: weights 1/3 and connectivity 1/3") {
    const Topology t = dqsgd::topology_preset("path3");
    CHECK(t.size() == 3);
    CHECK(t.weights()(0, 1) == 1.0 / 3.0);
    CHECK(t.weights()(1, 2) == 1.0 / 3.0);
    CHECK(t.weights()(0, 2) == 0.0);
    // Path Laplacian eigenvalues are {0, 1, 3}, all scaled by the 1/3 weight.
    CHECK(t.algebraic_connectivity() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("five-node ring: connectivity matches the circulant closed form") {
    const Topology t = dqsgd::topology_preset("ring5");
    CHECK(t.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(t.degree(i) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    const double expected = (2.0 / 3.0) * (1.0 - std::cos(2.0 * std::numbers::pi / 5.0));
    CHECK(t.algebraic_connectivity() == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("complete graph on five nodes: connectivity is one") {
    const Topology t = dqsgd::topology_preset("complete5");
    CHECK(t.size() == 5);
    CHECK(t.weights()(0, 1) == 0.2);
    CHECK(t.max_degree() == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(t.algebraic_connectivity() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("five-node benchmark preset: hand-computed weights") {
    const Topology t = dqsgd::topology_preset("fig1");
    CHECK(t.size() == 5);
    // Edges 0-1, 1-2, 2-3, 3-4, 4-0, 1-3; node degrees 2,3,2,3,2.
    CHECK(t.weights()(0, 1) == 0.25);
    CHECK(t.weights()(1, 2) == 0.25);
    CHECK(t.weights()(1, 3) == 0.25);
    CHECK(t.weights()(2, 3) == 0.25);
    CHECK(t.weights()(3, 4) == 0.25);
    CHECK(t.weights()(0, 4) == 1.0 / 3.0);
    CHECK(t.weights()(0, 2) == 0.0);
    CHECK(t.degree(1) == 0.75);
    CHECK(t.max_degree() == 0.75);
    CHECK(t.neighbors(1) == std::vector<int>{0, 2, 3});
    CHECK(t.algebraic_connectivity() > 0.0);
  }

  TEST_CASE("unknown preset names are rejected with the known list") {
    CHECK_THROWS_CONTAINS(dqsgd::topology_preset("ring6"), std::invalid_argument,
                          "unknown preset 'ring6'");
    CHECK_THROWS_CONTAINS(dqsgd::topology_preset("ring6"), std::invalid_argument, "fig1");
  }

  TEST_CASE("random connected graphs keep every structural invariant") {
    dqsgd::RngStream rng = dqsgd::derive_stream(7, "topology-prop", 0);
    for (int trial = 0; trial < 50; ++trial) {
      const int m = 4 + rng.uniform_int(9);
      const Topology t = Topology::metropolis(random_connected_adjacency(m, rng));
      const Eigen::MatrixXd& w = t.weights();

      for (int i = 0; i < m; ++i) {
        CHECK(w(i, i) == 0.0);
        for (int j = 0; j < m; ++j) {
          CHECK(w(i, j) == w(j, i));  // exact, by construction from one value
          CHECK(w(i, j) >= 0.0);
        }
        CHECK(t.degree(i) < 1.0);  // Metropolis rows always sum below one
      }
      CHECK(t.max_degree() < 1.0);

      // The Laplacian annihilates the constant vector.
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
      CHECK((t.laplacian() * ones).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK(t.algebraic_connectivity() > 0.0);

      // At the stability bound the mixing matrix is doubly stochastic with
      // nonnegative entries.
      const Eigen::MatrixXd mix = t.mixing_matrix(1.0 / t.max_degree());
      CHECK((mix.rowwise().sum() - ones).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(mix.minCoeff() >= -1e-15);
    }
  }

  TEST_CASE("mixing matrix: admissible step accepted, bound violation named") {
    const Topology k2 = Topology::metropolis(2, {{0, 1}});
    const Eigen::MatrixXd mix = k2.mixing_matrix(2.0);  // exactly at the bound
    CHECK(mix(0, 0) == 0.0);
    CHECK(mix(0, 1) == 1.0);
    CHECK(mix(1, 0) == 1.0);
    CHECK_THROWS_CONTAINS(k2.mixing_matrix(2.1), std::invalid_argument, "stability bound");
    CHECK_THROWS_CONTAINS(k2.mixing_matrix(0.0), std::invalid_argument, "must be positive");

    const Topology ring = dqsgd::topology_preset("ring5");
    CHECK_NOTHROW(ring.mixing_matrix(1.5));
    CHECK_THROWS_CONTAINS(ring.mixing_matrix(1.51), std::invalid_argument, "stability bound");
  }

  TEST_CASE("weight-matrix validation names the defect") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 2);
    CHECK_THROWS_CONTAINS(Topology::from_weights(w), std::invalid_argument, "square");

    CHECK_THROWS_CONTAINS(Topology::from_weights(Eigen::MatrixXd::Zero(1, 1)),
                          std::invalid_argument, "at least two nodes");

    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = 0.1;
    diag(0, 1) = diag(1, 0) = 0.4;
    CHECK_THROWS_CONTAINS(Topology::from_weights(diag), std::invalid_argument,
                          "diagonal must be zero");

    Eigen::MatrixXd negative = Eigen::MatrixXd::Zero(2, 2);
    negative(0, 1) = negative(1, 0) = -0.5;
    CHECK_THROWS_CONTAINS(Topology::from_weights(negative), std::invalid_argument,
                          "finite and nonnegative");

    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(2, 2);
    asym(0, 1) = 0.5;
    asym(1, 0) = 0.25;
    CHECK_THROWS_CONTAINS(Topology::from_weights(asym), std::invalid_argument, "symmetric");

    Eigen::MatrixXd split = Eigen::MatrixXd::Zero(3, 3);
    split(0, 1) = split(1, 0) = 0.5;
    CHECK_THROWS_CONTAINS(Topology::from_weights(split), std::invalid_argument,
                          "component {0, 1} has no edge to {2}");
  }

  TEST_CASE("adjacency validation: self-loops, asymmetry, bad edges") {
    Eigen::MatrixXi loop = ring_adjacency(3);
    loop(1, 1) = 1;
    CHECK_THROWS_CONTAINS(Topology::metropolis(loop), std::invalid_argument, "self-loops");

    Eigen::MatrixXi asym = ring_adjacency(3);
    asym(0, 1) = 0;  // break symmetry
    CHECK_THROWS_CONTAINS(Topology::metropolis(asym), std::invalid_argument, "symmetric");

    CHECK_THROWS_CONTAINS(Topology::metropolis(2, {{0, 2}}), std::invalid_argument, "edge");
    CHECK_THROWS_CONTAINS(Topology::metropolis(3, {{1, 1}}), std::invalid_argument,
                          "self-loops");
    CHECK_THROWS_CONTAINS(Topology::metropolis(1, {}), std::invalid_argument,
                          "at least two nodes");
  }

  TEST_CASE("laplacian equals degree matrix minus weights") {
    const Topology t = dqsgd::topology_preset("fig1");
    const Eigen::MatrixXd expected =
        Eigen::MatrixXd(t.weights().rowwise().sum().asDiagonal()) - t.weights();
    CHECK((t.laplacian() - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}
