#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dqsgd/engine.hpp"
#include "dqsgd/problems.hpp"
#include "dqsgd/quantizer.hpp"
#include "dqsgd/schedule.hpp"
#include "dqsgd/topology.hpp"

namespace dqsgd {

/// Either a named preset or an explicit 0/1 adjacency matrix.
struct TopologyConfig {
  std::string preset;  // empty when adjacency is given
  std::optional<Eigen::MatrixXi> adjacency;
};

/// Which benchmark to instantiate; exactly one parameter block is active.
struct ProblemConfig {
  std::string kind;  // "sensor" or "nonconvex"
  SensorParams sensor;
  ToyParams toy;
};

struct RunSection {
  long iterations = 0;
  std::vector<std::uint64_t> seeds = {1};
  int batch = 1;
  LogMode logging = LogMode::Metrics;
  double divergence_guard = 1e12;
};

/// One experiment, as read from a JSON file.  See configs/ for examples.
struct RunConfig {
  TopologyConfig topology;
  ProblemConfig problem;
  QuantizerSpec quantizer;
  Schedule schedule;
  RunSection run;
};

/// Parses a config, rejecting missing, mistyped, and unknown fields with
/// messages that name the offending JSON path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Canonical JSON form: every field present, defaults resolved, keys sorted.
/// Parsing the output yields a config equal to the input.
std::string config_to_json(const RunConfig& config);

/// FNV-1a hash (16 hex digits) of the canonical JSON form.  Two configs get
/// the same digest exactly when every semantic field matches.
std::string config_digest(const RunConfig& config);

Topology build_topology(const TopologyConfig& config);
std::shared_ptr<Problem> build_problem(const ProblemConfig& config);

/// Assembles the full run specification for one seed, cross-checking that
/// the topology and the problem agree on the number of agents.  The config
/// digest is computed here and stamped on the spec.
RunSpec build_run_spec(const RunConfig& config, std::uint64_t seed);

}  // namespace dqsgd
