#include "dqsgd/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dqsgd/rng.hpp"

namespace dqsgd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("config: " + message);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    fail("missing field '" + join(path, key) + "'");
  }
  return *it;
}

void expect_object(const json& value, const std::string& path) {
  if (!value.is_object()) {
    fail("field '" + path + "' must be an object");
  }
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key()) == 0) {
      fail("unknown field '" + join(path, item.key()) + "'");
    }
  }
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) {
    fail("field '" + path + "' must be a number");
  }
  return value.get<double>();
}

double as_positive_number(const json& value, const std::string& path) {
  const double v = as_number(value, path);
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail("field '" + path + "' must be a positive number");
  }
  return v;
}

long as_positive_integer(const json& value, const std::string& path) {
  if (!value.is_number_integer() || value.get<long long>() <= 0) {
    fail("field '" + path + "' must be a positive integer");
  }
  return static_cast<long>(value.get<long long>());
}

std::uint64_t as_seed(const json& value, const std::string& path) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
    fail("field '" + path + "' must be a nonnegative integer");
  }
  return value.get<std::uint64_t>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) {
    fail("field '" + path + "' must be a string");
  }
  return value.get<std::string>();
}

double number_or(const json& obj, const std::string& path, const std::string& key,
                 double fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

TopologyConfig parse_topology(const json& section) {
  expect_object(section, "topology");
  reject_unknown(section, "topology", {"preset", "adjacency"});
  const bool has_preset = section.contains("preset");
  const bool has_adjacency = section.contains("adjacency");
  if (has_preset == has_adjacency) {
    fail("field 'topology' needs exactly one of 'preset' or 'adjacency'");
  }
  TopologyConfig config;
  if (has_preset) {
    config.preset = as_string(section.at("preset"), "topology.preset");
    return config;
  }
  const json& rows = section.at("adjacency");
  if (!rows.is_array() || rows.empty()) {
    fail("field 'topology.adjacency' must be a nonempty array of rows");
  }
  const std::size_t m = rows.size();
  Eigen::MatrixXi adjacency(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != m) {
      fail("field 'topology.adjacency' row " + std::to_string(i) + " must have " +
           std::to_string(m) + " entries");
    }
    for (std::size_t j = 0; j < m; ++j) {
      const json& cell = row[j];
      if (!cell.is_number_integer() ||
          (cell.get<long long>() != 0 && cell.get<long long>() != 1)) {
        fail("field 'topology.adjacency' entry (" + std::to_string(i) + ", " +
             std::to_string(j) + ") must be 0 or 1");
      }
      adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<int>(cell.get<long long>());
    }
  }
  config.adjacency = adjacency;
  return config;
}

QuantizerSpec parse_quantizer(const json& section) {
  expect_object(section, "quantizer");
  reject_unknown(section, "quantizer", {"kind", "r", "clamp"});
  QuantizerSpec spec;
  const std::string kind = as_string(require(section, "quantizer", "kind"), "quantizer.kind");
  if (kind == "identity") {
    spec.kind = QuantizerKind::Identity;
    if (section.contains("r") || section.contains("clamp")) {
      fail("field 'quantizer': 'r' and 'clamp' apply only to the ternary kind");
    }
    return spec;
  }
  if (kind != "ternary") {
    fail("unknown quantizer kind '" + kind + "' (expected 'identity' or 'ternary')");
  }
  spec.kind = QuantizerKind::Ternary;
  spec.r = as_positive_number(require(section, "quantizer", "r"), "quantizer.r");
  const auto it = section.find("clamp");
  if (it != section.end()) {
    const std::string clamp = as_string(*it, "quantizer.clamp");
    if (clamp == "error") {
      spec.clamp = ClampPolicy::Error;
    } else if (clamp == "saturate") {
      spec.clamp = ClampPolicy::Saturate;
    } else {
      fail("unknown clamp policy '" + clamp + "' (expected 'error' or 'saturate')");
    }
  }
  return spec;
}

Schedule parse_schedule(const json& section) {
  expect_object(section, "schedule");
  reject_unknown(section, "schedule", {"a1", "a2", "a3", "delta1", "delta2"});
  Schedule schedule;
  schedule.a1 = as_positive_number(require(section, "schedule", "a1"), "schedule.a1");
  schedule.a2 = as_positive_number(require(section, "schedule", "a2"), "schedule.a2");
  schedule.a3 = as_positive_number(require(section, "schedule", "a3"), "schedule.a3");
  schedule.delta1 = as_positive_number(require(section, "schedule", "delta1"), "schedule.delta1");
  schedule.delta2 = as_positive_number(require(section, "schedule", "delta2"), "schedule.delta2");
  return schedule;
}

RunSection parse_run(const json& section) {
  expect_object(section, "run");
  reject_unknown(section, "run",
                 {"iterations", "seed", "seeds", "batch", "log", "divergence_guard"});
  RunSection run;
  run.iterations = as_positive_integer(require(section, "run", "iterations"), "run.iterations");
  const bool has_seed = section.contains("seed");
  const bool has_seeds = section.contains("seeds");
  if (has_seed && has_seeds) {
    fail("field 'run' takes either 'seed' or 'seeds', not both");
  }
  if (has_seed) {
    run.seeds = {as_seed(section.at("seed"), "run.seed")};
  } else if (has_seeds) {
    const json& seeds = section.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      fail("field 'run.seeds' must be a nonempty array");
    }
    run.seeds.clear();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      run.seeds.push_back(as_seed(seeds[i], "run.seeds[" + std::to_string(i) + "]"));
    }
  }
  if (section.contains("batch")) {
    run.batch = static_cast<int>(as_positive_integer(section.at("batch"), "run.batch"));
  }
  if (section.contains("log")) {
    const std::string log = as_string(section.at("log"), "run.log");
    if (log == "metrics") {
      run.logging = LogMode::Metrics;
    } else if (log == "full") {
      run.logging = LogMode::Full;
    } else {
      fail("unknown log mode '" + log + "' (expected 'metrics' or 'full')");
    }
  }
  run.divergence_guard =
      number_or(section, "run", "divergence_guard", run.divergence_guard);
  if (!(run.divergence_guard > 0.0)) {
    fail("field 'run.divergence_guard' must be a positive number");
  }
  return run;
}

json topology_to_json(const TopologyConfig& config) {
  json out = json::object();
  if (config.adjacency.has_value()) {
    json rows = json::array();
    const Eigen::MatrixXi& a = *config.adjacency;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        row.push_back(a(i, j));
      }
      rows.push_back(std::move(row));
    }
    out["adjacency"] = std::move(rows);
  } else {
    out["preset"] = config.preset;
  }
  return out;
}

json problem_to_json(const ProblemConfig& config) {
  json out = json::object();
  out["kind"] = config.kind;
  if (config.kind == "sensor") {
    out["agents"] = config.sensor.m;
    out["measurements_per_agent"] = config.sensor.s;
    out["dimension"] = config.sensor.d;
    out["observations"] = config.sensor.n;
    out["regularization"] = config.sensor.regularization;
    out["noise_scale"] = config.sensor.noise_scale;
    out["measurement_scale"] = config.sensor.measurement_scale;
    out["instance_seed"] = config.sensor.seed;
  } else {
    out["agents"] = config.toy.m;
    out["dimension"] = config.toy.d;
    out["sigma"] = config.toy.sigma;
    out["ripple"] = config.toy.ripple;
    out["instance_seed"] = config.toy.seed;
  }
  return out;
}

json quantizer_to_json(const QuantizerSpec& spec) {
  json out = json::object();
  if (spec.kind == QuantizerKind::Identity) {
    out["kind"] = "identity";
    return out;
  }
  out["kind"] = "ternary";
  out["r"] = spec.r;
  out["clamp"] = spec.clamp == ClampPolicy::Error ? "error" : "saturate";
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    fail("top level must be a JSON object");
  }
  reject_unknown(root, "", {"topology", "problem", "quantizer", "schedule", "run"});

  RunConfig config;
  config.topology = parse_topology(require(root, "", "topology"));

  const json& problem = require(root, "", "problem");
  expect_object(problem, "problem");
  config.problem.kind = as_string(require(problem, "problem", "kind"), "problem.kind");
  if (config.problem.kind == "sensor") {
    reject_unknown(problem, "problem",
                   {"kind", "agents", "measurements_per_agent", "dimension", "observations",
                    "regularization", "noise_scale", "measurement_scale", "instance_seed"});
    SensorParams& p = config.problem.sensor;
    if (problem.contains("agents")) {
      p.m = static_cast<int>(as_positive_integer(problem.at("agents"), "problem.agents"));
    }
    if (problem.contains("measurements_per_agent")) {
      p.s = static_cast<int>(as_positive_integer(problem.at("measurements_per_agent"),
                                                 "problem.measurements_per_agent"));
    }
    if (problem.contains("dimension")) {
      p.d = static_cast<int>(as_positive_integer(problem.at("dimension"), "problem.dimension"));
    }
    if (problem.contains("observations")) {
      p.n = static_cast<int>(
          as_positive_integer(problem.at("observations"), "problem.observations"));
    }
    p.regularization =
        number_or(problem, "problem", "regularization", p.regularization);
    if (p.regularization < 0.0) {
      fail("field 'problem.regularization' must be nonnegative");
    }
    p.noise_scale = number_or(problem, "problem", "noise_scale", p.noise_scale);
    if (p.noise_scale < 0.0) {
      fail("field 'problem.noise_scale' must be nonnegative");
    }
    p.measurement_scale =
        number_or(problem, "problem", "measurement_scale", p.measurement_scale);
    if (problem.contains("instance_seed")) {
      p.seed = as_seed(problem.at("instance_seed"), "problem.instance_seed");
    }
  } else if (config.problem.kind == "nonconvex") {
    reject_unknown(problem, "problem",
                   {"kind", "agents", "dimension", "sigma", "ripple", "instance_seed"});
    ToyParams& p = config.problem.toy;
    if (problem.contains("agents")) {
      p.m = static_cast<int>(as_positive_integer(problem.at("agents"), "problem.agents"));
    }
    if (problem.contains("dimension")) {
      p.d = static_cast<int>(as_positive_integer(problem.at("dimension"), "problem.dimension"));
    }
    p.sigma = number_or(problem, "problem", "sigma", p.sigma);
    if (p.sigma < 0.0) {
      fail("field 'problem.sigma' must be nonnegative");
    }
    p.ripple = number_or(problem, "problem", "ripple", p.ripple);
    if (p.ripple < 0.0) {
      fail("field 'problem.ripple' must be nonnegative");
    }
    if (problem.contains("instance_seed")) {
      p.seed = as_seed(problem.at("instance_seed"), "problem.instance_seed");
    }
  } else {
    fail("unknown problem kind '" + config.problem.kind +
         "' (expected 'sensor' or 'nonconvex')");
  }

  config.quantizer = parse_quantizer(require(root, "", "quantizer"));
  config.schedule = parse_schedule(require(root, "", "schedule"));
  config.run = parse_run(require(root, "", "run"));

  // Surface value errors at parse time rather than mid-run.
  config.quantizer.validate();
  config.schedule.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const RunConfig& config) {
  json root = json::object();
  root["topology"] = topology_to_json(config.topology);
  root["problem"] = problem_to_json(config.problem);
  root["quantizer"] = quantizer_to_json(config.quantizer);
  root["schedule"] = {{"a1", config.schedule.a1},
                      {"a2", config.schedule.a2},
                      {"a3", config.schedule.a3},
                      {"delta1", config.schedule.delta1},
                      {"delta2", config.schedule.delta2}};
  json run = json::object();
  run["iterations"] = config.run.iterations;
  run["seeds"] = config.run.seeds;
  run["batch"] = config.run.batch;
  run["log"] = config.run.logging == LogMode::Full ? "full" : "metrics";
  run["divergence_guard"] = config.run.divergence_guard;
  root["run"] = std::move(run);
  return root.dump(2);
}

std::string config_digest(const RunConfig& config) {
  const std::uint64_t hash = fnv1a64(config_to_json(config));
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(hex);
}

Topology build_topology(const TopologyConfig& config) {
  if (config.adjacency.has_value()) {
    return Topology::metropolis(*config.adjacency);
  }
  return topology_preset(config.preset);
}

std::shared_ptr<Problem> build_problem(const ProblemConfig& config) {
  if (config.kind == "sensor") {
    return make_sensor_problem(config.sensor);
  }
  if (config.kind == "nonconvex") {
    return make_nonconvex_problem(config.toy);
  }
  throw std::invalid_argument("config: unknown problem kind '" + config.kind + "'");
}

RunSpec build_run_spec(const RunConfig& config, std::uint64_t seed) {
  Topology topology = build_topology(config.topology);
  std::shared_ptr<Problem> problem = build_problem(config.problem);
  if (topology.size() != problem->agent_count()) {
    throw std::invalid_argument("config: topology has " + std::to_string(topology.size()) +
                                " agents but the problem has " +
                                std::to_string(problem->agent_count()));
  }
  if (config.problem.kind == "sensor" && config.run.batch > config.problem.sensor.n) {
    throw std::invalid_argument("config: run.batch = " + std::to_string(config.run.batch) +
                                " exceeds the " + std::to_string(config.problem.sensor.n) +
                                " observations per agent");
  }
  return RunSpec{.topology = std::move(topology),
                 .schedule = config.schedule,
                 .quantizer = config.quantizer,
                 .problem = std::move(problem),
                 .iterations = config.run.iterations,
                 .seed = seed,
                 .batch = config.run.batch,
                 .logging = config.run.logging,
                 .divergence_guard = config.run.divergence_guard,
                 .config_digest = config_digest(config)};
}

}  // namespace dqsgd
