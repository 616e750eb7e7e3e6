#include "dqsgd/trajectory_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dqsgd {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string fmt17(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("trajectory: " + message);
}

const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    fail(std::string("missing field '") + key + "'");
  }
  return *it;
}

// NaN marks an unknown metric (no optimum); JSON has no NaN literal, so
// those entries travel as null.
json metric_array(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) {
    if (std::isfinite(v)) {
      out.push_back(v);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

std::vector<double> metric_vector(const json& arr, const char* key) {
  if (!arr.is_array()) {
    fail(std::string("field '") + key + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (v.is_null()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      fail(std::string("field '") + key + "' must hold numbers or nulls");
    }
  }
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const char* key) {
  if (!rows.is_array()) {
    fail(std::string("field '") + key + "' must be an array of rows");
  }
  if (rows.empty()) {
    return Eigen::MatrixXd(0, 0);
  }
  const std::size_t r = rows.size();
  if (!rows[0].is_array()) {
    fail(std::string("field '") + key + "' must be an array of rows");
  }
  const std::size_t c = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != c) {
      fail(std::string("field '") + key + "' row " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (!row[j].is_number()) {
        fail(std::string("field '") + key + "' holds a non-numeric entry");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr, const char* key) {
  if (!arr.is_array()) {
    fail(std::string("field '") + key + "' must be an array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      fail(std::string("field '") + key + "' holds a non-numeric entry");
    }
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

json quantizer_json(const QuantizerSpec& spec) {
  json out = json::object();
  if (spec.kind == QuantizerKind::Identity) {
    out["kind"] = "identity";
  } else {
    out["kind"] = "ternary";
    out["r"] = spec.r;
    out["clamp"] = spec.clamp == ClampPolicy::Error ? "error" : "saturate";
  }
  return out;
}

QuantizerSpec quantizer_from_json(const json& obj) {
  QuantizerSpec spec;
  const std::string kind = require(obj, "kind").get<std::string>();
  if (kind == "identity") {
    spec.kind = QuantizerKind::Identity;
    return spec;
  }
  if (kind != "ternary") {
    fail("unknown quantizer kind '" + kind + "'");
  }
  spec.kind = QuantizerKind::Ternary;
  spec.r = require(obj, "r").get<double>();
  const std::string clamp = require(obj, "clamp").get<std::string>();
  if (clamp == "error") {
    spec.clamp = ClampPolicy::Error;
  } else if (clamp == "saturate") {
    spec.clamp = ClampPolicy::Saturate;
  } else {
    fail("unknown clamp policy '" + clamp + "'");
  }
  return spec;
}

json meta_json(const RunMetadata& meta) {
  json conditions = json::object();
  conditions["nonconvex_ok"] = meta.conditions.nonconvex_ok;
  conditions["convex_value_ok"] = meta.conditions.convex_value_ok;
  conditions["rate_gradient"] = meta.conditions.rate_gradient;
  conditions["rate_value"] = meta.conditions.rate_value;
  conditions["violations"] = meta.conditions.violations;
  conditions["mixing_stable"] = meta.conditions.mixing_stable;
  conditions["stability_bound"] = meta.conditions.stability_bound;

  json out = json::object();
  out["seed"] = meta.seed;
  out["config_digest"] = meta.config_digest;
  out["quantizer"] = quantizer_json(meta.quantizer);
  out["batch"] = meta.batch;
  out["saturation_events"] = meta.saturation_events;
  out["empirical_beta"] = meta.empirical_beta;
  out["conditions"] = std::move(conditions);
  out["aborted"] = meta.aborted;
  out["abort_reason"] = meta.abort_reason;
  out["abort_iteration"] = meta.abort_iteration;
  return out;
}

RunMetadata meta_from_json(const json& obj) {
  RunMetadata meta;
  meta.seed = require(obj, "seed").get<std::uint64_t>();
  meta.config_digest = require(obj, "config_digest").get<std::string>();
  meta.quantizer = quantizer_from_json(require(obj, "quantizer"));
  meta.batch = require(obj, "batch").get<int>();
  meta.saturation_events = require(obj, "saturation_events").get<long>();
  meta.empirical_beta = require(obj, "empirical_beta").get<double>();
  const json& conditions = require(obj, "conditions");
  meta.conditions.nonconvex_ok = require(conditions, "nonconvex_ok").get<bool>();
  meta.conditions.convex_value_ok = require(conditions, "convex_value_ok").get<bool>();
  meta.conditions.rate_gradient = require(conditions, "rate_gradient").get<double>();
  meta.conditions.rate_value = require(conditions, "rate_value").get<double>();
  meta.conditions.violations =
      require(conditions, "violations").get<std::vector<std::string>>();
  meta.conditions.mixing_stable = require(conditions, "mixing_stable").get<bool>();
  meta.conditions.stability_bound = require(conditions, "stability_bound").get<double>();
  meta.aborted = require(obj, "aborted").get<bool>();
  meta.abort_reason = require(obj, "abort_reason").get<std::string>();
  meta.abort_iteration = require(obj, "abort_iteration").get<long>();
  return meta;
}

void write_csv_header(std::ostream& out, const std::string& digest) {
  out << "# config_digest=" << digest << "\n";
  out << "k,epsilon,lambda,consensus_error,optimality_gap,avg_grad_norm\n";
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("trajectory: cannot write '" + path + "'");
  }
  return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const Trajectory& trajectory) {
  write_csv_header(out, trajectory.meta.config_digest);
  for (long k = 0; k < trajectory.recorded(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    out << k << ',' << fmt17(trajectory.epsilons[i]) << ',' << fmt17(trajectory.lambdas[i])
        << ',' << fmt17(trajectory.consensus_error[i]) << ','
        << fmt17(trajectory.optimality_gap[i]) << ',' << fmt17(trajectory.avg_grad_norm[i])
        << '\n';
  }
}

void write_metrics_csv(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out = open_for_write(path);
  write_metrics_csv(out, trajectory);
}

void write_mean_metrics_csv(std::ostream& out, const std::vector<Trajectory>& runs) {
  if (runs.empty()) {
    throw std::invalid_argument("trajectory: no runs to average");
  }
  const long n = runs.front().recorded();
  for (const Trajectory& t : runs) {
    if (t.recorded() != n) {
      throw std::invalid_argument(
          "trajectory: cannot average runs of different lengths (" + std::to_string(n) +
          " vs " + std::to_string(t.recorded()) + "); an aborted run must be excluded");
    }
    if (t.meta.config_digest != runs.front().meta.config_digest) {
      throw std::invalid_argument("trajectory: cannot average runs of different configs");
    }
  }
  write_csv_header(out, runs.front().meta.config_digest);
  const double count = static_cast<double>(runs.size());
  for (long k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    double consensus = 0.0;
    double gap = 0.0;
    double grad = 0.0;
    for (const Trajectory& t : runs) {
      consensus += t.consensus_error[i];
      gap += t.optimality_gap[i];
      grad += t.avg_grad_norm[i];
    }
    out << k << ',' << fmt17(runs.front().epsilons[i]) << ',' << fmt17(runs.front().lambdas[i])
        << ',' << fmt17(consensus / count) << ',' << fmt17(gap / count) << ','
        << fmt17(grad / count) << '\n';
  }
}

void write_mean_metrics_csv(const std::string& path, const std::vector<Trajectory>& runs) {
  std::ofstream out = open_for_write(path);
  write_mean_metrics_csv(out, runs);
}

std::string trajectory_to_json(const Trajectory& trajectory) {
  json root = json::object();
  root["version"] = kFormatVersion;
  root["iterations"] = trajectory.iterations;
  root["epsilons"] = metric_array(trajectory.epsilons);
  root["lambdas"] = metric_array(trajectory.lambdas);
  root["consensus_error"] = metric_array(trajectory.consensus_error);
  root["optimality_gap"] = metric_array(trajectory.optimality_gap);
  root["avg_grad_norm"] = metric_array(trajectory.avg_grad_norm);
  if (!trajectory.states.empty()) {
    json states = json::array();
    for (const Eigen::MatrixXd& x : trajectory.states) {
      states.push_back(matrix_json(x));
    }
    root["states"] = std::move(states);
  }
  if (!trajectory.rounds.empty()) {
    json rounds = json::array();
    for (const RoundLog& log : trajectory.rounds) {
      json entry = json::object();
      entry["k"] = log.k;
      entry["epsilon"] = log.epsilon;
      entry["lambda"] = log.lambda;
      entry["broadcast"] = matrix_json(log.broadcast);
      entry["gradients"] = matrix_json(log.gradients);
      rounds.push_back(std::move(entry));
    }
    root["rounds"] = std::move(rounds);
  }
  root["final_state"] = matrix_json(trajectory.final_state);
  root["weights"] = matrix_json(trajectory.weights);
  root["weighted_state_sum"] = matrix_json(trajectory.weighted_state_sum);
  root["weight_sum"] = trajectory.weight_sum;
  if (trajectory.optimum.has_value()) {
    root["optimum"] = vector_json(*trajectory.optimum);
  } else {
    root["optimum"] = nullptr;
  }
  root["meta"] = meta_json(trajectory.meta);
  return root.dump();
}

Trajectory trajectory_from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    fail("top level must be a JSON object");
  }
  const json& version = require(root, "version");
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    fail("unsupported format version (expected 1)");
  }
  Trajectory t;
  t.iterations = require(root, "iterations").get<long>();
  t.epsilons = metric_vector(require(root, "epsilons"), "epsilons");
  t.lambdas = metric_vector(require(root, "lambdas"), "lambdas");
  t.consensus_error = metric_vector(require(root, "consensus_error"), "consensus_error");
  t.optimality_gap = metric_vector(require(root, "optimality_gap"), "optimality_gap");
  t.avg_grad_norm = metric_vector(require(root, "avg_grad_norm"), "avg_grad_norm");
  if (root.contains("states")) {
    const json& states = root.at("states");
    if (!states.is_array()) {
      fail("field 'states' must be an array");
    }
    t.states.reserve(states.size());
    for (const json& x : states) {
      t.states.push_back(matrix_from_json(x, "states"));
    }
  }
  if (root.contains("rounds")) {
    const json& rounds = root.at("rounds");
    if (!rounds.is_array()) {
      fail("field 'rounds' must be an array");
    }
    t.rounds.reserve(rounds.size());
    for (const json& entry : rounds) {
      RoundLog log;
      log.k = require(entry, "k").get<long>();
      log.epsilon = require(entry, "epsilon").get<double>();
      log.lambda = require(entry, "lambda").get<double>();
      log.broadcast = matrix_from_json(require(entry, "broadcast"), "broadcast");
      log.gradients = matrix_from_json(require(entry, "gradients"), "gradients");
      t.rounds.push_back(std::move(log));
    }
  }
  t.final_state = matrix_from_json(require(root, "final_state"), "final_state");
  t.weights = matrix_from_json(require(root, "weights"), "weights");
  t.weighted_state_sum =
      matrix_from_json(require(root, "weighted_state_sum"), "weighted_state_sum");
  t.weight_sum = require(root, "weight_sum").get<double>();
  const json& optimum = require(root, "optimum");
  if (!optimum.is_null()) {
    t.optimum = vector_from_json(optimum, "optimum");
  }
  t.meta = meta_from_json(require(root, "meta"));
  return t;
}

void save_trajectory(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out = open_for_write(path);
  out << trajectory_to_json(trajectory);
  out << '\n';
  if (!out) {
    throw std::runtime_error("trajectory: write to '" + path + "' failed");
  }
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("trajectory: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return trajectory_from_json(buffer.str());
}

std::string metadata_to_json(const std::vector<Trajectory>& runs) {
  json out = json::array();
  for (const Trajectory& t : runs) {
    json entry = meta_json(t.meta);
    entry["iterations"] = t.iterations;
    entry["recorded"] = t.recorded();
    if (t.recorded() > 0) {
      const auto last = static_cast<std::size_t>(t.recorded() - 1);
      entry["final_consensus_error"] = t.consensus_error[last];
      const double gap = t.optimality_gap[last];
      entry["final_optimality_gap"] = std::isfinite(gap) ? json(gap) : json(nullptr);
      entry["final_avg_grad_norm"] = t.avg_grad_norm[last];
    }
    out.push_back(std::move(entry));
  }
  return out.dump(2);
}

void save_run_metadata(const std::string& path, const std::vector<Trajectory>& runs) {
  std::ofstream out = open_for_write(path);
  out << metadata_to_json(runs);
  out << '\n';
  if (!out) {
    throw std::runtime_error("trajectory: write to '" + path + "' failed");
  }
}

}  // namespace dqsgd
