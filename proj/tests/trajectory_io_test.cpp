#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqsgd/adversary.hpp"
#include "dqsgd/config.hpp"
#include "dqsgd/engine.hpp"
#include "dqsgd/trajectory_io.hpp"
#include "test_util.hpp"

using dqsgd::LogMode;
using dqsgd::RunConfig;
using dqsgd::RunSpec;
using dqsgd::Trajectory;

namespace {

RunConfig sensor_config(const char* log_mode) {
  const std::string text = std::string(R"({
    "topology": {"preset": "fig1"},
    "problem": {"kind": "sensor"},
    "quantizer": {"kind": "ternary", "r": 10.0, "clamp": "saturate"},
    "schedule": {"a1": 1, "a2": 1, "a3": 0.3, "delta1": 0.3, "delta2": 0.6},
    "run": {"iterations": 15, "batch": 10, "log": ")") +
                           log_mode + "\"}}";
  return dqsgd::parse_config(text);
}

Trajectory run_once(const RunConfig& cfg, std::uint64_t seed) {
  return dqsgd::run(dqsgd::build_run_spec(cfg, seed));
}

// Splits CSV text into lines, dropping the trailing empty piece.
std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dqsgd-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("trajectory_io") {
  TEST_CASE("metrics CSV: digest comment, header, one row per recorded state") {
    const RunConfig cfg = sensor_config("metrics");
    const Trajectory traj = run_once(cfg, 5);
    REQUIRE_FALSE(traj.meta.aborted);

    std::ostringstream out;
    dqsgd::write_metrics_csv(out, traj);
    const std::vector<std::string> lines = lines_of(out.str());

    REQUIRE(lines.size() == 2 + 16);  // comment + header + 16 recorded states
    CHECK(lines[0] == "# config_digest=" + traj.meta.config_digest);
    CHECK(lines[1] == "k,epsilon,lambda,consensus_error,optimality_gap,avg_grad_norm");

    // %.17g output reparses to the exact recorded doubles.
    for (std::size_t row = 2; row < lines.size(); ++row) {
      const std::size_t k = row - 2;
      long parsed_k = -1;
      double eps = 0, lam = 0, cons = 0, gap = 0, grad = 0;
      REQUIRE(std::sscanf(lines[row].c_str(), "%ld,%lg,%lg,%lg,%lg,%lg", &parsed_k, &eps,
                          &lam, &cons, &gap, &grad) == 6);
      CHECK(parsed_k == static_cast<long>(k));
      CHECK(eps == traj.epsilons[k]);
      CHECK(lam == traj.lambdas[k]);
      CHECK(cons == traj.consensus_error[k]);
      CHECK(gap == traj.optimality_gap[k]);
      CHECK(grad == traj.avg_grad_norm[k]);
    }
  }

  TEST_CASE("mean CSV averages across seeds and rejects ragged input") {
    const RunConfig cfg = sensor_config("metrics");
    std::vector<Trajectory> runs;
    runs.push_back(run_once(cfg, 1));
    runs.push_back(run_once(cfg, 2));
    runs.push_back(run_once(cfg, 3));
    for (const Trajectory& t : runs) REQUIRE_FALSE(t.meta.aborted);

    std::ostringstream out;
    dqsgd::write_mean_metrics_csv(out, runs);
    const std::vector<std::string> lines = lines_of(out.str());
    REQUIRE(lines.size() == 2 + 16);

    // Spot-check one row against a hand average.
    long k = 0;
    double eps = 0, lam = 0, cons = 0, gap = 0, grad = 0;
    REQUIRE(std::sscanf(lines[7].c_str(), "%ld,%lg,%lg,%lg,%lg,%lg", &k, &eps, &lam,
                        &cons, &gap, &grad) == 6);
    CHECK(k == 5);
    const double expected =
        (runs[0].consensus_error[5] + runs[1].consensus_error[5] +
         runs[2].consensus_error[5]) /
        3.0;
    CHECK(cons == doctest::Approx(expected).epsilon(1e-15));

    // Ragged lengths are the signature of an aborted run in the batch.
    std::vector<Trajectory> ragged = runs;
    ragged[1].epsilons.pop_back();
    std::ostringstream sink;
    CHECK_THROWS_CONTAINS(dqsgd::write_mean_metrics_csv(sink, ragged),
                          std::invalid_argument, "an aborted run must be excluded");

    std::vector<Trajectory> mixed = runs;
    mixed[2].meta.config_digest = "0000000000000000";
    CHECK_THROWS_CONTAINS(dqsgd::write_mean_metrics_csv(sink, mixed),
                          std::invalid_argument, "different configs");
    CHECK_THROWS_CONTAINS(dqsgd::write_mean_metrics_csv(sink, {}),
                          std::invalid_argument, "no runs");
  }

  TEST_CASE("JSON snapshot round-trips a fully logged run bit for bit") {
    const RunConfig cfg = sensor_config("full");
    const Trajectory traj = run_once(cfg, 8);
    REQUIRE_FALSE(traj.meta.aborted);
    REQUIRE(traj.states.size() == 16);

    const Trajectory back = dqsgd::trajectory_from_json(dqsgd::trajectory_to_json(traj));

    CHECK(back.iterations == traj.iterations);
    CHECK(back.recorded() == traj.recorded());
    CHECK(back.epsilons == traj.epsilons);
    CHECK(back.lambdas == traj.lambdas);
    CHECK(back.consensus_error == traj.consensus_error);
    CHECK(back.optimality_gap == traj.optimality_gap);
    CHECK(back.avg_grad_norm == traj.avg_grad_norm);
    REQUIRE(back.states.size() == traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      CHECK((back.states[k].array() == traj.states[k].array()).all());
    }
    REQUIRE(back.rounds.size() == traj.rounds.size());
    for (std::size_t k = 0; k < traj.rounds.size(); ++k) {
      CHECK(back.rounds[k].k == traj.rounds[k].k);
      CHECK(back.rounds[k].epsilon == traj.rounds[k].epsilon);
      CHECK(back.rounds[k].lambda == traj.rounds[k].lambda);
      CHECK((back.rounds[k].broadcast.array() == traj.rounds[k].broadcast.array()).all());
      CHECK((back.rounds[k].gradients.array() == traj.rounds[k].gradients.array()).all());
    }
    CHECK((back.final_state.array() == traj.final_state.array()).all());
    CHECK((back.weights.array() == traj.weights.array()).all());
    CHECK((back.weighted_state_sum.array() == traj.weighted_state_sum.array()).all());
    CHECK(back.weight_sum == traj.weight_sum);
    REQUIRE(back.optimum.has_value());
    CHECK((back.optimum->array() == traj.optimum->array()).all());
    CHECK(back.meta.seed == traj.meta.seed);
    CHECK(back.meta.config_digest == traj.meta.config_digest);
    CHECK(back.meta.quantizer.kind == traj.meta.quantizer.kind);
    CHECK(back.meta.quantizer.r == traj.meta.quantizer.r);
    CHECK(back.meta.batch == traj.meta.batch);
    CHECK(back.meta.saturation_events == traj.meta.saturation_events);
    CHECK(back.meta.empirical_beta == traj.meta.empirical_beta);
    CHECK(back.meta.conditions.nonconvex_ok == traj.meta.conditions.nonconvex_ok);
    CHECK(back.meta.conditions.rate_gradient == traj.meta.conditions.rate_gradient);
    CHECK(back.meta.aborted == traj.meta.aborted);
  }

  TEST_CASE("attack evaluation on a reloaded trajectory matches in-process results") {
    const RunConfig cfg = sensor_config("full");
    const Trajectory traj = run_once(cfg, 4);
    REQUIRE_FALSE(traj.meta.aborted);
    const Trajectory back = dqsgd::trajectory_from_json(dqsgd::trajectory_to_json(traj));

    const auto original =
        dqsgd::attack_report(traj, 1, dqsgd::AdversaryMode::Eavesdropper);
    const auto reloaded =
        dqsgd::attack_report(back, 1, dqsgd::AdversaryMode::Eavesdropper);
    REQUIRE(original.size() == reloaded.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
      CHECK(reloaded[i].relative_error == original[i].relative_error);
      CHECK((reloaded[i].inferred.array() == original[i].inferred.array()).all());
    }
  }

  TEST_CASE("missing optimum becomes null and comes back as NaN") {
    const char* toy_text = R"({
      "topology": {"preset": "ring5"},
      "problem": {"kind": "nonconvex"},
      "quantizer": {"kind": "identity"},
      "schedule": {"a1": 1, "a2": 1, "a3": 0.3, "delta1": 0.3, "delta2": 0.6},
      "run": {"iterations": 10}
    })";
    const RunConfig cfg = dqsgd::parse_config(toy_text);
    const Trajectory traj = run_once(cfg, 2);
    REQUIRE_FALSE(traj.meta.aborted);
    REQUIRE_FALSE(traj.optimum.has_value());
    REQUIRE(std::isnan(traj.optimality_gap[0]));

    const std::string json_text = dqsgd::trajectory_to_json(traj);
    CHECK(json_text.find("null") != std::string::npos);
    const Trajectory back = dqsgd::trajectory_from_json(json_text);
    CHECK_FALSE(back.optimum.has_value());
    REQUIRE(back.optimality_gap.size() == traj.optimality_gap.size());
    for (std::size_t k = 0; k < back.optimality_gap.size(); ++k) {
      CHECK(std::isnan(back.optimality_gap[k]));
    }
  }

  TEST_CASE("malformed snapshots are rejected") {
    CHECK_THROWS_CONTAINS(dqsgd::trajectory_from_json("{]"), std::invalid_argument,
                          "trajectory");
    CHECK_THROWS_CONTAINS(dqsgd::trajectory_from_json("{\"version\": 2}"),
                          std::invalid_argument, "unsupported format version");
    CHECK_THROWS_CONTAINS(dqsgd::trajectory_from_json("{\"version\": 1}"),
                          std::invalid_argument, "missing");
  }

  TEST_CASE("file round trip and metadata dump") {
    TempDir tmp;
    const RunConfig cfg = sensor_config("full");
    Trajectory traj = run_once(cfg, 6);
    REQUIRE_FALSE(traj.meta.aborted);

    dqsgd::save_trajectory(tmp.file("traj.json"), traj);
    const Trajectory back = dqsgd::load_trajectory(tmp.file("traj.json"));
    CHECK((back.final_state.array() == traj.final_state.array()).all());

    dqsgd::write_metrics_csv(tmp.file("metrics.csv"), traj);
    CHECK(std::filesystem::file_size(tmp.file("metrics.csv")) > 0);

    std::vector<Trajectory> runs{traj, run_once(cfg, 7)};
    const std::string meta = dqsgd::metadata_to_json(runs);
    CHECK(meta.find(traj.meta.config_digest) != std::string::npos);
    CHECK(meta.find("\"seed\"") != std::string::npos);
    CHECK(meta.find("\"aborted\"") != std::string::npos);
    CHECK(meta.find("\"saturation_events\"") != std::string::npos);
    dqsgd::save_run_metadata(tmp.file("meta.json"), runs);
    CHECK(std::filesystem::file_size(tmp.file("meta.json")) > 0);

    CHECK_THROWS_CONTAINS(dqsgd::load_trajectory(tmp.file("absent.json")),
                          std::runtime_error, "cannot open");
    CHECK_THROWS_CONTAINS(
        dqsgd::save_trajectory((tmp.path / "no-dir" / "x.json").string(), traj),
        std::runtime_error, "cannot write");
  }
}
