// Command-line front end: validate configs, run experiments, replay
// gradient-inversion attacks, check the quantizer's privacy bound, and
// exercise the wire codec.
//
// Exit codes: 0 on success, 1 on any error or failed check, 2 when a run
// aborted mid-flight (partial results are still written).

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dqsgd/adversary.hpp"
#include "dqsgd/config.hpp"
#include "dqsgd/engine.hpp"
#include "dqsgd/privacy.hpp"
#include "dqsgd/trajectory_io.hpp"
#include "dqsgd/wire.hpp"

namespace {

namespace fs = std::filesystem;

std::string resolve_output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) {
    return flag_value;
  }
  if (const char* env = std::getenv("DQSGD_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "dqsgd-out";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) {
      throw std::invalid_argument("run: empty entry in seed list '" + text + "'");
    }
    std::size_t used = 0;
    const unsigned long long value = std::stoull(item, &used);
    if (used != item.size()) {
      throw std::invalid_argument("run: bad seed '" + item + "' in list");
    }
    seeds.push_back(value);
  }
  if (seeds.empty()) {
    throw std::invalid_argument("run: seed list '" + text + "' is empty");
  }
  return seeds;
}

int cmd_validate(const std::string& config_path) {
  const dqsgd::RunConfig config = dqsgd::load_config(config_path);
  const dqsgd::Topology topology = dqsgd::build_topology(config.topology);
  const dqsgd::ConditionReport report = dqsgd::validate(config.schedule, topology);

  std::printf("config digest       %s\n", dqsgd::config_digest(config).c_str());
  std::printf("agents              %d\n", topology.size());
  std::printf("algebraic conn.     %.6f\n", topology.algebraic_connectivity());
  std::printf("step exponents      delta1=%g delta2=%g\n", config.schedule.delta1,
              config.schedule.delta2);
  std::printf("decay conditions    %s\n", report.nonconvex_ok ? "OK" : "VIOLATED");
  for (const std::string& v : report.violations) {
    std::printf("  violated: %s\n", v.c_str());
  }
  std::printf("convex-value extra  %s\n", report.convex_value_ok ? "OK" : "not satisfied");
  std::printf("predicted rates     gradient n^-%g, value n^-%g\n", report.rate_gradient,
              report.rate_value);
  std::printf("mixing stability    %s (epsilon_0=%g, bound %g)\n",
              report.mixing_stable ? "OK" : "VIOLATED", config.schedule.epsilon_at(0),
              report.stability_bound);
  if (config.quantizer.kind == dqsgd::QuantizerKind::Ternary) {
    std::printf("per-step privacy    delta = %g at r = %g\n",
                dqsgd::per_step_delta(config.quantizer.r), config.quantizer.r);
  } else {
    std::printf("per-step privacy    none (identity quantizer)\n");
  }
  const bool ok = report.nonconvex_ok && report.mixing_stable;
  std::printf("%s\n", ok ? "VALID" : "INVALID");
  return ok ? 0 : 1;
}

int cmd_run(const std::string& config_path, const std::string& output_flag,
            const std::string& seed_list, long iterations_override,
            const std::string& log_override) {
  dqsgd::RunConfig config = dqsgd::load_config(config_path);
  if (!seed_list.empty()) {
    config.run.seeds = parse_seed_list(seed_list);
  }
  if (iterations_override > 0) {
    config.run.iterations = iterations_override;
  }
  if (!log_override.empty()) {
    if (log_override == "metrics") {
      config.run.logging = dqsgd::LogMode::Metrics;
    } else if (log_override == "full") {
      config.run.logging = dqsgd::LogMode::Full;
    } else {
      throw std::invalid_argument("run: unknown log mode '" + log_override + "'");
    }
  }

  const fs::path out_dir = resolve_output_dir(output_flag);
  fs::create_directories(out_dir);

  std::vector<dqsgd::Trajectory> runs;
  std::vector<dqsgd::Trajectory> completed;
  bool any_aborted = false;
  for (const std::uint64_t seed : config.run.seeds) {
    const dqsgd::RunSpec spec = dqsgd::build_run_spec(config, seed);
    dqsgd::Trajectory traj = dqsgd::run(spec);

    const std::string tag = "seed" + std::to_string(seed);
    dqsgd::write_metrics_csv((out_dir / ("metrics_" + tag + ".csv")).string(), traj);
    if (config.run.logging == dqsgd::LogMode::Full) {
      dqsgd::save_trajectory((out_dir / ("trajectory_" + tag + ".json")).string(), traj);
      if (config.quantizer.kind == dqsgd::QuantizerKind::Ternary) {
        std::ofstream tern((out_dir / ("broadcasts_" + tag + ".tern")).string(),
                           std::ios::binary);
        for (const dqsgd::RoundLog& round : traj.rounds) {
          for (Eigen::Index i = 0; i < round.broadcast.rows(); ++i) {
            Eigen::VectorXi levels(round.broadcast.cols());
            for (Eigen::Index j = 0; j < round.broadcast.cols(); ++j) {
              levels(j) = static_cast<int>(std::lround(round.broadcast(i, j) /
                                                       config.quantizer.r));
            }
            dqsgd::write_codeword(tern, dqsgd::encode(levels, config.quantizer.r));
          }
        }
      }
    }

    const auto last = static_cast<std::size_t>(traj.recorded() - 1);
    std::printf("seed %" PRIu64 ": %ld/%ld iterations, consensus %.3e, gap %.3e",
                seed, traj.recorded() - 1, traj.iterations, traj.consensus_error[last],
                traj.optimality_gap[last]);
    if (traj.meta.saturation_events > 0) {
      std::printf(", %ld saturated draws", traj.meta.saturation_events);
    }
    if (traj.meta.aborted) {
      std::printf(" [ABORTED at %ld: %s]", traj.meta.abort_iteration,
                  traj.meta.abort_reason.c_str());
      any_aborted = true;
    }
    std::printf("\n");

    if (!traj.meta.aborted) {
      completed.push_back(traj);
    }
    runs.push_back(std::move(traj));
  }

  if (completed.size() > 1) {
    dqsgd::write_mean_metrics_csv((out_dir / "metrics_mean.csv").string(), completed);
  }
  dqsgd::save_run_metadata((out_dir / "run_meta.json").string(), runs);
  std::printf("wrote %zu run(s) to %s\n", runs.size(), out_dir.string().c_str());
  return any_aborted ? 2 : 0;
}

int cmd_attack(const std::string& trajectory_path, int target, const std::string& mode_name,
               long round, int redraws, std::uint64_t seed) {
  const dqsgd::Trajectory traj = dqsgd::load_trajectory(trajectory_path);
  dqsgd::AdversaryMode mode = dqsgd::AdversaryMode::Eavesdropper;
  if (mode_name == "honest-but-curious") {
    mode = dqsgd::AdversaryMode::HonestButCurious;
  } else if (mode_name != "eavesdropper") {
    throw std::invalid_argument("attack: unknown mode '" + mode_name +
                                "' (expected 'eavesdropper' or 'honest-but-curious')");
  }

  if (round >= 0) {
    const dqsgd::AttackResult result =
        dqsgd::evaluate_attack(traj, dqsgd::make_observation(traj, round, target, mode));
    std::printf("round %ld, agent %d, %s: relative error %.6e\n", result.k, result.target,
                mode_name.c_str(), result.relative_error);
    if (redraws > 0) {
      const dqsgd::NonrecoveryEstimate estimate = dqsgd::monte_carlo_nonrecovery(
          traj, round, target, traj.meta.quantizer, redraws, seed, mode);
      std::printf("nonrecovery over %d redraws: mean %.6e, std error %.6e\n",
                  estimate.redraws, estimate.mean_relative_error, estimate.std_error);
    }
    return 0;
  }

  const std::vector<dqsgd::AttackResult> report = dqsgd::attack_report(traj, target, mode);
  if (report.empty()) {
    std::printf("no observable rounds\n");
    return 1;
  }
  double mean = 0.0;
  double best = report.front().relative_error;
  double worst = report.front().relative_error;
  long best_k = report.front().k;
  long worst_k = report.front().k;
  for (const dqsgd::AttackResult& r : report) {
    mean += r.relative_error;
    if (r.relative_error < best) {
      best = r.relative_error;
      best_k = r.k;
    }
    if (r.relative_error > worst) {
      worst = r.relative_error;
      worst_k = r.k;
    }
  }
  mean /= static_cast<double>(report.size());
  std::printf("agent %d, %s, %zu rounds: mean relative error %.6e\n", target, mode_name.c_str(),
              report.size(), mean);
  std::printf("  best  round %ld: %.6e\n", best_k, best);
  std::printf("  worst round %ld: %.6e\n", worst_k, worst);
  return 0;
}

int cmd_dp_check(double r, double grid_step, long steps) {
  const dqsgd::DpSweepResult sweep = dqsgd::dp_sweep(r, grid_step);
  std::printf("threshold r         %g\n", r);
  std::printf("per-step delta      %g\n", dqsgd::per_step_delta(r));
  std::printf("grid step           %g (%ld pairs checked)\n", sweep.grid_step,
              sweep.pairs_checked);
  std::printf("max violation       %.3e\n", sweep.max_violation);
  std::printf("sup |difference|    %.6f (bound %.6f)\n", sweep.sup_difference,
              dqsgd::per_step_delta(r));
  if (steps > 0) {
    const dqsgd::PrivacyLedger ledger = dqsgd::compose(steps, r);
    std::printf("over %ld steps      total delta %g (%s)\n", ledger.steps, ledger.composed,
                ledger.advisory.c_str());
  }
  const bool ok = sweep.max_violation <= 1e-12;
  std::printf("%s\n", ok ? "BOUND HOLDS" : "BOUND VIOLATED");
  return ok ? 0 : 1;
}

int cmd_codec_bench(const std::string& dims_text, int trials, std::uint64_t seed) {
  std::vector<std::uint64_t> dims_u64 = parse_seed_list(dims_text);
  dqsgd::RngStream stream = dqsgd::derive_stream(seed, "codec-bench", 0);
  std::printf("%10s %12s %12s %10s\n", "dimension", "frame bytes", "ratio", "roundtrip");
  for (const std::uint64_t dim : dims_u64) {
    if (dim == 0 || dim > 0xffffffffULL) {
      throw std::invalid_argument("codec-bench: dimension out of range");
    }
    const auto d = static_cast<std::uint32_t>(dim);
    bool ok = true;
    for (int t = 0; t < trials; ++t) {
      Eigen::VectorXi levels(static_cast<Eigen::Index>(d));
      for (Eigen::Index e = 0; e < levels.size(); ++e) {
        levels(e) = static_cast<int>(stream.uniform_int(3)) - 1;
      }
      const dqsgd::TernaryCodeword codeword = dqsgd::encode(levels, 2.0);
      const std::vector<std::uint8_t> bytes = dqsgd::to_bytes(codeword);
      const dqsgd::TernaryOutput back = dqsgd::decode(dqsgd::from_bytes(bytes));
      if ((back.levels.array() != levels.array()).any() || back.r != 2.0) {
        ok = false;
        break;
      }
    }
    std::printf("%10u %12zu %12.4f %10s\n", d, 13 + dqsgd::payload_bytes(d),
                dqsgd::compression_ratio(d), ok ? "ok" : "FAILED");
    if (!ok) {
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized quantized SGD simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string seed_list;
  long iterations_override = 0;
  std::string log_override;

  CLI::App* validate = app.add_subcommand("validate", "check a config's step-size conditions");
  validate->add_option("--config", config_path, "JSON config file")->required();

  CLI::App* run = app.add_subcommand("run", "run an experiment and write CSV/JSON outputs");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--output-dir", output_dir,
                  "output directory (default: $DQSGD_OUTPUT_DIR or ./dqsgd-out)");
  run->add_option("--seeds", seed_list, "comma-separated seed list overriding the config");
  run->add_option("--iterations", iterations_override, "iteration count overriding the config");
  run->add_option("--log", log_override, "log mode overriding the config: metrics|full");

  std::string trajectory_path;
  int target = 0;
  std::string mode_name = "eavesdropper";
  long round = -1;
  int redraws = 0;
  std::uint64_t attack_seed = 1;

  CLI::App* attack = app.add_subcommand("attack", "invert gradients from a saved trajectory");
  attack->add_option("--trajectory", trajectory_path, "trajectory JSON from a full-log run")
      ->required();
  attack->add_option("--target", target, "agent under attack")->required();
  attack->add_option("--mode", mode_name, "eavesdropper|honest-but-curious");
  attack->add_option("--round", round, "single round to attack (default: every round)");
  attack->add_option("--redraws", redraws, "Monte Carlo redraws at --round");
  attack->add_option("--seed", attack_seed, "redraw seed");

  double r = 1.0;
  double grid_step = 0.001;
  long steps = 0;

  CLI::App* dp = app.add_subcommand("dp-check", "sweep the per-step privacy bound exactly");
  dp->add_option("--r", r, "quantizer threshold")->required();
  dp->add_option("--grid-step", grid_step, "sweep resolution (<= 0.01)");
  dp->add_option("--steps", steps, "also report composition over this many steps");

  std::string dims_text = "1,5,100,10000,100000";
  int trials = 3;
  std::uint64_t bench_seed = 1;

  CLI::App* codec = app.add_subcommand("codec-bench", "round-trip and size-check the codec");
  codec->add_option("--dims", dims_text, "comma-separated dimensions");
  codec->add_option("--trials", trials, "random round-trips per dimension");
  codec->add_option("--seed", bench_seed, "level-draw seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(validate)) {
      return cmd_validate(config_path);
    }
    if (app.got_subcommand(run)) {
      return cmd_run(config_path, output_dir, seed_list, iterations_override, log_override);
    }
    if (app.got_subcommand(attack)) {
      return cmd_attack(trajectory_path, target, mode_name, round, redraws, attack_seed);
    }
    if (app.got_subcommand(dp)) {
      return cmd_dp_check(r, grid_step, steps);
    }
    if (app.got_subcommand(codec)) {
      return cmd_codec_bench(dims_text, trials, bench_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
