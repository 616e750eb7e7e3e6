#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dqsgd/engine.hpp"

namespace dqsgd {

/// Per-iteration metrics as CSV.  The first line is a comment carrying the
/// config digest, then a header, then one row per recorded state:
///   # config_digest=<16 hex digits>
///   k,epsilon,lambda,consensus_error,optimality_gap,avg_grad_norm
/// Values are printed with %.17g so reloading reproduces the doubles.
void write_metrics_csv(std::ostream& out, const Trajectory& trajectory);
void write_metrics_csv(const std::string& path, const Trajectory& trajectory);

/// Column-wise mean of the same metrics across several runs (typically one
/// per seed).  All runs must agree on length, digest, and schedule.
void write_mean_metrics_csv(std::ostream& out, const std::vector<Trajectory>& runs);
void write_mean_metrics_csv(const std::string& path, const std::vector<Trajectory>& runs);

/// Full-fidelity JSON snapshot of a trajectory, including states and round
/// logs when present.  Loading the output reproduces every double bit for
/// bit, so attack evaluations on a reloaded trajectory match in-process
/// results exactly.
std::string trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const std::string& json_text);
void save_trajectory(const std::string& path, const Trajectory& trajectory);
Trajectory load_trajectory(const std::string& path);

/// Run metadata (seed, quantizer, saturation counts, admissibility report,
/// abort state) as pretty-printed JSON, one entry per run.
std::string metadata_to_json(const std::vector<Trajectory>& runs);
void save_run_metadata(const std::string& path, const std::vector<Trajectory>& runs);

}  // namespace dqsgd
