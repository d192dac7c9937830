// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndtdse/config.hpp"

namespace ndt {

/// Column-oriented numeric table written as CSV.
struct Table {
  std::string kind;
  std::vector<std::string> columns;  // names carry their unit, e.g. "energy_au"
  std::vector<std::vector<double>> data;  // one vector per column
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t n_rows() const { return data.empty() ? 0 : data.front().size(); }
};

/// Writes '#'-prefixed metadata (kind, code version, timestamp, then the
/// table's own entries), a header line and the rows with shortest
/// round-trip formatting. Returns the SHA-256 of the payload: the header
/// line and rows, without the metadata, so identical data hashes equal
/// across runs. Throws NumericalError on non-finite data, IoError on I/O.
std::string write_table(const Table& table, const std::filesystem::path& path);

/// Reads a table written by write_table.
Table read_table(const std::filesystem::path& path);

struct FileRecord {
  std::string kind;
  std::filesystem::path path;
  std::string sha256;
};

enum class JobStatus { Complete, ConfigFailure, NumericalFailure, IoFailure };

struct JobResult {
  std::string name;
  InteractionModel model = InteractionModel::Dipole;
  std::optional<double> sweep_value;
  JobStatus status = JobStatus::Complete;
  std::string error;

  double ionization = 0.0;
  double bound_population = 0.0;
  double ground_population = 0.0;
  double final_norm = 0.0;
  double absorbed = 0.0;
  GaugeBoundaryReport gauge;
  std::int64_t steps = 0;
  double mean_krylov_dim = 0.0;
  int max_krylov_dim = 0;
  double max_residual = 0.0;
  double wall_seconds = 0.0;
  std::int64_t dim = 0;

  std::string config_text;
  std::string config_hash;
  std::vector<FileRecord> files;
};

struct RunResult {
  std::string config_text;
  std::string config_hash;
  std::vector<JobResult> jobs;
  /// Sweep-level tables (one ionization table per model).
  std::vector<FileRecord> files;

  bool ok() const;
  /// Worst failure: ConfigFailure before NumericalFailure before IoFailure.
  JobStatus status() const;
};

struct RunOptions {
  /// Overrides outputs.directory when set.
  std::optional<std::filesystem::path> out_dir;
  int threads = 1;
  /// Resume a single-job run from this checkpoint.
  std::optional<std::filesystem::path> resume;
  /// Spectrum cache; defaults to $NDT_CACHE_DIR.
  std::optional<std::filesystem::path> cache_dir;
  /// Progress sink; messages are whole lines.
  std::function<void(const std::string&)> log;
};

/// Builds, propagates and evaluates every job of the config. Jobs run on
/// `threads` workers and share bases whose settings coincide. A failing job
/// is recorded in its JobResult and does not stop the others.
/// Writes <out>/result.json and <out>/resolved.toml.
RunResult run(const RunConfig& config, const RunOptions& options = {});

/// Recomputes the observables of the job whose config hash matches the
/// checkpoint, from the stored state alone. The absorbed norm is taken as
/// 1 - |psi|^2.
RunResult postprocess(const RunConfig& config, const std::filesystem::path& checkpoint,
                      const RunOptions& options = {});

void write_result_json(const RunResult& result, const std::filesystem::path& path);

/// Version string embedded in table metadata.
const char* code_version();

}  // namespace ndt
