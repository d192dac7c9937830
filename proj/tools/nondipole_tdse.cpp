// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

// nondipole-tdse: command-line front end over the C interface.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ndtdse/ndtdse.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(ndt_status s) {
  switch (s) {
    case NDT_OK: return kExitOk;
    case NDT_ERR_CONFIG: return kExitConfig;
    case NDT_ERR_NUMERICAL: return kExitNumerical;
    default: return kExitOther;
  }
}

int report(ndt_status s) {
  std::fprintf(stderr, "error: %s\n", ndt_last_error());
  return exit_code(s);
}

void log_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

struct ConfigHandle {
  ndt_config* p = nullptr;
  ~ConfigHandle() { ndt_config_free(p); }
};

struct ResultHandle {
  ndt_result* p = nullptr;
  ~ResultHandle() { ndt_result_free(p); }
};

int summarize(const ndt_result* r) {
  const size_t n = ndt_result_job_count(r);
  for (size_t i = 0; i < n; ++i) {
    ndt_job_summary s;
    ndt_result_job(r, i, &s);
    if (s.status == NDT_OK) {
      std::printf("%-32s p_ion=%.10g norm=%.12g absorbed=%.4g krylov=%.2f steps=%lld %.1fs\n",
                  ndt_result_job_name(r, i), s.ionization, s.final_norm, s.absorbed,
                  s.mean_krylov_dim, static_cast<long long>(s.steps), s.wall_seconds);
    } else {
      std::printf("%-32s FAILED: %s\n", ndt_result_job_name(r, i), ndt_result_job_error(r, i));
    }
  }
  return exit_code(ndt_result_status(r));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydrogen in intense high-frequency pulses beyond the dipole approximation"};
  app.set_version_flag("--version", std::string(ndt_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir, resume, checkpoint;
  int threads = 1;

  auto* run = app.add_subcommand("run", "Propagate every job of a config and write observables");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides outputs.directory)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--resume", resume, "Checkpoint to resume from")->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Parse a config and print its resolved jobs");
  validate->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  auto* spectrum = app.add_subcommand("spectrum", "Recompute observables from a checkpoint");
  spectrum->add_option("checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  spectrum->add_option("config", config_path, "Config the checkpoint was written with")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ConfigHandle cfg;
  if (const ndt_status s = ndt_config_load(config_path.c_str(), &cfg.p); s != NDT_OK) return report(s);

  if (*validate) {
    size_t n = 0;
    ndt_config_job_count(cfg.p, &n);
    std::printf("# config %s, %zu job(s)\n%s", ndt_config_hash(cfg.p), n, ndt_config_text(cfg.p));
    for (size_t i = 0; i < n; ++i) {
      size_t need = 0;
      if (const ndt_status s = ndt_config_job_text(cfg.p, i, nullptr, 0, &need); s != NDT_OK) return report(s);
      std::vector<char> buf(need);
      ndt_config_job_text(cfg.p, i, buf.data(), buf.size(), &need);
      std::printf("\n# ---- job %zu, resolved\n%s", i, buf.data());
    }
    return kExitOk;
  }

  ndt_run_options opt;
  ndt_run_options_init(&opt);
  opt.threads = threads;
  opt.log = log_line;
  if (!out_dir.empty()) opt.out_dir = out_dir.c_str();
  if (!resume.empty()) opt.resume_path = resume.c_str();

  ResultHandle res;
  const ndt_status s = *run ? ndt_run(cfg.p, &opt, &res.p) : ndt_spectrum(cfg.p, checkpoint.c_str(), &opt, &res.p);
  if (s != NDT_OK) return report(s);
  return summarize(res.p);
}
