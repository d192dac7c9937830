// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/ndtdse.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "ndtdse/config.hpp"
#include "ndtdse/errors.hpp"
#include "ndtdse/run.hpp"

struct ndt_config {
  ndt::RunConfig config;
  std::string text;
  std::string hash;
};

struct ndt_result {
  ndt::RunResult result;
};

namespace {

thread_local std::string g_error;
thread_local int g_line = 0;
thread_local int g_column = 0;

void clear_error() {
  g_error.clear();
  g_line = g_column = 0;
}

ndt_status fail(ndt_status s, const std::string& what) {
  g_error = what;
  return s;
}

// Maps the exception in flight to a status code.
ndt_status translate() {
  try {
    throw;
  } catch (const ndt::ConfigError& e) {
    g_line = e.line();
    g_column = e.column();
    return fail(NDT_ERR_CONFIG, e.what());
  } catch (const ndt::NumericalError& e) {
    return fail(NDT_ERR_NUMERICAL, e.what());
  } catch (const ndt::IoError& e) {
    return fail(NDT_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(NDT_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NDT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NDT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NDT_ERR_INTERNAL, "unknown error");
  }
}

ndt_status to_status(ndt::JobStatus s) {
  switch (s) {
    case ndt::JobStatus::Complete: return NDT_OK;
    case ndt::JobStatus::ConfigFailure: return NDT_ERR_CONFIG;
    case ndt::JobStatus::NumericalFailure: return NDT_ERR_NUMERICAL;
    case ndt::JobStatus::IoFailure: return NDT_ERR_IO;
  }
  return NDT_ERR_INTERNAL;
}

ndt_config* wrap(ndt::RunConfig c) {
  auto* h = new ndt_config{std::move(c), {}, {}};
  h->text = ndt::to_config_text(h->config);
  h->hash = ndt::sha256_hex(h->text);
  return h;
}

ndt::RunOptions convert(const ndt_run_options* o) {
  ndt::RunOptions r;
  if (!o) return r;
  if (o->out_dir) r.out_dir = o->out_dir;
  r.threads = o->threads;
  if (o->resume_path) r.resume = o->resume_path;
  if (o->cache_dir) r.cache_dir = o->cache_dir;
  if (o->log) {
    ndt_log_fn fn = o->log;
    void* user = o->log_user;
    r.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
  }
  return r;
}

}  // namespace

extern "C" {

const char* ndt_version(void) { return ndt::code_version(); }
const char* ndt_last_error(void) { return g_error.c_str(); }
int ndt_last_error_line(void) { return g_line; }
int ndt_last_error_column(void) { return g_column; }

ndt_status ndt_config_parse(const char* text, ndt_config** out) {
  clear_error();
  if (!text || !out) return fail(NDT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    *out = wrap(ndt::parse_config(text));
    return NDT_OK;
  } catch (...) {
    return translate();
  }
}

ndt_status ndt_config_load(const char* path, ndt_config** out) {
  clear_error();
  if (!path || !out) return fail(NDT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    *out = wrap(ndt::load_config(path));
    return NDT_OK;
  } catch (...) {
    return translate();
  }
}

void ndt_config_free(ndt_config* config) { delete config; }

const char* ndt_config_text(const ndt_config* config) { return config ? config->text.c_str() : nullptr; }
const char* ndt_config_hash(const ndt_config* config) { return config ? config->hash.c_str() : nullptr; }

ndt_status ndt_config_job_count(const ndt_config* config, size_t* count) {
  clear_error();
  if (!config || !count) return fail(NDT_ERR_ARGUMENT, "null argument");
  const auto& c = config->config;
  *count = c.models.size() * (c.sweep.empty() ? 1 : c.sweep.values.size());
  return NDT_OK;
}

ndt_status ndt_config_job_text(const ndt_config* config, size_t index, char* buf, size_t cap,
                               size_t* needed) {
  clear_error();
  if (!config) return fail(NDT_ERR_ARGUMENT, "null argument");
  try {
    const auto jobs = ndt::expand_jobs(config->config);
    if (index >= jobs.size()) return fail(NDT_ERR_ARGUMENT, "job index out of range");
    const std::string& t = jobs[index].config_text;
    if (needed) *needed = t.size() + 1;
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, t.size());
      std::memcpy(buf, t.data(), n);
      buf[n] = '\0';
    }
    return NDT_OK;
  } catch (...) {
    return translate();
  }
}

void ndt_run_options_init(ndt_run_options* options) {
  if (!options) return;
  *options = ndt_run_options{nullptr, 1, nullptr, nullptr, nullptr, nullptr};
}

ndt_status ndt_run(const ndt_config* config, const ndt_run_options* options, ndt_result** out) {
  clear_error();
  if (!config || !out) return fail(NDT_ERR_ARGUMENT, "null argument");
  if (options && options->threads < 1) return fail(NDT_ERR_ARGUMENT, "threads must be >= 1");
  *out = nullptr;
  try {
    *out = new ndt_result{ndt::run(config->config, convert(options))};
    return NDT_OK;
  } catch (...) {
    return translate();
  }
}

ndt_status ndt_spectrum(const ndt_config* config, const char* checkpoint_path,
                        const ndt_run_options* options, ndt_result** out) {
  clear_error();
  if (!config || !checkpoint_path || !out) return fail(NDT_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    *out = new ndt_result{ndt::postprocess(config->config, checkpoint_path, convert(options))};
    return NDT_OK;
  } catch (...) {
    return translate();
  }
}

void ndt_result_free(ndt_result* result) { delete result; }

ndt_status ndt_result_status(const ndt_result* result) {
  if (!result) return NDT_ERR_ARGUMENT;
  return to_status(result->result.status());
}

size_t ndt_result_job_count(const ndt_result* result) { return result ? result->result.jobs.size() : 0; }

ndt_status ndt_result_job(const ndt_result* result, size_t index, ndt_job_summary* out) {
  clear_error();
  if (!result || !out) return fail(NDT_ERR_ARGUMENT, "null argument");
  if (index >= result->result.jobs.size()) return fail(NDT_ERR_ARGUMENT, "job index out of range");
  const ndt::JobResult& j = result->result.jobs[index];
  out->status = to_status(j.status);
  out->ionization = j.ionization;
  out->bound_population = j.bound_population;
  out->ground_population = j.ground_population;
  out->final_norm = j.final_norm;
  out->absorbed = j.absorbed;
  out->gauge_boundary_identity = j.gauge.u_is_identity ? 1 : 0;
  out->steps = j.steps;
  out->dim = j.dim;
  out->mean_krylov_dim = j.mean_krylov_dim;
  out->max_krylov_dim = j.max_krylov_dim;
  out->max_residual = j.max_residual;
  out->wall_seconds = j.wall_seconds;
  return NDT_OK;
}

const char* ndt_result_job_name(const ndt_result* result, size_t index) {
  if (!result || index >= result->result.jobs.size()) return nullptr;
  return result->result.jobs[index].name.c_str();
}

const char* ndt_result_job_error(const ndt_result* result, size_t index) {
  if (!result || index >= result->result.jobs.size()) return nullptr;
  return result->result.jobs[index].error.c_str();
}

const char* ndt_result_config_hash(const ndt_result* result) {
  return result ? result->result.config_hash.c_str() : nullptr;
}

}  // extern "C"
