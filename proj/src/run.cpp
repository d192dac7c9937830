// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/run.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"
#include "ndtdse/observables.hpp"

#ifndef NDT_VERSION
#define NDT_VERSION "unknown"
#endif

namespace ndt {

namespace fs = std::filesystem;

const char* code_version() { return NDT_VERSION; }

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string sweep_unit(const std::string& p) {
  if (p == "e0" || p == "omega" || p == "duration" || p == "r_max") return "_au";
  if (p == "intensity") return "_wcm2";
  if (p == "quiver_fraction") return "_c";
  if (p == "cep") return "_rad";
  if (p == "sigma") return "_per_au";
  return "";
}

std::string basis_key(const BasisSettings& s) {
  std::ostringstream os;
  os << format_double(s.r_max) << '|' << s.order << '|' << s.n_breakpoints << '|'
     << static_cast<int>(s.knot_law) << '|' << format_double(s.r_match) << '|' << s.l_max << '|'
     << s.m_max << '|' << format_double(s.e_cut) << '|' << static_cast<int>(s.symmetry) << '|'
     << format_double(s.charge);
  return os.str();
}

// Bases are built once per distinct setting and shared by every job that
// needs them.
class BasisPool {
 public:
  explicit BasisPool(fs::path cache) : cache_(std::move(cache)) {}

  std::shared_ptr<const Discretization> get(const BasisSettings& s) {
    std::shared_future<std::shared_ptr<const Discretization>> fut;
    std::promise<std::shared_ptr<const Discretization>> promise;
    bool builder = false;
    {
      std::lock_guard lock(mu_);
      auto [it, inserted] = pool_.try_emplace(basis_key(s));
      if (inserted) {
        it->second = promise.get_future().share();
        builder = true;
      }
      fut = it->second;
    }
    if (builder) {
      try {
        promise.set_value(build_discretization(s, cache_));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  fs::path cache_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const Discretization>>> pool_;
};

struct Context {
  fs::path out_dir;
  std::function<void(const std::string&)> log;
  std::mutex log_mu;

  void say(const std::string& line) {
    if (!log) return;
    std::lock_guard lock(log_mu);
    log(line);
  }
};

CheckpointHeader checkpoint_header(const JobSpec& job, const Discretization& d, double t) {
  CheckpointHeader h;
  h.n_channels = static_cast<std::uint32_t>(d.channels.size());
  h.n_coeffs = static_cast<std::uint64_t>(d.dim());
  h.t = t;
  h.pulse_hash = pulse_hash(job.pulse);
  h.config_hash = digest_prefix(job.config_hash);
  return h;
}

FileRecord record_table(const Context& ctx, const Table& t, const fs::path& path) {
  return {t.kind, fs::relative(path, ctx.out_dir), write_table(t, path)};
}

// Observables of a final state; appends the tables it writes.
void evaluate(Context& ctx, const JobSpec& job, const Discretization& d, const WavefunctionState& psi,
              double absorbed, const fs::path& dir, JobResult& r) {
  const SpectralProjection proj = project(psi, d, absorbed);
  r.ionization = ionization_probability(proj);
  r.bound_population = proj.bound_population();
  r.ground_population = std::norm(proj.amplitudes(d.state_index(0, 0, 0)));
  r.final_norm = psi.norm_sq();
  r.absorbed = absorbed;
  const OutputConfig& o = job.config.outputs;
  const std::vector<std::pair<std::string, std::string>> meta = {
      {"config_hash", job.config_hash}, {"model", std::string(to_string(job.model))}};

  if (o.wants(Observable::EnergySpectrum)) {
    const EnergySpectrum es = energy_spectrum(proj, make_energy_grid(o.e_max, o.de));
    Table t;
    t.kind = "dpde";
    t.metadata = meta;
    t.metadata.emplace_back("absorbed_norm_excluded", format_double(absorbed));
    t.columns = {"energy_au", "dpde_total"};
    std::vector<double> e(es.grid.n_bins);
    for (int i = 0; i < es.grid.n_bins; ++i) e[i] = es.grid.center(i);
    t.data = {e, es.total};
    for (std::size_t l = 0; l < es.per_l.size(); ++l) {
      t.columns.push_back("dpde_l" + std::to_string(l));
      t.data.push_back(es.per_l[l]);
    }
    r.files.push_back(record_table(ctx, t, dir / "dpde.csv"));
  }
  if (o.wants(Observable::Angular)) {
    const AngularDistribution ad = angular_distribution(proj, d.settings.charge, job.angular);
    Table t;
    t.kind = "angular";
    t.metadata = meta;
    t.metadata.emplace_back("energy_range_au", "0.." + format_double(job.angular.e_max));
    t.metadata.emplace_back("energy_integrated", "true");
    t.metadata.emplace_back("t_ref_au", format_double(job.angular.t_ref));
    t.columns = {"theta_rad", "phi_rad", "weight_sr", "dp_domega_per_sr"};
    t.data.assign(4, {});
    const double dphi = 2.0 * units::kPi / static_cast<double>(ad.phi.size());
    for (std::size_t i = 0; i < ad.theta.size(); ++i)
      for (std::size_t j = 0; j < ad.phi.size(); ++j) {
        t.data[0].push_back(ad.theta[i]);
        t.data[1].push_back(ad.phi[j]);
        t.data[2].push_back(ad.theta_weight[i] * dphi);
        t.data[3].push_back(ad.dp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    r.files.push_back(record_table(ctx, t, dir / "angular.csv"));
  }
}

JobResult run_job(Context& ctx, BasisPool& bases, const JobSpec& job,
                  const std::optional<fs::path>& resume) {
  JobResult r;
  r.name = job.name;
  r.model = job.model;
  r.sweep_value = job.sweep_value;
  r.config_text = job.config_text;
  r.config_hash = job.config_hash;
  r.gauge = gauge_boundary_check(job.pulse);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const fs::path dir = ctx.out_dir / "jobs" / job.name;
    fs::create_directories(dir);
    write_text(dir / "resolved.toml", job.config_text);
    r.files.push_back({"config", fs::relative(dir / "resolved.toml", ctx.out_dir), sha256_hex(job.config_text)});

    const auto disc = bases.get(job.basis);
    r.dim = disc->dim();
    const Hamiltonian h(job.model, job.pulse, disc);
    const TimeGrid grid = make_time_grid(job.pulse, job.propagator.dt);

    WavefunctionState psi0 = ground_state(*disc, grid.t_start);
    double absorbed_before = 0.0;
    if (resume) {
      CheckpointHeader hdr;
      psi0 = read_checkpoint(*resume, &hdr);
      const CheckpointHeader want = checkpoint_header(job, *disc, hdr.t);
      if (hdr.config_hash != want.config_hash || hdr.pulse_hash != want.pulse_hash ||
          hdr.n_coeffs != want.n_coeffs || hdr.n_channels != want.n_channels)
        throw ConfigError("checkpoint " + resume->string() + " does not belong to this config");
      if (!job.propagator.renormalize) absorbed_before = std::max(0.0, 1.0 - psi0.norm_sq());
    }
    ctx.say("[" + job.name + "] start: dim " + std::to_string(disc->dim()) + ", " +
            std::to_string(grid.n_steps) + " steps");

    StepCallback on_step;
    const std::int64_t every = job.config.propagator.checkpoint_every;
    if (every > 0) {
      on_step = [&, every](std::int64_t k, const WavefunctionState& psi) {
        if (k % every == 0) write_checkpoint(dir / "checkpoint.ndts", checkpoint_header(job, *disc, psi.t), psi);
      };
    }
    const RunTrace tr = propagate(h, psi0, grid, job.propagator, job.probes, on_step);
    r.steps = tr.steps_taken;
    r.mean_krylov_dim = tr.mean_krylov_dim;
    r.max_krylov_dim = tr.max_krylov_dim;
    r.max_residual = tr.max_residual;

    if (job.config.outputs.final_checkpoint) {
      const fs::path cp = dir / "final.ndts";
      write_checkpoint(cp, checkpoint_header(job, *disc, tr.final_state.t), tr.final_state);
      r.files.push_back({"checkpoint", fs::relative(cp, ctx.out_dir), file_sha256(cp)});
    }
    if (job.config.outputs.wants(Observable::Probes)) {
      Table t;
      t.kind = "probes";
      t.metadata = {{"config_hash", job.config_hash}, {"model", std::string(to_string(job.model))}};
      t.columns = {"time_au", "m_nonzero_population", "norm", "ground_population"};
      t.data = {tr.times, tr.m_population, tr.norm, tr.ground_population};
      r.files.push_back(record_table(ctx, t, dir / "probes.csv"));
    }
    evaluate(ctx, job, *disc, tr.final_state, tr.absorbed + absorbed_before, dir, r);
    ctx.say("[" + job.name + "] done: p_ion " + format_double(r.ionization));
  } catch (const ConfigError& e) {
    r.status = JobStatus::ConfigFailure;
    r.error = e.what();
  } catch (const NumericalError& e) {
    r.status = JobStatus::NumericalFailure;
    r.error = e.what();
  } catch (const IoError& e) {
    r.status = JobStatus::IoFailure;
    r.error = e.what();
  } catch (const fs::filesystem_error& e) {
    r.status = JobStatus::IoFailure;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.status = JobStatus::NumericalFailure;
    r.error = e.what();
  }
  if (r.status != JobStatus::Complete) ctx.say("[" + job.name + "] failed: " + r.error);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

fs::path resolve_cache(const RunOptions& o) {
  if (o.cache_dir) return *o.cache_dir;
  if (const char* env = std::getenv("NDT_CACHE_DIR"); env && *env) return env;
  return {};
}

void write_summary_tables(Context& ctx, const RunConfig& config, const std::string& run_hash,
                          RunResult& result) {
  if (!config.outputs.wants(Observable::Ionization)) return;
  const std::string x_name = config.sweep.empty() ? "e0" : config.sweep.parameter;
  for (InteractionModel m : config.models) {
    Table t;
    t.kind = "ionization";
    t.metadata = {{"config_hash", run_hash}, {"model", std::string(to_string(m))}};
    t.columns = {x_name + sweep_unit(x_name), "p_ion", "final_norm", "absorbed"};
    t.data.assign(4, {});
    for (const JobResult& j : result.jobs) {
      if (j.model != m || j.status != JobStatus::Complete) continue;
      const double x = j.sweep_value ? *j.sweep_value : config.pulse.field_strength();
      t.data[0].push_back(x);
      t.data[1].push_back(j.ionization);
      t.data[2].push_back(j.final_norm);
      t.data[3].push_back(j.absorbed);
    }
    const fs::path p = ctx.out_dir / ("ionization_" + std::string(to_string(m)) + ".csv");
    result.files.push_back(record_table(ctx, t, p));
  }
}

}  // namespace

bool RunResult::ok() const { return status() == JobStatus::Complete; }

JobStatus RunResult::status() const {
  JobStatus worst = JobStatus::Complete;
  auto rank = [](JobStatus s) {
    switch (s) {
      case JobStatus::ConfigFailure: return 3;
      case JobStatus::NumericalFailure: return 2;
      case JobStatus::IoFailure: return 1;
      case JobStatus::Complete: return 0;
    }
    return 0;
  };
  for (const JobResult& j : jobs)
    if (rank(j.status) > rank(worst)) worst = j.status;
  return worst;
}

std::string write_table(const Table& table, const fs::path& path) {
  const std::size_t n = table.n_rows();
  if (table.columns.size() != table.data.size()) throw ConfigError("table: column count mismatch");
  for (const auto& col : table.data) {
    if (col.size() != n) throw ConfigError("table " + table.kind + ": ragged columns");
    for (double v : col)
      if (!std::isfinite(v)) throw NumericalError("table " + table.kind + ": non-finite value");
  }
  std::string payload;
  for (std::size_t c = 0; c < table.columns.size(); ++c) payload += (c ? "," : "") + table.columns[c];
  payload += '\n';
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < table.data.size(); ++c) {
      if (c) payload += ',';
      const auto r = std::to_chars(buf, buf + sizeof buf, table.data[c][i]);
      payload.append(buf, r.ptr);
    }
    payload += '\n';
  }
  std::string text = "# kind: " + table.kind + "\n# code_version: " + code_version() +
                     "\n# timestamp: " + utc_timestamp() + "\n";
  for (const auto& [k, v] : table.metadata) text += "# " + k + ": " + v + "\n";
  text += payload;
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".partial";
  write_text(tmp, text);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
  return sha256_hex(payload);
}

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Table t;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string value = line.substr(colon + 2);
      if (key == "kind") t.kind = value;
      else if (key != "code_version" && key != "timestamp") t.metadata.emplace_back(key, value);
      continue;
    }
    std::vector<std::string> fields;
    std::size_t b = 0;
    for (;;) {
      const auto e = line.find(',', b);
      fields.push_back(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
      if (e == std::string::npos) break;
      b = e + 1;
    }
    if (!header) {
      t.columns = fields;
      t.data.assign(fields.size(), {});
      header = true;
      continue;
    }
    if (fields.size() != t.columns.size())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const auto r = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
      if (r.ec != std::errc() || r.ptr != fields[c].data() + fields[c].size())
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      t.data[c].push_back(v);
    }
  }
  if (!header) throw IoError(path.string() + ": no header line");
  return t;
}

RunResult run(const RunConfig& config, const RunOptions& options) {
  Context ctx;
  ctx.out_dir = options.out_dir.value_or(fs::path(config.outputs.directory));
  ctx.log = options.log;
  const std::vector<JobSpec> jobs = expand_jobs(config);
  if (options.resume && jobs.size() != 1)
    throw ConfigError("resume needs a config with a single model and no sweep");

  RunResult result;
  result.config_text = to_config_text(config);
  result.config_hash = sha256_hex(result.config_text);
  fs::create_directories(ctx.out_dir);
  write_text(ctx.out_dir / "resolved.toml", result.config_text);

  BasisPool bases(resolve_cache(options));
  result.jobs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) result.jobs[i] = run_job(ctx, bases, jobs[i], options.resume);
  };
  const int n_workers = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  write_summary_tables(ctx, config, result.config_hash, result);
  write_result_json(result, ctx.out_dir / "result.json");
  return result;
}

RunResult postprocess(const RunConfig& config, const fs::path& checkpoint, const RunOptions& options) {
  Context ctx;
  ctx.out_dir = options.out_dir.value_or(fs::path(config.outputs.directory));
  ctx.log = options.log;
  CheckpointHeader hdr;
  const WavefunctionState psi = read_checkpoint(checkpoint, &hdr);
  const std::vector<JobSpec> jobs = expand_jobs(config);
  const JobSpec* job = nullptr;
  for (const JobSpec& j : jobs)
    if (digest_prefix(j.config_hash) == hdr.config_hash) job = &j;
  if (!job) throw ConfigError("no job of this config matches checkpoint " + checkpoint.string());

  RunResult result;
  result.config_text = to_config_text(config);
  result.config_hash = sha256_hex(result.config_text);
  JobResult r;
  r.name = job->name;
  r.model = job->model;
  r.sweep_value = job->sweep_value;
  r.config_text = job->config_text;
  r.config_hash = job->config_hash;
  r.gauge = gauge_boundary_check(job->pulse);
  try {
    BasisPool bases(resolve_cache(options));
    const auto disc = bases.get(job->basis);
    if (static_cast<std::uint64_t>(disc->dim()) != hdr.n_coeffs)
      throw ConfigError("checkpoint size does not match the basis");
    r.dim = disc->dim();
    const fs::path dir = ctx.out_dir / "jobs" / job->name;
    fs::create_directories(dir);
    const double absorbed = job->propagator.renormalize ? 0.0 : std::max(0.0, 1.0 - psi.norm_sq());
    evaluate(ctx, *job, *disc, psi, absorbed, dir, r);
  } catch (const ConfigError& e) {
    r.status = JobStatus::ConfigFailure;
    r.error = e.what();
  } catch (const IoError& e) {
    r.status = JobStatus::IoFailure;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.status = JobStatus::NumericalFailure;
    r.error = e.what();
  }
  result.jobs.push_back(r);
  write_result_json(result, ctx.out_dir / "spectrum_result.json");
  return result;
}

void write_result_json(const RunResult& result, const fs::path& path) {
  using nlohmann::json;
  auto status_name = [](JobStatus s) {
    switch (s) {
      case JobStatus::Complete: return "complete";
      case JobStatus::ConfigFailure: return "config_error";
      case JobStatus::NumericalFailure: return "numerical_error";
      case JobStatus::IoFailure: return "io_error";
    }
    return "?";
  };
  auto files = [](const std::vector<FileRecord>& fr) {
    json a = json::array();
    for (const FileRecord& f : fr) a.push_back({{"kind", f.kind}, {"path", f.path.generic_string()}, {"sha256", f.sha256}});
    return a;
  };
  json j;
  j["code_version"] = code_version();
  j["config_hash"] = result.config_hash;
  j["config"] = result.config_text;
  j["status"] = status_name(result.status());
  j["files"] = files(result.files);
  j["jobs"] = json::array();
  for (const JobResult& r : result.jobs) {
    json g = {{"a_start", r.gauge.a_start}, {"f_start", r.gauge.f_start}, {"a_end", r.gauge.a_end},
              {"f_end", r.gauge.f_end}, {"u_is_identity", r.gauge.u_is_identity},
              {"tolerance", r.gauge.tolerance}};
    json jr = {{"name", r.name},
               {"model", std::string(to_string(r.model))},
               {"status", status_name(r.status)},
               {"ionization_probability", r.ionization},
               {"bound_population", r.bound_population},
               {"ground_population", r.ground_population},
               {"final_norm", r.final_norm},
               {"absorbed_fraction", r.absorbed},
               {"gauge_boundary", g},
               {"diagnostics",
                {{"dim", r.dim}, {"steps", r.steps}, {"mean_krylov_dim", r.mean_krylov_dim},
                 {"max_krylov_dim", r.max_krylov_dim}, {"max_residual", r.max_residual},
                 {"wall_seconds", r.wall_seconds}}},
               {"config_hash", r.config_hash},
               {"config", r.config_text},
               {"files", files(r.files)}};
    if (r.sweep_value) jr["sweep_value"] = *r.sweep_value;
    if (!r.error.empty()) jr["error"] = r.error;
    j["jobs"].push_back(jr);
  }
  write_text(path, j.dump(2) + "\n");
}

}  // namespace ndt
