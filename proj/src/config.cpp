// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"

namespace ndt {

namespace {

// ---------------------------------------------------------------- lexer

struct Value {
  enum Kind { Number, Bool, String, Array } kind = Number;
  double number = 0.0;
  bool integral = false;  // written without '.', exponent or sign of fraction
  bool boolean = false;
  std::string text;
  std::vector<Value> items;
  int line = 0, col = 0;
};

struct Entry {
  std::string section;
  std::string key;
  Value value;
  int line = 0, col = 0;
};

class Lexer {
 public:
  Lexer(std::string_view s, std::set<std::string> known_sections)
      : s_(s), known_(std::move(known_sections)) {}

  std::vector<Entry> parse() {
    std::vector<Entry> out;
    std::set<std::string> sections{""};
    std::set<std::string> keys;
    std::string section;
    if (s_.substr(0, 3) == "\xEF\xBB\xBF") advance(3);
    while (!eof()) {
      skip_blank();
      if (eof()) break;
      if (peek() == '\n') {
        advance();
        continue;
      }
      if (peek() == '#') {
        skip_comment();
        continue;
      }
      const int l = line_, c = col_;
      if (peek() == '[') {
        advance();
        skip_blank();
        section = bare_word("section name");
        skip_blank();
        expect(']');
        if (!known_.count(section)) throw ConfigError("unknown section [" + section + "]", l, c);
        if (!sections.insert(section).second) throw ConfigError("duplicate section [" + section + "]", l, c);
        end_of_line();
        continue;
      }
      Entry e;
      e.section = section;
      e.line = l;
      e.col = c;
      e.key = bare_word("key");
      skip_blank();
      expect('=');
      skip_blank();
      e.value = value(false);
      const std::string full = section + "." + e.key;
      if (!keys.insert(full).second) throw ConfigError("duplicate key '" + e.key + "'", l, c);
      end_of_line();
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }
  void advance(std::size_t n = 1) {
    for (std::size_t k = 0; k < n && !eof(); ++k) {
      if (s_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else if ((static_cast<unsigned char>(s_[i_]) & 0xC0) != 0x80) {
        ++col_;
      }
      ++i_;
    }
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, line_, col_); }

  void skip_blank() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  void skip_comment() {
    while (!eof() && peek() != '\n') advance();
  }
  void skip_space_and_comments() {
    for (;;) {
      skip_blank();
      if (eof()) return;
      if (peek() == '#') skip_comment();
      else if (peek() == '\n') advance();
      else return;
    }
  }
  void expect(char ch) {
    if (eof() || peek() != ch) fail(std::string("expected '") + ch + "'");
    advance();
  }
  void end_of_line() {
    skip_blank();
    if (eof()) return;
    if (peek() == '#') skip_comment();
    if (!eof() && peek() != '\n') fail("unexpected text after value");
  }
  static bool word_char(char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  }
  std::string bare_word(const char* what) {
    const std::size_t b = i_;
    while (!eof() && word_char(peek())) advance();
    if (i_ == b) fail(std::string("expected ") + what);
    return std::string(s_.substr(b, i_ - b));
  }

  Value value(bool in_array) {
    Value v;
    v.line = line_;
    v.col = col_;
    if (eof()) fail("expected a value");
    const char ch = peek();
    if (ch == '"') {
      v.kind = Value::String;
      advance();
      for (;;) {
        if (eof() || peek() == '\n') fail("unterminated string");
        char c = peek();
        advance();
        if (c == '"') break;
        if (c == '\\') {
          if (eof()) fail("unterminated string");
          const char e = peek();
          advance();
          switch (e) {
            case '"': c = '"'; break;
            case '\\': c = '\\'; break;
            case 'n': c = '\n'; break;
            case 't': c = '\t'; break;
            default: fail(std::string("unknown escape \\") + e);
          }
        }
        v.text.push_back(c);
      }
      return v;
    }
    if (ch == '[') {
      if (in_array) fail("nested arrays are not supported");
      v.kind = Value::Array;
      advance();
      skip_space_and_comments();
      while (!eof() && peek() != ']') {
        v.items.push_back(value(true));
        skip_space_and_comments();
        if (!eof() && peek() == ',') {
          advance();
          skip_space_and_comments();
        } else if (!eof() && peek() != ']') {
          fail("expected ',' or ']'");
        }
      }
      expect(']');
      return v;
    }
    const std::size_t b = i_;
    while (!eof() && (word_char(peek()) || peek() == '.' || peek() == '+')) advance();
    std::string tok(s_.substr(b, i_ - b));
    if (tok.empty()) fail("expected a value");
    if (tok == "true" || tok == "false") {
      v.kind = Value::Bool;
      v.boolean = tok == "true";
      return v;
    }
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last || !std::isfinite(v.number))
      throw ConfigError("invalid value '" + std::string(s_.substr(b, i_ - b)) + "'", v.line, v.col);
    v.integral = tok.find_first_of(".eE") == std::string::npos;
    return v;
  }

  std::string_view s_;
  std::set<std::string> known_;
  std::size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

// ------------------------------------------------------------ conversion

[[noreturn]] void fail_at(const Value& v, const std::string& what) {
  throw ConfigError(what, v.line, v.col);
}

double as_number(const Value& v, const std::string& key) {
  if (v.kind != Value::Number) fail_at(v, key + ": expected a number");
  return v.number;
}

int as_int(const Value& v, const std::string& key) {
  const double x = as_number(v, key);
  if (x != std::floor(x) || std::abs(x) > 1e9) fail_at(v, key + ": expected an integer");
  return static_cast<int>(x);
}

bool as_bool(const Value& v, const std::string& key) {
  if (v.kind != Value::Bool) fail_at(v, key + ": expected true or false");
  return v.boolean;
}

const std::string& as_string(const Value& v, const std::string& key) {
  if (v.kind != Value::String) fail_at(v, key + ": expected a string");
  return v.text;
}

template <class Parse>
auto as_enum(const Value& v, const std::string& key, Parse parse) {
  const auto r = parse(as_string(v, key));
  if (!r) fail_at(v, key + ": unknown value \"" + v.text + "\"");
  return *r;
}

const std::vector<std::string> kSweepParameters = {
    "e0", "intensity", "quiver_fraction", "omega", "cep", "n_cycles",
    "duration", "sigma", "r_max", "l_max", "m_max"};

bool integer_parameter(const std::string& p) { return p == "l_max" || p == "m_max"; }

void apply_sweep_value(RunConfig& c, const std::string& p, double v) {
  PulseConfig& pu = c.pulse;
  if (p == "e0" || p == "intensity" || p == "quiver_fraction") {
    pu.e0.reset();
    pu.intensity.reset();
    pu.quiver_fraction.reset();
    (p == "e0" ? pu.e0 : p == "intensity" ? pu.intensity : pu.quiver_fraction) = v;
  } else if (p == "n_cycles" || p == "duration") {
    pu.n_cycles.reset();
    pu.duration.reset();
    (p == "n_cycles" ? pu.n_cycles : pu.duration) = v;
  } else if (p == "omega") {
    pu.omega = v;
  } else if (p == "cep") {
    pu.cep = v;
  } else if (p == "sigma") {
    pu.sigma = v;
  } else if (p == "r_max") {
    c.basis.r_max = v;
  } else if (p == "l_max") {
    c.basis.l_max = static_cast<int>(v);
  } else if (p == "m_max") {
    c.basis.m_max = static_cast<int>(v);
  }
}

class Checker {
 public:
  explicit Checker(const RunConfig& c) : c_(c) {}
  void require(bool ok, const std::string& key, const std::string& what) const {
    if (ok) return;
    const auto it = c_.locations.find(key);
    if (it == c_.locations.end()) throw ConfigError(key + ": " + what);
    throw ConfigError(key + ": " + what, it->second.first, it->second.second);
  }

 private:
  const RunConfig& c_;
};

// Range checks on a config with any sweep value already applied.
void check_ranges(const RunConfig& c, const std::string& swept = {}) {
  const Checker ck(c);
  auto key = [&](const std::string& k) {
    const auto dot = k.find('.');
    // Swept keys have no single source position; the caller pins the value.
    return swept == k.substr(dot + 1) ? "sweep:" + swept : k;
  };
  const PulseConfig& p = c.pulse;
  const int n_field = p.e0.has_value() + p.intensity.has_value() + p.quiver_fraction.has_value();
  ck.require(n_field == 1, "pulse.e0", "exactly one of e0, intensity, quiver_fraction is required");
  const int n_len = p.n_cycles.has_value() + p.duration.has_value();
  ck.require(n_len == 1, "pulse.n_cycles", "exactly one of n_cycles, duration is required");
  ck.require(p.omega > 0.0, key("pulse.omega"), "omega must be > 0");
  if (p.e0) ck.require(*p.e0 >= 0.0, key("pulse.e0"), "must be >= 0");
  if (p.intensity) ck.require(*p.intensity >= 0.0, key("pulse.intensity"), "must be >= 0");
  if (p.quiver_fraction)
    ck.require(*p.quiver_fraction >= 0.0 && *p.quiver_fraction < 1.0, key("pulse.quiver_fraction"),
               "must be in [0, 1)");
  if (p.n_cycles) ck.require(*p.n_cycles > 0.0, key("pulse.n_cycles"), "must be > 0");
  if (p.duration) ck.require(*p.duration > 0.0, key("pulse.duration"), "must be > 0");
  ck.require(p.sigma > 0.0, key("pulse.sigma"), "must be > 0");

  const BasisConfig& b = c.basis;
  if (b.r_max) ck.require(*b.r_max > 0.0, key("basis.r_max"), "must be > 0");
  ck.require(b.order >= 4 && b.order <= 15, "basis.order", "must be in [4, 15]");
  ck.require(b.n_breakpoints == 0 || b.n_breakpoints >= b.order + 2, "basis.n_breakpoints",
             "must be 0 (auto) or >= order + 2");
  ck.require(b.r_match > 0.0, "basis.r_match", "must be > 0");
  ck.require(b.l_max >= 0 && b.l_max <= 400, key("basis.l_max"), "must be in [0, 400]");
  if (b.m_max)
    ck.require(*b.m_max >= 0 && *b.m_max <= b.l_max, key("basis.m_max"), "must be in [0, l_max]");
  ck.require(b.e_cut > 0.0, "basis.e_cut", "must be > 0");

  const PropagatorSection& pr = c.propagator;
  ck.require(!(pr.dt && pr.steps_per_cycle), "propagator.dt", "give dt or steps_per_cycle, not both");
  if (pr.dt) ck.require(*pr.dt > 0.0, "propagator.dt", "must be > 0");
  if (pr.steps_per_cycle)
    ck.require(*pr.steps_per_cycle >= 1.0, "propagator.steps_per_cycle", "must be >= 1");
  ck.require(pr.krylov_dim_max >= 2 && pr.krylov_dim_max <= 1000, "propagator.krylov_dim_max",
             "must be in [2, 1000]");
  ck.require(pr.krylov_tol > 0.0 && pr.krylov_tol < 1.0, "propagator.krylov_tol", "must be in (0, 1)");
  if (pr.mask_r_on) ck.require(*pr.mask_r_on > 0.0, "propagator.mask_r_on", "must be > 0");
  ck.require(pr.mask_exponent > 0.0, "propagator.mask_exponent", "must be > 0");
  ck.require(pr.checkpoint_every >= 0, "propagator.checkpoint_every", "must be >= 0");

  const OutputConfig& o = c.outputs;
  ck.require(o.probe_stride >= 1, "outputs.probe_stride", "must be >= 1");
  ck.require(!o.directory.empty(), "outputs.directory", "must not be empty");
  ck.require(o.de > 0.0, "outputs.de", "must be > 0");
  ck.require(o.e_max > o.de, "outputs.e_max", "must exceed de");
  ck.require(o.n_theta >= 2, "outputs.n_theta", "must be >= 2");
  ck.require(o.n_phi >= 1, "outputs.n_phi", "must be >= 1");
  ck.require(!c.models.empty(), "model", "at least one model is required");
}

void append_kv(std::ostringstream& os, const std::string& k, const std::string& v) {
  os << k << " = " << v << '\n';
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    if (ch == '\t') {
      out += "\\t";
      continue;
    }
    out.push_back(ch);
  }
  return out + '"';
}

}  // namespace

// ------------------------------------------------------------ public API

std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::Ionization: return "ionization";
    case Observable::EnergySpectrum: return "dpde";
    case Observable::Angular: return "angular";
    case Observable::Probes: return "probes";
  }
  return "?";
}

std::optional<Observable> parse_observable(std::string_view name) {
  for (auto o : {Observable::Ionization, Observable::EnergySpectrum, Observable::Angular,
                 Observable::Probes})
    if (to_string(o) == name) return o;
  return std::nullopt;
}

bool OutputConfig::wants(Observable o) const {
  return std::find(observables.begin(), observables.end(), o) != observables.end();
}

double PulseConfig::field_strength() const {
  if (e0) return *e0;
  if (intensity) return std::sqrt(*intensity / units::kAtomicIntensityWcm2);
  if (quiver_fraction) return *quiver_fraction * omega * units::kSpeedOfLight;
  throw ConfigError("pulse: no field strength given");
}

double PulseConfig::total_duration() const {
  if (duration) return *duration;
  if (n_cycles) return *n_cycles * 2.0 * units::kPi / omega;
  throw ConfigError("pulse: no duration given");
}

Pulse PulseConfig::build() const {
  return Pulse::make(shape, field_strength(), omega, total_duration(), cep, sigma);
}

const std::vector<std::string>& sweep_parameters() { return kSweepParameters; }

double auto_r_max(double e0, double omega) { return std::max(150.0, 4.0 * e0 / (omega * omega) + 50.0); }

RunConfig parse_config(std::string_view text) {
  const std::vector<Entry> entries = Lexer(text, {"pulse", "basis", "propagator", "outputs", "sweep"}).parse();
  RunConfig c;
  bool have_model = false;
  const Value* sweep_values = nullptr;
  for (const Entry& e : entries) {
    const std::string& k = e.key;
    const Value& v = e.value;
    const std::string full = e.section.empty() ? k : e.section + "." + k;
    c.locations[full] = {v.line, v.col};
    auto unknown = [&] { throw ConfigError("unknown key '" + full + "'", e.line, e.col); };

    if (e.section.empty()) {
      if (k != "model") unknown();
      std::vector<Value> names = v.kind == Value::Array ? v.items : std::vector<Value>{v};
      if (names.empty()) fail_at(v, "model: empty list");
      for (const Value& n : names) {
        const InteractionModel m = as_enum(n, "model", parse_interaction_model);
        if (std::find(c.models.begin(), c.models.end(), m) != c.models.end())
          fail_at(n, "model: duplicate entry");
        c.models.push_back(m);
      }
      have_model = true;
    } else if (e.section == "pulse") {
      PulseConfig& p = c.pulse;
      if (k == "shape") p.shape = as_enum(v, full, parse_envelope_shape);
      else if (k == "e0") p.e0 = as_number(v, full);
      else if (k == "intensity") p.intensity = as_number(v, full);
      else if (k == "quiver_fraction") p.quiver_fraction = as_number(v, full);
      else if (k == "omega") p.omega = as_number(v, full);
      else if (k == "cep") p.cep = as_number(v, full);
      else if (k == "n_cycles") p.n_cycles = as_number(v, full);
      else if (k == "duration") p.duration = as_number(v, full);
      else if (k == "sigma") p.sigma = as_number(v, full);
      else unknown();
    } else if (e.section == "basis") {
      BasisConfig& b = c.basis;
      const bool is_auto = v.kind == Value::String && v.text == "auto";
      if (k == "r_max") b.r_max = is_auto ? std::nullopt : std::optional<double>(as_number(v, full));
      else if (k == "order") b.order = as_int(v, full);
      else if (k == "n_breakpoints") b.n_breakpoints = is_auto ? 0 : as_int(v, full);
      else if (k == "knot_law") b.knot_law = as_enum(v, full, parse_knot_law);
      else if (k == "r_match") b.r_match = as_number(v, full);
      else if (k == "l_max") b.l_max = as_int(v, full);
      else if (k == "m_max") b.m_max = is_auto ? std::nullopt : std::optional<int>(as_int(v, full));
      else if (k == "e_cut") b.e_cut = as_number(v, full);
      else if (k == "symmetry") b.symmetry = as_enum(v, full, parse_channel_symmetry);
      else unknown();
    } else if (e.section == "propagator") {
      PropagatorSection& p = c.propagator;
      if (k == "dt") p.dt = as_number(v, full);
      else if (k == "steps_per_cycle") p.steps_per_cycle = as_number(v, full);
      else if (k == "krylov_dim_max") p.krylov_dim_max = as_int(v, full);
      else if (k == "krylov_tol") p.krylov_tol = as_number(v, full);
      else if (k == "renormalize") p.renormalize = as_bool(v, full);
      else if (k == "mask_r_on") p.mask_r_on = as_number(v, full);
      else if (k == "mask_exponent") p.mask_exponent = as_number(v, full);
      else if (k == "checkpoint_every") p.checkpoint_every = as_int(v, full);
      else unknown();
    } else if (e.section == "outputs") {
      OutputConfig& o = c.outputs;
      if (k == "observables") {
        if (v.kind != Value::Array) fail_at(v, full + ": expected an array of names");
        o.observables.clear();
        for (const Value& n : v.items) {
          const Observable ob = as_enum(n, full, parse_observable);
          if (!o.wants(ob)) o.observables.push_back(ob);
        }
      } else if (k == "probe_stride") o.probe_stride = as_int(v, full);
      else if (k == "directory") o.directory = as_string(v, full);
      else if (k == "de") o.de = as_number(v, full);
      else if (k == "e_max") o.e_max = as_number(v, full);
      else if (k == "n_theta") o.n_theta = as_int(v, full);
      else if (k == "n_phi") o.n_phi = as_int(v, full);
      else if (k == "t_ref") o.t_ref = as_number(v, full);
      else if (k == "final_checkpoint") o.final_checkpoint = as_bool(v, full);
      else unknown();
    } else if (e.section == "sweep") {
      if (k == "parameter") {
        c.sweep.parameter = as_string(v, full);
        if (std::find(kSweepParameters.begin(), kSweepParameters.end(), c.sweep.parameter) ==
            kSweepParameters.end())
          fail_at(v, full + ": cannot sweep \"" + c.sweep.parameter + "\"");
      } else if (k == "values") {
        if (v.kind != Value::Array) fail_at(v, full + ": expected an array of numbers");
        for (const Value& n : v.items) c.sweep.values.push_back(as_number(n, full));
        sweep_values = &v;
      } else {
        unknown();
      }
    }
  }
  if (!have_model) throw ConfigError("missing required key 'model'");
  if (!c.locations.count("pulse.omega") && c.sweep.parameter != "omega")
    throw ConfigError("missing required key 'pulse.omega'");

  if (c.sweep.parameter.empty() != c.sweep.values.empty()) {
    const auto it = c.locations.find(c.sweep.parameter.empty() ? "sweep.values" : "sweep.parameter");
    throw ConfigError("sweep: parameter and a non-empty values list go together", it->second.first,
                      it->second.second);
  }
  if (c.sweep.empty()) {
    check_ranges(c);
    return c;
  }
  // The swept parameter fills its own group; the rest of the config must
  // be complete and in range at every sweep point.
  const std::string& p = c.sweep.parameter;
  const std::vector<std::vector<std::string>> groups = {{"e0", "intensity", "quiver_fraction"},
                                                        {"n_cycles", "duration"}};
  for (const auto& g : groups) {
    if (std::find(g.begin(), g.end(), p) == g.end()) continue;
    for (const std::string& k : g) {
      const auto it = c.locations.find("pulse." + k);
      if (it != c.locations.end())
        throw ConfigError("pulse." + k + ": conflicts with the swept parameter " + p, it->second.first,
                          it->second.second);
    }
  }
  for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
    const double x = c.sweep.values[i];
    if (integer_parameter(p) && x != std::floor(x)) fail_at(sweep_values->items[i], "sweep: " + p + " values must be integers");
    RunConfig point = c;
    apply_sweep_value(point, p, x);
    try {
      check_ranges(point, p);
    } catch (const ConfigError& err) {
      if (err.line() > 0) throw;
      fail_at(sweep_values->items[i], err.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double v) { return format_double(v); };
  if (c.models.size() == 1) {
    append_kv(os, "model", quote(std::string(to_string(c.models[0]))));
  } else {
    std::string list = "[";
    for (std::size_t i = 0; i < c.models.size(); ++i)
      list += (i ? ", " : "") + quote(std::string(to_string(c.models[i])));
    append_kv(os, "model", list + "]");
  }
  const PulseConfig& p = c.pulse;
  os << "\n[pulse]\n";
  append_kv(os, "shape", quote(std::string(to_string(p.shape))));
  if (p.e0) append_kv(os, "e0", num(*p.e0));
  if (p.intensity) append_kv(os, "intensity", num(*p.intensity));
  if (p.quiver_fraction) append_kv(os, "quiver_fraction", num(*p.quiver_fraction));
  if (p.omega > 0.0 || c.sweep.parameter != "omega") append_kv(os, "omega", num(p.omega));
  append_kv(os, "cep", num(p.cep));
  if (p.n_cycles) append_kv(os, "n_cycles", num(*p.n_cycles));
  if (p.duration) append_kv(os, "duration", num(*p.duration));
  append_kv(os, "sigma", num(p.sigma));

  const BasisConfig& b = c.basis;
  os << "\n[basis]\n";
  append_kv(os, "r_max", b.r_max ? num(*b.r_max) : quote("auto"));
  append_kv(os, "order", std::to_string(b.order));
  append_kv(os, "n_breakpoints", b.n_breakpoints ? std::to_string(b.n_breakpoints) : quote("auto"));
  append_kv(os, "knot_law", quote(std::string(to_string(b.knot_law))));
  append_kv(os, "r_match", num(b.r_match));
  append_kv(os, "l_max", std::to_string(b.l_max));
  append_kv(os, "m_max", b.m_max ? std::to_string(*b.m_max) : quote("auto"));
  append_kv(os, "e_cut", num(b.e_cut));
  append_kv(os, "symmetry", quote(std::string(to_string(b.symmetry))));

  const PropagatorSection& pr = c.propagator;
  os << "\n[propagator]\n";
  if (pr.dt) append_kv(os, "dt", num(*pr.dt));
  if (pr.steps_per_cycle) append_kv(os, "steps_per_cycle", num(*pr.steps_per_cycle));
  append_kv(os, "krylov_dim_max", std::to_string(pr.krylov_dim_max));
  append_kv(os, "krylov_tol", num(pr.krylov_tol));
  append_kv(os, "renormalize", pr.renormalize ? "true" : "false");
  if (pr.mask_r_on) append_kv(os, "mask_r_on", num(*pr.mask_r_on));
  append_kv(os, "mask_exponent", num(pr.mask_exponent));
  append_kv(os, "checkpoint_every", std::to_string(pr.checkpoint_every));

  const OutputConfig& o = c.outputs;
  os << "\n[outputs]\n";
  std::string obs = "[";
  for (std::size_t i = 0; i < o.observables.size(); ++i)
    obs += (i ? ", " : "") + quote(std::string(to_string(o.observables[i])));
  append_kv(os, "observables", obs + "]");
  append_kv(os, "probe_stride", std::to_string(o.probe_stride));
  append_kv(os, "directory", quote(o.directory));
  append_kv(os, "de", num(o.de));
  append_kv(os, "e_max", num(o.e_max));
  append_kv(os, "n_theta", std::to_string(o.n_theta));
  append_kv(os, "n_phi", std::to_string(o.n_phi));
  if (o.t_ref) append_kv(os, "t_ref", num(*o.t_ref));
  append_kv(os, "final_checkpoint", o.final_checkpoint ? "true" : "false");

  if (!c.sweep.empty()) {
    os << "\n[sweep]\n";
    append_kv(os, "parameter", quote(c.sweep.parameter));
    std::string vals = "[";
    for (std::size_t i = 0; i < c.sweep.values.size(); ++i)
      vals += (i ? ", " : "") + num(c.sweep.values[i]);
    append_kv(os, "values", vals + "]");
  }
  return os.str();
}

std::vector<JobSpec> expand_jobs(const RunConfig& config) {
  std::vector<JobSpec> jobs;
  const std::size_t n_points = config.sweep.empty() ? 1 : config.sweep.values.size();
  for (InteractionModel model : config.models) {
    for (std::size_t i = 0; i < n_points; ++i) {
      JobSpec j;
      j.model = model;
      RunConfig c = config;
      c.models = {model};
      c.sweep = {};
      std::string name(to_string(model));
      if (!config.sweep.empty()) {
        j.sweep_value = config.sweep.values[i];
        apply_sweep_value(c, config.sweep.parameter, *j.sweep_value);
        char idx[32];
        std::snprintf(idx, sizeof idx, "%03zu", i);
        name += "_" + config.sweep.parameter + "_" + idx;
      }
      j.name = name;

      // Resolve every automatic choice so the echo pins it down.
      const double e0 = c.pulse.field_strength();
      BasisConfig& b = c.basis;
      if (!b.r_max) b.r_max = auto_r_max(e0, c.pulse.omega);
      if (!b.m_max) b.m_max = model == InteractionModel::Dipole ? 0 : b.l_max;
      if (b.n_breakpoints == 0) b.n_breakpoints = default_breakpoints(*b.r_max, b.knot_law, b.r_match);
      PropagatorSection& pr = c.propagator;
      if (!pr.dt) {
        const double spc = pr.steps_per_cycle.value_or(200.0);
        pr.dt = 2.0 * units::kPi / c.pulse.omega / spc;
        pr.steps_per_cycle.reset();
      }
      j.pulse = c.pulse.build();
      if (!c.outputs.t_ref) c.outputs.t_ref = 0.5 * (j.pulse.t_start + j.pulse.t_end);
      if (pr.mask_r_on && *pr.mask_r_on >= *b.r_max)
        Checker(c).require(false, "propagator.mask_r_on", "must be below r_max (" + format_double(*b.r_max) + ")");

      j.basis.r_max = *b.r_max;
      j.basis.order = b.order;
      j.basis.n_breakpoints = b.n_breakpoints;
      j.basis.knot_law = b.knot_law;
      j.basis.r_match = b.r_match;
      j.basis.l_max = b.l_max;
      j.basis.m_max = *b.m_max;
      j.basis.e_cut = b.e_cut;
      j.basis.symmetry = b.symmetry;

      j.propagator.dt = *pr.dt;
      j.propagator.krylov_dim_max = pr.krylov_dim_max;
      j.propagator.krylov_tol = pr.krylov_tol;
      j.propagator.renormalize = pr.renormalize;
      if (pr.mask_r_on) j.propagator.mask = MaskSettings{*pr.mask_r_on, pr.mask_exponent};
      j.probes.stride = c.outputs.probe_stride;
      j.angular.n_theta = c.outputs.n_theta;
      j.angular.n_phi = c.outputs.n_phi;
      j.angular.t_ref = *c.outputs.t_ref;
      j.angular.e_max = c.outputs.e_max;

      c.locations.clear();
      j.config = c;
      j.config_text = to_config_text(c);
      j.config_hash = sha256_hex(j.config_text);
      jobs.push_back(std::move(j));
    }
  }
  return jobs;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::uint64_t digest_prefix(const std::string& hex) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(hex.data(), hex.data() + std::min<std::size_t>(16, hex.size()), v, 16);
  if (r.ec != std::errc()) throw ConfigError("bad digest");
  return v;
}

}  // namespace ndt
