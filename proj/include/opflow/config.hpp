#pragma once

// Experiment configuration: a small TOML subset (sections, scalar keys,
// single-line arrays, '#' comments) mapped onto a validated ExperimentConfig.
// Unknown sections and keys are errors; every diagnostic names the field and,
// where one exists, the line.

#include "opflow/flow.hpp"
#include "opflow/models.hpp"
#include "opflow/trace_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace opflow {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { quadratic, hartree, kohn_sham_1d };
enum class InitialGuess { random, linear_ground_state };
enum class SolverKind { opi, midpoint, retraction };

inline const char *to_string(ModelKind k) {
  switch (k) {
  case ModelKind::quadratic: return "quadratic";
  case ModelKind::hartree: return "hartree";
  case ModelKind::kohn_sham_1d: return "kohn_sham_1d";
  }
  return "unknown";
}

inline const char *to_string(InitialGuess g) {
  return g == InitialGuess::random ? "random" : "linear_ground_state";
}

inline const char *to_string(SolverKind k) {
  switch (k) {
  case SolverKind::opi: return "opi";
  case SolverKind::midpoint: return "midpoint";
  case SolverKind::retraction: return "retraction";
  }
  return "unknown";
}

inline const char *to_string(DtPolicy p) {
  return p == DtPolicy::fixed ? "fixed" : "adaptive";
}

inline const char *to_string(SeedRule r) {
  return r == SeedRule::optimal_rate ? "optimal_rate" : "contraction";
}

struct ModelConfig {
  ModelKind kind = ModelKind::quadratic;
  std::int64_t grid_points = 0;
  double spacing = 0.0;
  std::optional<double> origin; // default: domain centered on 0
  std::int64_t orbitals = 0;
  std::vector<double> charges;
  std::vector<double> positions;
  double soft_core = 1.0;
  double hartree_soft_core = 1.0;
  double hartree_scale = 1.0;
  bool correlation = true;
  InitialGuess initial = InitialGuess::random;

  bool operator==(const ModelConfig &) const = default;
};

struct SolverConfig {
  SolverKind kind = SolverKind::opi;
  double dt = 0.0;
  DtPolicy dt_policy = DtPolicy::adaptive;
  double dt_min = 1e-8;
  double dt_max = 1.0;
  double epsilon = 0.0;
  std::int64_t max_outer = 10000;
  std::int64_t inner_iters = 2;
  double inner_tol = 1e-12;
  std::int64_t max_inner = 100;
  bool rate_probe = false;
  bool lipschitz_seed = false;
  SeedRule seed_rule = SeedRule::optimal_rate;
  std::int64_t lipschitz_samples = 16;
  double lipschitz_radius = 1e-3;

  bool operator==(const SolverConfig &) const = default;
};

struct CompareConfig {
  std::vector<SolverKind> solvers;
  bool operator==(const CompareConfig &) const = default;
};

struct SweepConfig {
  std::vector<double> dt;
  std::vector<std::int64_t> inner_iters;
  bool operator==(const SweepConfig &) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::optional<CompareConfig> compare;
  std::optional<SweepConfig> sweep;

  bool operator==(const ExperimentConfig &) const = default;
};

// ---------------------------------------------------------------------------
// TOML subset

namespace toml {

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using Array = std::vector<Scalar>;
using Value = std::variant<bool, std::int64_t, double, std::string, Array>;

struct Entry {
  Value value;
  int line = 0;
};

struct Table {
  int line = 0;
  std::map<std::string, Entry> entries;
};

/// Section name ("" for top level) -> table.
using Document = std::map<std::string, Table>;

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool is_bare_key(const std::string &k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

[[noreturn]] inline void fail(const std::string &source, int line, const std::string &msg) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

/// Drops a trailing comment, ignoring '#' inside strings.
inline std::string strip_comment(const std::string &s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_str) {
      ++i;
      continue;
    }
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

class ValueParser {
public:
  ValueParser(const std::string &text, const std::string &source, int line)
      : s_(text), source_(source), line_(line) {}

  Value parse() {
    skip_ws();
    Value v;
    if (peek() == '[') {
      v = parse_array();
    } else {
      v = std::visit([](auto &&x) -> Value { return x; }, parse_scalar());
    }
    skip_ws();
    if (pos_ != s_.size()) fail(source_, line_, "unexpected trailing text '" + s_.substr(pos_) + "'");
    return v;
  }

private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Array parse_array() {
    ++pos_; // '['
    Array out;
    skip_ws();
    while (peek() != ']') {
      if (peek() == '\0') fail(source_, line_, "unterminated array");
      if (peek() == '[') fail(source_, line_, "nested arrays are not supported");
      out.push_back(parse_scalar());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() == '\0') {
        fail(source_, line_, "unterminated array");
      } else if (peek() != ']') {
        fail(source_, line_, "expected ',' or ']' in array");
      }
    }
    ++pos_; // ']'
    return out;
  }

  Scalar parse_scalar() {
    skip_ws();
    if (peek() == '"') return parse_string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail(source_, line_, "missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    const bool floating = tok.find_first_of(".eE") != std::string::npos || tok == "inf" ||
                          tok == "+inf" || tok == "-inf" || tok == "nan";
    if (!floating) {
      std::int64_t v = 0;
      const char *b = tok.data() + (tok[0] == '+' ? 1 : 0);
      const auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
      if (ec == std::errc() && p == tok.data() + tok.size()) return v;
      fail(source_, line_, "invalid value '" + tok + "'");
    }
    double v = 0.0;
    const char *b = tok.data() + (tok[0] == '+' ? 1 : 0);
    const auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
    if (ec == std::errc() && p == tok.data() + tok.size()) return v;
    fail(source_, line_, "invalid number '" + tok + "'");
  }

  std::string parse_string() {
    ++pos_; // opening quote
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail(source_, line_, "unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) fail(source_, line_, "unterminated string");
        const char e = s_[pos_++];
        switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(source_, line_, std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  const std::string &s_;
  const std::string &source_;
  int line_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline Document parse(std::istream &is, const std::string &source = "<config>") {
  Document doc;
  doc[""];
  std::string current;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string text = detail::trim(detail::strip_comment(raw));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') detail::fail(source, line, "malformed section header");
      const std::string name = detail::trim(text.substr(1, text.size() - 2));
      if (!detail::is_bare_key(name)) detail::fail(source, line, "invalid section name '" + name + "'");
      if (doc.count(name)) detail::fail(source, line, "duplicate section [" + name + "]");
      doc[name].line = line;
      current = name;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) detail::fail(source, line, "expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    if (!detail::is_bare_key(key)) detail::fail(source, line, "invalid key '" + key + "'");
    const std::string field = current.empty() ? key : current + "." + key;
    auto &table = doc[current];
    if (table.entries.count(key)) detail::fail(source, line, "duplicate field '" + field + "'");
    const std::string rhs = detail::trim(text.substr(eq + 1));
    table.entries[key] = Entry{detail::ValueParser(rhs, source, line).parse(), line};
  }
  return doc;
}

} // namespace toml

// ---------------------------------------------------------------------------
// Schema

namespace detail {

/// Typed, consumption-tracking view of one section.
class SectionReader {
public:
  SectionReader(const toml::Document &doc, std::string section, std::string source)
      : section_(std::move(section)), source_(std::move(source)) {
    const auto it = doc.find(section_);
    if (it != doc.end()) table_ = &it->second;
  }

  bool present() const { return table_ != nullptr; }

  std::string field(const std::string &key) const {
    return section_.empty() ? key : section_ + "." + key;
  }

  [[noreturn]] void fail(const std::string &key, const std::string &msg) const {
    const auto *e = find(key);
    const std::string where = e ? source_ + ":" + std::to_string(e->line) + ": " : source_ + ": ";
    throw ConfigError(where + "field '" + field(key) + "': " + msg);
  }

  [[noreturn]] void missing(const std::string &key) const {
    throw ConfigError(source_ + ": missing required field '" + field(key) + "'");
  }

  bool has(const std::string &key) const { return find(key) != nullptr; }

  double number(const std::string &key, std::optional<double> fallback = std::nullopt) {
    const auto *e = use(key);
    if (!e) return fallback ? *fallback : (missing(key), 0.0);
    return as_number(e->value, key);
  }

  std::int64_t integer(const std::string &key, std::optional<std::int64_t> fallback = std::nullopt) {
    const auto *e = use(key);
    if (!e) return fallback ? *fallback : (missing(key), 0);
    if (const auto *v = std::get_if<std::int64_t>(&e->value)) return *v;
    fail(key, "expected an integer");
  }

  bool boolean(const std::string &key, bool fallback) {
    const auto *e = use(key);
    if (!e) return fallback;
    if (const auto *v = std::get_if<bool>(&e->value)) return *v;
    fail(key, "expected true or false");
  }

  std::string string(const std::string &key, std::optional<std::string> fallback = std::nullopt) {
    const auto *e = use(key);
    if (!e) return fallback ? *fallback : (missing(key), std::string());
    if (const auto *v = std::get_if<std::string>(&e->value)) return *v;
    fail(key, "expected a quoted string");
  }

  std::vector<double> numbers(const std::string &key) {
    std::vector<double> out;
    for (const auto &s : array(key))
      out.push_back(as_number(std::visit([](auto &&x) -> toml::Value { return x; }, s), key));
    return out;
  }

  std::vector<std::int64_t> integers(const std::string &key) {
    std::vector<std::int64_t> out;
    for (const auto &s : array(key)) {
      if (const auto *v = std::get_if<std::int64_t>(&s)) out.push_back(*v);
      else fail(key, "expected an array of integers");
    }
    return out;
  }

  std::vector<std::string> strings(const std::string &key) {
    std::vector<std::string> out;
    for (const auto &s : array(key)) {
      if (const auto *v = std::get_if<std::string>(&s)) out.push_back(*v);
      else fail(key, "expected an array of strings");
    }
    return out;
  }

  template <class E>
  E choice(const std::string &key, const std::vector<E> &options, std::optional<E> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      missing(key);
    }
    const std::string s = string(key);
    return parse_choice(key, s, options);
  }

  template <class E>
  E parse_choice(const std::string &key, const std::string &s, const std::vector<E> &options) const {
    std::string allowed;
    for (const auto &o : options) {
      if (s == to_string(o)) return o;
      allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(o));
    }
    fail(key, "unknown value '" + s + "' (expected one of: " + allowed + ")");
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto &[k, e] : table_->entries)
      if (!used_.count(k))
        throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown field '" + field(k) + "'");
  }

private:
  const toml::Entry *find(const std::string &key) const {
    if (!table_) return nullptr;
    const auto it = table_->entries.find(key);
    return it == table_->entries.end() ? nullptr : &it->second;
  }

  const toml::Entry *use(const std::string &key) {
    used_.insert(key);
    return find(key);
  }

  double as_number(const toml::Value &v, const std::string &key) const {
    if (const auto *d = std::get_if<double>(&v)) return *d;
    if (const auto *i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    fail(key, "expected a number");
  }

  toml::Array array(const std::string &key) {
    const auto *e = use(key);
    if (!e) missing(key);
    if (const auto *a = std::get_if<toml::Array>(&e->value)) return *a;
    fail(key, "expected an array");
  }

  const toml::Table *table_ = nullptr;
  std::string section_;
  std::string source_;
  std::set<std::string> used_;
};

} // namespace detail

/// Model spec for a parsed model section.
inline KohnSham1DSpec to_spec(const ModelConfig &m) {
  KohnSham1DSpec s;
  s.grid = m.origin ? Grid1D{static_cast<Index>(m.grid_points), m.spacing, *m.origin}
                    : Grid1D::centered(static_cast<Index>(m.grid_points), m.spacing);
  s.orbitals = static_cast<Index>(m.orbitals);
  for (std::size_t i = 0; i < m.charges.size(); ++i)
    s.nuclei.push_back({m.charges[i], m.positions[i]});
  s.soft_core = m.soft_core;
  s.hartree_soft_core = m.hartree_soft_core;
  s.hartree_scale = m.hartree_scale;
  switch (m.kind) {
  case ModelKind::quadratic:
    s.hartree_scale = 0.0;
    s.xc = XcMode::none;
    break;
  case ModelKind::hartree: s.xc = XcMode::none; break;
  case ModelKind::kohn_sham_1d:
    s.xc = m.correlation ? XcMode::exchange_correlation : XcMode::exchange_only;
    break;
  }
  return s;
}

inline GridModel build_model(const ModelConfig &m) { return GridModel(to_spec(m)); }

inline FlowConfig to_flow_config(const SolverConfig &s, std::uint64_t seed) {
  FlowConfig f;
  f.dt = s.dt;
  f.dt_policy = s.dt_policy;
  f.dt_min = s.dt_min;
  f.dt_max = s.dt_max;
  f.epsilon = s.epsilon;
  f.max_outer = static_cast<int>(s.max_outer);
  if (s.kind == SolverKind::midpoint)
    f.inner = ToTolerance{s.inner_tol, static_cast<int>(s.max_inner)};
  else
    f.inner = FixedCount{static_cast<int>(s.inner_iters)};
  f.rate_probe = s.rate_probe;
  f.lipschitz_seed = s.lipschitz_seed;
  f.seed_rule = s.seed_rule;
  f.lipschitz_samples = static_cast<int>(s.lipschitz_samples);
  f.lipschitz_radius = s.lipschitz_radius;
  f.seed = seed;
  return f;
}

inline ExperimentConfig parse_config(std::istream &is, const std::string &source = "<config>") {
  const toml::Document doc = toml::parse(is, source);
  for (const auto &[name, table] : doc)
    if (!(name.empty() || name == "model" || name == "solver" || name == "compare" || name == "sweep"))
      throw ConfigError(source + ":" + std::to_string(table.line) + ": unknown section [" + name + "]");

  ExperimentConfig cfg;
  detail::SectionReader top(doc, "", source);
  const std::int64_t seed = top.integer("seed", 0);
  if (seed < 0) top.fail("seed", "must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output_dir = top.string("output_dir", std::string("out"));
  if (cfg.output_dir.empty()) top.fail("output_dir", "must not be empty");
  top.reject_unknown();

  detail::SectionReader model(doc, "model", source);
  if (!model.present()) throw ConfigError(source + ": missing required section [model]");
  auto &m = cfg.model;
  m.kind = model.choice<ModelKind>("kind", {ModelKind::quadratic, ModelKind::hartree, ModelKind::kohn_sham_1d});
  m.grid_points = model.integer("grid_points");
  m.spacing = model.number("spacing");
  if (model.has("origin")) m.origin = model.number("origin");
  m.orbitals = model.integer("orbitals");
  if (model.has("charges") || model.has("positions")) {
    m.charges = model.numbers("charges");
    m.positions = model.numbers("positions");
    if (m.charges.size() != m.positions.size())
      model.fail("positions", "must have as many entries as model.charges");
  }
  m.soft_core = model.number("soft_core", 1.0);
  m.hartree_soft_core = model.number("hartree_soft_core", 1.0);
  m.hartree_scale = model.number("hartree_scale", m.kind == ModelKind::quadratic ? 0.0 : 1.0);
  if (m.kind == ModelKind::kohn_sham_1d) m.correlation = model.boolean("correlation", true);
  else if (model.has("correlation")) model.fail("correlation", "only valid for kind = \"kohn_sham_1d\"");
  else m.correlation = false;
  if (m.kind == ModelKind::quadratic && m.hartree_scale != 0.0)
    model.fail("hartree_scale", "must be 0 for kind = \"quadratic\"");
  m.initial = model.choice<InitialGuess>("initial", {InitialGuess::random, InitialGuess::linear_ground_state},
                                         InitialGuess::random);
  model.reject_unknown();
  try {
    to_spec(m).validate();
  } catch (const PreconditionError &e) {
    throw ConfigError(source + ": [model] " + e.what());
  }

  detail::SectionReader solver(doc, "solver", source);
  if (!solver.present()) throw ConfigError(source + ": missing required section [solver]");
  auto &s = cfg.solver;
  s.kind = solver.choice<SolverKind>("kind", {SolverKind::opi, SolverKind::midpoint, SolverKind::retraction});
  s.dt = solver.number("dt");
  s.dt_policy = solver.choice<DtPolicy>("dt_policy", {DtPolicy::adaptive, DtPolicy::fixed}, DtPolicy::adaptive);
  s.dt_min = solver.number("dt_min", 1e-8);
  s.dt_max = solver.number("dt_max", 1.0);
  s.epsilon = solver.number("epsilon");
  s.max_outer = solver.integer("max_outer", 10000);
  s.inner_iters = solver.integer("inner_iters", 2);
  s.inner_tol = solver.number("inner_tol", 1e-12);
  s.max_inner = solver.integer("max_inner", 100);
  s.rate_probe = solver.boolean("rate_probe", false);
  s.lipschitz_seed = solver.boolean("lipschitz_seed", false);
  s.seed_rule = solver.choice<SeedRule>("seed_rule", {SeedRule::optimal_rate, SeedRule::contraction},
                                        SeedRule::optimal_rate);
  s.lipschitz_samples = solver.integer("lipschitz_samples", 16);
  s.lipschitz_radius = solver.number("lipschitz_radius", 1e-3);
  if (s.max_outer < 0 || s.max_outer > 100000000) solver.fail("max_outer", "out of range");
  if (s.inner_iters < 1 || s.inner_iters > 10000) solver.fail("inner_iters", "must be in [1, 10000]");
  if (s.max_inner < 1 || s.max_inner > 100000) solver.fail("max_inner", "must be in [1, 100000]");
  if (s.lipschitz_samples < 1 || s.lipschitz_samples > 100000)
    solver.fail("lipschitz_samples", "must be in [1, 100000]");
  solver.reject_unknown();
  try {
    to_flow_config(s, cfg.seed).validate();
  } catch (const PreconditionError &e) {
    throw ConfigError(source + ": [solver] " + e.what());
  }

  detail::SectionReader compare(doc, "compare", source);
  if (compare.present()) {
    CompareConfig c;
    for (const auto &name : compare.strings("solvers"))
      c.solvers.push_back(compare.parse_choice<SolverKind>(
          "solvers", name, {SolverKind::opi, SolverKind::midpoint, SolverKind::retraction}));
    if (c.solvers.size() != 2) compare.fail("solvers", "must name exactly two solvers");
    compare.reject_unknown();
    cfg.compare = std::move(c);
  }

  detail::SectionReader sweep(doc, "sweep", source);
  if (sweep.present()) {
    SweepConfig w;
    if (sweep.has("dt")) w.dt = sweep.numbers("dt");
    if (sweep.has("inner_iters")) w.inner_iters = sweep.integers("inner_iters");
    if (w.dt.empty() && w.inner_iters.empty())
      throw ConfigError(source + ": [sweep] needs a non-empty 'dt' or 'inner_iters' grid");
    for (double dt : w.dt)
      if (!(dt >= s.dt_min && dt <= s.dt_max)) sweep.fail("dt", "entries must lie in [dt_min, dt_max]");
    for (auto p : w.inner_iters)
      if (p < 1 || p > 10000) sweep.fail("inner_iters", "entries must be in [1, 10000]");
    sweep.reject_unknown();
    cfg.sweep = std::move(w);
  }
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string &text, const std::string &source = "<string>") {
  std::istringstream is(text);
  return parse_config(is, source);
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config file");
  return parse_config(is, path);
}

namespace detail {

inline std::string quoted(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

/// Floats always carry a '.', 'e', "inf" or "nan" so they read back as floats.
inline std::string toml_float(double x) {
  std::string s = format_double(x);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <class T, class F>
std::string toml_array(const std::vector<T> &v, F &&fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

} // namespace detail

/// Normalized form: every field written explicitly, floats with 17
/// significant digits. Parsing the output yields an equal ExperimentConfig.
inline std::string serialize_config(const ExperimentConfig &c) {
  using detail::quoted;
  using detail::toml_float;
  std::ostringstream os;
  const auto f = [](double x) { return toml_float(x); };
  os << "seed = " << c.seed << '\n';
  os << "output_dir = " << quoted(c.output_dir) << "\n\n";
  const auto &m = c.model;
  os << "[model]\n";
  os << "kind = " << quoted(to_string(m.kind)) << '\n';
  os << "grid_points = " << m.grid_points << '\n';
  os << "spacing = " << toml_float(m.spacing) << '\n';
  if (m.origin) os << "origin = " << toml_float(*m.origin) << '\n';
  os << "orbitals = " << m.orbitals << '\n';
  if (!m.charges.empty()) {
    os << "charges = " << detail::toml_array(m.charges, f) << '\n';
    os << "positions = " << detail::toml_array(m.positions, f) << '\n';
  }
  os << "soft_core = " << toml_float(m.soft_core) << '\n';
  os << "hartree_soft_core = " << toml_float(m.hartree_soft_core) << '\n';
  os << "hartree_scale = " << toml_float(m.hartree_scale) << '\n';
  if (m.kind == ModelKind::kohn_sham_1d) os << "correlation = " << (m.correlation ? "true" : "false") << '\n';
  os << "initial = " << quoted(to_string(m.initial)) << "\n\n";
  const auto &s = c.solver;
  os << "[solver]\n";
  os << "kind = " << quoted(to_string(s.kind)) << '\n';
  os << "dt = " << toml_float(s.dt) << '\n';
  os << "dt_policy = " << quoted(to_string(s.dt_policy)) << '\n';
  os << "dt_min = " << toml_float(s.dt_min) << '\n';
  os << "dt_max = " << toml_float(s.dt_max) << '\n';
  os << "epsilon = " << toml_float(s.epsilon) << '\n';
  os << "max_outer = " << s.max_outer << '\n';
  os << "inner_iters = " << s.inner_iters << '\n';
  os << "inner_tol = " << toml_float(s.inner_tol) << '\n';
  os << "max_inner = " << s.max_inner << '\n';
  os << "rate_probe = " << (s.rate_probe ? "true" : "false") << '\n';
  os << "lipschitz_seed = " << (s.lipschitz_seed ? "true" : "false") << '\n';
  os << "seed_rule = " << quoted(to_string(s.seed_rule)) << '\n';
  os << "lipschitz_samples = " << s.lipschitz_samples << '\n';
  os << "lipschitz_radius = " << toml_float(s.lipschitz_radius) << '\n';
  if (c.compare) {
    os << "\n[compare]\nsolvers = "
       << detail::toml_array(c.compare->solvers, [](SolverKind k) { return quoted(to_string(k)); }) << '\n';
  }
  if (c.sweep) {
    os << "\n[sweep]\n";
    if (!c.sweep->dt.empty()) os << "dt = " << detail::toml_array(c.sweep->dt, f) << '\n';
    if (!c.sweep->inner_iters.empty())
      os << "inner_iters = "
         << detail::toml_array(c.sweep->inner_iters, [](std::int64_t p) { return std::to_string(p); }) << '\n';
  }
  return os.str();
}

} // namespace opflow
