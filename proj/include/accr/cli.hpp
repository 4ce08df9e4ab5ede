#pragma once

// Command layer shared by the command-line tool and tests: run configuration, JSON
// config files, built-in transformation presets and the report each command emits.

#include "accr/examples.hpp"
#include "accr/structure.hpp"
#include "accr/transform.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace accr::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.1";

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kUsageError = 2, kNumericError = 3 };

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TripleSpec {
  std::string preset;  // empty when inline
  std::string u, v, w;
  Normalization normalization = Normalization::Reeb;
};

struct RunConfig {
  std::string example = "hypersurface-f5";
  std::optional<Json> manifold;  // user-supplied chart; overrides example
  int n = 2;
  std::optional<int> order;
  int samples = 16;
  std::uint64_t seed = 42;
  std::optional<Box> box;
  std::map<std::string, double> tolerances;
  std::optional<TripleSpec> triple;
  std::optional<double> sigma;
  std::vector<std::string> field;  // torse-forming candidate, defaults to xi
  std::string source;              // config file path, for diagnostics

  void validate() const {
    if (samples < 1) throw ConfigError("samples must be at least 1");
    if (n < 1) throw ConfigError("n must be at least 1");
    if (order && (*order < 1 || *order > 3)) throw ConfigError("order must be 1, 2 or 3");
    if (box)
      for (const auto& iv : *box)
        if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi))
          throw ConfigError("box bounds must be finite with min < max");
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers

inline Expr parse_field(const std::string& text, const std::string& where) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline Interval parse_interval(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("box interval '" + s + "' must look like lo:hi");
  try {
    std::size_t p1 = 0, p2 = 0;
    const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
    Interval iv{std::stod(a, &p1), std::stod(b, &p2)};
    if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing");
    return iv;
  } catch (const std::logic_error&) {
    throw ConfigError("box interval '" + s + "' is not numeric");
  }
}

/// "lo:hi" for every coordinate or a comma-separated list with one interval per coordinate.
inline Box parse_box(const std::string& s, int dim) {
  Box box;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) box.push_back(parse_interval(part));
  if (box.size() == 1) box.assign(static_cast<std::size_t>(dim), box.front());
  if (box.size() != static_cast<std::size_t>(dim))
    throw ConfigError("box needs 1 or " + std::to_string(dim) + " intervals, got " + std::to_string(box.size()));
  return box;
}

inline std::pair<std::string, double> parse_tolerance(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ConfigError("tolerance '" + s + "' must look like name=value");
  const std::string name = s.substr(0, eq), val = s.substr(eq + 1);
  if (!Tolerances().all().count(name)) throw ConfigError("unknown tolerance '" + name + "'");
  try {
    std::size_t pos = 0;
    const double v = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing");
    return {name, v};
  } catch (const std::logic_error&) {
    throw ConfigError("tolerance value '" + val + "' is not numeric");
  }
}

inline Normalization parse_normalization(const std::string& s) {
  if (s == "reeb") return Normalization::Reeb;
  if (s == "raw") return Normalization::Raw;
  throw ConfigError("normalization must be 'reeb' or 'raw'");
}

inline Box box_from_json(const Json& j, int dim) {
  if (j.is_string()) return parse_box(j.get<std::string>(), dim);
  if (!j.is_array()) throw ConfigError("box must be a string or an array of [lo, hi] pairs");
  Box box;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
      throw ConfigError("box entries must be [lo, hi] number pairs");
    box.push_back({iv[0].get<double>(), iv[1].get<double>()});
  }
  if (box.size() == 1) box.assign(static_cast<std::size_t>(dim), box.front());
  if (box.size() != static_cast<std::size_t>(dim)) throw ConfigError("box has the wrong number of intervals");
  return box;
}

/// Applies a JSON config document on top of `cfg`.
inline void apply_config_json(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> known{"example", "manifold", "n",     "order", "samples", "seed",
                                           "box",     "tolerances", "transform", "sigma", "field"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  try {
    if (j.contains("example")) cfg.example = j["example"].get<std::string>();
    if (j.contains("manifold")) cfg.manifold = j["manifold"];
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("order")) cfg.order = j["order"].get<int>();
    if (j.contains("samples")) cfg.samples = j["samples"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    if (j.contains("field")) cfg.field = j["field"].get<std::vector<std::string>>();
    if (j.contains("tolerances"))
      for (const auto& [k, v] : j["tolerances"].items()) {
        if (!Tolerances().all().count(k)) throw ConfigError("unknown tolerance '" + k + "'");
        cfg.tolerances[k] = v.get<double>();
      }
    if (j.contains("transform")) {
      const Json& t = j["transform"];
      TripleSpec ts;
      if (t.contains("preset")) ts.preset = t["preset"].get<std::string>();
      ts.u = t.value("u", "");
      ts.v = t.value("v", "");
      ts.w = t.value("w", "");
      if (t.contains("normalization")) ts.normalization = parse_normalization(t["normalization"].get<std::string>());
      cfg.triple = ts;
    }
    if (j.contains("box")) {
      const int dim = j.contains("manifold") ? static_cast<int>(j["manifold"].value("coords", Json::array()).size())
                                             : 2 * cfg.n + 1;
      cfg.box = box_from_json(j["box"], dim);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": parse error at byte offset " + std::to_string(e.byte) + ": " + e.what());
  }
  RunConfig cfg;
  cfg.source = path;
  apply_config_json(cfg, j);
  return cfg;
}

/// Chart from a JSON object with keys name, n, coords, metric, phi, xi, eta and optional box.
inline ChartManifold manifold_from_json(const Json& j) {
  try {
    ChartManifold m;
    m.name = j.value("name", "custom");
    m.n = j.at("n").get<int>();
    m.coords = j.at("coords").get<std::vector<std::string>>();
    auto matrix = [&](const char* key) {
      std::vector<std::vector<Expr>> out;
      std::size_t r = 0;
      for (const auto& row : j.at(key)) {
        std::vector<Expr> er;
        std::size_t c = 0;
        for (const auto& cell : row)
          er.push_back(parse_field(cell.get<std::string>(), std::string(key) + "[" + std::to_string(r) + "][" + std::to_string(c++) + "]"));
        out.push_back(std::move(er));
        ++r;
      }
      return out;
    };
    auto list = [&](const char* key) {
      std::vector<Expr> out;
      std::size_t i = 0;
      for (const auto& cell : j.at(key))
        out.push_back(parse_field(cell.get<std::string>(), std::string(key) + "[" + std::to_string(i++) + "]"));
      return out;
    };
    m.metric = matrix("metric");
    m.phi = matrix("phi");
    m.xi = list("xi");
    m.eta = list("eta");
    const int dim = static_cast<int>(m.coords.size());
    m.box = j.contains("box") ? box_from_json(j["box"], dim) : Box(static_cast<std::size_t>(dim), Interval{0.5, 1.5});
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("manifold: ") + e.what());
  } catch (const ChartError& e) {
    throw ConfigError(e.what());
  }
}

inline Json manifold_to_json(const ChartManifold& m) {
  Json j;
  j["name"] = m.name;
  j["n"] = m.n;
  j["coords"] = m.coords;
  auto matrix = [](const std::vector<std::vector<Expr>>& a) {
    Json out = Json::array();
    for (const auto& row : a) {
      Json r = Json::array();
      for (const auto& e : row) r.push_back(serialize(e));
      out.push_back(r);
    }
    return out;
  };
  auto list = [](const std::vector<Expr>& a) {
    Json out = Json::array();
    for (const auto& e : a) out.push_back(serialize(e));
    return out;
  };
  j["metric"] = matrix(m.metric);
  j["phi"] = matrix(m.phi);
  j["xi"] = list(m.xi);
  j["eta"] = list(m.eta);
  Json box = Json::array();
  for (const auto& iv : m.box) box.push_back({iv.lo, iv.hi});
  j["box"] = box;
  return j;
}

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() {
  return {"hypersurface-triple", "hypersurface-triple-raw", "negative-du", "negative-dv", "negative-dw",
          "identity",      "minimal",           "holomorphic", "random"};
}

inline TransformTriple hypersurface_triple(int n, Normalization nm) {
  return log_arg_triple(n, parse("-arctan(sinh(t))"), parse("t^2"), nm);
}

inline TransformTriple preset_triple(const std::string& name, const ChartManifold& m, std::uint64_t seed,
                                     Normalization nm = Normalization::Reeb) {
  const int n = m.n;
  if (name == "hypersurface-triple") return hypersurface_triple(n, nm);
  if (name == "hypersurface-triple-raw") return hypersurface_triple(n, Normalization::Raw);
  if (name == "negative-du") return log_arg_triple(n, parse("t"), parse("t^2"), nm);
  if (name == "negative-dv") {
    TransformTriple t = hypersurface_triple(n, nm);
    t.v = t.v + variable("t");
    return t;
  }
  if (name == "negative-dw") {
    TransformTriple t = hypersurface_triple(n, nm);
    t.w = t.w + variable("x1");
    return t;
  }
  if (name == "identity") return {};
  if (name == "minimal") return {reeb_lift(parse("-arctan(sinh(t))")), constant(0.0), constant(0.0)};
  if (name == "holomorphic") return phi_holomorphic_triple(seed, n);
  if (name == "random") return random_polynomial_triple(seed, m);
  throw ConfigError("unknown preset '" + name + "'");
}

inline TransformTriple resolve_triple(const TripleSpec& ts, const ChartManifold& m, std::uint64_t seed) {
  if (!ts.preset.empty()) {
    if (!ts.u.empty() || !ts.v.empty() || !ts.w.empty()) throw ConfigError("give either a preset or inline u, v, w, not both");
    return preset_triple(ts.preset, m, seed, ts.normalization);
  }
  TransformTriple t;
  if (!ts.u.empty()) t.u = parse_field(ts.u, "u");
  if (!ts.v.empty()) t.v = parse_field(ts.v, "v");
  if (!ts.w.empty()) t.w = parse_field(ts.w, "w");
  try {
    validate_triple(t, m);
  } catch (const ChartError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Report

class Report {
public:
  explicit Report(std::string command) : command_(std::move(command)) {}

  /// Tracks the maximum residual of a named check across sample points.
  void observe(const std::string& name, double residual, double tolerance) {
    for (auto& c : checks_)
      if (c.name == name) {
        if (std::isnan(residual) || residual > c.residual) c.residual = residual;
        return;
      }
    checks_.push_back({name, residual, tolerance});
  }

  Json& values() { return values_; }
  Json& config() { return config_; }
  void error(std::size_t point, const std::string& what) { errors_.push_back({{"point", point}, {"error", what}}); }

  bool passed() const {
    for (const auto& c : checks_)
      if (!c.pass()) return false;
    return errors_.empty();
  }
  bool has_errors() const { return !errors_.empty(); }

  bool check_passed(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return c.pass();
    throw std::out_of_range("no check named '" + name + "'");
  }
  double residual(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return c.residual;
    throw std::out_of_range("no check named '" + name + "'");
  }
  bool has_check(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return true;
    return false;
  }

  int exit_code() const {
    if (!errors_.empty()) return kNumericError;
    return passed() ? kPass : kVerdictFailure;
  }

  Json to_json() const {
    Json j;
    j["tool"] = "accr";
    j["version"] = kVersion;
    j["command"] = command_;
    j["config"] = config_;
    Json cs = Json::array();
    for (const auto& c : checks_) cs.push_back({{"name", c.name}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"pass", c.pass()}});
    j["checks"] = cs;
    j["values"] = values_;
    if (!errors_.empty()) j["errors"] = errors_;
    j["verdict"] = errors_.empty() ? (passed() ? "pass" : "fail") : "error";
    return j;
  }
  std::string dump() const { return to_json().dump(2) + "\n"; }

  /// Plain table for terminals.
  std::string table() const {
    std::string out;
    char line[256];
    for (const auto& c : checks_) {
      std::snprintf(line, sizeof line, "%-4s %-40s %12.3e  (tol %.1e)\n", c.pass() ? "ok" : "FAIL", c.name.c_str(), c.residual,
                    c.tolerance);
      out += line;
    }
    for (const auto& e : errors_) out += "error at point " + e["point"].dump() + ": " + e["error"].get<std::string>() + "\n";
    return out;
  }

private:
  struct Check {
    std::string name;
    double residual;
    double tolerance;
    bool pass() const { return residual < tolerance; }
  };
  std::string command_;
  std::vector<Check> checks_;
  Json values_ = Json::object();
  Json config_ = Json::object();
  Json errors_ = Json::array();
};

// ---------------------------------------------------------------------------
// Session: everything resolved from a configuration.

struct Session {
  RunConfig cfg;
  Tolerances tol;
  ChartManifold base;
  std::optional<HypersurfaceChart> hypersurface;
  std::optional<TransformTriple> triple;
  std::optional<ChartManifold> transformed;
  std::vector<Point> points;
  int order = 1;

  const ChartManifold& target() const { return transformed ? *transformed : base; }
};

inline Session open_session(const RunConfig& cfg, int default_order) {
  cfg.validate();
  Session s;
  s.cfg = cfg;
  for (const auto& [k, v] : cfg.tolerances) {
    try {
      s.tol.set(k, v);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.manifold) {
    s.base = manifold_from_json(*cfg.manifold);
  } else if (cfg.example == "hypersurface-f5") {
    s.hypersurface = build_hypersurface(cfg.n);
    s.base = s.hypersurface->manifold;
  } else {
    try {
      s.base = build_example(cfg.example, cfg.n, cfg.seed);
    } catch (const ChartError& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.box) {
    if (cfg.box->size() != s.base.box.size()) throw ConfigError("box has the wrong number of intervals");
    s.base.box = *cfg.box;
    if (s.hypersurface) s.hypersurface->manifold.box = *cfg.box;
  }
  if (cfg.triple) {
    s.triple = resolve_triple(*cfg.triple, s.base, cfg.seed);
    s.transformed = transform_structure(s.base, *s.triple);
  }
  s.order = cfg.order.value_or(default_order);
  s.points = sample_points(s.base.box, cfg.samples, cfg.seed);
  return s;
}

inline Json covector_json(const RealTensor& t) {
  Json a = Json::array();
  for (double v : t.data()) a.push_back(v);
  return a;
}

inline Json echo_config(const Session& s) {
  Json c;
  c["example"] = s.cfg.manifold ? Json(s.base.name) : Json(s.cfg.example);
  c["n"] = s.base.n;
  c["order"] = s.order;
  c["samples"] = s.cfg.samples;
  c["seed"] = s.cfg.seed;
  Json box = Json::array();
  for (const auto& iv : s.base.box) box.push_back({iv.lo, iv.hi});
  c["box"] = box;
  Json tol = Json::object();
  for (const auto& [k, v] : s.tol.all()) tol[k] = v;
  c["tolerances"] = tol;
  if (s.triple) {
    Json t;
    if (s.cfg.triple && !s.cfg.triple->preset.empty()) t["preset"] = s.cfg.triple->preset;
    t["normalization"] = normalization_name(s.cfg.triple ? s.cfg.triple->normalization : Normalization::Reeb);
    t["u"] = serialize(s.triple->u);
    t["v"] = serialize(s.triple->v);
    t["w"] = serialize(s.triple->w);
    c["transform"] = t;
  }
  if (s.cfg.sigma) c["sigma"] = *s.cfg.sigma;
  if (!s.cfg.field.empty()) c["field"] = s.cfg.field;
  return c;
}

/// Runs `body(index, point)` for each sample, recording domain failures per point.
template <class F>
void for_each_point(const Session& s, Report& r, F&& body) {
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    try {
      body(i, s.points[i]);
    } catch (const DomainError& e) {
      r.error(i, e.what());
    } catch (const SingularMetric& e) {
      r.error(i, e.what());
    } catch (const NotF5Input& e) {
      r.error(i, e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

inline void observe_axioms(Report& r, const StructureEval& se, const Tolerances& tol, const std::string& prefix, double bound) {
  const AxiomResiduals ax = check_axioms(se);
  r.observe(prefix + "phi_xi", ax.phi_xi, bound);
  r.observe(prefix + "phi_squared", ax.phi_squared, bound);
  r.observe(prefix + "eta_phi", ax.eta_phi, bound);
  r.observe(prefix + "eta_xi", ax.eta_xi, bound);
  r.observe(prefix + "b_metric", ax.b_metric, bound);
  r.observe(prefix + "associated_symmetry", ax.gtilde_symmetry, bound);
  r.observe(prefix + "signature", ax.signature_ok ? 0.0 : 1.0, 0.5);
  (void)tol;
}

inline Report cmd_check(const RunConfig& cfg) {
  const Session s = open_session(cfg, 1);
  Report r("check");
  r.config() = echo_config(s);
  const ChartManifold& m = s.target();
  double fmax = 0.0;
  bool f0 = true;
  for_each_point(s, r, [&](std::size_t, const Point& p) {
    StructureEval se(m, p, s.order);
    observe_axioms(r, se, s.tol, "axiom.", s.tol["structural"]);
    r.observe("frame.metricity", se.frame().metricity_residual(), s.tol["structural"]);
    r.observe("frame.torsion", se.frame().torsion_residual(), s.tol["structural"]);
    const FIdentityResiduals fi = f_identities(se);
    r.observe("f.symmetry", fi.symmetric_yz, s.tol["structural"]);
    r.observe("f.decomposition", fi.decomposition, s.tol["structural"]);
    r.observe("f.eta_relation", fi.eta_relation, s.tol["structural"]);
    r.observe("lee.identity", fi.lee_relation, s.tol["structural"]);
    r.observe("lee.omega_xi", fi.omega_xi, s.tol["structural"]);
    const ClassResiduals cr = class_residuals(se, s.tol);
    fmax = std::max(fmax, cr.f.euclidean);
    f0 = f0 && cr.is_f0;
    if (s.hypersurface && !s.transformed) {
      const AmbientResiduals am = hypersurface_ambient_check(*s.hypersurface, p);
      const double amb = s.tol["structural"] * 0.1;
      r.observe("ambient.j_squared", am.j_squared, amb);
      r.observe("ambient.norden", am.norden, amb);
      r.observe("ambient.g_z_jz", am.g_z_jz, amb);
      r.observe("ambient.g_z_z", am.g_z_z, amb);
      r.observe("ambient.jacobian_rank", am.jacobian_rank == m.dim() ? 0.0 : 1.0, 0.5);
      r.observe("ambient.g_n_n", am.g_n_n, amb);
      r.observe("ambient.xi_tangency", am.xi_tangency, amb);
      r.observe("ambient.xi_components", am.xi_match, s.tol["structural"]);
      r.observe("ambient.structure_split", am.structure_split, s.tol["structural"]);
      r.observe("ambient.restriction", am.restriction, s.tol["structural"]);
      r.observe("ambient.gauss", am.gauss, s.tol["derived"]);
    }
  });
  r.values()["f_norm_max"] = fmax;
  r.values()["is_f0"] = f0;
  return r;
}

inline Report cmd_classify(const RunConfig& cfg) {
  const Session s = open_session(cfg, 1);
  Report r("classify");
  r.config() = echo_config(s);
  const ChartManifold& m = s.target();
  bool f0 = true, f1 = true, f5 = true, f15 = true;
  double rel1 = 0.0, rel5 = 0.0, rel15 = 0.0;
  Json table = Json::array();
  for_each_point(s, r, [&](std::size_t i, const Point& p) {
    StructureEval se(m, p, s.order);
    const FIdentityResiduals fi = f_identities(se);
    r.observe("f.symmetry", fi.symmetric_yz, s.tol["structural"]);
    r.observe("f.decomposition", fi.decomposition, s.tol["structural"]);
    const ClassResiduals cr = class_residuals(se, s.tol);
    f0 = f0 && cr.is_f0;
    f1 = f1 && cr.is_f1;
    f5 = f5 && cr.is_f5;
    f15 = f15 && cr.is_f1_plus_f5;
    const double fn = std::max(cr.f.euclidean, 1e-300);
    rel1 = std::max(rel1, cr.minus_f1.euclidean / fn);
    rel5 = std::max(rel5, cr.minus_f5.euclidean / fn);
    rel15 = std::max(rel15, cr.minus_f1_f5.euclidean / fn);
    table.push_back({{"point", i},
                     {"f", {cr.f.euclidean, cr.f.metric}},
                     {"f_minus_f1", {cr.minus_f1.euclidean, cr.minus_f1.metric}},
                     {"f_minus_f5", {cr.minus_f5.euclidean, cr.minus_f5.metric}},
                     {"f_minus_f1_f5", {cr.minus_f1_f5.euclidean, cr.minus_f1_f5.metric}},
                     {"fxi_symmetric", cr.fxi_symmetric},
                     {"fxi_phi", cr.fxi_phi}});
  });
  r.values()["is_f0"] = f0;
  r.values()["is_f1"] = f1;
  r.values()["is_f5"] = f5;
  r.values()["is_f1_plus_f5"] = f15;
  r.values()["relative_f_minus_f1_max"] = rel1;
  r.values()["relative_f_minus_f5_max"] = rel5;
  r.values()["relative_f_minus_f1_f5_max"] = rel15;
  r.values()["residuals"] = table;  // pairs are [euclidean, metric]
  return r;
}

inline Report cmd_lee(const RunConfig& cfg) {
  const Session s = open_session(cfg, 1);
  Report r("lee");
  r.config() = echo_config(s);
  Json samples = Json::array();
  for_each_point(s, r, [&](std::size_t i, const Point& p) {
    StructureEval se(s.target(), p, s.order);
    const FIdentityResiduals fi = f_identities(se);
    r.observe("lee.identity", fi.lee_relation, s.tol["structural"]);
    r.observe("lee.omega_xi", fi.omega_xi, s.tol["structural"]);
    samples.push_back({{"point", i},
                       {"theta", covector_json(se.lee().theta)},
                       {"theta_star", covector_json(se.lee().theta_star)},
                       {"omega", covector_json(se.lee().omega)},
                       {"theta_star_xi", pairing(se.lee().theta_star, se.xi())}});
    if (s.transformed) {
      StructureEval so(s.base, p, 1);
      const TriplePoint tp = eval_triple(so.context(), *s.triple);
      const LeeLawResiduals ll = lee_transformation_check(so, se, tp);
      r.observe("lee_law.theta", ll.theta, s.tol["lee_law"]);
      r.observe("lee_law.theta_star", ll.theta_star, s.tol["lee_law"]);
      r.observe("lee_law.omega", ll.omega, s.tol["lee_law"]);
    }
  });
  r.values()["samples"] = samples;
  return r;
}

inline Report cmd_torse(const RunConfig& cfg) {
  const Session s = open_session(cfg, 1);
  Report r("torse");
  r.config() = echo_config(s);
  const ChartManifold& m = s.target();
  std::vector<Expr> field;
  if (!cfg.field.empty()) {
    if (cfg.field.size() != static_cast<std::size_t>(m.dim())) throw ConfigError("field must have one component per coordinate");
    for (std::size_t i = 0; i < cfg.field.size(); ++i) field.push_back(parse_field(cfg.field[i], "field[" + std::to_string(i) + "]"));
    ChartManifold probe = m;
    probe.xi = field;
    try {
      probe.validate();
    } catch (const ChartError& e) {
      throw ConfigError(e.what());
    }
  } else {
    field = m.xi;
  }
  Json samples = Json::array();
  bool vertical = true;
  for_each_point(s, r, [&](std::size_t i, const Point& p) {
    StructureEval se(m, p, s.order);
    const JetTensor vj = se.context().vector(field);
    const TorseFormingReport tf = torse_forming_analyze(se, vj, s.tol);
    r.observe("torse.fit", tf.relative_residual, s.tol["torse"]);
    r.observe("torse.eta_consistency", std::fabs(tf.k - tf.g_xi) / std::max(1.0, std::fabs(tf.k)), s.tol["symmetry"]);
    vertical = vertical && tf.vertical;
    if (tf.vertical) {
      r.observe("torse.dk", tf.dk_residual, s.tol["derived"]);
      r.observe("torse.nabla_xi", tf.nabla_xi_residual, s.tol["derived"]);
      r.observe("torse.f_xi", tf.f_xi_residual, s.tol["derived"]);
      r.observe("torse.lee_theta_xi", tf.lee_theta_xi, s.tol["derived"]);
      r.observe("torse.lee_theta_star_xi", tf.lee_theta_star_xi, s.tol["derived"]);
      r.observe("torse.lee_omega", tf.lee_omega, s.tol["derived"]);
      r.observe("torse.lee_theta_horizontal", tf.lee_theta_horizontal, s.tol["derived"]);
      r.observe("torse.lee_theta_star_horizontal", tf.lee_theta_star_horizontal, s.tol["derived"]);
    }
    samples.push_back({{"point", i},
                       {"f", tf.f},
                       {"gamma", covector_json(tf.gamma)},
                       {"k", tf.k},
                       {"length", tf.length},
                       {"verticality", tf.verticality},
                       {"fit_residual", tf.residual}});
  });
  r.values()["vertical"] = vertical;
  r.values()["samples"] = samples;
  return r;
}

inline Session require_triple(const RunConfig& cfg, int order) {
  if (!cfg.triple) throw ConfigError("this command needs a transformation (--preset or --u/--v/--w)");
  return open_session(cfg, order);
}

inline Report cmd_transform(const RunConfig& cfg) {
  const Session s = require_triple(cfg, 1);
  Report r("transform");
  r.config() = echo_config(s);
  bool f5_input = true;
  for_each_point(s, r, [&](std::size_t, const Point& p) {
    TransformPoint tp(s.base, *s.transformed, *s.triple, p, s.order);
    observe_axioms(r, tp.transformed(), s.tol, "transformed.", s.tol["derived"]);
    const AlphaBeta ab = alpha_beta_at(tp.original(), tp.triple());
    r.observe("alpha_beta.phi_squared_relation", ab.albt2_first, s.tol["structural"]);
    r.observe("alpha_beta.phi_relation", ab.albt2_second, s.tol["structural"]);
    r.observe("alpha_beta.reeb_alpha", ab.albtxi_alpha, s.tol["structural"]);
    r.observe("alpha_beta.reeb_beta", ab.albtxi_beta, s.tol["structural"]);
    const LeeLawResiduals ll = lee_transformation_check(tp.original(), tp.transformed(), tp.triple());
    r.observe("lee_law.theta", ll.theta, s.tol["lee_law"]);
    r.observe("lee_law.theta_star", ll.theta_star, s.tol["lee_law"]);
    r.observe("lee_law.omega", ll.omega, s.tol["lee_law"]);
    r.observe("metric.round_trip", metric_round_trip_residual(tp.original(), tp.transformed(), tp.triple()), s.tol["transform"]);
    if (class_residuals(tp.original(), s.tol).is_f5) {
      const FbarFormula ff = fbar_f5_formula_at(tp.original(), tp.transformed(), tp.triple(), s.tol);
      r.observe("fbar.closed_form", ff.deviation, s.tol["formula"]);
      r.observe("fbar.closed_form_new_metric", ff.deviation_gbar, s.tol["formula"]);
    } else {
      f5_input = false;
    }
  });
  r.values()["f5_input"] = f5_input;
  return r;
}

inline bool is_hypersurface_preset(const Session& s) {
  return s.cfg.triple && (s.cfg.triple->preset == "hypersurface-triple" || s.cfg.triple->preset == "hypersurface-triple-raw");
}

inline Report cmd_soliton(const RunConfig& cfg) {
  const Session s = require_triple(cfg, 3);
  if (s.order < 2) throw ConfigError("soliton needs jet order 2 or 3");
  Report r("soliton");
  r.config() = echo_config(s);
  const double two_n = 2.0 * s.base.n;
  std::vector<SolitonPoint> pts;
  bool f1 = true, holomorphic = true, f0_out = true;
  double f1_rel = 0.0;
  Json cond = Json::array();
  for_each_point(s, r, [&](std::size_t i, const Point& p) {
    TransformPoint tp(s.base, *s.transformed, *s.triple, p, s.order);
    const StructureEval& so = tp.original();
    const StructureEval& sb = tp.transformed();
    if (!class_residuals(so, s.tol).is_f5) throw NotF5Input("input structure is not of class F5");
    const TheoremConditions tc = theorem_conditions_at(so, tp.triple(), s.tol);
    r.observe("condition.du_xi", tc.du_xi, s.tol["condition"]);
    r.observe("condition.dv_xi", tc.dv_xi, s.tol["condition"]);
    r.observe("condition.dw_vertical", tc.dw_vertical, s.tol["condition"]);
    cond.push_back({{"point", i},
                    {"f_over_k", tc.f_over_k},
                    {"du_xi", tc.du_xi},
                    {"dv_xi", tc.dv_xi},
                    {"dw_vertical", tc.dw_vertical},
                    {"dw_phi2", tc.dw_phi2},
                    {"holomorphic", {tc.holomorphic_first, tc.holomorphic_second}}});
    holomorphic = holomorphic && tc.holomorphic_first < s.tol["condition"] && tc.holomorphic_second < s.tol["condition"];
    const ClassResiduals cb = class_residuals(sb, s.tol);
    f1 = f1 && cb.is_f1;
    f0_out = f0_out && cb.is_f0;
    f1_rel = std::max(f1_rel, cb.is_f0 ? 0.0 : cb.minus_f1.euclidean / cb.f.euclidean);
    const LeeConclusions lc = lee_conclusions_at(so, sb, tp.triple(), tc.f_over_k);
    r.observe("lee.theta_bar", lc.theta, s.tol["lee_law"]);
    r.observe("lee.theta_star_bar", lc.theta_star, s.tol["lee_law"]);
    r.observe("lee.omega_bar", lc.omega, s.tol["lee_law"]);
    r.observe("lee.alpha", lc.alpha, s.tol["lee_law"]);
    r.observe("lee.beta", lc.beta, s.tol["lee_law"]);
    r.observe("lee.dw_phi", lc.dw_phi, s.tol["lee_law"]);
    r.observe("lee.theta_bar_horizontal", lc.theta_horizontal, s.tol["lee_law"]);
    r.observe("lee.theta_star_bar_horizontal", lc.theta_star_horizontal, s.tol["lee_law"]);
    if (is_hypersurface_preset(s)) {
      const TriplePoint& t = tp.triple();
      r.observe("example.du_phi_equals_dv", tc.du_phi_minus_dv, s.tol["condition"]);
      r.observe("example.theta_bar", max_abs(sb.lee().theta - compose(t.du, so.phi()) * (2.0 * two_n)), s.tol["lee_law"]);
      r.observe("example.theta_star_bar", max_abs(sb.lee().theta_star + compose(t.dv, so.phi()) * (2.0 * two_n)), s.tol["lee_law"]);
    }
    pts.push_back(soliton_point(tp, s.tol));
  });
  r.observe("class.is_f1", f1 ? 0.0 : std::max(f1_rel, s.tol["class"]), s.tol["class"]);
  if (holomorphic && !pts.empty()) r.observe("class.is_f0_holomorphic", f0_out ? 0.0 : 1.0, 0.5);
  if (!pts.empty()) {
    const SolitonReport sr = yamabe_check(pts, s.cfg.sigma, s.tol);
    r.observe("soliton.residual", sr.max_soliton, s.tol["soliton"]);
    r.observe("soliton.tau_constancy", sr.tau_std / (1.0 + std::fabs(sr.tau_mean)), s.tol["soliton"]);
    r.observe("soliton.killing", sr.max_killing, s.tol["soliton"]);
    r.observe("soliton.lie_formulas", sr.max_lie_discrepancy, s.tol["structural"]);
    r.observe("soliton.reeb_component", sr.max_tsdw, s.tol["lee_law"]);
    if (sr.max_lxi0 >= 0.0) {
      r.observe("soliton.lie_closed_form", sr.max_lxi0, s.tol["lee_law"]);
      r.observe("soliton.lie_closed_form_soliton", sr.max_lxi00, s.tol["lee_law"]);
    }
    r.values()["sigma"] = sr.sigma;
    r.values()["sigma_pinned"] = sr.sigma_pinned;
    r.values()["tau"] = sr.tau;
    r.values()["tau_mean"] = sr.tau_mean;
    r.values()["tau_std"] = sr.tau_std;
    Json per = Json::array();
    for (const auto& p : sr.points) per.push_back({{"soliton", p.soliton}, {"killing", p.killing}, {"reeb_component", p.tsdw}});
    r.values()["points"] = per;
  }
  r.values()["is_f1"] = f1;
  r.values()["holomorphic_pair"] = holomorphic;
  r.values()["conditions"] = cond;
  return r;
}

inline Report cmd_example_list() {
  Report r("example list");
  Json ex = Json::array();
  for (const auto& name : example_names()) {
    const ChartManifold m = build_example(name, 2);
    ex.push_back({{"name", name}, {"default_n", 2}, {"dimension", m.dim()}, {"coords", m.coords}});
  }
  r.values()["examples"] = ex;
  r.values()["presets"] = preset_names();
  return r;
}

}  // namespace accr::cli
