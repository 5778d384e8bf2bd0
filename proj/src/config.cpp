#include "cavity/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cavity/error.hpp"
#include "cavity/piola.hpp"
#include "yaml_util.hpp"

namespace cavity {

namespace {

using namespace yamlx;

struct CommandName {
  Command command;
  const char* name;
};

constexpr CommandName kCommands[] = {
    {Command::mesh, "mesh"},           {Command::solve, "solve"},
    {Command::cube_bench, "cube-bench"}, {Command::sweep, "sweep"},
    {Command::piola_verify, "piola-verify"}, {Command::mazya, "mazya"},
    {Command::check_atlas, "check-atlas"},
};

const char* const kModulusKinds[] = {"auto", "power", "lipschitz_capped", "log_counterexample"};

// Reads one config file; every message names the source and line.
class Reader {
 public:
  explicit Reader(std::string source) : src_(std::move(source)) {}

  // Mapping under `key`, or an empty mapping when absent. Unknown keys are rejected.
  YAML::Node section(const YAML::Node& root, const std::string& key, std::initializer_list<const char*> allowed) {
    YAML::Node n = root[key];
    if (!n.IsDefined() || n.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!n.IsMap()) parse_fail(src_, n, "'" + key + "' must be a mapping");
    keys(n, key + ".", allowed);
    return n;
  }

  void keys(const YAML::Node& map, const std::string& prefix, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto k = kv.first.as<std::string>();
      if (!ok.count(k)) parse_fail(src_, kv.first, "unknown key '" + prefix + k + "'");
    }
  }

  template <class T>
  void read(const YAML::Node& map, const char* key, T& value) {
    value = get_or(src_, map, key, value);
  }

  void read_list(const YAML::Node& map, const char* key, std::vector<double>& value) {
    if (map[key].IsDefined() && !map[key].IsNull()) value = doubles(src_, map[key], key);
  }

  void read_names(const YAML::Node& map, const char* key, std::vector<std::string>& value) {
    const YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) return;
    if (!n.IsSequence()) parse_fail(src_, n, std::string("'") + key + "' must be a list");
    value.clear();
    for (const auto& item : n) value.push_back(as<std::string>(src_, item, key));
  }

  // Range check against the node holding the value (or its section when defaulted).
  void check(bool ok, const YAML::Node& map, const char* key, const std::string& field, const std::string& rule) {
    if (ok) return;
    const YAML::Node n = map[key];
    range_fail(src_, n.IsDefined() ? n : map, field + " " + rule);
  }

  const std::string& source() const { return src_; }

 private:
  std::string src_;
};

void resolve_command_defaults(RunConfig& c) {
  if (c.command == Command::cube_bench) c.solver.m = 40;
  if (c.command == Command::sweep) {
    c.solver.order = 1;
    c.solver.block_size = 6;
  }
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

template <class Range, class Pred>
bool all(const Range& r, Pred p) {
  for (const auto& x : r)
    if (!p(x)) return false;
  return true;
}

std::string emit_profile_text(const ProfileFunction& g) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit_profile(out, g);
  return out.c_str();
}

}  // namespace

std::string_view to_string(Command c) noexcept {
  for (const auto& e : kCommands)
    if (e.command == c) return e.name;
  return "unknown";
}

std::optional<Command> command_from_string(std::string_view name) noexcept {
  for (const auto& e : kCommands)
    if (name == e.name) return e.command;
  return std::nullopt;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kCommands) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

bool operator==(const MazyaConfig& a, const MazyaConfig& b) {
  return emit_profile_text(a.profile) == emit_profile_text(b.profile) && a.xbar == b.xbar && a.delta == b.delta &&
         a.rho_list == b.rho_list && a.dimension == b.dimension && a.quad_n == b.quad_n && a.modulus == b.modulus;
}

AtlasDomain default_box_domain() { return box_domain(Rect{{0.0, 0.5}, {0.0, 0.5}}, -1.0, 1.0, 0.0, 0.05); }

RunConfig parse_config(const std::string& text, const std::string& source) {
  const YAML::Node root = load(text, source);
  if (!root.IsMap()) parse_fail(source, root, "a run config must be a mapping");
  Reader rd(source);
  rd.keys(root, "", {"command", "domain", "output", "solver", "mesh", "sweep", "cube", "piola", "mazya", "atlas"});

  RunConfig c;
  const auto name = get<std::string>(source, root, "command");
  const auto cmd = command_from_string(name);
  if (!cmd) parse_fail(source, root["command"], "unknown command '" + name + "'");
  c.command = *cmd;
  resolve_command_defaults(c);
  rd.read(root, "domain", c.domain);
  rd.read(root, "output", c.output);
  if (c.output.empty()) range_fail(source, root["output"], "output must not be empty");

  {
    const YAML::Node s = rd.section(root, "solver",
                                    {"m", "tol", "shift", "tau", "order", "block_size", "max_iter", "verify_count", "seed"});
    SolverConfig& v = c.solver;
    rd.read(s, "m", v.m);
    rd.read(s, "tol", v.tol);
    rd.read(s, "shift", v.shift);
    rd.read(s, "tau", v.tau);
    rd.read(s, "order", v.order);
    rd.read(s, "block_size", v.block_size);
    rd.read(s, "max_iter", v.max_iter);
    rd.read(s, "verify_count", v.verify_count);
    rd.read(s, "seed", v.seed);
    rd.check(v.m >= 1 && v.m <= 200, s, "m", "solver.m", "must be in [1, 200]");
    rd.check(v.tol > 0.0 && v.tol <= 1e-2, s, "tol", "solver.tol", "must be in (0, 1e-2]");
    rd.check(std::isfinite(v.shift), s, "shift", "solver.shift", "must be finite");
    rd.check(v.tau > 0.0 && std::isfinite(v.tau), s, "tau", "solver.tau", "must be > 0");
    rd.check(v.order == 1 || v.order == 2, s, "order", "solver.order", "must be 1 or 2");
    rd.check(v.block_size >= 1 && v.block_size <= 64, s, "block_size", "solver.block_size", "must be in [1, 64]");
    rd.check(v.max_iter >= 1, s, "max_iter", "solver.max_iter", "must be positive");
  }
  {
    const YAML::Node s =
        rd.section(root, "mesh", {"n", "eps", "h_factor", "min_cells", "grading_ratio", "max_layer"});
    MeshConfig& v = c.mesh;
    rd.read(s, "n", v.n);
    rd.read(s, "eps", v.eps);
    rd.read(s, "h_factor", v.policy.h_factor);
    rd.read(s, "min_cells", v.policy.min_cells);
    rd.read(s, "grading_ratio", v.policy.grading_ratio);
    rd.read(s, "max_layer", v.policy.max_layer);
    v.policy.order = c.solver.order;
    rd.check(v.n >= 1 && v.n <= 512, s, "n", "mesh.n", "must be in [1, 512]");
    rd.check(v.eps >= 0.0 && v.eps <= 1.0, s, "eps", "mesh.eps", "must be in [0, 1]");
    rd.check(v.policy.h_factor > 0.0, s, "h_factor", "mesh.h_factor", "must be > 0");
    rd.check(v.policy.min_cells >= 1, s, "min_cells", "mesh.min_cells", "must be positive");
    rd.check(v.policy.grading_ratio >= 1.0, s, "grading_ratio", "mesh.grading_ratio", "must be >= 1");
    rd.check(v.policy.max_layer > 0.0, s, "max_layer", "mesh.max_layer", "must be > 0");
  }
  {
    const YAML::Node s = rd.section(root, "sweep",
                                    {"alpha", "eps_list", "kappa_exponent", "chart", "cell", "cutoff", "track",
                                     "gap_tol", "cluster_tol", "e_clusters", "e_quad", "gaffney"});
    SweepConfig& v = c.sweep;
    rd.read(s, "alpha", v.alpha);
    rd.read_list(s, "eps_list", v.eps_list);
    rd.read(s, "kappa_exponent", v.kappa_exponent);
    rd.read(s, "chart", v.chart);
    if (s["cell"].IsDefined() && !s["cell"].IsNull()) {
      const YAML::Node cell = s["cell"];
      rd.keys(cell, "sweep.cell.", {"offset", "amplitude"});
      rd.read(cell, "offset", v.cell.offset);
      rd.read(cell, "amplitude", v.cell.amplitude);
    }
    if (s["cutoff"].IsDefined() && !s["cutoff"].IsNull()) {
      const YAML::Node cut = s["cutoff"];
      rd.keys(cut, "sweep.cutoff.", {"kind", "center", "radius"});
      const auto kind = get<std::string>(source, cut, "kind");
      if (kind == "one") {
        v.cutoff = Cutoff{};
      } else if (kind == "bump") {
        v.cutoff.kind = Cutoff::Kind::bump;
        v.cutoff.center = vec2(source, require(source, cut, "center"), "center");
        v.cutoff.radius = get<double>(source, cut, "radius");
        rd.check(v.cutoff.radius > 0.0, cut, "radius", "sweep.cutoff.radius", "must be > 0");
      } else {
        parse_fail(source, cut["kind"], "sweep.cutoff.kind must be 'one' or 'bump'");
      }
    }
    rd.read(s, "track", v.track);
    rd.read(s, "gap_tol", v.gap_tol);
    rd.read(s, "cluster_tol", v.cluster_tol);
    rd.read(s, "e_clusters", v.e_clusters);
    rd.read(s, "e_quad", v.e_quad);
    rd.read(s, "gaffney", v.gaffney);
    rd.check(v.alpha > 0.0, s, "alpha", "sweep.alpha", "must be > 0");
    rd.check(!v.eps_list.empty() && all(v.eps_list, [](double e) { return e > 0.0 && e <= 1.0; }), s, "eps_list",
             "sweep.eps_list", "entries must be in (0, 1]");
    rd.check(strictly_decreasing(v.eps_list), s, "eps_list", "sweep.eps_list", "must be strictly decreasing");
    rd.check(v.kappa_exponent > 0.0, s, "kappa_exponent", "sweep.kappa_exponent", "must be > 0");
    rd.check(v.chart >= 0, s, "chart", "sweep.chart", "must be >= 0");
    rd.check(v.track >= 1 && (c.command != Command::sweep || v.track <= c.solver.m), s, "track", "sweep.track",
             "must be in [1, solver.m]");
    rd.check(v.gap_tol > 0.0, s, "gap_tol", "sweep.gap_tol", "must be > 0");
    rd.check(v.cluster_tol > 0.0 && v.cluster_tol < 1.0, s, "cluster_tol", "sweep.cluster_tol", "must be in (0, 1)");
    rd.check(v.e_clusters >= 0, s, "e_clusters", "sweep.e_clusters", "must be >= 0");
    rd.check(v.e_quad >= 1 && v.e_quad <= 8, s, "e_quad", "sweep.e_quad", "must be in [1, 8]");
  }
  {
    const YAML::Node s =
        rd.section(root, "cube", {"clusters", "window", "tau_factors", "window_shifts", "window_count", "tau_m"});
    CubeConfig& v = c.cube;
    rd.read(s, "clusters", v.clusters);
    rd.read(s, "window", v.window);
    rd.read_list(s, "tau_factors", v.tau_factors);
    rd.read_list(s, "window_shifts", v.window_shifts);
    rd.read(s, "window_count", v.window_count);
    rd.read(s, "tau_m", v.tau_m);
    rd.check(v.clusters >= 1, s, "clusters", "cube.clusters", "must be positive");
    rd.check(v.window > 0.0 && v.window < 1.0, s, "window", "cube.window", "must be in (0, 1)");
    rd.check(all(v.tau_factors, [](double t) { return t > 0.0 && std::isfinite(t); }), s, "tau_factors",
             "cube.tau_factors", "entries must be > 0");
    rd.check(v.window_count >= 1 && v.window_count <= 200, s, "window_count", "cube.window_count",
             "must be in [1, 200]");
    rd.check(v.tau_m >= 1 && v.tau_m <= 200, s, "tau_m", "cube.tau_m", "must be in [1, 200]");
  }
  {
    const YAML::Node s = rd.section(root, "piola", {"fields", "points", "cells", "margin"});
    PiolaConfig& v = c.piola;
    rd.read_names(s, "fields", v.fields);
    rd.read(s, "points", v.points);
    rd.read(s, "cells", v.cells);
    rd.read(s, "margin", v.margin);
    const auto& known = box_test_field_names();
    rd.check(!v.fields.empty() && all(v.fields, [&](const std::string& f) {
               return std::find(known.begin(), known.end(), f) != known.end();
             }),
             s, "fields", "piola.fields", "must name gradient, mixed or transverse");
    rd.check(v.points >= 1 && v.points <= 20, s, "points", "piola.points", "must be in [1, 20]");
    rd.check(v.cells >= 1 && v.cells <= 256, s, "cells", "piola.cells", "must be in [1, 256]");
    rd.check(v.margin >= 0.0, s, "margin", "piola.margin", "must be >= 0");
  }
  {
    const YAML::Node s =
        rd.section(root, "mazya", {"profile", "xbar", "delta", "rho_list", "dimension", "quad_n", "modulus"});
    MazyaConfig& v = c.mazya;
    if (s["profile"].IsDefined() && !s["profile"].IsNull()) v.profile = parse_profile(source, s["profile"]);
    if (s["xbar"].IsDefined() && !s["xbar"].IsNull()) v.xbar = vec2(source, s["xbar"], "xbar");
    rd.read(s, "delta", v.delta);
    rd.read_list(s, "rho_list", v.rho_list);
    rd.read(s, "dimension", v.dimension);
    rd.read(s, "quad_n", v.quad_n);
    if (s["modulus"].IsDefined() && !s["modulus"].IsNull()) {
      const YAML::Node m = s["modulus"];
      rd.keys(m, "mazya.modulus.", {"kind", "exponent", "coefficient", "cap", "slope"});
      ModulusConfig& w = v.modulus;
      rd.read(m, "kind", w.kind);
      rd.read(m, "exponent", w.exponent);
      rd.read(m, "coefficient", w.coefficient);
      rd.read(m, "cap", w.cap);
      rd.read(m, "slope", w.slope);
      bool known = false;
      for (const char* k : kModulusKinds) known = known || w.kind == k;
      if (!known) parse_fail(source, m["kind"], "unknown modulus kind '" + w.kind + "'");
      rd.check(w.exponent > 0.0, m, "exponent", "mazya.modulus.exponent", "must be > 0");
      rd.check(w.coefficient >= 0.0, m, "coefficient", "mazya.modulus.coefficient", "must be >= 0");
      rd.check(w.cap > 0.0, m, "cap", "mazya.modulus.cap", "must be > 0");
      rd.check(w.slope > 0.0, m, "slope", "mazya.modulus.slope", "must be > 0");
    }
    rd.check(v.delta > 0.0, s, "delta", "mazya.delta", "must be > 0");
    rd.check(!v.rho_list.empty() && all(v.rho_list, [](double r) { return r > 0.0 && std::isfinite(r); }), s,
             "rho_list", "mazya.rho_list", "entries must be > 0");
    rd.check(v.dimension == 2 || v.dimension == 3, s, "dimension", "mazya.dimension", "must be 2 or 3");
    rd.check(v.quad_n >= 4 && v.quad_n <= 256, s, "quad_n", "mazya.quad_n", "must be in [4, 256]");
  }
  {
    const YAML::Node s = rd.section(root, "atlas", {"k", "gamma", "grid_n"});
    AtlasCheckConfig& v = c.atlas;
    rd.read(s, "k", v.k);
    rd.read(s, "gamma", v.gamma);
    rd.read(s, "grid_n", v.grid_n);
    rd.check(v.k >= 0 && v.k <= 2, s, "k", "atlas.k", "must be 0, 1 or 2");
    rd.check(v.gamma > 0.0 && v.gamma <= 1.0, s, "gamma", "atlas.gamma", "must be in (0, 1]");
    rd.check(v.grid_n >= 2 && v.grid_n <= 4096, s, "grid_n", "atlas.grid_n", "must be in [2, 4096]");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string emit_config(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const auto kv = [&](const char* k, const auto& v) { out << YAML::Key << k << YAML::Value << v; };
  const auto list = [&](const char* k, const std::vector<double>& v) {
    out << YAML::Key << k << YAML::Value;
    emit_seq(out, v);
  };
  out << YAML::BeginMap;
  kv("command", std::string(to_string(c.command)));
  kv("domain", c.domain);
  kv("output", c.output);

  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  kv("m", c.solver.m);
  kv("tol", c.solver.tol);
  kv("shift", c.solver.shift);
  kv("tau", c.solver.tau);
  kv("order", c.solver.order);
  kv("block_size", c.solver.block_size);
  kv("max_iter", c.solver.max_iter);
  kv("verify_count", c.solver.verify_count);
  kv("seed", c.solver.seed);
  out << YAML::EndMap;

  out << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
  kv("n", c.mesh.n);
  kv("eps", c.mesh.eps);
  kv("h_factor", c.mesh.policy.h_factor);
  kv("min_cells", c.mesh.policy.min_cells);
  kv("grading_ratio", c.mesh.policy.grading_ratio);
  kv("max_layer", c.mesh.policy.max_layer);
  out << YAML::EndMap;

  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  kv("alpha", c.sweep.alpha);
  list("eps_list", c.sweep.eps_list);
  kv("kappa_exponent", c.sweep.kappa_exponent);
  kv("chart", c.sweep.chart);
  out << YAML::Key << "cell" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv("offset", c.sweep.cell.offset);
  kv("amplitude", c.sweep.cell.amplitude);
  out << YAML::EndMap;
  out << YAML::Key << "cutoff" << YAML::Value << YAML::Flow << YAML::BeginMap;
  if (c.sweep.cutoff.kind == Cutoff::Kind::one) {
    kv("kind", "one");
  } else {
    kv("kind", "bump");
    list("center", {c.sweep.cutoff.center[0], c.sweep.cutoff.center[1]});
    kv("radius", c.sweep.cutoff.radius);
  }
  out << YAML::EndMap;
  kv("track", c.sweep.track);
  kv("gap_tol", c.sweep.gap_tol);
  kv("cluster_tol", c.sweep.cluster_tol);
  kv("e_clusters", c.sweep.e_clusters);
  kv("e_quad", c.sweep.e_quad);
  kv("gaffney", c.sweep.gaffney);
  out << YAML::EndMap;

  out << YAML::Key << "cube" << YAML::Value << YAML::BeginMap;
  kv("clusters", c.cube.clusters);
  kv("window", c.cube.window);
  list("tau_factors", c.cube.tau_factors);
  list("window_shifts", c.cube.window_shifts);
  kv("window_count", c.cube.window_count);
  kv("tau_m", c.cube.tau_m);
  out << YAML::EndMap;

  out << YAML::Key << "piola" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fields" << YAML::Value << YAML::Flow << c.piola.fields;
  kv("points", c.piola.points);
  kv("cells", c.piola.cells);
  kv("margin", c.piola.margin);
  out << YAML::EndMap;

  out << YAML::Key << "mazya" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "profile" << YAML::Value;
  emit_profile(out, c.mazya.profile);
  list("xbar", {c.mazya.xbar[0], c.mazya.xbar[1]});
  kv("delta", c.mazya.delta);
  list("rho_list", c.mazya.rho_list);
  kv("dimension", c.mazya.dimension);
  kv("quad_n", c.mazya.quad_n);
  out << YAML::Key << "modulus" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv("kind", c.mazya.modulus.kind);
  kv("exponent", c.mazya.modulus.exponent);
  kv("coefficient", c.mazya.modulus.coefficient);
  kv("cap", c.mazya.modulus.cap);
  kv("slope", c.mazya.modulus.slope);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "atlas" << YAML::Value << YAML::BeginMap;
  kv("k", c.atlas.k);
  kv("gamma", c.atlas.gamma);
  kv("grid_n", c.atlas.grid_n);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cavity
