#include "mcflab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mcflab/errors.hpp"

namespace mcflab {

namespace {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T required(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path(key) + ": required field is missing");
    return convert<T>(key);
  }

  const nlohmann::json* raw(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    const auto& v = j_.at(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && v.get<long long>() < 0) throw ConfigError(path(key) + ": must be non-negative");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    }
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const nlohmann::json* v, const std::string& where, std::vector<double> fallback) {
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<Point> point_list(const nlohmann::json* v, const std::string& where, std::vector<Point> fallback) {
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(where + ": expected an array of points");
  std::vector<Point> out;
  for (std::size_t i = 0; i < v->size(); ++i)
    out.push_back(number_list(&(*v)[i], where + "[" + std::to_string(i) + "]", {}));
  return out;
}

// Interface described by a level-set function φ, negative on the a-phase side.
struct InterfaceSpec {
  std::string type = "circle";
  double radius = 1.0;
  std::vector<double> centre;
  int axis = 0;
  double offset = 0.0;
};

InterfaceSpec parse_interface(const nlohmann::json* v, const std::string& where) {
  InterfaceSpec s;
  if (!v) return s;
  Reader r(*v, where);
  s.type = r.get<std::string>("type", s.type);
  if (s.type == "circle") {
    s.radius = r.get("radius", s.radius);
    s.centre = number_list(r.raw("centre"), r.path("centre"), {});
    if (!(s.radius > 0.0)) throw ConfigError(r.path("radius") + ": must be positive");
  } else if (s.type == "plane") {
    s.axis = r.get("axis", s.axis);
    s.offset = r.get("offset", s.offset);
  } else {
    throw ConfigError(r.path("type") + ": expected \"circle\" or \"plane\"");
  }
  r.finish();
  return s;
}

// Circles use (|x − c|² − r²)/(2r), smooth with unit gradient on the circle.
ScalarField interface_field(const InterfaceSpec& s, int dim, const GridSpec& g) {
  auto grid = make_field(dim, g.lo, g.hi, g.n);
  if (s.type == "plane") {
    if (s.axis < 0 || s.axis >= dim) throw ArgumentError("interface: plane axis out of range");
    return sample_field(grid, [&](std::span<const double> x) { return x[static_cast<std::size_t>(s.axis)] - s.offset; });
  }
  std::vector<double> c = s.centre.empty() ? std::vector<double>(static_cast<std::size_t>(dim), 0.0) : s.centre;
  if (static_cast<int>(c.size()) != dim) throw ArgumentError("interface: centre has the wrong dimension");
  return sample_field(grid, [&](std::span<const double> x) {
    double q = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) q += (x[k] - c[k]) * (x[k] - c[k]);
    return (q - s.radius * s.radius) / (2.0 * s.radius);
  });
}

Point origin_of(const ModelBundle& m) { return Point(static_cast<std::size_t>(m.spec.dim), 0.0); }

void require_dim(const std::vector<Point>& pts, const ModelBundle& m, const std::string& what) {
  for (const auto& p : pts)
    if (static_cast<int>(p.size()) != m.spec.dim) throw ArgumentError(what + ": point dimension differs from the model");
}

std::string field_file;  // set per run for interface-driven checks

PreparedCheck prepare_equilibria(Reader& r) {
  const double t = r.get("t", 0.05);
  const auto n = r.get<std::size_t>("n_samples", 200);
  auto pts = point_list(r.raw("points"), r.path("points"), {});
  return [=](const RunContext& c) {
    auto p = pts.empty() ? std::vector<Point>{origin_of(c.bundle)} : pts;
    require_dim(p, c.bundle, "equilibria");
    return check_equilibria(c.bundle, p, t, n, c.seed);
  };
}

PreparedCheck prepare_monotonicity(Reader& r) {
  const double t = r.get("t", 0.05);
  const double shift = r.get("shift", 0.1);
  const auto n = r.get<std::size_t>("n_samples", 2000);
  auto pts = point_list(r.raw("points"), r.path("points"), {});
  return [=](const RunContext& c) {
    auto p = pts.empty() ? std::vector<Point>{origin_of(c.bundle)} : pts;
    require_dim(p, c.bundle, "monotonicity");
    const double a = c.bundle.equilibria.a, b = c.bundle.equilibria.b;
    auto low = [a, b, shift](std::span<const double> y) { return y[0] < shift ? a : b; };
    return check_monotonicity(c.bundle, low, half_space_data(a, b), p, t, n, c.seed);
  };
}

PreparedCheck prepare_semigroup(Reader& r) {
  const double t = r.get("t", 0.02), h = r.get("h", 0.02);
  const auto n_outer = r.get<std::size_t>("n_outer", 20000);
  const auto n_inner = r.get<std::size_t>("n_inner", 1000);
  const double half = r.get("grid_half_width", 0.75);
  const auto nodes = r.get<std::size_t>("grid_nodes", 21);
  auto xs = number_list(r.raw("x"), r.path("x"), {});
  return [=](const RunContext& c) {
    Point x = xs.empty() ? origin_of(c.bundle) : xs;
    require_dim({x}, c.bundle, "semigroup");
    auto grid = make_field(c.bundle.spec.dim, -half, half, nodes);
    for (std::size_t k = 0; k < x.size(); ++k) grid.origin[k] += x[k];
    return check_semigroup(c.bundle, x, t, h, half_space_data(c.bundle.equilibria.a, c.bundle.equilibria.b), grid,
                           n_outer, n_inner, c.seed);
  };
}

PreparedCheck prepare_flow_consistency(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const double alpha = r.get("alpha", 1.0), delta = r.get("delta", 0.1), h = r.get("h", 0.05);
  const auto eps = number_list(r.raw("epsilons"), r.path("epsilons"), {0.3, 0.2, 0.15});
  const auto n = r.get<std::size_t>("n_samples", 1000);
  FlowConsistencyOptions o;
  o.n_points = r.get("n_points", o.n_points);
  o.tolerance = r.get("tolerance", o.tolerance);
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    return check_flow_consistency(c.factory, phi, alpha, delta, h, eps, n, c.seed, o);
  };
}

PreparedCheck prepare_interface_formation(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const double delta = r.get("delta", 0.1);
  const auto n = r.get<std::size_t>("n_samples", 1000);
  InterfaceFormationOptions o;
  o.tolerance = r.get("tolerance", o.tolerance);
  o.n_points = r.get("n_points", o.n_points);
  o.n_times = r.get("n_times", o.n_times);
  o.K = r.get("K", o.K);
  o.sigma1 = r.get("sigma1", o.sigma1);
  o.sigma2 = r.get("sigma2", o.sigma2);
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    return check_interface_formation(c.bundle, phi, delta, n, c.seed, o);
  };
}

PreparedCheck prepare_propagation(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const double alpha = r.get("alpha", 1.0), delta = r.get("delta", 0.1);
  const auto times = number_list(r.raw("times"), r.path("times"), {0.12, 0.14, 0.16});
  const auto n = r.get<std::size_t>("n_samples", 2000);
  PropagationOptions o;
  o.K2 = r.get("K2", o.K2);
  o.C = r.get("C", o.C);
  o.k = r.get("k", o.k);
  o.n_points = r.get("n_points", o.n_points);
  o.band = r.get("band", o.band);
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    return check_propagation_vs_1d(c.bundle, phi, alpha, delta, times, n, c.seed, o);
  };
}

PreparedCheck prepare_ito(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const double alpha = r.get("alpha", 1.0), t = r.get("t", 0.1), s = r.get("s", 0.1);
  const double band = r.get("band_r0", 0.3);
  const auto n = r.get<std::size_t>("n_paths", 20000);
  auto xs = number_list(r.raw("x"), r.path("x"), {});
  ItoDriftOptions o;
  o.n_steps = r.get("n_steps", o.n_steps);
  o.n_slices = r.get("n_slices", o.n_slices);
  o.budget = r.get("budget", o.budget);
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    Point x = xs;
    if (x.empty()) {
      x = origin_of(c.bundle);
      x[0] = shape.type == "plane" ? shape.offset + 0.05 : (shape.centre.empty() ? 0.0 : shape.centre[0]) + 0.95 * shape.radius;
    }
    return check_ito_coupling_drift(phi, alpha, x, t, s, band, n, c.seed, o);
  };
}

PreparedCheck prepare_diffusivity(Reader& r) {
  const auto s_list = number_list(r.raw("s_list"), r.path("s_list"), {0.25, 0.5, 1.0});
  const auto n = r.get<std::size_t>("n_samples", 20000);
  return [=](const RunContext& c) { return check_diffusivity(c.bundle.spec, s_list, n, c.seed); };
}

PreparedCheck prepare_mcf_duality(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const auto T_list = number_list(r.raw("T_list"), r.path("T_list"), {0.05});
  const auto eps = number_list(r.raw("epsilons"), r.path("epsilons"), {0.4, 0.3});
  const auto n = r.get<std::size_t>("n_samples", 1000);
  auto pts = point_list(r.raw("points"), r.path("points"), {});
  McfDualityOptions o;
  o.margin = r.get("margin", o.margin);
  o.tolerance = r.get("tolerance", o.tolerance);
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    const double a = c.bundle.equilibria.a, b = c.bundle.equilibria.b;
    ScalarField p = phi;
    for (auto& v : p.values) v = v > 0.0 ? b : a;
    auto points = pts.empty() ? std::vector<Point>{origin_of(c.bundle)} : pts;
    require_dim(points, c.bundle, "mcf_duality");
    return check_mcf_duality(c.factory, p, T_list, eps, points, n, c.seed, o);
  };
}

PreparedCheck prepare_allen_cahn(Reader& r) {
  const auto shape = parse_interface(r.raw("interface"), r.path("interface"));
  const auto n = r.get<std::size_t>("n_samples", 5000);
  const double budget = r.get("pde_budget", 0.02);
  std::vector<SpaceTimePoint> pts;
  if (const auto* v = r.raw("points")) {
    if (!v->is_array()) throw ConfigError(r.path("points") + ": expected an array of {t, x}");
    for (std::size_t i = 0; i < v->size(); ++i) {
      Reader pr((*v)[i], r.path("points") + "[" + std::to_string(i) + "]");
      SpaceTimePoint q;
      q.t = pr.required<double>("t");
      q.x = number_list(pr.raw("x"), pr.path("x"), {});
      pr.finish();
      pts.push_back(q);
    }
  }
  return [=](const RunContext& c) {
    const auto phi = interface_field(shape, c.bundle.spec.dim, c.grid);
    if (!field_file.empty()) write_field(phi, field_file);
    const double a = c.bundle.equilibria.a, b = c.bundle.equilibria.b;
    ScalarField p = phi;
    for (auto& v : p.values) v = v > 0.0 ? b : a;
    auto points = pts;
    if (points.empty()) points.push_back({0.05, origin_of(c.bundle)});
    for (const auto& q : points)
      if (static_cast<int>(q.x.size()) != c.bundle.spec.dim) throw ArgumentError("allen_cahn: point dimension differs");
    return check_allen_cahn(c.bundle, p, points, n, c.seed, budget);
  };
}

struct Entry {
  CheckInfo info;
  PreparedCheck (*prepare)(Reader&);
  bool writes_field;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = {
      {{"allen_cahn", "Allen-Cahn duality", "Monte Carlo dual against the reaction-diffusion solution"},
       prepare_allen_cahn, true},
      {{"diffusivity", "lineage diffusivity", "variance slope, Gaussianity and dispersal support of lineages"},
       prepare_diffusivity, false},
      {{"equilibria", "J3 equilibria", "constant data a and b are reproduced exactly"}, prepare_equilibria, false},
      {{"flow_consistency", "J4 flow consistency", "values on the inner set of psi_alpha approach a as eps decreases"},
       prepare_flow_consistency, true},
      {{"interface_formation", "interface formation", "deep inside the a-phase the vote reaches a after formation"},
       prepare_interface_formation, true},
      {{"ito_coupling_drift", "Ito coupling drift", "stopped distance process has the supersolution drift"},
       prepare_ito, true},
      {{"mcf_duality", "convergence to generalized MCF", "phases predicted by the level-set flow are approached"},
       prepare_mcf_duality, true},
      {{"monotonicity", "J2 monotonicity", "ordered data give ordered votes"}, prepare_monotonicity, false},
      {{"propagation_vs_1d", "one-dimensional comparison", "multi-d vote bounded by the shifted 1-D profile"},
       prepare_propagation, true},
      {{"semigroup", "J1 semigroup", "two-stage estimate matches the direct one"}, prepare_semigroup, false},
  };
  return r;
}

const Entry& entry(const std::string& name, const std::string& where) {
  for (const auto& e : registry())
    if (e.info.name == name) return e;
  throw ConfigError(where + ": unknown check '" + name + "'");
}

std::string csv_cell(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_cell(v[i]);
    return s;
  }
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

void write_tables(const CheckReport& r, const std::filesystem::path& stem) {
  for (const auto& [key, value] : r.details.items()) {
    if (!value.is_array() || value.empty() || !value.front().is_object()) continue;
    std::ofstream os(stem.string() + "_" + key + ".csv");
    std::vector<std::string> cols;
    for (const auto& [c, unused] : value.front().items()) cols.push_back(c);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& row : value) {
      for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << csv_cell(row.value(cols[i], nlohmann::json()));
      os << '\n';
    }
  }
}

}  // namespace

std::vector<CheckInfo> list_checks() {
  std::vector<CheckInfo> out;
  for (const auto& e : registry()) out.push_back(e.info);
  return out;
}

PreparedCheck prepare_check(const CheckSpec& spec) {
  const auto& e = entry(spec.name, "checks");
  Reader r(spec.params, "params");
  auto prepared = e.prepare(r);
  r.finish();
  return prepared;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  Reader r(j, "config");
  ExperimentConfig c;
  c.schema_version = r.required<int>("schema_version");
  if (c.schema_version != kConfigSchemaVersion)
    throw ConfigError("config.schema_version: unsupported version " + std::to_string(c.schema_version));
  c.seed = r.required<std::uint64_t>("seed");
  c.output_dir = r.get<std::string>("output_dir", c.output_dir);
  c.jobs = r.get("jobs", c.jobs);
  if (c.jobs < 0) throw ConfigError("config.jobs: must be non-negative");

  const auto* model = r.raw("model");
  if (!model) throw ConfigError("config.model: required field is missing");
  Reader mr(*model, "config.model");
  c.model_name = mr.required<std::string>("name");
  if (const auto* p = mr.raw("params")) {
    if (!p->is_object()) throw ConfigError("config.model.params: expected an object");
    c.model_params = *p;
  }
  mr.finish();
  const auto names = model_names();
  if (std::find(names.begin(), names.end(), c.model_name) == names.end())
    throw ConfigError("config.model.name: unknown model '" + c.model_name + "'");

  if (const auto* g = r.raw("grid")) {
    Reader gr(*g, "config.grid");
    c.grid.lo = gr.get("lo", c.grid.lo);
    c.grid.hi = gr.get("hi", c.grid.hi);
    c.grid.n = gr.get("n", c.grid.n);
    gr.finish();
    if (!(c.grid.hi > c.grid.lo) || c.grid.n < 3) throw ConfigError("config.grid: need hi > lo and n >= 3");
  }

  if (const auto* checks = r.raw("checks")) {
    if (!checks->is_array()) throw ConfigError("config.checks: expected an array");
    for (std::size_t i = 0; i < checks->size(); ++i) {
      const std::string where = "config.checks[" + std::to_string(i) + "]";
      Reader cr((*checks)[i], where);
      CheckSpec s;
      s.name = cr.required<std::string>("name");
      if (const auto* p = cr.raw("params")) s.params = *p;
      cr.finish();
      entry(s.name, where + ".name");
      try {
        prepare_check(s);
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
      }
      c.checks.push_back(std::move(s));
    }
  }
  r.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    const auto nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t col = nl == std::string::npos ? upto + 1 : upto - nl;
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string summary_table(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-32s %14s %14s  %s\n", "check", "property", "statistic", "threshold", "result");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-22s %-32s %14.6g %14.6g  %s\n", r.name.c_str(), r.property.c_str(),
                  r.statistic, r.threshold, r.pass ? "pass" : "FAIL");
    os << line;
  }
  return os.str();
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string joined(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + num(xs[i]);
  return s;
}

}  // namespace

std::string describe_text(const ModelBundle& m) {
  std::ostringstream os;
  os << "model: " << m.name << '\n';
  os << "parameters: " << m.parameters.dump() << '\n';
  os << "branching: dim " << m.spec.dim << ", " << m.spec.n_children << " children, rate " << num(m.spec.branch_rate)
     << ", dispersal bound " << num(m.spec.dispersal_bound) << ", diffusivity " << num(m.spec.diffusivity) << '\n';
  os << "kernel: " << m.kernel.label << '\n';
  os << "g: " << m.g.label << '\n';
  if (m.g.report) {
    const auto& r = *m.g.report;
    os << "  fixed points: " << joined(r.fixed_points) << '\n';
    if (!r.degenerate_points.empty()) os << "  degenerate points: " << joined(r.degenerate_points) << '\n';
    os << "  c0 " << num(r.c0) << ", delta* " << num(r.delta_star) << '\n';
    for (const auto& [k, v] : r.passes) os << "  " << k << ": " << (v ? "yes" : "no") << '\n';
    for (const auto& n : r.notes) os << "  note: " << n << '\n';
  }
  os << "equilibria: a " << num(m.equilibria.a) << ", mu " << num(m.equilibria.mu) << ", b " << num(m.equilibria.b)
     << '\n';
  for (const auto& f : m.flags) os << "flag: " << f << '\n';
  if (!m.scaling_notes.empty()) os << "scaling: " << m.scaling_notes << '\n';
  return os.str();
}

RunResult run_experiment(const ExperimentConfig& config) {
  if (config.jobs > 0) set_thread_count(config.jobs);
  namespace fs = std::filesystem;
  const fs::path out(config.output_dir);
  fs::create_directories(out);

  RunResult result;
  std::vector<std::size_t> order(config.checks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return config.checks[x].name < config.checks[y].name; });

  std::optional<ModelBundle> bundle;
  std::optional<BundleFactory> factory;
  if (!config.checks.empty()) {
    bundle = make_bundle(config.model_name, config.model_params);
    factory = bundle_factory(config.model_name, config.model_params);
  }
  for (std::size_t i : order) {
    const auto& spec = config.checks[i];
    char prefix[64];
    std::snprintf(prefix, sizeof prefix, "%02zu_%s", i, spec.name.c_str());
    const fs::path stem = out / prefix;
    field_file = entry(spec.name, "checks").writes_field ? stem.string() + "_phi.field" : std::string();
    const RunContext ctx{*bundle, *factory, config.grid, derive_seed(config.seed, i)};
    auto report = prepare_check(spec)(ctx);
    field_file.clear();
    report.inputs["config_index"] = i;
    write_tables(report, stem);
    result.all_pass = result.all_pass && report.pass;
    result.reports.push_back(std::move(report));
  }

  std::ofstream jl(out / "reports.jsonl");
  for (const auto& r : result.reports) {
    nlohmann::json j;
    to_json(j, r);
    jl << j.dump() << '\n';
  }
  std::ofstream(out / "summary.txt") << summary_table(result.reports);
  return result;
}

}  // namespace mcflab
