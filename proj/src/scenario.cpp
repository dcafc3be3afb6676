#include "mforge/scenario.hpp"

#include "mforge/errors.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mforge {

namespace {

// Typed access to one TOML table; remembers which keys were read so the
// leftovers can be reported as unknown.
class TableReader {
public:
  TableReader(const toml::table &table, std::string path) : table_(table), path_(std::move(path)) {}

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const toml::node *get(std::string_view key) {
    seen_.insert(std::string(key));
    return table_.get(key);
  }

  std::optional<double> number(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    return as_number(*n, key_path(key));
  }

  std::optional<int> integer(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    return as_integer(*n, key_path(key));
  }

  std::optional<bool> boolean(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) throw ValidationError(key_path(key) + ": expected a boolean");
    return n->value<bool>();
  }

  std::optional<std::string> string(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) throw ValidationError(key_path(key) + ": expected a string");
    return n->value<std::string>();
  }

  std::optional<std::vector<double>> numbers(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    return as_numbers(*n, key_path(key));
  }

  const toml::array *array(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return nullptr;
    if (!n->is_array()) throw ValidationError(key_path(key) + ": expected an array");
    return n->as_array();
  }

  std::optional<TableReader> table(std::string_view key) {
    const toml::node *n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_table()) throw ValidationError(key_path(key) + ": expected a table");
    return TableReader(*n->as_table(), key_path(key));
  }

  void reject_unknown() const {
    for (const auto &[k, v] : table_) {
      if (!seen_.count(std::string(k.str()))) throw ValidationError(key_path(k.str()) + ": unknown key");
    }
  }

  static double as_number(const toml::node &n, const std::string &where) {
    if (n.is_floating_point()) return *n.value<double>();
    if (n.is_integer()) return static_cast<double>(*n.value<int64_t>());
    throw ValidationError(where + ": expected a number");
  }

  static int as_integer(const toml::node &n, const std::string &where) {
    if (!n.is_integer()) throw ValidationError(where + ": expected an integer");
    const int64_t v = *n.value<int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) throw ValidationError(where + ": integer out of range");
    return static_cast<int>(v);
  }

  static std::vector<double> as_numbers(const toml::node &n, const std::string &where) {
    if (!n.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    const auto &arr = *n.as_array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(as_number(arr[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

private:
  const toml::table &table_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> expect_size(std::vector<double> v, std::size_t n, const std::string &where) {
  if (v.size() != n) {
    throw ValidationError(where + ": expected " + std::to_string(n) + " numbers, got " +
                          std::to_string(v.size()));
  }
  return v;
}

Expression expression(TableReader &r, std::string_view key) {
  const auto s = r.string(key);
  if (!s) return Expression("0");
  try {
    return Expression(*s);
  } catch (const ValidationError &e) {
    throw ValidationError(r.key_path(key) + ": " + e.what());
  }
}

ParticleEntry read_particle(TableReader &r) {
  ParticleEntry p;
  const auto kind = r.string("shape");
  if (!kind) throw ValidationError(r.key_path("shape") + ": missing");
  const Expression g0 = expression(r, "g0");
  const Expression g1 = expression(r, "g1");
  try {
    if (*kind == "circle") {
      p.shape = ParticleShape::circle(r.number("radius").value_or(1.0), g0, g1);
    } else if (*kind == "ellipse") {
      const auto a = r.number("a"), b = r.number("b");
      if (!a || !b) throw ValidationError(r.key_path("shape") + ": ellipse needs a and b");
      p.shape = ParticleShape::ellipse(*a, *b, g0, g1);
    } else if (*kind == "implicit") {
      const toml::array *terms = r.array("terms");
      if (!terms || terms->empty()) throw ValidationError(r.key_path("terms") + ": implicit shape needs terms");
      std::vector<Monomial> mono;
      for (std::size_t i = 0; i < terms->size(); ++i) {
        const std::string where = r.key_path("terms") + "[" + std::to_string(i) + "]";
        const auto *t = (*terms)[i].as_array();
        if (!t || t->size() != 3) throw ValidationError(where + ": expected [coeff, px, py]");
        mono.push_back({TableReader::as_number((*t)[0], where),
                        TableReader::as_integer((*t)[1], where), TableReader::as_integer((*t)[2], where)});
      }
      p.shape = ParticleShape::implicit(mono, g0, g1, r.number("search_radius").value_or(10.0));
    } else {
      throw ValidationError(r.key_path("shape") + ": unknown shape kind '" + *kind + "'");
    }
  } catch (const Error &e) {
    const std::string what = e.what();
    if (what.find(r.key_path("")) != std::string::npos) throw;
    throw ValidationError(r.key_path("shape") + ": " + what);
  }
  if (auto pose = r.numbers("pose")) {
    const auto v = expect_size(*pose, 3, r.key_path("pose"));
    p.pose = RigidPose(v[0], v[1], v[2]);
  }
  p.freeze_tilt = r.boolean("freeze_tilt").value_or(false);
  r.reject_unknown();
  return p;
}

toml::array to_array(const std::vector<double> &v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}

} // namespace

double ScanBlock::parameter(int k) const {
  if (samples == 1) return t0;
  return t0 + (t1 - t0) * k / (samples - 1);
}

ProblemSpec Scenario::problem() const {
  ProblemSpec s;
  s.box = box;
  s.kappa = kappa;
  s.sigma = sigma;
  s.nx = nx;
  s.ny = ny;
  s.beta0 = beta0;
  s.beta1 = beta1;
  s.interior_weight = interior_weight;
  s.curve_samples = curve_samples;
  s.subdiv = subdiv;
  s.solver = solver;
  s.cg_tolerance = cg_tolerance;
  s.cg_max_iterations = cg_max_iterations;
  bool any_frozen = false;
  for (const auto &p : particles) {
    s.shapes.push_back(p.shape);
    s.freeze_tilt.push_back(p.freeze_tilt);
    any_frozen = any_frozen || p.freeze_tilt;
  }
  if (!any_frozen) s.freeze_tilt.clear();
  return s;
}

Configuration Scenario::configuration() const {
  Configuration c;
  for (const auto &p : particles) c.poses.push_back(p.pose);
  return c;
}

FlowOptions Scenario::flow_options(int jobs) const {
  FlowOptions o;
  o.tau = flow.tau;
  o.max_steps = flow.steps;
  o.grad_tol = flow.tol;
  o.max_halvings = flow.max_halvings;
  o.fractions = fractions;
  o.jobs = jobs;
  return o;
}

std::vector<Eigen::VectorXd> Scenario::derivative_directions() const {
  const int n = static_cast<int>(3 * particles.size());
  std::vector<Eigen::VectorXd> out;
  if (derivative.directions.empty()) {
    for (int k = 0; k < n; ++k) out.push_back(Eigen::VectorXd::Unit(n, k));
  } else {
    for (const auto &d : derivative.directions) out.push_back(Eigen::Map<const Eigen::VectorXd>(d.data(), n));
  }
  return out;
}

void Scenario::validate() const {
  if (!(box.xmax > box.xmin && box.ymax > box.ymin)) throw ValidationError("domain.box: empty box");
  if (box.disk_radius) {
    const double r = *box.disk_radius;
    if (!(r > 0.0) || 2 * r > std::min(box.width(), box.height()) + 1e-12) {
      throw ValidationError("domain.disk_radius: must be positive and fit in the box");
    }
  }
  try {
    problem().validate();
  } catch (const Error &e) {
    throw ValidationError(std::string("grid/material/penalty: ") + e.what());
  }
  if (!(fractions.f1 > 0.0 && fractions.f1 < fractions.f2 && fractions.f2 < 1.0)) {
    throw ValidationError("cutoff: need 0 < f1 < f2 < 1");
  }
  if (!(cg_tolerance > 0.0) || cg_max_iterations < 1) throw ValidationError("solver: bad CG settings");
  const std::size_t n = 3 * particles.size();
  if (scan) {
    if (scan->direction.size() != n) {
      throw ValidationError("scan.direction: expected " + std::to_string(n) + " entries");
    }
    if (scan->samples < 1) throw ValidationError("scan.samples: must be positive");
    if (scan->fd_step && !(*scan->fd_step > 0.0)) throw ValidationError("scan.fd_step: must be positive");
  }
  for (std::size_t i = 0; i < derivative.directions.size(); ++i) {
    if (derivative.directions[i].size() != n) {
      throw ValidationError("derivative.directions[" + std::to_string(i) + "]: expected " +
                            std::to_string(n) + " entries");
    }
  }
  if (derivative.fd_step && !(*derivative.fd_step > 0.0)) {
    throw ValidationError("derivative.fd_step: must be positive");
  }
  try {
    flow_options().validate();
  } catch (const Error &e) {
    throw ValidationError(std::string("flow: ") + e.what());
  }
}

Scenario parse_scenario(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error &e) {
    throw ParseError(std::string(e.description()), static_cast<int>(e.source().begin.line),
                     static_cast<int>(e.source().begin.column));
  }
  Scenario s;
  TableReader r(root, "");
  s.name = r.string("name").value_or("");

  if (auto d = r.table("domain")) {
    if (auto b = d->numbers("box")) {
      const auto v = expect_size(*b, 4, "domain.box");
      s.box = Box(v[0], v[1], v[2], v[3]);
    }
    s.box.disk_radius = d->number("disk_radius");
    d->reject_unknown();
  }
  if (auto g = r.table("grid")) {
    s.nx = g->integer("nx").value_or(s.nx);
    s.ny = g->integer("ny").value_or(s.ny);
    s.subdiv = g->integer("subdiv").value_or(s.subdiv);
    s.curve_samples = g->integer("curve_samples").value_or(s.curve_samples);
    g->reject_unknown();
  }
  if (auto m = r.table("material")) {
    s.kappa = m->number("kappa").value_or(s.kappa);
    s.sigma = m->number("sigma").value_or(s.sigma);
    m->reject_unknown();
  }
  if (auto p = r.table("penalty")) {
    s.beta0 = p->number("beta0").value_or(s.beta0);
    s.beta1 = p->number("beta1").value_or(s.beta1);
    s.interior_weight = p->number("interior_weight").value_or(s.interior_weight);
    p->reject_unknown();
  }
  if (auto v = r.table("solver")) {
    if (auto kind = v->string("kind")) {
      if (*kind == "direct") {
        s.solver = SolverKind::Direct;
      } else if (*kind == "cg") {
        s.solver = SolverKind::ConjugateGradient;
      } else {
        throw ValidationError("solver.kind: unknown solver '" + *kind + "'");
      }
    }
    s.cg_tolerance = v->number("cg_tolerance").value_or(s.cg_tolerance);
    s.cg_max_iterations = v->integer("cg_max_iterations").value_or(s.cg_max_iterations);
    v->reject_unknown();
  }
  if (auto c = r.table("cutoff")) {
    s.fractions.f1 = c->number("f1").value_or(s.fractions.f1);
    s.fractions.f2 = c->number("f2").value_or(s.fractions.f2);
    c->reject_unknown();
  }
  if (const toml::array *parts = r.array("particles")) {
    for (std::size_t i = 0; i < parts->size(); ++i) {
      const std::string where = "particles[" + std::to_string(i) + "]";
      const auto *t = (*parts)[i].as_table();
      if (!t) throw ValidationError(where + ": expected a table");
      TableReader pr(*t, where);
      s.particles.push_back(read_particle(pr));
    }
  }
  if (auto sc = r.table("scan")) {
    ScanBlock b;
    b.direction = sc->numbers("direction").value_or(std::vector<double>{});
    const auto range = sc->numbers("range");
    if (!range) throw ValidationError("scan.range: missing");
    const auto v = expect_size(*range, 2, "scan.range");
    b.t0 = v[0];
    b.t1 = v[1];
    b.samples = sc->integer("samples").value_or(b.samples);
    b.reference = sc->number("reference").value_or(0.0);
    b.fd_step = sc->number("fd_step");
    sc->reject_unknown();
    s.scan = b;
  }
  if (auto dv = r.table("derivative")) {
    if (const toml::array *dirs = dv->array("directions")) {
      for (std::size_t i = 0; i < dirs->size(); ++i) {
        s.derivative.directions.push_back(
            TableReader::as_numbers((*dirs)[i], "derivative.directions[" + std::to_string(i) + "]"));
      }
    }
    s.derivative.fd_step = dv->number("fd_step");
    dv->reject_unknown();
  }
  if (auto f = r.table("flow")) {
    s.flow.tau = f->number("tau").value_or(s.flow.tau);
    s.flow.steps = f->integer("steps").value_or(s.flow.steps);
    s.flow.tol = f->number("tol").value_or(s.flow.tol);
    s.flow.max_halvings = f->integer("max_halvings").value_or(s.flow.max_halvings);
    f->reject_unknown();
  }
  r.reject_unknown();
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario &s) {
  toml::table root;
  root.insert("name", s.name);

  toml::table domain;
  domain.insert("box", to_array({s.box.xmin, s.box.xmax, s.box.ymin, s.box.ymax}));
  if (s.box.disk_radius) domain.insert("disk_radius", *s.box.disk_radius);
  root.insert("domain", domain);

  root.insert("grid", toml::table{{"nx", s.nx}, {"ny", s.ny}, {"subdiv", s.subdiv},
                                  {"curve_samples", s.curve_samples}});
  root.insert("material", toml::table{{"kappa", s.kappa}, {"sigma", s.sigma}});
  root.insert("penalty", toml::table{{"beta0", s.beta0}, {"beta1", s.beta1},
                                     {"interior_weight", s.interior_weight}});
  root.insert("solver", toml::table{{"kind", s.solver == SolverKind::Direct ? "direct" : "cg"},
                                    {"cg_tolerance", s.cg_tolerance},
                                    {"cg_max_iterations", s.cg_max_iterations}});
  root.insert("cutoff", toml::table{{"f1", s.fractions.f1}, {"f2", s.fractions.f2}});

  toml::array parts;
  for (const auto &p : s.particles) {
    toml::table t;
    t.insert("shape", shape_kind_name(p.shape.kind()));
    switch (p.shape.kind()) {
    case ShapeKind::Circle:
      t.insert("radius", p.shape.radius());
      break;
    case ShapeKind::Ellipse:
      t.insert("a", p.shape.semi_axis_a());
      t.insert("b", p.shape.semi_axis_b());
      break;
    case ShapeKind::Implicit: {
      toml::array terms;
      for (const auto &m : p.shape.terms()) terms.push_back(toml::array{m.coeff, m.px, m.py});
      t.insert("terms", terms);
      t.insert("search_radius", p.shape.search_radius());
      break;
    }
    }
    t.insert("g0", p.shape.g0().source());
    t.insert("g1", p.shape.g1().source());
    t.insert("pose", to_array({p.pose.x1, p.pose.x2, p.pose.alpha3}));
    t.insert("freeze_tilt", p.freeze_tilt);
    parts.push_back(t);
  }
  root.insert("particles", parts);

  if (s.scan) {
    toml::table t{{"direction", to_array(s.scan->direction)},
                  {"range", to_array({s.scan->t0, s.scan->t1})},
                  {"samples", s.scan->samples},
                  {"reference", s.scan->reference}};
    if (s.scan->fd_step) t.insert("fd_step", *s.scan->fd_step);
    root.insert("scan", t);
  }
  toml::table d;
  if (!s.derivative.directions.empty()) {
    toml::array dirs;
    for (const auto &v : s.derivative.directions) dirs.push_back(to_array(v));
    d.insert("directions", dirs);
  }
  if (s.derivative.fd_step) d.insert("fd_step", *s.derivative.fd_step);
  root.insert("derivative", d);
  root.insert("flow", toml::table{{"tau", s.flow.tau}, {"steps", s.flow.steps}, {"tol", s.flow.tol},
                                  {"max_halvings", s.flow.max_halvings}});

  std::ostringstream out;
  out << toml::toml_formatter(root) << "\n";
  return out.str();
}

} // namespace mforge
