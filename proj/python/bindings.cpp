#include "mforge/commands.hpp"
#include "mforge/flow.hpp"
#include "mforge/scenario.hpp"
#include "mforge/shape_derivative.hpp"
#include "mforge/validation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mforge;

namespace {

Configuration to_config(const std::vector<std::array<double, 3>> &poses) {
  Configuration c;
  for (const auto &p : poses) c.poses.emplace_back(p[0], p[1], p[2]);
  return c;
}

std::vector<std::array<double, 3>> from_config(const Configuration &c) {
  std::vector<std::array<double, 3>> out;
  for (const auto &p : c.poses) out.push_back({p.x1, p.x2, p.alpha3});
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Membrane-mediated particle interactions";
  m.attr("__version__") = MFORGE_VERSION_STRING;

  auto base = py::register_exception<Error>(m, "MForgeError", PyExc_RuntimeError);
  py::register_exception<MismatchedLengths>(m, "MismatchedLengths", base.ptr());
  py::register_exception<RootFindFailure>(m, "RootFindFailure", base.ptr());
  py::register_exception<OutOfDomain>(m, "OutOfDomain", base.ptr());
  py::register_exception<SingularGram>(m, "SingularGram", base.ptr());
  py::register_exception<Infeasible>(m, "Infeasible", base.ptr());
  py::register_exception<SolverDivergence>(m, "SolverDivergence", base.ptr());
  py::register_exception<DegenerateJacobian>(m, "DegenerateJacobian", base.ptr());
  py::register_exception<SingularMatrix>(m, "SingularMatrix", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  py::class_<Box>(m, "Box")
      .def(py::init<double, double, double, double, std::optional<double>>(), py::arg("xmin"), py::arg("xmax"),
           py::arg("ymin"), py::arg("ymax"), py::arg("disk_radius") = std::nullopt)
      .def_readwrite("xmin", &Box::xmin)
      .def_readwrite("xmax", &Box::xmax)
      .def_readwrite("ymin", &Box::ymin)
      .def_readwrite("ymax", &Box::ymax)
      .def_readwrite("disk_radius", &Box::disk_radius);

  py::class_<ParticleShape>(m, "ParticleShape")
      .def_static(
          "circle",
          [](double r, const std::string &g0, const std::string &g1) {
            return ParticleShape::circle(r, Expression(g0), Expression(g1));
          },
          py::arg("radius"), py::arg("g0") = "0", py::arg("g1") = "0")
      .def_static(
          "ellipse",
          [](double a, double b, const std::string &g0, const std::string &g1) {
            return ParticleShape::ellipse(a, b, Expression(g0), Expression(g1));
          },
          py::arg("a"), py::arg("b"), py::arg("g0") = "0", py::arg("g1") = "0")
      .def_static(
          "implicit",
          [](const std::vector<std::tuple<double, int, int>> &terms, const std::string &g0,
             const std::string &g1) {
            std::vector<Monomial> mono;
            for (const auto &[c, px, py_] : terms) mono.push_back({c, px, py_});
            return ParticleShape::implicit(mono, Expression(g0), Expression(g1));
          },
          py::arg("terms"), py::arg("g0") = "0", py::arg("g1") = "0")
      .def_property_readonly("kind", [](const ParticleShape &s) { return shape_kind_name(s.kind()); })
      .def("radius_at", &ParticleShape::radius_at)
      .def("length", [](const ParticleShape &s, int n) { return discretize_shape(s, n).length(); },
           py::arg("samples") = 1024);

  py::enum_<SolverKind>(m, "SolverKind")
      .value("Direct", SolverKind::Direct)
      .value("ConjugateGradient", SolverKind::ConjugateGradient);

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def(py::init<>())
      .def_readwrite("box", &ProblemSpec::box)
      .def_readwrite("shapes", &ProblemSpec::shapes)
      .def_readwrite("kappa", &ProblemSpec::kappa)
      .def_readwrite("sigma", &ProblemSpec::sigma)
      .def_readwrite("nx", &ProblemSpec::nx)
      .def_readwrite("ny", &ProblemSpec::ny)
      .def_readwrite("beta0", &ProblemSpec::beta0)
      .def_readwrite("beta1", &ProblemSpec::beta1)
      .def_readwrite("interior_weight", &ProblemSpec::interior_weight)
      .def_readwrite("curve_samples", &ProblemSpec::curve_samples)
      .def_readwrite("subdiv", &ProblemSpec::subdiv)
      .def_readwrite("freeze_tilt", &ProblemSpec::freeze_tilt)
      .def_readwrite("solver", &ProblemSpec::solver)
      .def("validate", &ProblemSpec::validate);

  py::class_<ConstraintResidual>(m, "ConstraintResidual")
      .def_readonly("projected", &ConstraintResidual::projected)
      .def_readonly("value", &ConstraintResidual::value)
      .def_readonly("normal", &ConstraintResidual::normal);

  py::class_<MembraneSolution>(m, "MembraneSolution")
      .def_readonly("energy", &MembraneSolution::energy)
      .def_readonly("gamma", &MembraneSolution::gamma)
      .def_readonly("residuals", &MembraneSolution::residuals)
      .def_property_readonly("poses", [](const MembraneSolution &s) { return from_config(s.config); })
      .def(
          "evaluate",
          [](const MembraneSolution &s, double x, double y) {
            const FieldSample f = evaluate_field(s.field, Vec2(x, y));
            return py::make_tuple(f.value, Eigen::Vector2d(f.grad), f.laplacian());
          },
          "(u, grad u, Lap u) at a point of the box");

  m.def(
      "minimize_membrane",
      [](const ProblemSpec &spec, const std::vector<std::array<double, 3>> &poses) {
        py::gil_scoped_release release;
        return minimize_membrane(spec, to_config(poses));
      },
      py::arg("spec"), py::arg("poses"));
  m.def(
      "interaction_energy",
      [](const ProblemSpec &spec, const std::vector<std::array<double, 3>> &poses) {
        py::gil_scoped_release release;
        return interaction_energy(spec, to_config(poses));
      },
      py::arg("spec"), py::arg("poses"));
  m.def(
      "gradient",
      [](const ProblemSpec &spec, const MembraneSolution &sol, double f1, double f2, int jobs) {
        py::gil_scoped_release release;
        return gradient(spec, sol, {f1, f2}, jobs).gradient;
      },
      py::arg("spec"), py::arg("solution"), py::arg("f1") = 0.25, py::arg("f2") = 0.75, py::arg("jobs") = 1);
  m.def(
      "fd_derivative",
      [](const ProblemSpec &spec, const std::vector<std::array<double, 3>> &poses, const Eigen::VectorXd &e,
         std::optional<double> delta, int jobs) {
        py::gil_scoped_release release;
        return fd_derivative(spec, to_config(poses), e, delta, jobs);
      },
      py::arg("spec"), py::arg("poses"), py::arg("direction"), py::arg("delta") = std::nullopt,
      py::arg("jobs") = 1);
  m.def("aprime", [](const Eigen::Matrix2d &dv) { return Eigen::Matrix2d(aprime(dv, dv.trace())); });
  m.def("cutoff", [](double r, double r1, double r2) {
    const auto c = cutoff(r, r1, r2);
    return py::make_tuple(c.chi, c.d1, c.d2);
  });

  py::class_<FlowOptions>(m, "FlowOptions")
      .def(py::init<>())
      .def_readwrite("tau", &FlowOptions::tau)
      .def_readwrite("max_steps", &FlowOptions::max_steps)
      .def_readwrite("grad_tol", &FlowOptions::grad_tol)
      .def_readwrite("max_halvings", &FlowOptions::max_halvings)
      .def_readwrite("jobs", &FlowOptions::jobs);

  py::class_<FlowState>(m, "FlowState")
      .def_readonly("k", &FlowState::k)
      .def_property_readonly("poses", [](const FlowState &s) { return from_config(s.config); })
      .def_readonly("energy", &FlowState::energy)
      .def_readonly("grad_norm", &FlowState::grad_norm)
      .def_readonly("tau", &FlowState::tau);

  py::class_<FlowTrajectory>(m, "FlowTrajectory")
      .def_readonly("states", &FlowTrajectory::states)
      .def_readonly("rejections", &FlowTrajectory::rejections)
      .def_property_readonly("reason", [](const FlowTrajectory &t) { return to_string(t.reason); });

  m.def(
      "gradient_flow",
      [](const ProblemSpec &spec, const std::vector<std::array<double, 3>> &poses, const FlowOptions &o) {
        py::gil_scoped_release release;
        return gradient_flow(spec, to_config(poses), o);
      },
      py::arg("spec"), py::arg("poses"), py::arg("options") = FlowOptions{});

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("nx", &Scenario::nx)
      .def_readwrite("ny", &Scenario::ny)
      .def_readwrite("kappa", &Scenario::kappa)
      .def_readwrite("sigma", &Scenario::sigma)
      .def_property_readonly("poses", [](const Scenario &s) { return from_config(s.configuration()); })
      .def("problem", &Scenario::problem)
      .def("__eq__", [](const Scenario &a, const Scenario &b) { return a == b; });

  m.def("parse_scenario", [](const std::string &text) { return parse_scenario(text); });
  m.def("load_scenario", &load_scenario);
  m.def("serialize_scenario", &serialize_scenario);

  m.def(
      "run",
      [](const Scenario &s, const std::string &command, const std::filesystem::path &out, int jobs) {
        const auto c = parse_command(command);
        if (!c) throw ValidationError("unknown command '" + command + "'");
        RunOptions o;
        o.out_dir = out;
        o.jobs = jobs;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_command(s, *c, o);
        }
        return py::make_tuple(r.exit_code, r.summary);
      },
      py::arg("scenario"), py::arg("command"), py::arg("out"), py::arg("jobs") = 1,
      "Runs a command and writes its artifacts; returns (exit_code, summary).");
}
