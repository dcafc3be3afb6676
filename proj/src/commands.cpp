#include "mforge/commands.hpp"

#include "mforge/output.hpp"
#include "mforge/parallel.hpp"
#include "mforge/shape_derivative.hpp"
#include "mforge/validation.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef MFORGE_VERSION
#define MFORGE_VERSION "unknown"
#endif

namespace mforge {

namespace {

using Json = nlohmann::ordered_json;

// Projected constraint residual relative to the size of the boundary data.
constexpr double kResidualTolerance = 1e-2;

std::string num(double v) { return CsvWriter::number(v); }

std::string join(const Eigen::VectorXd &v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

// Collects stage timings, artifacts and results, and turns module errors
// into StageError.
class Run {
public:
  Run(const Scenario &scenario, Command command, const RunOptions &options)
      : scenario_(scenario), command_(command), options_(options) {
    std::filesystem::create_directories(options.out_dir);
  }

  template <class F> auto stage(const std::string &name, F &&fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish();
      } else {
        auto r = fn();
        finish();
        return r;
      }
    } catch (const StageError &) {
      throw;
    } catch (const std::exception &e) {
      finish();
      throw StageError(name, e.what());
    }
  }

  std::ofstream open(const std::string &file) {
    const auto path = options_.out_dir / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageError("output", "cannot write " + path.string());
    result.outputs.push_back(path);
    return out;
  }

  void write_manifest(const std::string &status, const std::string &error = {}) {
    Json m;
    m["tool"] = "membrane-forge";
    m["command"] = to_string(command_);
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["scenario"] = options_.scenario_path;
    m["inputs_sha256"] = sha256_hex(serialize_scenario(scenario_) + "command=" + to_string(command_));
    if (!options_.scenario_text.empty()) m["scenario_file_sha256"] = sha256_hex(options_.scenario_text);
    m["jobs"] = options_.jobs;
    m["versions"] = {
        {"membrane_forge", MFORGE_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                             std::to_string(TOML_LIB_PATCH)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"linear_solver", linear_solver_backend()},
        {"compiler", __VERSION__}};
    Json t = Json::object();
    for (const auto &[k, v] : timings_) t[k] = v;
    m["timings_s"] = t;
    m["results"] = results;
    Json outs = Json::array();
    for (const auto &p : result.outputs) outs.push_back(p.filename().string());
    m["outputs"] = outs;
    const auto path = options_.out_dir / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << m.dump(2) << "\n";
  }

  RunResult result;
  Json results = Json::object();

private:
  const Scenario &scenario_;
  Command command_;
  const RunOptions &options_;
  std::vector<std::pair<std::string, double>> timings_;
};

void cmd_solve(Run &run, const ProblemSpec &spec, const Configuration &config) {
  const auto sol = run.stage("solve", [&] { return minimize_membrane(spec, config); });
  run.stage("output", [&] {
    auto vtk = run.open("field.vtk");
    write_vtk(vtk, spec, sol, "membrane-forge u energy=" + num(sol.energy));
    auto e = run.open("energy.csv");
    CsvWriter ec(e);
    ec.row({"energy", "particles", "dofs", "solver_iterations"});
    ec.row({num(sol.energy), std::to_string(config.size()), std::to_string(sol.field.space.total_dofs()),
            std::to_string(sol.solver_iterations)});
    auto p = run.open("particles.csv");
    CsvWriter pc(p);
    pc.row({"particle", "x1", "x2", "alpha3", "gamma1", "gamma2", "gamma3", "residual_projected",
            "residual_value", "residual_normal"});
    for (std::size_t i = 0; i < config.size(); ++i) {
      const auto &pose = config.poses[i];
      const auto &r = sol.residuals[i];
      const auto row = static_cast<Eigen::Index>(i);
      pc.row({std::to_string(i), num(pose.x1), num(pose.x2), num(pose.alpha3), num(sol.gamma(row, 0)),
              num(sol.gamma(row, 1)), num(sol.gamma(row, 2)), num(r.projected), num(r.value),
              num(r.normal)});
    }
  });
  run.results["energy"] = sol.energy;
  run.result.summary = "energy " + num(sol.energy);
}

void write_derivative_rows(CsvWriter &csv, const std::vector<DerivativeRow> &rows) {
  csv.row({"direction", "q", "formula", "fd", "abs_error", "tolerance", "pass"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto &r = rows[k];
    csv.row({std::to_string(k), join(r.direction), num(r.formula), num(r.fd), num(std::abs(r.formula - r.fd)),
             num(r.tolerance), r.pass ? "1" : "0"});
  }
}

void cmd_derivative(Run &run, const Scenario &sc, const ProblemSpec &spec, const Configuration &config,
                    int jobs) {
  const auto sol = run.stage("solve", [&] { return minimize_membrane(spec, config); });
  const auto rows = run.stage("derivative", [&] {
    return compare_derivatives(spec, sol, sc.derivative_directions(), sc.derivative.fd_step, sc.fractions,
                               jobs);
  });
  run.stage("output", [&] {
    auto out = run.open("derivative.csv");
    CsvWriter csv(out);
    write_derivative_rows(csv, rows);
  });
  int pass = 0;
  for (const auto &r : rows) pass += r.pass;
  run.results["energy"] = sol.energy;
  run.results["directions"] = rows.size();
  run.results["within_tolerance"] = pass;
  run.result.summary = std::to_string(pass) + "/" + std::to_string(rows.size()) + " directions within tolerance";
}

void cmd_scan(Run &run, const Scenario &sc, const ProblemSpec &spec, const Configuration &config, int jobs) {
  if (!sc.scan) throw StageError("setup", "scenario has no [scan] block");
  const auto rows = run.stage("scan", [&] { return run_scan(spec, config, *sc.scan, sc.fractions, jobs); });
  run.stage("output", [&] {
    auto out = run.open("scan.csv");
    CsvWriter csv(out);
    csv.row({"t", "energy", "formula", "fd"});
    for (const auto &r : rows) csv.row({num(r.t), num(r.energy), num(r.formula), num(r.fd)});
  });
  double lo = INFINITY, hi = -INFINITY, err = 0.0;
  for (const auto &r : rows) {
    lo = std::min(lo, r.fd);
    hi = std::max(hi, r.fd);
    err = std::max(err, std::abs(r.formula - r.fd));
  }
  run.results["samples"] = rows.size();
  run.results["max_abs_error"] = err;
  run.results["fd_range"] = hi - lo;
  run.result.summary = std::to_string(rows.size()) + " samples, max |formula - fd| " + num(err);
}

void cmd_flow(Run &run, const Scenario &sc, const ProblemSpec &spec, const Configuration &config, int jobs) {
  const auto traj = run.stage("flow", [&] { return gradient_flow(spec, config, sc.flow_options(jobs)); });
  run.stage("output", [&] {
    auto out = run.open("trajectory.csv");
    write_trajectory_csv(out, traj);
  });
  const auto &last = traj.states.back();
  run.results["termination"] = to_string(traj.reason);
  run.results["steps"] = last.k;
  run.results["rejections"] = traj.rejections;
  run.results["final_energy"] = last.energy;
  run.results["final_grad_norm"] = last.grad_norm;
  run.result.summary = to_string(traj.reason) + " after " + std::to_string(last.k) + " steps, energy " +
                       num(last.energy);
}

void cmd_validate(Run &run, const Scenario &sc, const ProblemSpec &spec, const Configuration &config,
                  int jobs) {
  const auto sol = run.stage("solve", [&] { return minimize_membrane(spec, config); });
  const auto rows = run.stage("derivative", [&] {
    return compare_derivatives(spec, sol, sc.derivative_directions(), sc.derivative.fd_step, sc.fractions,
                               jobs);
  });
  int failed = 0;
  run.stage("output", [&] {
    auto out = run.open("validate.csv");
    CsvWriter csv(out);
    csv.row({"check", "item", "value", "tolerance", "pass"});
    auto check = [&](const std::string &name, const std::string &item, double value, double tol) {
      const bool ok = std::isfinite(value) && value <= tol;
      failed += !ok;
      csv.row({name, item, num(value), num(tol), ok ? "1" : "0"});
    };
    check("energy_finite", "", std::isfinite(sol.energy) ? 0.0 : INFINITY, 0.0);
    const auto quads = particle_quadratures(spec);
    for (std::size_t i = 0; i < config.size(); ++i) {
      const auto data = boundary_data(spec.shapes[i], quads[i]);
      double norm2 = 0.0;
      for (std::size_t k = 0; k < quads[i].size(); ++k) {
        norm2 += quads[i].weights[k] * (data.g0[k] * data.g0[k] + data.g1[k] * data.g1[k]);
      }
      // unit data on the curve sets the floor
      const double scale = std::sqrt(std::max(norm2, quads[i].length()));
      check("constraint_projected_rel", std::to_string(i), sol.residuals[i].projected / scale,
            kResidualTolerance);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      check("derivative_vs_fd", join(rows[k].direction), std::abs(rows[k].formula - rows[k].fd),
            rows[k].tolerance);
    }
  });
  run.results["energy"] = sol.energy;
  run.results["failed_checks"] = failed;
  run.result.exit_code = failed ? 2 : 0;
  run.result.summary = failed ? std::to_string(failed) + " checks failed" : "all checks passed";
}

} // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "solve") return Command::Solve;
  if (name == "derivative") return Command::Derivative;
  if (name == "scan") return Command::Scan;
  if (name == "flow") return Command::Flow;
  if (name == "validate") return Command::Validate;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
  case Command::Solve:
    return "solve";
  case Command::Derivative:
    return "derivative";
  case Command::Scan:
    return "scan";
  case Command::Flow:
    return "flow";
  case Command::Validate:
    return "validate";
  }
  return "unknown";
}

std::vector<ScanRow> run_scan(const ProblemSpec &spec, const Configuration &p0, const ScanBlock &scan,
                              const CutoffFractions &fractions, int jobs) {
  if (scan.direction.size() != 3 * p0.size()) throw MismatchedLengths("scan direction length");
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(scan.direction.data(),
                                                              static_cast<Eigen::Index>(scan.direction.size()));
  std::vector<ScanRow> rows(static_cast<std::size_t>(scan.samples));
  parallel_for(scan.samples, jobs, [&](int k) {
    ScanRow &r = rows[static_cast<std::size_t>(k)];
    r.t = scan.parameter(k);
    const Configuration c = p0.shifted(q, r.t - scan.reference);
    const auto sol = minimize_membrane(spec, c);
    r.energy = sol.energy;
    r.formula = gradient(spec, sol, fractions).gradient.dot(q);
    r.fd = fd_derivative(spec, c, q, scan.fd_step);
  });
  return rows;
}

std::vector<DerivativeRow> compare_derivatives(const ProblemSpec &spec, const MembraneSolution &solution,
                                               const std::vector<Eigen::VectorXd> &directions,
                                               std::optional<double> fd_step, const CutoffFractions &fractions,
                                               int jobs) {
  const Eigen::VectorXd g = gradient(spec, solution, fractions, jobs).gradient;
  std::vector<DerivativeRow> rows(directions.size());
  parallel_for(static_cast<int>(directions.size()), jobs, [&](int k) {
    DerivativeRow &r = rows[static_cast<std::size_t>(k)];
    r.direction = directions[static_cast<std::size_t>(k)];
    if (r.direction.size() != g.size()) throw MismatchedLengths("derivative direction length");
    r.formula = g.dot(r.direction);
    r.fd = fd_derivative(spec, solution.config, r.direction, fd_step);
    r.tolerance = std::max(0.05 * std::abs(r.fd), 1e-3 * std::abs(solution.energy));
    r.pass = std::abs(r.formula - r.fd) <= r.tolerance;
  });
  return rows;
}

RunResult run_command(const Scenario &scenario, Command command, const RunOptions &options) {
  Run run(scenario, command, options);
  try {
    const ProblemSpec spec = run.stage("setup", [&] {
      scenario.validate();
      return scenario.problem();
    });
    const Configuration config = scenario.configuration();
    const int jobs = std::max(1, options.jobs);
    switch (command) {
    case Command::Solve:
      cmd_solve(run, spec, config);
      break;
    case Command::Derivative:
      cmd_derivative(run, scenario, spec, config, jobs);
      break;
    case Command::Scan:
      cmd_scan(run, scenario, spec, config, jobs);
      break;
    case Command::Flow:
      cmd_flow(run, scenario, spec, config, jobs);
      break;
    case Command::Validate:
      cmd_validate(run, scenario, spec, config, jobs);
      break;
    }
  } catch (const StageError &e) {
    run.write_manifest("failed", e.what());
    throw;
  }
  run.write_manifest(run.result.exit_code == 0 ? "ok" : "checks_failed");
  run.result.outputs.push_back(options.out_dir / "manifest.json");
  return run.result;
}

} // namespace mforge
