import math
import os
import pathlib

import numpy as np
import pytest

import membrane_forge as mf

SCENARIOS = pathlib.Path(os.environ.get("MFORGE_SOURCE_DIR", pathlib.Path(__file__).parents[2])) / "scenarios"


def two_circles(n):
    spec = mf.ProblemSpec()
    spec.box = mf.Box(-6, 6, -6, 6)
    spec.nx = spec.ny = n
    c = mf.ParticleShape.circle(1.0, g0="0", g1="1")
    spec.shapes = [c, c]
    return spec


def test_version():
    assert mf.__version__.count(".") == 2


def test_empty_configuration_has_zero_energy():
    spec = mf.ProblemSpec()
    spec.nx = spec.ny = 8
    assert mf.interaction_energy(spec, []) == 0.0


def test_disk_energy_near_closed_form():
    spec = mf.ProblemSpec()
    spec.box = mf.Box(-10, 10, -10, 10, disk_radius=10.0)
    spec.nx = spec.ny = 64
    spec.shapes = [mf.ParticleShape.circle(1.0, g1="1")]
    sol = mf.minimize_membrane(spec, [(0.0, 0.0, 0.0)])
    assert sol.energy == pytest.approx(2 * math.pi / 99, rel=0.01)
    assert sol.gamma.shape == (1, 3)
    u, grad, lap = sol.evaluate(5.0, 0.0)
    assert grad.shape == (2,)


def test_gradient_is_antisymmetric_and_matches_fd():
    spec = two_circles(48)
    poses = [(-1.75, 0.0, 0.0), (1.75, 0.0, 0.0)]
    sol = mf.minimize_membrane(spec, poses)
    g = mf.gradient(spec, sol, jobs=2)
    assert g.shape == (6,)
    assert g[0] > 0 > g[3]
    assert abs(g[0] + g[3]) <= 1e-4 * np.linalg.norm(g)
    e = np.zeros(6)
    e[3] = 1.0
    fd = mf.fd_derivative(spec, poses, e, delta=0.01)
    assert g[3] == pytest.approx(fd, rel=0.1)


def test_errors_map_to_python_exceptions():
    spec = two_circles(16)
    with pytest.raises(mf.Infeasible):
        mf.minimize_membrane(spec, [(-0.9, 0.0, 0.0), (0.9, 0.0, 0.0)])
    with pytest.raises(mf.MForgeError):
        mf.parse_scenario("[[particles]]\nshape = 'hexagon'\n")
    with pytest.raises(mf.ParseError):
        mf.parse_scenario("[grid\n")


def test_aprime_and_cutoff():
    dv = np.array([[0.3, 0.0], [0.0, -1.1]])
    assert np.allclose(mf.aprime(dv), np.diag([-1.4, 1.4]))
    chi, d1, d2 = mf.cutoff(2.0, 1.5, 2.5)
    assert chi == pytest.approx(0.5)


def test_flow_runs_and_decreases_energy():
    spec = two_circles(24)
    opt = mf.FlowOptions()
    opt.max_steps = 2
    traj = mf.gradient_flow(spec, [(-1.6, 0.0, 0.0), (1.6, 0.0, 0.0)], opt)
    assert traj.reason == "budget"
    energies = [s.energy for s in traj.states]
    assert len(energies) == 3
    assert all(b <= a * (1 + 1e-10) for a, b in zip(energies, energies[1:]))


def test_scenarios_round_trip_and_run(tmp_path):
    for name in ("two_circles", "peanuts", "ellipses_flow", "single_circle_disk"):
        s = mf.load_scenario(SCENARIOS / f"{name}.toml")
        assert mf.parse_scenario(mf.serialize_scenario(s)) == s
    s = mf.load_scenario(SCENARIOS / "single_circle_disk.toml")
    s.nx = s.ny = 16
    code, summary = mf.run(s, "solve", tmp_path)
    assert code == 0
    assert (tmp_path / "field.vtk").exists()
    assert (tmp_path / "manifest.json").exists()
    assert summary.startswith("energy")
