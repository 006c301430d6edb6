import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from growthmech import evolution as ev
from growthmech.errors import ConfigurationError, ConstitutiveError, DefinitenessError, StepSizeError
from conftest import random_spd


@pytest.mark.parametrize("n", [2, 3])
def test_neo_hookean_derivative_and_rate(rng, n):
    psi = ev.FreeEnergy.neo_hookean(1.3)
    G = random_spd(rng, n)
    F = np.eye(n) + 0.3 * rng.normal(size=(n, n))
    g = np.eye(n)
    a = psi.derivative(G, F, g)
    b = psi.fd_derivative(G, F, g)
    assert np.abs(a - b).max() <= 1e-6 * np.abs(a).max()
    state = ev.EvolutionState(G, 0.7, beta=2.0)
    Gd = ev.metric_rate(state, psi, F, g)
    np.testing.assert_allclose(Gd, 1.3 * 0.7 / 2.0 * F.T @ g @ F, atol=1e-14)
    ep = ev.entropy_production(state, Gd, psi, F, g)
    assert ep.quadratic >= 0 and ep.discrepancy <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_entropy_production_nonnegative(seed):
    rng = np.random.default_rng(seed)
    G = random_spd(rng, 3)
    state = ev.EvolutionState(G, float(rng.uniform(0.1, 2)), beta=float(rng.uniform(0.5, 2)))
    Gd = rng.normal(size=(3, 3))
    Gd = Gd + Gd.T
    assert ev.entropy_production(state, Gd).quadratic >= 0


def test_neo_hookean_flow():
    psi = ev.FreeEnergy.neo_hookean(1.0)
    traj = ev.integrate(ev.EvolutionState(np.eye(3), 1.0), 1.0, 1e-3, psi, np.diag([1.1, 1.0, 0.9]))
    a = traj.arrays()
    assert len(a["t"]) == 1001 and traj.stopped is None
    assert np.all(a["entropy"] >= 0)
    assert np.abs(a["entropy"] - a["entropy_constraint"]).max() <= 1e-10
    # rho0 sqrt(det G) is conserved without sources
    m = a["rho0"] * np.sqrt(a["det_G"])
    np.testing.assert_allclose(m, 1.0, rtol=1e-10)
    # exact solution: G(t) = I + (mu rho0(t)/beta) integral ... monotone growth of every eigenvalue
    assert np.all(np.diff(a["det_G"]) > 0)


@pytest.mark.parametrize("source", [None, ev.MassSource.constant(0.3)])
def test_mass_balance(source):
    psi = ev.FreeEnergy.neo_hookean(1.3)
    diff, resid = ev.mass_balance_error(ev.EvolutionState(np.eye(3), 1.0), 1.0, 1e-3, psi,
                                        np.diag([1.1, 1.0, 0.9]), source=source)
    assert diff <= 1e-8 and resid <= 1e-8


def test_conformal_flow_keeps_density_with_matching_source():
    # G = e^{2W} I with W = t^2 / 2; S_m = n W' rho0 keeps rho0 fixed, so m grows like e^{nW}
    src = ev.MassSource(lambda X, t: 2 * t * np.ones(()))
    traj = ev.integrate(ev.EvolutionState(np.eye(2), 1.0), 1.0, 1e-3,
                        gdot=lambda G, t: 2 * t * G, source=src)
    a = traj.arrays()
    np.testing.assert_allclose(a["rho0"], 1.0, atol=1e-12)
    np.testing.assert_allclose(a["rho0"][-1] * np.sqrt(a["det_G"][-1]), np.e, rtol=1e-10)


def test_zero_density_allowed_and_static():
    psi = ev.FreeEnergy.neo_hookean(1.0)
    s = ev.step(ev.EvolutionState(np.eye(2), 0.0), psi, np.eye(2), dt=0.1)
    np.testing.assert_allclose(s.G, np.eye(2))


def test_conformal_guard_stops():
    traj = ev.integrate(ev.EvolutionState(np.eye(2), 1.0), 10.0, 1e-2,
                        gdot=lambda G, t: 2 * G, max_conformal=10.0)
    assert traj.stopped == "conformal-factor"
    assert traj.t[-1] < 10.0


def test_step_errors():
    psi = ev.FreeEnergy.neo_hookean(1.0)
    with pytest.raises(StepSizeError):
        ev.step(ev.EvolutionState(np.eye(2), 1.0), gdot=lambda G, t: -100 * np.eye(2), dt=1.0)
    with pytest.raises(StepSizeError):
        ev.step(ev.EvolutionState(np.eye(2), 1.0), source=ev.MassSource.constant(-100.0),
                gdot=lambda G, t: 0 * G, dt=1.0)
    with pytest.raises(ConfigurationError):
        ev.step(ev.EvolutionState(np.eye(2), 1.0), psi, np.eye(2), dt=0.0)
    with pytest.raises(ConfigurationError):
        ev.EvolutionState(np.eye(2), -1.0)
    with pytest.raises(DefinitenessError):
        ev.EvolutionState(np.array([[1.0, 0.0], [0.0, -1.0]]), 1.0)


def test_nonsymmetric_derivative_rejected():
    psi = ev.FreeEnergy(lambda G, F, g: G[..., 0, 1], dpsi_dG=lambda G, F, g: np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ConstitutiveError):
        psi.derivative(np.eye(2), np.eye(2), np.eye(2))


def test_csv_columns():
    traj = ev.integrate(ev.EvolutionState(np.eye(2), 1.0), 0.01, 1e-3, gdot=lambda G, t: G)
    text = traj.to_csv(["run"])
    lines = text.splitlines()
    assert lines[0] == "# run"
    assert lines[1] == "t,point,G11,G12,G22,rho0,trG_Gdot,Lambda,detG"
    assert len(lines) == 2 + 11
