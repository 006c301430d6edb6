import numpy as np
import pytest

from growthmech import residual as rs
from growthmech.errors import ConfigurationError, SolverError, VerificationError
from growthmech.fields import ScalarField

S = ScalarField.from_expr


def solve(example, omega, R1, R2, mode, **kw):
    return rs.solve_bvp(rs.GrowthBVP(example, S(omega), R1, R2, mode=mode, **kw), verify=False)


def test_aniso_closed_form():
    sol = solve("annulus-aniso", "-0.05*R", 1.0, 1.5, "paper-exact")
    np.testing.assert_allclose(sol.r, np.sqrt(sol.R**2 + sol.constant), atol=1e-10)
    assert sol.diagnostics["root_agreement"] <= 1e-10
    assert abs(sol.p[0]) < 1e-14 and abs(sol.p[-1]) < 1e-9
    assert sol.residual_norm <= 1e-5


@pytest.mark.parametrize("example", ["annulus-iso", "annulus-aniso", "sphere"])
def test_traction_free_boundaries(example):
    sol = solve(example, "0.1*R", 1.0, 2.0, "traction-free")
    assert abs(sol.P_rR[0]) < 1e-12 and abs(sol.P_rR[-1]) < 1e-9
    np.testing.assert_allclose(sol.J, 1.0, atol=1e-8)
    assert sol.residual_norm < 1e-8
    assert sol.hoop_residual_norm < 1e-10


@pytest.mark.parametrize("example", ["annulus-iso", "sphere"])
def test_pressure_matches_trapezoid_oracle(example):
    bvp = rs.GrowthBVP(example, S("0.1*R"), 1.0, 2.0, mode="traction-free")
    sol = rs.solve_bvp(bvp, verify=False)
    r_or, p_or = rs.trapezoid_oracle(bvp, sol.r1)
    assert np.abs(sol.p - p_or).max() < 1e-8
    assert np.abs(sol.r - r_or).max() < 1e-8


@pytest.mark.parametrize("example", ["annulus-iso", "annulus-aniso", "sphere"])
def test_zero_growth_is_stress_free(example):
    sol = solve(example, "0", 1.0, 2.0, "paper-exact")
    assert np.all(np.abs(sol.p) < 1e-14)
    np.testing.assert_allclose(sol.r, sol.R, atol=1e-14)
    assert sol.diagnostics["strategy"] == "reference"


def test_identity_reference_stresses():
    # identity map, p = 0: P^{rR} = 2 mu, P^{Theta Theta} = 2 mu / R^2
    bvp = rs.GrowthBVP("annulus-iso", S("0"), 1.0, 2.0, mu=1.5, n_nodes=9)
    from growthmech.kinematics import RadialMap
    st = rs.stresses(bvp, RadialMap.identity("iso2d", 1.0, 2.0), np.zeros(9))
    R = bvp.grid()
    np.testing.assert_allclose(st["P_rR"], 3.0)
    np.testing.assert_allclose(st["P_thTh"], 3.0 / R**2)


def test_large_growth_passes_verification():
    sol = rs.solve_bvp(rs.GrowthBVP("annulus-iso", S("-R"), 0.5, 2.0, mode="traction-free"))
    assert sol.residual_norm <= 1e-5


def test_fd_derivative_order():
    errs = []
    for n in (33, 65):
        x = np.linspace(0, 1, n)
        errs.append(np.abs(rs.fd_derivative(np.sin(3 * x), x[1] - x[0]) - 3 * np.cos(3 * x)).max())
    assert errs[0] / errs[1] > 12


def test_no_root_raises():
    with pytest.raises(SolverError):
        solve("annulus-aniso", "0.1*R", 1.0, 2.0, "paper-exact")


def test_verification_error_carries_solution():
    with pytest.raises(VerificationError) as exc:
        rs.solve_bvp(rs.GrowthBVP("annulus-iso", S("-R"), 0.5, 2.0, mode="traction-free"), residual_tol=1e-12)
    assert exc.value.solution.residual_norm > 1e-12


@pytest.mark.parametrize("kw", [dict(R1=2.0, R2=1.0), dict(mu=0.0), dict(n_nodes=3), dict(mode="clamped")])
def test_configuration_errors(kw):
    args = dict(example="sphere", omega=S("R"), R1=1.0, R2=2.0)
    args.update(kw)
    with pytest.raises(ConfigurationError):
        rs.GrowthBVP(**args)


def test_mass_density_conformal():
    # d rho/dt = -2 (dW/dt) rho with W = 0.3 t R: rho = rho0 exp(-0.6 t R)
    bvp = rs.GrowthBVP("annulus-iso", S("0.3*t*R"), 1.0, 2.0, n_nodes=5)
    t, rho = rs.mass_density(bvp, 2.0, n_steps=200)
    np.testing.assert_allclose(rho[-1], 2.0 * np.exp(-0.6 * bvp.grid()), rtol=1e-10)
    t, rho = rs.mass_density(rs.GrowthBVP("annulus-aniso", S("0.3*t*R"), 1.0, 2.0, n_nodes=5), 2.0)
    np.testing.assert_allclose(rho[-1], 2.0)
