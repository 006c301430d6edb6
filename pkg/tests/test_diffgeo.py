import numpy as np
import pytest

from growthmech import diffgeo as dg
from growthmech.errors import ConfigurationError, DefinitenessError, DomainError
from growthmech.fields import ScalarField

S = ScalarField.from_expr


def _axes(lo, hi, h):
    return [np.arange(a, b + h / 2, h) for a, b in zip(lo, hi)]


@pytest.mark.parametrize("family,pts", [
    ("iso2d", [[0.5, 0.1], [1.7, 2.0]]),
    ("iso3d", [[0.5, 0.4, 0.1], [2.0, 1.3, 5.0]]),
])
def test_polar_and_spherical_flat_analytic(family, pts):
    rep = dg.riemann(dg.RadialMetric(family, S("0")), np.array(pts))
    assert rep.norms["riemann"] <= 1e-10
    assert rep.norms["ricci"] <= 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_cartesian_flat_analytic(dim, rng):
    m = dg.ConformalMetric(ScalarField.constant(0.3, dim))
    rep = m.curvature(rng.uniform(-1, 1, size=(5, dim)))
    assert rep.norms["riemann"] <= 1e-12


def test_polar_flat_grid_path(backend):
    h = 1 / 64
    gm = dg.GridMetric.from_function(
        lambda X: np.stack([np.stack([np.ones_like(X[..., 0]), 0 * X[..., 0]], -1),
                            np.stack([0 * X[..., 0], X[..., 0] ** 2], -1)], -2),
        _axes([1, 0], [2, 1], h))
    assert gm.curvature(backend).norms["riemann"] <= 1e-5


def test_spherical_flat_grid_path():
    h = 1 / 64

    def G(X):
        R, th = X[..., 0], X[..., 1]
        out = np.zeros(X.shape[:-1] + (3, 3))
        out[..., 0, 0] = 1
        out[..., 1, 1] = R**2
        out[..., 2, 2] = (R * np.sin(th)) ** 2
        return out

    # sin^2 is not resolved exactly, so the residual is O(h^2) rather than round-off
    res = []
    for h in (1 / 32, 1 / 64):
        gm = dg.GridMetric.from_function(G, _axes([1, 0.5, 0], [1.25, 0.75, 0.25], h))
        res.append(gm.curvature().norms["riemann"])
        assert dg.is_flat(gm)
    assert res[0] / res[1] > 3.5


def test_round_sphere_grid_scalar():
    gm = dg.GridMetric.from_function(
        lambda X: np.stack([np.stack([np.ones_like(X[..., 0]), 0 * X[..., 0]], -1),
                            np.stack([0 * X[..., 0], np.sin(X[..., 0]) ** 2], -1)], -2),
        _axes([0.5, 0], [2.5, 1], 1 / 64))
    np.testing.assert_allclose(gm.curvature().scalar, 2.0, atol=5e-3)
    assert not dg.is_flat(gm)


def test_conformal_scalar_convergence():
    om = S("0.3*sin(X1)*cos(2*X2) + 0.1*X1^2", 2)
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        gm = dg.GridMetric.conformal(om, _axes([0, 0], [1, 1], h))
        rep = gm.curvature()
        X = rep.points
        lap = np.trace(om.hessian(X), axis1=-2, axis2=-1)
        exact = -2 * np.exp(-2 * om(X)) * lap
        errs.append(np.abs(rep.scalar - exact).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), (errs, orders)


@pytest.mark.parametrize("family,omega,pi", [
    ("iso2d", "-R^2", None), ("aniso2d", "0.2*R", None), ("aniso2d", "cos(R)^2", "0.1*R^2"),
    ("iso3d", "-0.3*R", None),
])
def test_closed_form_christoffel_and_scalar(family, omega, pi):
    m = dg.RadialMetric(family, S(omega), None if pi is None else S(pi))
    R = np.linspace(0.4, 2.5, 9)
    P = np.zeros((R.size, m.dim))
    P[:, 0] = R
    if m.dim == 3:
        P[:, 1] = 0.9
    rep = m.curvature(P)
    np.testing.assert_allclose(m.christoffel_closed_form(P), rep.christoffel, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(m.scalar_closed_form(R), rep.scalar, rtol=1e-10, atol=1e-10)


def test_aniso_christoffel_RThTh():
    # Gam^R_ThTh = R e^{-4W} (R W' - 1) when Pi = -W
    m = dg.RadialMetric("aniso2d", S("0.3*R^2"))
    R = np.array([0.7, 1.4])
    w, w1 = 0.3 * R**2, 0.6 * R
    gam = dg.christoffel(m, np.column_stack([R, 0 * R]))
    np.testing.assert_allclose(gam[:, 0, 1, 1], R * np.exp(-4 * w) * (R * w1 - 1), rtol=1e-12)


def test_grid_and_analytic_paths_agree():
    om = S("0.2*X1*X2 - 0.1*X3^2", 3)
    axes = _axes([0, 0, 0], [0.5, 0.5, 0.5], 1 / 32)
    gm = dg.GridMetric.conformal(om, axes)
    pt = np.array([0.25, 0.25, 0.25])
    grid_ric, grid_s = dg.ricci_scalar(gm, pt)
    ana_ric, ana_s = dg.ricci_scalar(dg.ConformalMetric(om), pt)
    np.testing.assert_allclose(grid_ric, ana_ric, atol=1e-4)
    assert abs(grid_s - ana_s) < 1e-4


def test_errors():
    with pytest.raises(DomainError):
        dg.RadialMetric("iso2d", S("R")).metric([0.0, 0.0])
    with pytest.raises(DefinitenessError):
        dg.RadialMetric("iso3d", S("R")).metric([1.0, 0.0, 0.0])
    with pytest.raises(ConfigurationError):
        dg.RadialMetric("torus", S("R"))
    with pytest.raises(DefinitenessError):
        dg.check_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    gm = dg.GridMetric(np.broadcast_to(np.eye(2), (5, 5, 2, 2)), 0.1)
    with pytest.raises(DomainError):
        gm.node_index([0.0, 0.0])
    with pytest.raises(ConfigurationError):
        dg.flatness_residual(dg.ConformalMetric(S("X1", 2)))
