import numpy as np
import pytest

from growthmech import stressfree as sf
from growthmech.errors import ConfigurationError, DegenerateConeError, DomainError, SingularPointError
from growthmech.fields import ScalarField

S = ScalarField.from_expr


@pytest.mark.parametrize("text,flat", [("0.3*X1-0.2*X2", True), ("X1^2-X2^2", True), ("X1*X2", True),
                                       ("R^2", False), ("X1^2", False)])
def test_check_2d_harmonic(text, flat):
    res = sf.check_2d(S(text, 2), sf.box_axes([-2, -2], [2, 2], 65))
    assert res.flat is flat


def test_cone_family_is_flat():
    cone = sf.radial_cone_family(2.0, 0.7)
    axes = sf.box_axes([-2, -2], [2, 2], 65)
    res = sf.check_2d(cone.growth.omega, axes, exclude=sf.annulus_exclusion(radius=0.4))
    assert res.flat
    # without an exclusion zone the stencil straddles the apex; the analytic path stays exact
    res = sf.check_2d(cone.growth.omega, axes)
    assert res.extra["analytic_laplacian"] < 1e-12


def test_cone_parameters():
    c = sf.radial_cone_family(1.0, 0.0)
    assert c.deficit_angle == 0.0
    np.testing.assert_allclose(c.growth.omega(np.array([[0.3, 0.4]])), 0.0, atol=1e-15)
    assert np.isclose(sf.radial_cone_family(1.0, 1.0).deficit_angle, -2 * np.pi)
    with pytest.raises(DegenerateConeError):
        sf.radial_cone_family(1.0, -1.0)
    with pytest.raises(ConfigurationError):
        sf.radial_cone_family(0.0, 0.5)


def test_inversion_family_3d_convergence():
    ricci = []
    for n in (17, 33):
        gs = sf.inversion_family(0.7, (-2, -2, -2))
        res = sf.check_3d(gs.growth.omega, sf.box_axes([0, 0, 0], [1, 1, 1], n))
        assert res.flat and res.extra["agree"]
        ricci.append(res.extra["ricci_residual"])
    assert 3.0 < ricci[0] / ricci[1] < 5.0


@pytest.mark.parametrize("omega", [S("X1*X2", 3), sf.poincare_half_space(1.0).growth.omega])
def test_non_solutions_rejected(omega):
    res = sf.check_3d(omega, sf.box_axes([1, 0, 0], [2, 1, 1], 17))
    assert not res.flat and res.extra["agree"]


def test_general_solution_curvature():
    gs = sf.general_solution(1.0, 2.0, 0.0, 0.0, 1.0)
    assert gs.sectional_curvature == 0.0 and gs.is_flat_member
    assert sf.poincare_half_space(1.0).sectional_curvature == -1.0
    assert sf.general_solution(1, 0, 0, 0, 1).sectional_curvature == 4.0
    with pytest.raises(DomainError):
        sf.poincare_half_space(1.0).check_domain(np.array([[-1.0, 0, 0]]))


def test_pde_residuals_of_analytic_derivatives(rng):
    gs = sf.inversion_family(1.3, (0.5, -2.0, 1.0))
    X = rng.uniform(0, 1, size=(50, 3))
    res = sf.pde_residuals(gs.growth.omega.gradient(X), gs.growth.omega.hessian(X))
    assert max(np.abs(v).max() for v in res.values()) < 1e-12


def test_inversion_map_pulls_back_to_conformal_metric(rng):
    c = 1.3
    X = rng.uniform(0.5, 1.5, size=(10, 3))
    np.testing.assert_allclose(sf.inversion_map(c, sf.inversion_map(c, X)), X, rtol=1e-14)
    G = sf.pullback_metric(lambda Y: sf.inversion_map(c, Y), X)
    w = sf.inversion_family(c).growth.omega(X)
    np.testing.assert_allclose(G, np.exp(2 * w)[:, None, None] * np.eye(3), rtol=1e-8, atol=1e-10)
    with pytest.raises(SingularPointError):
        sf.inversion_map(c, np.zeros((1, 3)))


def test_fd_derivatives_exact_on_quadratics():
    axes = sf.box_axes([0, 0, 0], [1, 1, 1], 9)
    X, h = sf._grid(axes)
    vals = X[..., 0] ** 2 + 3 * X[..., 1] * X[..., 2]
    grad, hess = sf.fd_derivatives(vals, h)
    Xi = X[1:-1, 1:-1, 1:-1]
    np.testing.assert_allclose(grad[..., 0], 2 * Xi[..., 0], atol=1e-12)
    np.testing.assert_allclose(hess[..., 1, 2], 3.0, atol=1e-10)
