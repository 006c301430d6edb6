import numpy as np
import pytest

from growthmech import linearized as li
from growthmech.errors import ConfigurationError, NumericError
from growthmech.fields import ScalarField

S = ScalarField.from_expr
P = li.SVKParams(1.0, 1.0)


def _quadratic_solution(a):
    def U(X):
        b = X @ a
        return 0.5 * b[..., None] * X - 0.25 * a * np.sum(X * X, -1)[..., None]
    return U


@pytest.mark.parametrize("dim", [2, 3])
def test_svk_tensors(rng, dim):
    p = li.SVKParams(0.7, 1.3)
    A, B, Bc = li.svk_tensors(p, dim)
    np.testing.assert_allclose(Bc, -li.eigenstrain_coefficient(p, dim) * np.eye(dim), atol=1e-15)
    np.testing.assert_allclose(Bc, li.b_contraction_fd(p, dim), atol=1e-8)
    np.testing.assert_allclose(A, np.transpose(A, (2, 3, 0, 1)))
    # A is the derivative of P with respect to F at the reference
    H = rng.normal(size=(dim, dim))
    e = 1e-6
    dP = (li.svk_stress(np.eye(dim) + e * H, np.eye(dim), p) - li.svk_stress(np.eye(dim) - e * H, np.eye(dim), p)) / (2 * e)
    np.testing.assert_allclose(dP, np.einsum("aAbB,bB->aA", A, H), atol=1e-7)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        li.SVKParams(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        li.SVKParams(-1.0, 1.0)


def test_quadratic_manufactured_solution(backend):
    name = [k for k, v in li._kernels.backends().items() if v is backend][0]
    a = np.array([0.3, -0.7, 0.5])
    axes = li.box_axes([-1, -1, -1], [1, 1, 1], 13)
    X, h = li._grid(axes)
    Uex = _quadratic_solution(a)
    rhs = li.eigenstrain_coefficient(P, 3) * np.broadcast_to(a, X.shape)
    assert np.abs(li.navier_residual(Uex(X), rhs, h, P, backend=name)).max() <= 1e-10
    eps = li.linearized_strain(Uex(X), h)
    assert np.abs(eps - 0.5 * (X @ a)[..., None, None] * np.eye(3)).max() <= 1e-12
    sol = li.solve_linearized(P, S("0.3*X1-0.7*X2+0.5*X3", 3), axes, boundary=Uex, backend=name, tol=1e-13)
    assert sol.residual <= 1e-10
    assert np.abs(sol.U - Uex(X)).max() <= 1e-11
    assert sol.history and sol.iterations == len(sol.history)


def test_smooth_solution_second_order():
    errs = []
    c = li.eigenstrain_coefficient(P, 3)
    k = -3 * np.pi**2 * (P.lam + 2 * P.mu) / c

    def grad_phi(X):
        s, co = np.sin(np.pi * X), np.cos(np.pi * X)
        return np.pi * np.stack([co[..., 0] * s[..., 1] * s[..., 2], s[..., 0] * co[..., 1] * s[..., 2],
                                 s[..., 0] * s[..., 1] * co[..., 2]], -1)

    beta = ScalarField(lambda X, t=0.0: k * np.prod(np.sin(np.pi * X), -1), 3,
                       grad=lambda X, t=0.0: k * grad_phi(X))
    for n in (9, 17, 33):
        axes = li.box_axes([0] * 3, [1] * 3, n)
        sol = li.solve_linearized(P, beta, axes, boundary=grad_phi)
        errs.append(np.abs(sol.U - grad_phi(sol.coordinates)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), orders


def test_backends_agree_on_solve():
    mods = li._kernels.backends()
    if len(mods) < 2:
        pytest.skip("compiled kernels not built")
    axes = li.box_axes([0] * 3, [1] * 3, 9)
    beta = S("sin(X1)*X2 + X3^2", 3)
    a = li.solve_linearized(P, beta, axes, backend="python")
    b = li.solve_linearized(P, beta, axes, backend="compiled")
    assert np.abs(a.U - b.U).max() < 1e-12


def test_2d_solve():
    axes = li.box_axes([-1, -1], [1, 1], 17)
    X, h = li._grid(axes)
    a = np.array([0.4, -0.2])
    # in 2D the field U = (a.X) X / 2 - a |X|^2 / 4 has eps = (a.X) delta / 2 and div U = a.X
    sol = li.solve_linearized(li.SVKParams(2.0, 0.5), S("0.4*X1-0.2*X2", 2), axes,
                              boundary=_quadratic_solution(a), tol=1e-13)
    assert np.abs(sol.U - _quadratic_solution(a)(X)).max() < 1e-11


def test_solver_errors():
    with pytest.raises(ConfigurationError):
        li.solve_navier(P, 0.0, li.box_axes([0] * 3, [1] * 3, 5))
    with pytest.raises(NumericError) as exc:
        li.solve_linearized(P, S("X1^3", 3), li.box_axes([0] * 3, [1] * 3, 17), maxiter=3)
    assert len(exc.value.diagnostics["history"]) == 3


@pytest.mark.parametrize("dim,text,flat", [(2, "X1^2-X2^2", True), (2, "X1^2+X2^2", False),
                                           (3, "3+2*X1-X3", True), (3, "X1*X2", False), (3, "X1^2-X2^2", False)])
def test_beta_check_examples(dim, text, flat):
    res = li.stress_free_beta_check(S(text, dim), li.box_axes([-1] * dim, [1] * dim, 17))
    assert res.stress_free is flat
    assert res.ricci_stress_free is flat


def test_linearized_curvature_of_exact_variation(rng):
    # dG = sym grad of a vector field is a pure gauge term: no curvature
    axes = li.box_axes([0] * 3, [1] * 3, 9)
    X, h = li._grid(axes)
    V = np.stack([X[..., 0] ** 2 * X[..., 1], X[..., 2] ** 2, X[..., 0] * X[..., 1]], -1)
    dG = 2 * li.linearized_strain(V, h)
    riem, ric, scal = li.linearized_curvature(dG, h)
    assert np.abs(riem[1:-1, 1:-1, 1:-1]).max() < 1e-9


def test_csv_output():
    axes = li.box_axes([0, 0], [1, 1], 9)
    sol = li.solve_linearized(P, S("X1", 2), axes)
    lines = sol.to_csv(["demo"]).splitlines()
    assert lines[1] == "X1,X2,U1,U2,eps11,eps12,eps22"
    assert len(lines) == 2 + 81
