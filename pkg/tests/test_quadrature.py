import numpy as np
import pytest
from scipy import integrate as si

from growthmech import quadrature as quad
from growthmech.errors import NumericError


def test_gk15_exact_for_polynomials():
    for k in range(0, 23):
        val, _ = quad.gk15(lambda x: x**k, np.array([0.0]), np.array([1.0]))
        assert abs(val[0] - 1.0 / (k + 1)) < 1e-14


@pytest.mark.parametrize("f,a,b,exact", [
    (np.exp, 0.0, 1.0, np.e - 1),
    (lambda x: 1 / (1 + 25 * x * x), -1.0, 1.0, 2 * np.arctan(5) / 5),
    (np.sqrt, 0.0, 1.0, 2 / 3),
    (lambda x: np.sin(30 * x), 0.0, np.pi / 3, (1 - np.cos(10 * np.pi)) / 30),
])
def test_adaptive_against_closed_forms(f, a, b, exact):
    val, err = quad.integrate(f, a, b, abstol=1e-12)
    assert abs(val - exact) < 1e-11
    assert err <= 1e-12


def test_vectorized_limits_against_scipy():
    a = np.linspace(0, 1, 5)
    b = a + 0.7
    res = quad.adaptive(lambda x: np.cos(3 * x) * np.exp(-x), a, b, abstol=1e-12)
    ref = [si.quad(lambda x: np.cos(3 * x) * np.exp(-x), lo, hi, epsabs=1e-14)[0] for lo, hi in zip(a, b)]
    np.testing.assert_allclose(res.value, ref, atol=1e-12)
    assert len(res.partition) == 5


def test_cumulative_and_trapezoid():
    x = np.linspace(0, 2, 33)
    F, err = quad.cumulative(np.exp, x, abstol=1e-12)
    np.testing.assert_allclose(F, np.exp(x) - 1, atol=1e-12)
    T = quad.trapezoid_cumulative(np.exp(x), x)
    assert np.abs(T - (np.exp(x) - 1)).max() < 1e-2


def test_non_convergence_raises():
    with pytest.raises(NumericError) as exc:
        quad.adaptive(lambda x: 1 / np.abs(x - 0.3), 0.0, 1.0, abstol=1e-14, max_levels=5)
    assert "worst_error" in exc.value.diagnostics
