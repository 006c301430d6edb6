"""Residual stress in growing incompressible neo-Hookean bodies (radial problems).

Three problems are solved:

``annulus-iso``
    annulus with ``G = diag(e^{2W}, R^2 e^{2W})``;
``annulus-aniso``
    annulus with ``G = diag(e^{2W}, R^2 e^{-2W})`` (``det G = R^2``);
``sphere``
    hollow sphere with ``G = e^{2W} diag(1, R^2, R^2 sin^2 Theta)``.

Incompressibility ``J = 1`` integrates to ``r^n = r1^n + I(R)`` with
``n = 2, 2, 3``. Radial equilibrium gives ``dp/dR = q(R; r)`` which is
integrated from the inner radius, and the remaining constant (``r1``, or
``C = r1^2 - R1^2`` for the anisotropic annulus) is found by scalar root
finding on the outer boundary condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import quadrature as quad
from .diffgeo import RadialMetric
from .errors import (ConfigurationError, GeometryError, NumericError, SolverError,
                     VerificationError)
from .fields import ScalarField
from .kinematics import RadialMap, cauchy_green, deformation_gradient, jacobian, spatial_metric

EXAMPLES = {
    "annulus-iso": ("iso2d", 2),
    "annulus-aniso": ("aniso2d", 2),
    "sphere": ("iso3d", 3),
}
_ALIASES = {
    "annulusiso": "annulus-iso", "ex1": "annulus-iso", "iso": "annulus-iso",
    "annulusaniso": "annulus-aniso", "ex2": "annulus-aniso", "aniso": "annulus-aniso",
    "sphereiso": "sphere", "ex3": "sphere",
}
MODES = ("paper-exact", "traction-free")


def _example_name(name):
    key = str(name).lower()
    key = _ALIASES.get(key.replace("-", "").replace("_", ""), key)
    if key not in EXAMPLES:
        raise ConfigurationError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    return key


def _mode_name(mode):
    key = str(mode).lower().replace("_", "-")
    key = {"paperexact": "paper-exact", "tractionfree": "traction-free"}.get(key.replace("-", ""), key)
    if key not in MODES:
        raise ConfigurationError(f"unknown boundary mode {mode!r}; choose from {MODES}")
    return key


@dataclass(frozen=True)
class GrowthBVP:
    """A radial growth boundary-value problem.

    Parameters
    ----------
    example : str
        ``annulus-iso``, ``annulus-aniso`` or ``sphere``.
    omega : ScalarField
        Radial growth field ``W(R, t)``.
    R1, R2 : float
        Inner and outer reference radii.
    mu : float
        Shear modulus.
    mode : str
        ``paper-exact`` (``p(R1) = p(R2) = 0``) or ``traction-free``
        (``P^{rR} = 0`` on both surfaces).
    t : float
        Time at which the growth field is frozen.
    n_nodes : int
        Output grid size (uniform in ``R``).
    abstol : float
        Absolute tolerance of the adaptive quadratures.
    """

    example: str
    omega: ScalarField
    R1: float
    R2: float
    mu: float = 1.0
    mode: str = "paper-exact"
    t: float = 0.0
    n_nodes: int = 512
    abstol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "example", _example_name(self.example))
        object.__setattr__(self, "mode", _mode_name(self.mode))
        if not isinstance(self.omega, ScalarField):
            object.__setattr__(self, "omega", ScalarField.constant(self.omega))
        if not (0 < self.R1 < self.R2):
            raise ConfigurationError("radii must satisfy 0 < R1 < R2")
        if not self.mu > 0:
            raise ConfigurationError("shear modulus mu must be positive")
        if self.n_nodes < 5:
            raise ConfigurationError("need at least 5 grid nodes")
        if not self.abstol > 0:
            raise ConfigurationError("abstol must be positive")

    @property
    def family(self):
        return EXAMPLES[self.example][0]

    @property
    def power(self):
        return EXAMPLES[self.example][1]

    def metric(self):
        return RadialMetric(self.family, self.omega, domain=(self.R1, self.R2), t=self.t)

    def grid(self):
        return np.linspace(self.R1, self.R2, self.n_nodes)

    # -- closed-form pieces -------------------------------------------
    def W(self, R):
        return self.omega.radial(R, self.t)

    def dW(self, R):
        return self.omega.radial_d1(R, self.t)

    def volume_integrand(self, xi):
        """``d(r^n)/dR`` implied by ``J = 1``."""
        w = self.W(xi)
        if self.example == "annulus-iso":
            return 2 * xi * np.exp(2 * w)
        if self.example == "annulus-aniso":
            return 2 * xi
        return 3 * xi**2 * np.exp(3 * w)

    def pressure_integrand(self, xi, r):
        """``dp/dR`` from radial equilibrium, given ``r(xi)``."""
        mu = self.mu
        w = self.W(xi)
        w1 = self.dW(xi)
        if self.example == "annulus-iso":
            return (2 * mu * xi / r**2) * np.exp(2 * w) * (
                2 * (1 + xi * w1) - xi**2 * np.exp(2 * w) / r**2 - r**2 * np.exp(-2 * w) / xi**2)
        if self.example == "annulus-aniso":
            return (2 * mu * xi / r**2) * np.exp(-2 * w) * (
                2 - 2 * xi * w1 - r**2 * np.exp(4 * w) / xi**2 - xi**2 / r**2)
        return (4 * mu * xi**4 / r**4) * np.exp(4 * w) * (
            2 / xi + 2 * w1 - xi**2 * np.exp(3 * w) / r**3 - r**3 * np.exp(-3 * w) / xi**4)

    def traction_pressure(self, R, r):
        """Pressure that makes ``P^{rR}`` vanish at ``R``."""
        w = self.W(R)
        if self.example == "annulus-iso":
            return 2 * self.mu * R**2 * np.exp(2 * w) / r**2
        if self.example == "annulus-aniso":
            return 2 * self.mu * R**2 * np.exp(-2 * w) / r**2
        return 2 * self.mu * R**4 * np.exp(4 * w) / r**4

    def dr_from_ode(self, R, r):
        """``r'`` from the incompressibility ODE (no numerical differentiation)."""
        n = self.power
        return self.volume_integrand(R) / (n * r ** (n - 1))

    def reference_inner_radius(self):
        """Inner image of a stress-free guess: ``R1 e^{W(R1)}`` (``R1`` for the aniso annulus)."""
        if self.example == "annulus-aniso":
            return self.R1
        return float(self.R1 * np.exp(self.W(np.array([self.R1]))[0]))

    def constant_from_r1(self, r1):
        """The reported boundary constant: ``C = r1^2 - R1^2`` or ``r1`` itself."""
        if self.example == "annulus-aniso":
            return r1 * r1 - self.R1 * self.R1
        return r1


class _VolumeIntegral:
    """``I(x) = int_{R1}^{x} volume_integrand``, independent of ``r1``."""

    def __init__(self, bvp: GrowthBVP):
        self.bvp = bvp
        self.grid = bvp.grid()
        self.tol = bvp.abstol
        self.values, self.error = quad.cumulative(bvp.volume_integrand, self.grid, abstol=self.tol)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        k = np.clip(np.searchsorted(self.grid, flat, side="right") - 1, 0, self.grid.size - 2)
        res = quad.adaptive(self.bvp.volume_integrand, self.grid[k], flat, abstol=self.tol / self.grid.size)
        return (self.values[k] + res.value).reshape(x.shape)


def solve_incompressibility(bvp: GrowthBVP, trial_inner: float, _vol: Optional[_VolumeIntegral] = None) -> RadialMap:
    """Radial map satisfying ``J = 1`` with inner image ``r(R1) = trial_inner``."""
    if not trial_inner > 0:
        raise GeometryError("inner image radius must be positive")
    vol = _VolumeIntegral(bvp) if _vol is None else _vol
    n = bvp.power
    r1n = float(trial_inner) ** n

    def r(R):
        base = r1n + vol(R)
        if np.any(base <= 0):
            raise GeometryError("non-positive radicand in incompressibility solve (degenerate growth)")
        return base ** (1.0 / n)

    def dr(R):
        R = np.asarray(R, dtype=float)
        return bvp.dr_from_ode(R, r(R))

    rmap = RadialMap(bvp.family, bvp.R1, bvp.R2, r, dr)
    return rmap


def pressure_profile(bvp: GrowthBVP, rmap: RadialMap, anchor=None):
    """Pressure on the grid by adaptive quadrature of ``dp/dR`` from ``R1``.

    ``anchor`` is ``p(R1)``; by default 0 in ``paper-exact`` mode and the
    traction-free value in ``traction-free`` mode.

    Returns
    -------
    p : ndarray
    error : float
        Summed quadrature error estimate.
    """
    R = bvp.grid()
    if anchor is None:
        anchor = 0.0 if bvp.mode == "paper-exact" else float(bvp.traction_pressure(bvp.R1, rmap.r1))

    def q(xi):
        return bvp.pressure_integrand(xi, rmap.r(xi))

    cum, err = quad.cumulative(q, R, abstol=bvp.abstol)
    return anchor + cum, err


def _ambient_gamma_r(family, r, theta):
    """Nonzero spatial symbols ``gamma^r_{bc}`` in the polar/spherical chart."""
    d = 3 if family == "iso3d" else 2
    g = np.zeros(r.shape + (d, d, d))
    g[..., 0, 1, 1] = -r
    g[..., 1, 0, 1] = g[..., 1, 1, 0] = 1 / r
    if d == 3:
        s, c = np.sin(theta), np.cos(theta)
        g[..., 0, 2, 2] = -r * s * s
        g[..., 1, 2, 2] = -s * c
        g[..., 2, 0, 2] = g[..., 2, 2, 0] = 1 / r
        g[..., 2, 1, 2] = g[..., 2, 2, 1] = c / s
    return g


def stresses(bvp: GrowthBVP, rmap: RadialMap, p, R=None, theta=np.pi / 2):
    """Closed-form nonzero first Piola-Kirchhoff components on ``R``.

    Returns a dict with ``P_rR``, ``P_thTh`` and, for the sphere, ``P_phPh``
    (which equals ``P_thTh / sin^2 theta``).
    """
    R = bvp.grid() if R is None else np.asarray(R, dtype=float)
    p = np.asarray(p, dtype=float)
    r = rmap.r(R)
    w = bvp.W(R)
    mu = bvp.mu
    if bvp.example == "annulus-iso":
        PrR = 2 * mu * R / r - p * r * np.exp(-2 * w) / R
        Pth = 2 * mu * np.exp(-2 * w) / R**2 - p / r**2
    elif bvp.example == "annulus-aniso":
        PrR = 2 * mu * np.exp(-2 * w) * R / r - p * r / R
        Pth = 2 * mu * np.exp(2 * w) / R**2 - p / r**2
    else:
        PrR = 2 * mu * R**2 * np.exp(w) / r**2 - p * r**2 * np.exp(-3 * w) / R**2
        Pth = 2 * mu * np.exp(-2 * w) / R**2 - p / r**2
    out = {"P_rR": PrR, "P_thTh": Pth}
    if bvp.family == "iso3d":
        out["P_phPh"] = Pth / np.sin(theta) ** 2
    return out


def constitutive_stress(F, G, g, p, mu):
    """``P^{aA} = 2 mu F^a_B G^{AB} - p (F^{-1})^A_b g^{ab}`` as matrices."""
    Ginv = np.linalg.inv(G)
    ginv = np.linalg.inv(g)
    Finv = np.linalg.inv(F)
    return 2 * mu * F @ Ginv - np.asarray(p)[..., None, None] * ginv @ np.swapaxes(Finv, -1, -2)


def fd_derivative(y, h):
    """Fourth-order finite-difference derivative along axis 0 of uniformly sampled ``y``.

    Central five-point stencil inside, one-sided five-point stencils at the two
    nodes nearest each end.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 5:
        raise ConfigurationError("need at least 5 samples for the derivative stencil")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


_CENTRAL = (np.arange(-2, 3), np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0)
_FORWARD = (np.arange(0, 5), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0)
_BACKWARD = (np.arange(-4, 1), -_FORWARD[1][::-1])


def _stress_at(bvp: GrowthBVP, rmap: RadialMap, R, p, theta):
    d = 3 if bvp.family == "iso3d" else 2
    pts = np.zeros((R.size, d))
    pts[:, 0] = R
    if d == 3:
        pts[:, 1] = theta
    G = bvp.metric().metric(pts)
    F, _ = deformation_gradient(rmap, R)
    g = spatial_metric(rmap, R, theta)
    return constitutive_stress(F, G, g, p, bvp.mu), F, pts


def momentum_residual(bvp: GrowthBVP, rmap: RadialMap, p, theta=np.pi / 3, delta=None):
    """Assemble ``P^{aA}|_A`` from the solved fields at the grid nodes.

    The stress is rebuilt from the constitutive law. ``d_R`` uses a
    fourth-order five-point stencil of spacing ``delta`` (default
    ``(R2 - R1) / 2048``) around each node, with the pressure carried to the
    stencil points by adaptive quadrature of ``dp/dR``; end nodes use
    one-sided stencils. Material symbols come from
    :meth:`RadialMetric.christoffel_closed_form` and spatial ones from the
    Euclidean chart. Angular derivatives vanish by symmetry. Returns an
    array of shape ``(n_nodes, d)``; column 0 is the radial balance.
    """
    R = bvp.grid()
    p = np.asarray(p, dtype=float)
    delta = (bvp.R2 - bvp.R1) / 2048.0 if delta is None else float(delta)
    n = R.size
    offsets = np.empty((n, 5))
    weights = np.empty((n, 5))
    offsets[:], weights[:] = _CENTRAL
    offsets[0], weights[0] = _FORWARD
    offsets[-1], weights[-1] = _BACKWARD
    Rk = R[:, None] + delta * offsets

    def q(xi):
        return bvp.pressure_integrand(xi, rmap.r(xi))

    moved = offsets != 0
    pk = np.broadcast_to(p[:, None], Rk.shape).copy()
    a = np.broadcast_to(R[:, None], Rk.shape)[moved]
    b = Rk[moved]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    res = quad.adaptive(q, lo, hi, abstol=1e-3 * bvp.abstol)
    pk[moved] += np.where(b > a, res.value, -res.value)
    Pk, _, _ = _stress_at(bvp, rmap, Rk.ravel(), pk.ravel(), theta)
    d = Pk.shape[-1]
    Pk = Pk.reshape(n, 5, d, d)
    div = np.einsum("nk,nka->na", weights, Pk[:, :, :, 0]) / delta
    P, F, pts = _stress_at(bvp, rmap, R, p, theta)
    Gam = bvp.metric().christoffel_closed_form(pts)
    gam = _ambient_gamma_r(bvp.family, rmap.r(R), theta)
    trace_gam = np.einsum("nAAB->nB", Gam)
    div += np.einsum("nB,naB->na", trace_gam, P)
    div += np.einsum("nbA,nabc,ncA->na", P, gam, F)
    return div


@dataclass
class RadialSolution:
    """A solved radial growth problem on the output grid."""

    bvp: GrowthBVP
    R: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    p: np.ndarray
    stress: dict
    constant: float
    r1: float
    J: np.ndarray
    residual: np.ndarray
    residual_norm: float
    hoop_residual_norm: float
    quadrature_error: float
    rmap: RadialMap = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def P_rR(self):
        return self.stress["P_rR"]

    @property
    def P_thTh(self):
        return self.stress["P_thTh"]

    @property
    def P_phPh(self):
        return self.stress.get("P_phPh")

    def table(self):
        """Column names and a 2-D array for CSV output."""
        cols = ["R", "r", "p", "P_rR", "P_thTh"]
        data = [self.R, self.r, self.p, self.P_rR, self.P_thTh]
        if self.P_phPh is not None:
            cols.append("P_phPh")
            data.append(self.P_phPh)
        cols += ["J", "residual"]
        data += [self.J, self.residual]
        return cols, np.column_stack(data)


class _Shooter:
    """Boundary mismatch as a function of ``s = ln(r1 / r_ref)``.

    Uses a fixed composite Gauss-Kronrod rule on the output grid with the
    volume integral precomputed at every abscissa, so the mismatch is a smooth
    deterministic function of ``s``.
    """

    def __init__(self, bvp: GrowthBVP, vol: _VolumeIntegral):
        self.bvp = bvp
        R = bvp.grid()
        self.a, self.b = R[:-1], R[1:]
        self.x = quad.nodes_for(self.a, self.b)
        self.I = vol(self.x)
        self.I2 = vol.values[-1]
        self.r_ref = bvp.reference_inner_radius()
        self.scale = bvp.mu

    def r1(self, s):
        return self.r_ref * np.exp(s)

    def __call__(self, s):
        bvp = self.bvp
        n = bvp.power
        r1 = self.r1(s)
        r = (r1**n + self.I) ** (1.0 / n)
        qv = bvp.pressure_integrand(self.x, r)
        val, _ = quad.gk15_from_values(qv, self.a, self.b)
        jump = float(np.sum(val))
        if bvp.mode == "paper-exact":
            return jump
        r2 = (r1**n + self.I2) ** (1.0 / n)
        return float(bvp.traction_pressure(bvp.R1, r1) + jump - bvp.traction_pressure(bvp.R2, r2))


def _bisect(f, a, b, fa, fb, xtol=1e-15, maxiter=200):
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
        if abs(b - a) <= xtol * max(1.0, abs(m)):
            break
    return 0.5 * (a + b)


def find_bracket(f, f0, step=0.05, max_doublings=50, s_max=40.0):
    """Nearest sign change of ``f`` around ``s = 0`` by outward doubling.

    Returns ``(a, b, fa, fb)`` or raises :class:`SolverError` with the
    sampled values as diagnostics.
    """
    samples = [(0.0, f0)]
    last = {1: (0.0, f0), -1: (0.0, f0)}
    delta = step
    for _ in range(max_doublings):
        for sgn in (1, -1):
            s = sgn * delta
            if abs(s) > s_max:
                continue
            try:
                v = f(s)
            except (FloatingPointError, GeometryError):
                continue
            samples.append((s, v))
            ps, pv = last[sgn]
            if np.isfinite(v) and np.sign(v) != np.sign(pv):
                return (min(ps, s), max(ps, s), pv if ps < s else v, v if ps < s else pv)
            last[sgn] = (s, v)
        delta *= 2.0
        if delta > s_max:
            break
    raise SolverError(
        "no sign change of the boundary mismatch was found",
        {"samples": sorted(samples), "step": step, "max_doublings": max_doublings},
    )


def solve_bvp(bvp: GrowthBVP, verify=True, residual_tol=1e-5, theta=np.pi / 3) -> RadialSolution:
    """Solve incompressibility, pressure and boundary conditions, then verify.

    The free constant is located by Brent's method with an independent
    bisection as cross-check. The momentum residual is compared with
    ``residual_tol * mu`` (the stencil spacing does not depend on the grid).

    Raises
    ------
    SolverError
        No bracket for the boundary condition.
    VerificationError
        The momentum residual exceeds its tolerance (``.solution`` holds the
        solution) when ``verify`` is true.
    """
    vol = _VolumeIntegral(bvp)
    shoot = _Shooter(bvp, vol)
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        f0 = shoot(0.0)
    diag = {"f_ref": f0}
    if abs(f0) <= 1e-13 * shoot.scale * (bvp.R2 - bvp.R1):
        s_root = 0.0
        s_bis = 0.0
        diag["strategy"] = "reference"
    else:
        def fs(s):
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                try:
                    return shoot(s)
                except FloatingPointError:
                    raise GeometryError("overflow in shooting") from None

        a, b, fa, fb = find_bracket(fs, f0)
        s_root = brentq(fs, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        s_bis = _bisect(fs, a, b, fa, fb)
        diag.update({"strategy": "bracket", "bracket": (a, b)})
    r1 = float(shoot.r1(s_root))
    const = float(bvp.constant_from_r1(r1))
    const_bis = float(bvp.constant_from_r1(float(shoot.r1(s_bis))))
    diag["constant_brent"] = const
    diag["constant_bisect"] = const_bis
    diag["root_agreement"] = abs(const - const_bis)

    rmap = solve_incompressibility(bvp, r1, vol)
    R = bvp.grid()
    r = rmap.r(R)
    dr = rmap.dr(R)
    p, qerr = pressure_profile(bvp, rmap)
    st = stresses(bvp, rmap, p, R)
    J = jacobian(rmap, bvp.metric(), R)
    res = momentum_residual(bvp, rmap, p, theta)
    sol = RadialSolution(
        bvp, R, r, dr, p, st, const, r1, J, res[:, 0],
        float(np.max(np.abs(res[:, 0]))), float(np.max(np.abs(res[:, 1:]))),
        qerr, rmap, diag,
    )
    tol = residual_tol * bvp.mu
    diag["residual_tol"] = tol
    if verify and sol.residual_norm > tol:
        err = VerificationError(
            f"momentum residual {sol.residual_norm:.3e} exceeds tolerance {tol:.3e}",
            sol.residual_norm, tol)
        err.solution = sol
        raise err
    return sol


# --------------------------------------------------------------------------
# oracles and mass balance
# --------------------------------------------------------------------------
def trapezoid_oracle(bvp: GrowthBVP, r1, anchor=None, refine=10):
    """``(r, p)`` on the output grid from fixed-step trapezoid rules at ``refine``x nodes."""
    n = bvp.power
    m = (bvp.n_nodes - 1) * refine + 1
    Rf = np.linspace(bvp.R1, bvp.R2, m)
    If = quad.trapezoid_cumulative(bvp.volume_integrand(Rf), Rf)
    rf = (r1**n + If) ** (1.0 / n)
    if anchor is None:
        anchor = 0.0 if bvp.mode == "paper-exact" else float(bvp.traction_pressure(bvp.R1, r1))
    pf = anchor + quad.trapezoid_cumulative(bvp.pressure_integrand(Rf, rf), Rf)
    return rf[::refine], pf[::refine]


def mass_density(bvp: GrowthBVP, rho0_initial, source=None, t_span=(0.0, 1.0), n_steps=1000,
                 literal_radial_derivative=False):
    """Integrate the pointwise mass balance with classical RK4.

    ``d rho/dt + k (dW/dt) rho = S_m`` with ``k = 2, 0, 3`` for the three
    problems. With ``literal_radial_derivative`` the radial derivative
    ``dW/dR`` is used in place of ``dW/dt``.

    Returns
    -------
    t : ndarray, shape (n_steps + 1,)
    rho : ndarray, shape (n_steps + 1, n_nodes)
    """
    R = bvp.grid()
    t0, t1 = map(float, t_span)
    if not (np.isfinite(t0) and np.isfinite(t1)) or n_steps < 1:
        raise ConfigurationError("t_span must be finite and n_steps >= 1")
    rho = np.broadcast_to(np.asarray(rho0_initial, dtype=float), R.shape).astype(float)
    if np.any(rho <= 0):
        raise ConfigurationError("initial mass density must be positive")
    k = {"annulus-iso": 2.0, "annulus-aniso": 0.0, "sphere": 3.0}[bvp.example]
    X = R[:, None]

    def wdot(t):
        if literal_radial_derivative:
            return bvp.omega.gradient(X, t)[:, 0]
        return bvp.omega.rate(X, t)

    def sm(t):
        if source is None:
            return np.zeros_like(R)
        if isinstance(source, ScalarField):
            return source(X, t)
        return np.broadcast_to(np.asarray(source(R, t), dtype=float), R.shape)

    def rhs(t, y):
        return sm(t) - k * wdot(t) * y

    dt = (t1 - t0) / n_steps
    ts = t0 + dt * np.arange(n_steps + 1)
    out = np.empty((n_steps + 1, R.size))
    out[0] = rho
    y = rho.copy()
    for i in range(n_steps):
        t = ts[i]
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericError("mass density integration produced non-finite values", {"t": t + dt})
        out[i + 1] = y
    return ts, out


def cauchy_green_trace(sol: RadialSolution):
    """``tr_G C`` along the solution (diagnostic)."""
    Cm, _ = cauchy_green(sol.rmap, sol.bvp.metric(), sol.R)
    return np.trace(Cm, axis1=-2, axis2=-1)
