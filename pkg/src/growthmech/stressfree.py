"""Stress-free (flat) conformal growth: construction and verification.

A conformal growth ``G = e^{2W} delta`` is stress free when ``G`` is flat.
In 2D this reduces to ``lap W = 0``. In 3D flatness is the vanishing of

    R_IJ = -W_IJ - delta_IJ lap W + W_I W_J - delta_IJ |grad W|^2,

i.e. three off-diagonal equations ``W_IJ = W_I W_J`` and three diagonal ones
``W_II + lap W + sum_{K != I} W_K^2 = 0``.

For ``W = -ln q`` with ``q = c0 |X|^2 + c.X + c4`` the metric ``q^{-2} delta``
has constant sectional curvature ``K = 4 c0 c4 - |c|^2``; it is flat exactly
when ``|c|^2 = 4 c0 c4``. Flat members are translated inversions (``c0 != 0``)
or uniform scalings (``c0 = 0, c = 0``). Only-``c1`` data gives the hyperbolic
half-space metric, which is curved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import diffgeo
from .errors import ConfigurationError, DegenerateConeError, DomainError, SingularPointError
from .fields import ScalarField


@dataclass(frozen=True)
class ConformalGrowth:
    """Growth field ``W`` of ``G = e^{2W} delta`` with its family parameters."""

    dim: int
    omega: ScalarField
    params: dict = field(default_factory=dict)
    family: str = "custom"

    def metric(self, t=0.0):
        return diffgeo.ConformalMetric(self.omega, t)


@dataclass(frozen=True)
class FlatnessResult:
    """Residuals and verdict of a flatness check."""

    residuals: dict
    tolerance: float
    flat: bool
    spacing: float
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0

    def summary(self):
        """Key/value pairs for line-oriented output."""
        out = {f"residual_{k}": v for k, v in self.residuals.items()}
        out.update({"tolerance": self.tolerance, "verdict": "flat" if self.flat else "non-flat"})
        out.update(self.extra)
        return out


# --------------------------------------------------------------------------
# grids and finite differences
# --------------------------------------------------------------------------
def box_axes(lo, hi, n):
    """Uniform axes for the box ``[lo, hi]`` with ``n`` nodes per axis."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    return [np.linspace(a, b, int(n)) for a, b in zip(lo, hi)]


def _grid(axes):
    axes = [np.asarray(a, dtype=float) for a in axes]
    h = np.array([a[1] - a[0] for a in axes])
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return X, h


def fd_derivatives(values, h, step=1):
    """Central first and second derivatives on nodes ``step`` cells inside.

    The stencil uses offsets ``+-step`` (spacing ``step * h``). Returns
    ``(grad, hess)`` with shapes ``(..., d)`` and ``(..., d, d)``.
    """
    d = values.ndim
    k = int(step)
    h = np.asarray(h, dtype=float) * k

    def shift(off):
        return values[tuple(slice(k + o * k, n - k + o * k) for o, n in zip(off, values.shape))]

    c = shift((0,) * d)
    grad = np.empty(c.shape + (d,))
    hess = np.empty(c.shape + (d, d))
    for i in range(d):
        e = [0] * d
        e[i] = 1
        p = shift(e)
        e[i] = -1
        m = shift(e)
        grad[..., i] = (p - m) / (2 * h[i])
        hess[..., i, i] = (p - 2 * c + m) / h[i] ** 2
        for j in range(i + 1, d):
            acc = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                e = [0] * d
                e[i], e[j] = si, sj
                acc = acc + si * sj * shift(e)
            hess[..., i, j] = hess[..., j, i] = acc / (4 * h[i] * h[j])
    return grad, hess


def _crop(arr, k, d):
    return arr[tuple(slice(k, n - k) for n in arr.shape[:d])]


def richardson_tolerance(residual_fn, values, h, mask=None, safety=10.0):
    """Default tolerance for finite-difference residuals of a grid field.

    ``residual_fn(grad, hess) -> dict`` of residual arrays is evaluated with
    stencil steps ``h`` and ``2h`` on nodes two cells inside the grid. For a
    residual whose exact value is zero the difference is three times the
    ``O(h^2)`` truncation error, so ``safety * max|r_h - r_2h| / 3`` bounds it
    with margin, while a genuinely nonzero residual is left unchanged. A
    round-off floor ``64 eps max(|W| / h^2, |grad W|^2)`` is added.
    ``mask`` selects admissible nodes on the full grid.
    """
    d = values.ndim
    if min(values.shape) < 5:
        raise ConfigurationError("need at least 5 nodes per axis")
    g1, H1 = fd_derivatives(values, h)
    g2, H2 = fd_derivatives(values, h, step=2)
    r1 = residual_fn(_crop(g1, 1, d), _crop(H1, 1, d))
    r2 = residual_fn(g2, H2)
    m2 = None if mask is None else _crop(mask, 2, d)
    est = max(_masked_max(r1[k] - r2[k], m2) for k in r1) / 3.0
    eps = np.finfo(float).eps
    floor = 64 * eps * max(_masked_max(values, mask) / float(np.min(h)) ** 2,
                           _masked_max(g1, _mask_interior(mask)) ** 2, 1e-300)
    return safety * est + floor


def _ricci_tolerance(G, h, ricci, mask, safety=10.0):
    """Richardson bound for the grid-path Ricci residual (same idea, metric subsampled by 2)."""
    coarse = diffgeo.GridMetric(G[::2, ::2, ::2], 2 * np.asarray(h))
    rc = coarse.curvature().ricci.reshape(tuple(n - 2 for n in coarse.shape) + (3, 3))
    m = rc.shape[:3]
    fine = ricci[tuple(slice(1, 2 * k, 2) for k in m)]
    cm = None if mask is None else mask[::2, ::2, ::2][1:-1, 1:-1, 1:-1]
    est = _masked_max(fine - rc, cm) / 3.0
    diag = np.diagonal(G, axis1=-2, axis2=-1)
    ratio = float(np.max(diag) / np.min(diag))
    floor = 64 * np.finfo(float).eps * ratio / float(np.min(h)) ** 2
    return safety * est + floor


def _mask_interior(mask):
    if mask is None:
        return None
    return mask[tuple(slice(1, n - 1) for n in mask.shape)]


def _masked_max(arr, mask):
    # a boolean mask over the leading (grid) axes selects whole tensors
    a = np.abs(arr)
    if mask is not None:
        a = a[mask]
    return float(np.max(a, initial=0.0))


def _sanitize(vals, mask):
    """Zero non-finite samples and drop every node whose stencil touches one."""
    bad = ~np.isfinite(vals)
    if not bad.any():
        return vals, mask
    grown = bad.copy()
    d = vals.ndim
    for axis in range(d):
        g = grown.copy()
        g[tuple(slice(1, None) if i == axis else slice(None) for i in range(d))] |= grown[
            tuple(slice(None, -1) if i == axis else slice(None) for i in range(d))]
        g[tuple(slice(None, -1) if i == axis else slice(None) for i in range(d))] |= grown[
            tuple(slice(1, None) if i == axis else slice(None) for i in range(d))]
        grown = g
    keep = ~grown if mask is None else (mask & ~grown)
    return np.where(bad, 0.0, vals), keep


# --------------------------------------------------------------------------
# 2D
# --------------------------------------------------------------------------
def check_2d(omega: ScalarField, axes, tol=None, exclude=None, t=0.0) -> FlatnessResult:
    """Finite-difference ``max |lap W|`` over the grid interior.

    Parameters
    ----------
    omega : ScalarField
        Field with ``dim = 2``.
    axes : sequence of two 1-D arrays
        Uniform grid axes (at least 5 nodes each).
    tol : float, optional
        Defaults to :func:`richardson_tolerance` of the Laplacian.
    exclude : callable, optional
        ``exclude(X) -> bool mask`` of nodes to ignore (singular sets).
    """
    if len(axes) != 2 or min(len(a) for a in axes) < 5:
        raise ConfigurationError("check_2d needs two axes with at least 5 nodes")
    X, h = _grid(axes)
    mask = None if exclude is None else ~np.asarray(exclude(X), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals, mask = _sanitize(omega(X, t), mask)
    _, hess = fd_derivatives(vals, h)
    mi = _mask_interior(mask)
    lap = hess[..., 0, 0] + hess[..., 1, 1]
    res = _masked_max(lap, mi)
    if tol is None:
        tol = richardson_tolerance(lambda g, H: {"laplacian": H[..., 0, 0] + H[..., 1, 1]}, vals, h, mask)
    tol = float(tol)
    extra = {}
    if omega.has_analytic_derivatives:
        with np.errstate(divide="ignore", invalid="ignore"):
            H = omega.hessian(X, t)
        lap_a = H[..., 0, 0] + H[..., 1, 1]
        ok = np.isfinite(lap_a) if mask is None else mask & np.isfinite(lap_a)
        extra["analytic_laplacian"] = _masked_max(lap_a, ok)
    # the same verdict seen through the curvature kernel
    G = diffgeo.GridMetric(np.exp(2 * vals)[..., None, None] * np.eye(2), h, [a[0] for a in axes])
    scal = G.curvature().scalar.reshape(lap.shape)
    extra["scalar_curvature"] = _masked_max(scal, mi)
    return FlatnessResult({"laplacian": res}, tol, bool(res <= tol), float(np.max(h)), extra)


@dataclass(frozen=True)
class ConeFamily:
    """Radial stress-free family ``e^{2W} = xi R^{2 eta}``.

    ``xi_amplitude`` is the family amplitude; ``deficit_angle`` is the angular
    gap ``2 pi (1 - 1/|c|)`` of the flattened cone with ``c = 1/(1 + eta)``.
    """

    growth: ConformalGrowth
    xi_amplitude: float
    eta: float
    cone_parameter: float
    deficit_angle: float


def radial_cone_family(xi_amplitude, eta) -> ConeFamily:
    """``W = 0.5 ln xi + eta ln R`` in 2D, with its deficit angle."""
    xi_amplitude = float(xi_amplitude)
    eta = float(eta)
    if not xi_amplitude > 0:
        raise ConfigurationError("xi_amplitude must be positive")
    if eta == -1.0:
        raise DegenerateConeError("eta = -1 gives an infinite cone parameter")
    c = 1.0 / (1.0 + eta)
    deficit = 2 * np.pi * (1.0 - 1.0 / abs(c))
    a = 0.5 * np.log(xi_amplitude)

    def f(X, t=0.0):
        X = np.asarray(X, dtype=float)
        return a + 0.5 * eta * np.log(np.sum(X**2, axis=-1))

    def g(X, t=0.0):
        X = np.asarray(X, dtype=float)
        return eta * X / np.sum(X**2, axis=-1)[..., None]

    def hs(X, t=0.0):
        X = np.asarray(X, dtype=float)
        r2 = np.sum(X**2, axis=-1)[..., None, None]
        return eta * (np.eye(2) / r2 - 2 * X[..., :, None] * X[..., None, :] / r2**2)

    field_ = ScalarField(f, 2, g, hs, lambda X, t=0.0: np.zeros(np.shape(X)[:-1]),
                         source=f"0.5*ln({xi_amplitude})+{eta}*ln(R)")
    growth = ConformalGrowth(2, field_, {"xi_amplitude": xi_amplitude, "eta": eta}, "cone")
    return ConeFamily(growth, xi_amplitude, eta, c, float(deficit))


def annulus_exclusion(center=(0.0, 0.0), radius=0.1):
    """Mask function excluding a disc (or ball) around a singular point."""
    center = np.asarray(center, dtype=float)

    def excl(X):
        return np.linalg.norm(X - center, axis=-1) < radius

    return excl


# --------------------------------------------------------------------------
# 3D
# --------------------------------------------------------------------------
def pde_residuals(grad, hess):
    """The six flatness equations evaluated from first/second derivatives."""
    lap = np.trace(hess, axis1=-2, axis2=-1)
    out = {}
    for name, (i, j) in (("12", (0, 1)), ("13", (0, 2)), ("23", (1, 2))):
        out["off_" + name] = hess[..., i, j] - grad[..., i] * grad[..., j]
    sq = grad**2
    for i in range(3):
        others = sq.sum(axis=-1) - sq[..., i]
        out[f"diag_{i + 1}"] = hess[..., i, i] + lap + others
    return out


def check_3d(omega: ScalarField, axes, tol=None, ricci_tol=None, exclude=None, t=0.0) -> FlatnessResult:
    """Residuals of the six flatness PDEs plus the curvature-kernel cross check.

    The verdict is flat only when both the PDE residuals and the Ricci
    residual of ``G = e^{2W} delta`` are within tolerance (both default to a
    Richardson bound on their truncation error, see
    :func:`richardson_tolerance`); ``extra['agree']``
    reports whether the two paths reach the same conclusion.
    """
    if len(axes) != 3 or min(len(a) for a in axes) < 5:
        raise ConfigurationError("check_3d needs three axes with at least 5 nodes")
    X, h = _grid(axes)
    mask = None if exclude is None else ~np.asarray(exclude(X), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals, mask = _sanitize(omega(X, t), mask)
    grad, hess = fd_derivatives(vals, h)
    mi = _mask_interior(mask)
    res = {k: _masked_max(v, mi) for k, v in pde_residuals(grad, hess).items()}
    tol = richardson_tolerance(pde_residuals, vals, h, mask) if tol is None else float(tol)
    Gv = np.exp(2 * vals)[..., None, None] * np.eye(3)
    rep = diffgeo.GridMetric(Gv, h, [a[0] for a in axes]).curvature()
    ric = rep.ricci.reshape(vals.shape[0] - 2, vals.shape[1] - 2, vals.shape[2] - 2, 3, 3)
    ricci_res = _masked_max(ric, mi)
    rtol = _ricci_tolerance(Gv, h, ric, mask) if ricci_tol is None else float(ricci_tol)
    pde_flat = bool(max(res.values()) <= tol)
    ricci_flat = bool(ricci_res <= rtol)
    extra = {"ricci_residual": ricci_res, "ricci_tolerance": rtol,
             "pde_flat": pde_flat, "ricci_flat": ricci_flat, "agree": pde_flat == ricci_flat}
    return FlatnessResult(res, tol, pde_flat and ricci_flat, float(np.max(h)), extra)


@dataclass(frozen=True)
class GeneralSolution:
    """``W = -ln(c0 |X|^2 + c.X + c4)`` with its constant sectional curvature."""

    growth: ConformalGrowth
    c0: float
    c: tuple
    c4: float

    @property
    def sectional_curvature(self):
        """``K = 4 c0 c4 - |c|^2``; zero exactly for the flat members."""
        return 4 * self.c0 * self.c4 - float(np.dot(self.c, self.c))

    @property
    def is_flat_member(self):
        scale = max(1.0, abs(4 * self.c0 * self.c4), float(np.dot(self.c, self.c)))
        return abs(self.sectional_curvature) <= 1e-12 * scale

    def argument(self, X):
        X = np.asarray(X, dtype=float)
        return self.c0 * np.sum(X**2, axis=-1) + X @ np.asarray(self.c) + self.c4

    def check_domain(self, X):
        """Raise :class:`DomainError` unless the logarithm's argument is positive."""
        if np.any(self.argument(X) <= 0):
            raise DomainError("c0|X|^2 + c.X + c4 must be positive on the domain")


def general_solution(c0, c1, c2, c3, c4) -> GeneralSolution:
    """Member of the conformal family ``W = -ln(c0 |X|^2 + c1 X1 + c2 X2 + c3 X3 + c4)``."""
    c0, c4 = float(c0), float(c4)
    c = np.array([c1, c2, c3], dtype=float)

    def q(X):
        return c0 * np.sum(X**2, axis=-1) + X @ c + c4

    def f(X, t=0.0):
        return -np.log(q(np.asarray(X, dtype=float)))

    def g(X, t=0.0):
        X = np.asarray(X, dtype=float)
        return -(2 * c0 * X + c) / q(X)[..., None]

    def hs(X, t=0.0):
        X = np.asarray(X, dtype=float)
        qq = q(X)[..., None, None]
        dq = 2 * c0 * X + c
        return -2 * c0 * np.eye(3) / qq + dq[..., :, None] * dq[..., None, :] / qq**2

    text = f"-ln({c0}*R^2+{c[0]}*X1+{c[1]}*X2+{c[2]}*X3+{c4})"
    fld = ScalarField(f, 3, g, hs, lambda X, t=0.0: np.zeros(np.shape(X)[:-1]), source=text)
    params = {"c0": c0, "c1": c[0], "c2": c[1], "c3": c[2], "c4": c4}
    return GeneralSolution(ConformalGrowth(3, fld, params, "general"), c0, tuple(c), c4)


def inversion_family(c, center=(0.0, 0.0, 0.0)) -> GeneralSolution:
    """Flat member ``W = -ln(c |X - X0|^2)`` (inversion about ``X0``)."""
    x0 = np.asarray(center, dtype=float)
    c = float(c)
    return general_solution(c, *(-2 * c * x0), c * float(x0 @ x0))


def poincare_half_space(c1) -> GeneralSolution:
    """Only-``c1`` member ``G = delta / (c1 X1)^2``: the hyperbolic half space (curved)."""
    return general_solution(0.0, c1, 0.0, 0.0, 0.0)


def inversion_map(c, X):
    """Radial inversion ``X -> X / (c |X|^2)`` (so ``|X~| = 1 / (c R)``)."""
    c = float(c)
    if c == 0:
        raise ConfigurationError("inversion constant c must be nonzero")
    X = np.asarray(X, dtype=float)
    r2 = np.sum(X**2, axis=-1)
    if np.any(r2 == 0):
        raise SingularPointError("inversion is singular at the origin")
    return X / (c * r2)[..., None]


def pullback_metric(mapping, X, h=1e-5):
    """``DF^T DF`` of a map ``R^3 -> R^3`` by central differences (oracle path)."""
    X = np.asarray(X, dtype=float)
    d = X.shape[-1]
    J = np.empty(X.shape + (d,))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[..., :, j] = (mapping(X + e) - mapping(X - e)) / (2 * h)
    return np.swapaxes(J, -1, -2) @ J
