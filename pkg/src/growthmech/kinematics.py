"""Deformation kinematics and the bridge to the ``F = Fe Fg`` decomposition.

Radial maps ``(R, Theta[, Phi]) -> (r(R), Theta[, Phi])`` act between polar
(or spherical) material and spatial charts, so ``F = diag(r', 1[, 1])``. The
spatial metric is the Euclidean one in the matching chart,
``g = diag(1, r^2[, r^2 sin^2 theta])``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .diffgeo import RadialMetric, check_spd
from .errors import DecompositionError, DefinitenessError, DomainError, OrientationError


# --------------------------------------------------------------------------
# radial maps
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialMap:
    """An orientation-preserving radial map ``r(R)`` on ``[R1, R2]``.

    ``r`` and ``dr`` are vectorized callables; ``family`` matches the driving
    :class:`~growthmech.diffgeo.RadialMetric` (``iso2d``, ``aniso2d``, ``iso3d``).
    """

    family: str
    R1: float
    R2: float
    r: Callable
    dr: Callable

    @property
    def dim(self):
        return 3 if self.family == "iso3d" else 2

    @property
    def r1(self):
        return float(self.r(np.array([self.R1]))[0])

    @property
    def r2(self):
        return float(self.r(np.array([self.R2]))[0])

    def check(self, R):
        R = np.atleast_1d(np.asarray(R, dtype=float))
        tol = 1e-12 * max(1.0, abs(self.R2))
        if np.any(R < self.R1 - tol) or np.any(R > self.R2 + tol):
            raise DomainError(f"R outside [{self.R1}, {self.R2}]")
        return R

    @classmethod
    def identity(cls, family, R1, R2):
        return cls(family, R1, R2, lambda R: np.asarray(R, dtype=float) * 1.0,
                   lambda R: np.ones(np.shape(R)))

    @classmethod
    def from_samples(cls, family, R, r):
        """Map from samples; ``dr`` by second-order central differences (an oracle path)."""
        R = np.asarray(R, dtype=float)
        r = np.asarray(r, dtype=float)
        dr = np.gradient(r, R, edge_order=2)
        return cls(family, float(R[0]), float(R[-1]),
                   lambda x: np.interp(x, R, r), lambda x: np.interp(x, R, dr))


def deformation_gradient(rmap: RadialMap, R):
    """``F = diag(r', 1[, 1])`` and its inverse, shape ``(N, d, d)``."""
    R = rmap.check(R)
    dr = np.asarray(rmap.dr(R), dtype=float)
    if np.any(dr <= 0):
        raise OrientationError("map is not orientation preserving (dr/dR <= 0)")
    d = rmap.dim
    F = np.zeros((R.size, d, d))
    Finv = np.zeros_like(F)
    F[:, 0, 0] = dr
    Finv[:, 0, 0] = 1.0 / dr
    for i in range(1, d):
        F[:, i, i] = 1.0
        Finv[:, i, i] = 1.0
    return F, Finv


def spatial_metric(rmap: RadialMap, R, theta=np.pi / 2):
    """Euclidean metric in the spatial polar/spherical chart at ``r(R)``."""
    R = rmap.check(R)
    r = np.asarray(rmap.r(R), dtype=float)
    d = rmap.dim
    g = np.zeros((R.size, d, d))
    g[:, 0, 0] = 1.0
    g[:, 1, 1] = r**2
    if d == 3:
        g[:, 2, 2] = (r * np.sin(theta)) ** 2
    return g


def _material(metric: RadialMetric, R, theta=np.pi / 2):
    R = np.atleast_1d(np.asarray(R, dtype=float))
    pts = np.zeros((R.size, metric.dim))
    pts[:, 0] = R
    if metric.dim == 3:
        pts[:, 1] = theta
    return np.atleast_3d(metric.metric(pts)).reshape(R.size, metric.dim, metric.dim)


def jacobian(rmap: RadialMap, metric: RadialMetric, R, theta=np.pi / 2):
    """``J = sqrt(det g / det G) det F`` at each ``R``."""
    F, _ = deformation_gradient(rmap, R)
    g = spatial_metric(rmap, R, theta)
    G = _material(metric, R, theta)
    return np.sqrt(np.linalg.det(g) / np.linalg.det(G)) * np.linalg.det(F)


def cauchy_green(rmap: RadialMap, metric: RadialMetric, R, theta=np.pi / 2):
    """Return ``(C^A_B, C_AB)`` with ``C_AB = g_ab F^a_A F^b_B``."""
    F, _ = deformation_gradient(rmap, R)
    g = spatial_metric(rmap, R, theta)
    C = np.einsum("nab,naA,nbB->nAB", g, F, F)
    G = _material(metric, R, theta)
    return np.linalg.solve(G, C), C


def trace_G(C_lower, G):
    """``tr_G C = G^{AB} C_AB``."""
    return np.einsum("...ab,...ab->...", np.linalg.inv(G), C_lower)


# --------------------------------------------------------------------------
# frames and decomposition
# --------------------------------------------------------------------------
def _spd_power(G, p):
    w, V = np.linalg.eigh(G)
    if np.any(w <= 0):
        raise DefinitenessError("matrix is not positive-definite")
    return (V * w[..., None, :] ** p) @ np.swapaxes(V, -1, -2)


@dataclass(frozen=True)
class Frame:
    """G-orthonormal frame.

    ``hat[:, B]`` are the frame vectors in coordinates (``hat = G^{-1/2}``,
    the canonical symmetric choice); ``coframe`` is its transposed inverse
    ``G^{1/2}``, so ``G = coframe coframe^T`` and ``hat^T G hat = I``.
    """

    hat: np.ndarray
    coframe: np.ndarray

    def rotated(self, Q):
        """Another valid frame ``hat Q`` for orthogonal ``Q``."""
        Q = np.asarray(Q, dtype=float)
        return Frame(self.hat @ Q, self.coframe @ Q)


def orthonormal_frame(G) -> Frame:
    """Canonical orthonormal frame ``G^{-1/2}`` (deterministic gauge choice)."""
    G = check_spd(np.asarray(G, dtype=float))
    hat = _spd_power(G, -0.5)
    co = _spd_power(G, 0.5)
    return Frame(hat, co)


@dataclass(frozen=True)
class GrowthDecomposition:
    """``F = Fe Fg`` with ``Fg = G^{1/2}`` and ``Fe = F Fg^{-1}``.

    ``Fe`` keeps the spatial coordinate basis so that ``F = Fe Fg`` holds;
    ``Fe_hat = g^{1/2} Fe`` is the fully orthonormal version whose
    determinant is the Jacobian ``J``.
    """

    F: np.ndarray
    Fg: np.ndarray
    Fe: np.ndarray
    G: np.ndarray
    g: np.ndarray
    Lg: Optional[np.ndarray] = None

    @property
    def Fe_hat(self):
        return _spd_power(self.g, 0.5) @ self.Fe

    @property
    def J(self):
        return np.sqrt(np.linalg.det(self.g) / np.linalg.det(self.G)) * np.linalg.det(self.F)

    @property
    def det_Fe(self):
        return np.linalg.det(self.Fe_hat)

    @property
    def Ce(self):
        """Elastic Cauchy-Green tensor ``Fe^T g Fe`` (orthonormal material frame)."""
        return np.swapaxes(self.Fe, -1, -2) @ self.g @ self.Fe

    def reassembled(self):
        return self.Fe @ self.Fg

    def energy_bridge(self, mu=1.0):
        """``(mu tr Ce, mu tr_G C)``; these coincide for every decomposition."""
        C = np.swapaxes(self.F, -1, -2) @ self.g @ self.F
        return mu * np.trace(self.Ce, axis1=-2, axis2=-1), mu * trace_G(C, self.G)


def decompose(F, G, g=None, Gdot=None) -> GrowthDecomposition:
    """Split ``F`` into elastic and growth parts using the canonical frame.

    Parameters
    ----------
    F : array_like, shape (..., d, d)
    G : array_like, shape (..., d, d)
        Material metric (SPD).
    g : array_like, optional
        Spatial metric; identity by default.
    Gdot : array_like, optional
        Metric rate; when given, ``Lg = dFg/dt Fg^{-1}`` is filled in by
        solving ``Fg X + X Fg = Gdot`` for ``X = dFg/dt``.
    """
    F = np.asarray(F, dtype=float)
    G = check_spd(np.asarray(G, dtype=float))
    d = F.shape[-1]
    g = np.broadcast_to(np.eye(d), F.shape).copy() if g is None else check_spd(np.asarray(g, dtype=float), "spatial metric")
    detF = np.linalg.det(F)
    if np.any(np.abs(detF) <= 1e-300) or not np.all(np.isfinite(detF)):
        raise DecompositionError("deformation gradient is singular")
    Fg = _spd_power(G, 0.5)
    Fe = F @ _spd_power(G, -0.5)
    Lg = None
    if Gdot is not None:
        Lg = _sym_sqrt_rate(Fg, np.asarray(Gdot, dtype=float)) @ np.linalg.inv(Fg)
    return GrowthDecomposition(F, Fg, Fe, G, g, Lg)


def _sym_sqrt_rate(S, Sdot2):
    """Solve ``S X + X S = Sdot2`` for symmetric SPD ``S`` (eigenbasis formula)."""
    w, V = np.linalg.eigh(S)
    Vt = np.swapaxes(V, -1, -2)
    B = Vt @ Sdot2 @ V
    X = B / (w[..., :, None] + w[..., None, :])
    return V @ X @ Vt


def growth_trace_identity(G_family, t, Gdot=None, dt=None):
    """Return ``(tr_G Gdot, 2 tr Lg)`` for a time family of metrics.

    ``tr_G Gdot`` uses ``Gdot`` (analytic if given, else central differences
    of ``G_family``); ``tr Lg`` differentiates ``Fg = G^{1/2}`` by central
    differences, so the two values come from separate computations.
    """
    dt = 1e-6 * max(1.0, abs(t)) if dt is None else dt
    G = np.asarray(G_family(t), dtype=float)
    if Gdot is None:
        Gdot = (np.asarray(G_family(t + dt)) - np.asarray(G_family(t - dt))) / (2 * dt)
    lhs = trace_G(np.asarray(Gdot, dtype=float), G)
    Fg_dot = (_spd_power(np.asarray(G_family(t + dt)), 0.5) - _spd_power(np.asarray(G_family(t - dt)), 0.5)) / (2 * dt)
    Lg = Fg_dot @ np.linalg.inv(_spd_power(G, 0.5))
    return lhs, 2.0 * np.trace(Lg, axis1=-2, axis2=-1)


# --------------------------------------------------------------------------
# growth connection
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class GrowthConnection:
    """Connection ``Gam^I_JK = Fg^I_A d_K (Fg^{-1})^A_J`` on a grid.

    ``gamma`` and ``torsion`` live on nodes one cell inside the boundary,
    ``curvature`` on nodes two cells inside.
    """

    gamma: np.ndarray
    torsion: np.ndarray
    curvature: np.ndarray

    @property
    def curvature_residual(self):
        return float(np.max(np.abs(self.curvature), initial=0.0))

    @property
    def torsion_norm(self):
        return float(np.max(np.abs(self.torsion), initial=0.0))


def _central(arr, axis_count, h):
    """Central differences along each of the leading ``axis_count`` axes (interior)."""
    shape = arr.shape[:axis_count]
    inner = tuple(slice(1, n - 1) for n in shape)
    out = []
    for k in range(axis_count):
        plus = tuple(slice(2, None) if i == k else s for i, s in enumerate(inner))
        minus = tuple(slice(None, -2) if i == k else s for i, s in enumerate(inner))
        out.append((arr[plus] - arr[minus]) / (2 * h[k]))
    return np.stack(out, axis=-1)


def growth_connection(Fg_values, spacing) -> GrowthConnection:
    """Connection, torsion and curvature of a sampled growth tensor field.

    Parameters
    ----------
    Fg_values : ndarray, shape ``(n_0, ..., n_{d-1}, d, d)``
    spacing : float or sequence
    """
    Fg = np.asarray(Fg_values, dtype=float)
    d = Fg.shape[-1]
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (d,))
    if min(Fg.shape[:d]) < 5:
        raise DomainError("growth connection needs at least 5 nodes per axis")
    det = np.linalg.det(Fg)
    if np.any(np.abs(det) < 1e-300):
        raise DecompositionError("growth tensor is singular at a node")
    Finv = np.linalg.inv(Fg)
    dFinv = _central(Finv, d, h)  # (..., A, J, K)
    inner = tuple(slice(1, n - 1) for n in Fg.shape[:d])
    gamma = np.einsum("...IA,...AJK->...IJK", Fg[inner], dFinv)
    torsion = gamma - np.swapaxes(gamma, -1, -2)
    dgam = _central(gamma, d, h)  # (..., I, L, K, J) = d_J Gam^I_LK
    g2 = gamma[tuple(slice(1, n - 1) for n in gamma.shape[:d])]
    curv = (
        np.einsum("...ILKJ->...ILJK", dgam)
        - dgam
        + np.einsum("...IMJ,...MLK->...ILJK", g2, g2)
        - np.einsum("...IMK,...MLJ->...ILJK", g2, g2)
    )
    return GrowthConnection(gamma, torsion, curv)
