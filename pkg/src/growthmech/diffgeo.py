"""Riemannian machinery: metrics, Christoffel symbols, curvature and flatness.

Two independent curvature paths are provided.

* Analytic metrics (:class:`RadialMetric`, :class:`ConformalMetric`) supply
  closed-form ``G``, ``dG`` and ``ddG``; curvature is assembled from the
  Christoffel symbols and their derivatives,
  ``R^a_bcd = d_c Gam^a_db - d_d Gam^a_cb + Gam^a_ce Gam^e_db - Gam^a_de Gam^e_cb``.
* :class:`GridMetric` samples ``G`` on a lattice; ``dG`` and ``ddG`` come from
  central differences and the fully covariant tensor is built directly from
  second derivatives of the metric by the compiled kernel. This route is exact
  on metrics quadratic in the coordinates.

Index layout used throughout: ``gamma[..., k, i, j] = Gam^k_ij``,
``riemann[..., a, b, c, d] = R^a_bcd``, ``dG[..., c, a, b] = d_c G_ab`` and
``ddG[..., c, e, a, b] = d_c d_e G_ab``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DefinitenessError, DomainError
from .fields import ScalarField

FAMILIES = ("iso2d", "aniso2d", "iso3d")


@dataclass(frozen=True)
class CurvatureReport:
    """Curvature at a set of query points (leading axis indexes points)."""

    christoffel: np.ndarray
    riemann: np.ndarray
    riemann_lower: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    points: np.ndarray = field(repr=False)

    @property
    def norms(self):
        return {
            "riemann": float(np.max(np.abs(self.riemann), initial=0.0)),
            "ricci": float(np.max(np.abs(self.ricci), initial=0.0)),
            "scalar": float(np.max(np.abs(self.scalar), initial=0.0)),
        }


def check_spd(G, what="metric"):
    """Raise :class:`DefinitenessError` unless every ``G[..., :, :]`` is SPD.

    Uses Sylvester's criterion (all leading principal minors positive) and a
    symmetry check.
    """
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    scale = np.max(np.abs(G), initial=1.0)
    if not np.allclose(G, np.swapaxes(G, -1, -2), rtol=0, atol=1e-12 * scale):
        raise DefinitenessError(f"{what} is not symmetric")
    for k in range(1, d + 1):
        minors = np.linalg.det(G[..., :k, :k])
        if not np.all(minors > 0):
            raise DefinitenessError(f"{what} is not positive-definite (leading minor {k})")
    return G


def curvature_from_derivatives(G, dG, ddG):
    """Christoffel-based curvature from analytic ``G``, ``dG``, ``ddG``.

    Shapes are ``(N, d, d)``, ``(N, d, d, d)`` and ``(N, d, d, d, d)``.
    Returns ``(gamma, riemann_upper, riemann_lower, ricci, scalar)``.
    """
    Ginv = np.linalg.inv(G)
    gam1 = 0.5 * (np.einsum("nija->naij", dG) + np.einsum("njia->naij", dG) - dG)
    gamma = np.einsum("nka,naij->nkij", Ginv, gam1)
    # d_c of the first-kind symbols and of the inverse metric
    dgam1 = 0.5 * (
        np.einsum("ncija->ncaij", ddG) + np.einsum("ncjia->ncaij", ddG) - ddG
    )
    dGinv = -np.einsum("nkp,ncpq,nqa->ncka", Ginv, dG, Ginv)
    dgamma = np.einsum("ncka,naij->nckij", dGinv, gam1) + np.einsum("nka,ncaij->nckij", Ginv, dgam1)
    riem = (
        np.einsum("ncadb->nabcd", dgamma)
        - np.einsum("ndacb->nabcd", dgamma)
        + np.einsum("nace,nedb->nabcd", gamma, gamma)
        - np.einsum("nade,necb->nabcd", gamma, gamma)
    )
    lower = np.einsum("nae,nebcd->nabcd", G, riem)
    ricci = np.einsum("ncacb->nab", riem)
    scalar = np.einsum("nab,nab->n", Ginv, ricci)
    return gamma, riem, lower, ricci, scalar


class _AnalyticMetric:
    """Shared behaviour of metrics with closed-form derivatives."""

    dim: int

    def components(self, points):
        """Return ``(G, dG, ddG)`` at ``points`` of shape ``(N, dim)``."""
        raise NotImplementedError

    def _points(self, point):
        P = np.atleast_2d(np.asarray(point, dtype=float))
        if P.shape[-1] != self.dim:
            raise DomainError(f"expected points with {self.dim} coordinates, got {P.shape[-1]}")
        self.check_domain(P)
        return P

    def check_domain(self, P):
        pass

    def metric(self, point):
        P = self._points(point)
        G = self.components(P)[0]
        check_spd(G)
        return G if np.ndim(point) > 1 else G[0]

    def curvature(self, point) -> CurvatureReport:
        P = self._points(point)
        G, dG, ddG = self.components(P)
        check_spd(G)
        gamma, riem, lower, ricci, scalar = curvature_from_derivatives(G, dG, ddG)
        return CurvatureReport(gamma, riem, lower, ricci, scalar, P)


class RadialMetric(_AnalyticMetric):
    """Rotationally symmetric material metric driven by conformal factors.

    Parameters
    ----------
    family : {"iso2d", "aniso2d", "iso3d"}
        ``iso2d``: ``diag(e^{2W}, R^2 e^{2W})`` in ``(R, Theta)``.
        ``aniso2d``: ``diag(e^{2W}, R^2 e^{2P})`` with ``P = -W`` unless a
        separate ``pi`` field is given.
        ``iso3d``: ``e^{2W} diag(1, R^2, R^2 sin^2 Theta)`` in
        ``(R, Theta, Phi)`` with ``Theta`` the polar angle.
    omega, pi : ScalarField
        Radial fields (``dim = 1``).
    domain : (float, float)
        Admissible radii ``[R_min, R_max]``.
    t : float
        Time at which the fields are frozen.
    """

    def __init__(self, family, omega, pi=None, domain=(0.0, np.inf), t=0.0):
        family = str(family).lower()
        if family not in FAMILIES:
            raise ConfigurationError(f"unknown metric family {family!r}; choose from {FAMILIES}")
        if pi is not None and family != "aniso2d":
            raise ConfigurationError("a separate Pi field only applies to the aniso2d family")
        self.family = family
        self.omega = omega if isinstance(omega, ScalarField) else ScalarField.constant(omega)
        self.pi = pi
        self.domain = (float(domain[0]), float(domain[1]))
        self.t = float(t)
        self.dim = 3 if family == "iso3d" else 2

    def check_domain(self, P):
        R = P[:, 0]
        lo, hi = self.domain
        if np.any(R <= 0) or np.any(R < lo) or np.any(R > hi):
            raise DomainError(f"radius outside domain [{lo}, {hi}] (and R > 0)")
        if self.family == "iso3d":
            s = np.sin(P[:, 1])
            if np.any(np.abs(s) < 1e-14):
                raise DefinitenessError("metric is singular on the polar axis (sin Theta = 0)")

    def _factors(self, R):
        """Values and first/second R-derivatives of the two diagonal factors."""
        t = self.t
        w = self.omega.radial(R, t)
        w1 = self.omega.radial_d1(R, t)
        w2 = self.omega.radial_d2(R, t)
        if self.family == "aniso2d":
            if self.pi is None:
                q, q1, q2 = -w, -w1, -w2
            else:
                q = self.pi.radial(R, t)
                q1 = self.pi.radial_d1(R, t)
                q2 = self.pi.radial_d2(R, t)
        else:
            q, q1, q2 = w, w1, w2
        return w, w1, w2, q, q1, q2

    def components(self, P):
        R = P[:, 0]
        n = R.size
        d = self.dim
        w, w1, w2, q, q1, q2 = self._factors(R)
        G = np.zeros((n, d, d))
        dG = np.zeros((n, d, d, d))
        ddG = np.zeros((n, d, d, d, d))
        a = np.exp(2 * w)
        G[:, 0, 0] = a
        dG[:, 0, 0, 0] = 2 * w1 * a
        ddG[:, 0, 0, 0, 0] = (2 * w2 + 4 * w1**2) * a
        # b(R) = R^2 e^{2q}
        e = np.exp(2 * q)
        b = R**2 * e
        b1 = (2 * R + 2 * R**2 * q1) * e
        b2 = (2 + 8 * R * q1 + 2 * R**2 * q2 + 4 * R**2 * q1**2) * e
        G[:, 1, 1] = b
        dG[:, 0, 1, 1] = b1
        ddG[:, 0, 0, 1, 1] = b2
        if d == 3:
            th = P[:, 1]
            s2 = np.sin(th) ** 2
            ds2 = 2 * np.sin(th) * np.cos(th)
            dds2 = 2 * np.cos(2 * th)
            G[:, 2, 2] = b * s2
            dG[:, 0, 2, 2] = b1 * s2
            dG[:, 1, 2, 2] = b * ds2
            ddG[:, 0, 0, 2, 2] = b2 * s2
            ddG[:, 0, 1, 2, 2] = b1 * ds2
            ddG[:, 1, 0, 2, 2] = b1 * ds2
            ddG[:, 1, 1, 2, 2] = b * dds2
        return G, dG, ddG

    def christoffel_closed_form(self, point):
        """Hand-derived nonzero symbols for each family; shape ``(N, d, d, d)``."""
        P = self._points(point)
        R = P[:, 0]
        w, w1, w2, q, q1, q2 = self._factors(R)
        d = self.dim
        gam = np.zeros((R.size, d, d, d))
        gam[:, 0, 0, 0] = w1
        if self.family == "aniso2d":
            gam[:, 0, 1, 1] = -R * np.exp(2 * q - 2 * w) * (1 + R * q1)
            gam[:, 1, 0, 1] = gam[:, 1, 1, 0] = 1 / R + q1
            return gam
        gam[:, 0, 1, 1] = -R - R**2 * w1
        gam[:, 1, 0, 1] = gam[:, 1, 1, 0] = 1 / R + w1
        if d == 3:
            th = P[:, 1]
            s, c = np.sin(th), np.cos(th)
            gam[:, 0, 2, 2] = (-R - R**2 * w1) * s**2
            gam[:, 1, 2, 2] = -s * c
            gam[:, 2, 0, 2] = gam[:, 2, 2, 0] = 1 / R + w1
            gam[:, 2, 1, 2] = gam[:, 2, 2, 1] = c / s
        return gam

    def scalar_closed_form(self, R):
        """Scalar curvature in closed form (``-2 e^{-2W} lap W`` for iso2d)."""
        R = np.asarray(R, dtype=float)
        w, w1, w2, q, q1, q2 = self._factors(R)
        if self.family == "iso2d":
            return -2 * np.exp(-2 * w) * (w2 + w1 / R)
        if self.family == "iso3d":
            # conformal factor on flat R^3: -e^{-2W} (4 lap W + 2 |grad W|^2)
            lap = w2 + 2 * w1 / R
            return -np.exp(-2 * w) * (4 * lap + 2 * w1**2)
        # M = e^W, N = R e^q: scalar = 2K, K = -(1/(MN)) d/dR (N'/M)
        M = np.exp(w)
        N = R * np.exp(q)
        N1 = np.exp(q) * (1 + R * q1)
        N2 = np.exp(q) * (q1 * (1 + R * q1) + q1 + R * q2)
        deriv = (N2 * M - N1 * M * w1) / M**2
        return -2 * deriv / (M * N)


class ConformalMetric(_AnalyticMetric):
    """``G = e^{2W} delta`` on a Cartesian chart, with analytic derivatives of W."""

    def __init__(self, omega: ScalarField, t=0.0, domain=None):
        self.omega = omega
        self.dim = omega.dim
        self.t = float(t)
        self.domain = domain

    def check_domain(self, P):
        if self.domain is None:
            return
        lo = np.asarray(self.domain[0], dtype=float)
        hi = np.asarray(self.domain[1], dtype=float)
        if np.any(P < lo) or np.any(P > hi):
            raise DomainError("point outside the declared box")

    def components(self, P):
        d = self.dim
        w = self.omega(P, self.t)
        g = self.omega.gradient(P, self.t)
        H = self.omega.hessian(P, self.t)
        e = np.exp(2 * w)
        eye = np.eye(d)
        G = e[:, None, None] * eye
        dG = (2 * g * e[:, None])[:, :, None, None] * eye
        ddG = ((2 * H + 4 * g[:, :, None] * g[:, None, :]) * e[:, None, None])[..., None, None] * eye
        return G, dG, ddG


class GridMetric:
    """A symmetric metric sampled on a uniform Cartesian lattice.

    Parameters
    ----------
    values : ndarray, shape ``(n_0, ..., n_{d-1}, d, d)``
    spacing : float or sequence of float
        Lattice spacing per axis.
    origin : sequence of float, optional
        Chart coordinates of node ``(0, ..., 0)``.
    """

    def __init__(self, values, spacing, origin=None):
        values = np.asarray(values, dtype=float)
        d = values.shape[-1]
        if values.ndim != d + 2 or values.shape[-2] != d or d not in (1, 2, 3):
            raise ConfigurationError("values must have shape (n_0, ..., n_{d-1}, d, d) with d in 1..3")
        self.dim = d
        self.values = check_spd(values, "grid metric")
        self.spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (d,)).copy()
        if np.any(self.spacing <= 0):
            raise ConfigurationError("spacing must be positive")
        self.origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=float)
        self.shape = values.shape[:d]

    @classmethod
    def from_function(cls, func, axes):
        """Sample ``func(X) -> (..., d, d)`` on the tensor grid of 1-D ``axes``."""
        axes = [np.asarray(a, dtype=float) for a in axes]
        h = []
        for a in axes:
            steps = np.diff(a)
            if a.size < 2 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ConfigurationError("axes must be uniform with at least 2 nodes")
            h.append(steps[0])
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(func(X), h, [a[0] for a in axes])

    @classmethod
    def conformal(cls, omega: ScalarField, axes, t=0.0):
        """``G = e^{2W} delta`` sampled on a grid."""
        d = len(axes)
        return cls.from_function(lambda X: np.exp(2 * omega(X, t))[..., None, None] * np.eye(d), axes)

    def coordinates(self):
        axes = [self.origin[i] + self.spacing[i] * np.arange(n) for i, n in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def _interior(self):
        return tuple(slice(1, n - 1) for n in self.shape)

    def _shift(self, offsets):
        return self.values[tuple(slice(1 + o, n - 1 + o) for o, n in zip(offsets, self.shape))]

    def derivatives(self):
        """Central-difference ``dG`` and ``ddG`` at interior nodes.

        Returns arrays with the interior lattice shape leading.
        """
        if min(self.shape) < 3:
            raise ConfigurationError("need at least 3 nodes per axis for derivatives")
        d = self.dim
        h = self.spacing
        centre = self._shift((0,) * d)
        ishape = centre.shape[:d]
        dG = np.empty(ishape + (d, d, d))
        ddG = np.empty(ishape + (d, d, d, d))
        for c in range(d):
            e = [0] * d
            e[c] = 1
            plus = self._shift(e)
            e[c] = -1
            minus = self._shift(e)
            dG[..., c, :, :] = (plus - minus) / (2 * h[c])
            ddG[..., c, c, :, :] = (plus - 2 * centre + minus) / h[c] ** 2
            for k in range(c + 1, d):
                acc = 0.0
                for sc, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    e = [0] * d
                    e[c] = sc
                    e[k] = sk
                    acc = acc + sc * sk * self._shift(e)
                v = acc / (4 * h[c] * h[k])
                ddG[..., c, k, :, :] = v
                ddG[..., k, c, :, :] = v
        return dG, ddG

    def curvature(self, backend=None) -> CurvatureReport:
        """Curvature at all interior nodes (boundary nodes are excluded)."""
        kern = _kernels if backend is None else backend
        dG, ddG = self.derivatives()
        d = self.dim
        G = self.values[self._interior()]
        ishape = G.shape[:d]
        n = int(np.prod(ishape))
        gamma, lower, ricci, scalar = kern.metric_curvature(
            G.reshape(n, d, d), dG.reshape(n, d, d, d), ddG.reshape(n, d, d, d, d)
        )
        Ginv = np.linalg.inv(G.reshape(n, d, d))
        upper = np.einsum("nae,nebcd->nabcd", Ginv, lower)
        pts = self.coordinates()[self._interior()].reshape(n, d)
        return CurvatureReport(gamma, upper, lower, ricci, scalar, pts)

    def node_index(self, point):
        """Lattice index of an interior node given its coordinates."""
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise DomainError(f"expected a point with {self.dim} coordinates")
        idx = (p - self.origin) / self.spacing
        near = np.rint(idx)
        if np.any(np.abs(idx - near) > 1e-8):
            raise DomainError("point is not a lattice node")
        near = near.astype(int)
        if np.any(near < 1) or np.any(near > np.array(self.shape) - 2):
            raise DomainError("point must be an interior node (one cell from the boundary)")
        return tuple(int(i) for i in near)

    def curvature_at(self, point, backend=None) -> CurvatureReport:
        idx = self.node_index(point)
        sub = tuple(slice(i - 1, i + 2) for i in idx)
        local = GridMetric(self.values[sub], self.spacing, self.origin + (np.array(idx) - 1) * self.spacing)
        return local.curvature(backend)


Metric = RadialMetric | ConformalMetric | GridMetric


def _report(metric, point) -> CurvatureReport:
    if isinstance(metric, GridMetric):
        P = np.atleast_2d(np.asarray(point, dtype=float))
        reps = [metric.curvature_at(p) for p in P]
        cat = lambda name: np.concatenate([getattr(r, name) for r in reps])  # noqa: E731
        return CurvatureReport(cat("christoffel"), cat("riemann"), cat("riemann_lower"),
                               cat("ricci"), cat("scalar"), P)
    return metric.curvature(point)


def christoffel(metric, point):
    """``Gam^k_ij`` at ``point`` (single point -> ``(d, d, d)``, many -> ``(N, d, d, d)``).

    Radial families use their closed forms; grids use central differences.
    """
    single = np.ndim(point) == 1
    if isinstance(metric, RadialMetric):
        out = metric.christoffel_closed_form(point)
    else:
        out = _report(metric, point).christoffel
    return out[0] if single else out


def riemann(metric, point) -> CurvatureReport:
    """Full curvature report at ``point`` (one or many points)."""
    return _report(metric, point)


def ricci_scalar(metric, point):
    """``(R_AB, scalar)`` at ``point``."""
    rep = _report(metric, point)
    if np.ndim(point) == 1:
        return rep.ricci[0], float(rep.scalar[0])
    return rep.ricci, rep.scalar


def flatness_residual(metric: GridMetric, backend=None) -> float:
    """Max-abs curvature over the interior of a grid metric.

    In 3D this is the Ricci tensor (which determines the full curvature); in
    2D the scalar curvature suffices; 1-D metrics are always flat.
    """
    if not isinstance(metric, GridMetric):
        raise ConfigurationError("flatness_residual expects a GridMetric")
    if min(metric.shape) < 5:
        raise ConfigurationError("flatness check needs at least 5 nodes per axis")
    if metric.dim == 1:
        return 0.0
    rep = metric.curvature(backend)
    if metric.dim == 2:
        return rep.norms["scalar"]
    return rep.norms["ricci"]


def default_flat_tolerance(metric: GridMetric) -> float:
    """``10 h^2 |G|``: the grid-path tolerance used for flatness verdicts."""
    h = float(np.max(metric.spacing))
    return 10.0 * h * h * float(np.max(np.abs(metric.values)))


def is_flat(metric, tol=None) -> bool:
    tol = default_flat_tolerance(metric) if tol is None else tol
    return flatness_residual(metric) <= tol
