"""Surfaces of revolution realizing rotationally symmetric 2D metrics.

A metric ``M(s)^2 ds^2 + N(s)^2 dTheta^2`` is realized by the profile
``rho = N``, ``xi' = sqrt(M^2 - N'^2)`` revolved about the vertical axis:

    Phi(s, Theta) = (rho cos Theta, rho sin Theta, xi).

Where ``M^2 < N'^2`` no such surface exists. The embedding is built on the
longest sub-interval where ``M^2 - N'^2 >= 0`` and ``xi(s0) = 0`` at its
left end.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import quadrature
from .diffgeo import RadialMetric
from .errors import ConfigurationError, DomainError, MeshError, NonEmbeddableError
from .fields import ScalarField


@dataclass(frozen=True)
class Profile:
    """Callables ``M(s)``, ``N(s)`` and optionally ``N'(s)`` on arrays."""

    M: object
    N: object
    Ndot: Optional[object] = None
    family: Optional[str] = None
    omega: Optional[ScalarField] = None
    pi: Optional[ScalarField] = None

    def ndot(self, s):
        s = np.asarray(s, dtype=float)
        if self.Ndot is not None:
            return np.asarray(self.Ndot(s), dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(s))
        return (self.N(s + h) - self.N(s - h)) / (2 * h)

    def discriminant(self, s):
        """``M^2 - N'^2``."""
        s = np.asarray(s, dtype=float)
        return np.asarray(self.M(s), dtype=float) ** 2 - self.ndot(s) ** 2

    def metric(self, domain=(0.0, np.inf)):
        if self.family is None:
            raise ConfigurationError("profile has no metric family attached")
        fam = "iso2d" if self.family == "iso" else "aniso2d"
        pi = self.pi if self.family == "aniso" else None
        return RadialMetric(fam, self.omega, pi=pi, domain=domain)


def family_profile(family, omega, pi=None, t=0.0) -> Profile:
    """Profile of ``iso`` (``M = e^W, N = R e^W``) or ``aniso`` (``N = R e^P``).

    ``N'`` is analytic: ``e^q (1 + R q')`` with ``q = W`` or ``P``. For the
    aniso family ``P`` defaults to ``-W`` when not given.
    """
    family = str(family).lower().replace("2d", "")
    if family not in ("iso", "aniso"):
        raise ConfigurationError(f"unknown embedding family {family!r}; choose iso or aniso")
    if not isinstance(omega, ScalarField):
        omega = ScalarField.from_expr(omega) if isinstance(omega, str) else ScalarField.constant(omega)
    if family == "aniso":
        if pi is None:
            pi = ScalarField(lambda X, t=0.0: -omega(X, t), 1,
                             lambda X, t=0.0: -omega.gradient(X, t),
                             lambda X, t=0.0: -omega.hessian(X, t), source=f"-({omega.source})")
        elif not isinstance(pi, ScalarField):
            pi = ScalarField.from_expr(pi) if isinstance(pi, str) else ScalarField.constant(pi)
        q = pi
    else:
        q = omega

    def M(s):
        return np.exp(omega.radial(s, t))

    def N(s):
        s = np.asarray(s, dtype=float)
        return s * np.exp(q.radial(s, t))

    def Nd(s):
        s = np.asarray(s, dtype=float)
        return np.exp(q.radial(s, t)) * (1.0 + s * q.radial_d1(s, t))

    return Profile(M, N, Nd, family, omega, pi if family == "aniso" else None)


@dataclass
class EmbeddingCurve:
    """Profile samples of a surface of revolution.

    ``s`` spans ``interval``; ``valid`` marks samples with ``M^2 >= N'^2``
    (all true on the returned interval). ``violations`` lists sub-intervals
    of the requested range where the metric is not embeddable.
    """

    s: np.ndarray
    rho: np.ndarray
    xi: np.ndarray
    valid: np.ndarray
    discriminant: np.ndarray
    interval: tuple
    requested: tuple
    violations: list = field(default_factory=list)
    valid_intervals: list = field(default_factory=list)
    profile: Optional[Profile] = None
    quad_error: float = 0.0

    @property
    def partial(self):
        return bool(self.violations)

    def to_csv(self, header=None, digits=17):
        fmt = f"{{:.{digits}g}}".format
        buf = io.StringIO()
        for line in header or []:
            buf.write(f"# {line}\n")
        for a, b in self.violations:
            buf.write(f"# not embeddable on [{fmt(a)}, {fmt(b)}]\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "rho", "xi", "valid"])
        for row in zip(self.s, self.rho, self.xi, self.valid):
            w.writerow([fmt(row[0]), fmt(row[1]), fmt(row[2]), int(row[3])])
        return buf.getvalue()


def default_atol(profile: Profile, s):
    """Noise floor of ``M^2 - N'^2``; larger when ``N'`` is differenced."""
    rel = 1e-12 if profile.Ndot is not None else 1e-8
    return rel * max(1.0, float(np.max(np.asarray(profile.M(s)) ** 2)))


def validity_intervals(profile: Profile, s0, s1, n_scan=4097, atol=None):
    """Sub-intervals of ``[s0, s1]`` where ``M^2 - N'^2 >= 0``.

    Sign changes on a scan grid are refined with Brent's method. Returns
    ``(valid, invalid)`` lists of ``(a, b)`` pairs.
    """
    s = np.linspace(s0, s1, n_scan)
    f = profile.discriminant(s)
    if not np.all(np.isfinite(f)):
        raise DomainError("M or N' is not finite on the requested range")
    if atol is None:
        atol = default_atol(profile, s)
    ok = f >= -atol

    def fn(x):
        return float(profile.discriminant(np.array([x]))[0])

    def boundary(i):
        a, b = s[i], s[i + 1]
        fa, fb = fn(a), fn(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb > 0:
            return a if abs(fa) < abs(fb) else b
        return brentq(fn, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    valid, invalid = [], []
    start = s[0]
    for i in range(len(s) - 1):
        if ok[i] != ok[i + 1]:
            x = boundary(i)
            (valid if ok[i] else invalid).append((start, x))
            start = x
    (valid if ok[-1] else invalid).append((start, s[-1]))
    valid = [(a, b) for a, b in valid if b > a]
    invalid = [(a, b) for a, b in invalid if b > a]
    return valid, invalid


def embed_metric(profile: Profile, interval, n_samples=257, abstol=1e-12) -> EmbeddingCurve:
    """Embed on the longest valid sub-interval of ``interval``.

    Raises :class:`NonEmbeddableError` when no part of the range is valid.
    """
    s0, s1 = float(interval[0]), float(interval[1])
    if not s1 > s0:
        raise ConfigurationError("embedding range must satisfy s0 < s1")
    if n_samples < 2:
        raise ConfigurationError("need at least 2 samples")
    probe = np.linspace(s0, s1, 65)
    with np.errstate(all="ignore"):
        if np.any(profile.M(probe) <= 0) or np.any(profile.N(probe) < 0):
            raise DomainError("M must be positive and N non-negative on the range")
    valid, invalid = validity_intervals(profile, s0, s1)
    if not valid:
        raise NonEmbeddableError(f"M^2 < N'^2 everywhere on [{s0}, {s1}]")
    a, b = max(valid, key=lambda ab: ab[1] - ab[0])
    s = np.linspace(a, b, n_samples)
    floor = default_atol(profile, s)

    def integrand(x):
        # values below the noise floor count as zero so noise is not integrated
        f = profile.discriminant(x)
        return np.sqrt(np.where(f > floor, f, 0.0))

    xi, err = quadrature.cumulative(integrand, s, abstol=abstol)
    return EmbeddingCurve(
        s=s, rho=np.asarray(profile.N(s), dtype=float), xi=xi,
        valid=np.ones(s.size, dtype=bool), discriminant=profile.discriminant(s),
        interval=(a, b), requested=(s0, s1), violations=invalid, valid_intervals=valid,
        profile=profile, quad_error=err,
    )


# --------------------------------------------------------------------------
# meshes
# --------------------------------------------------------------------------
@dataclass
class Mesh:
    """Triangle mesh of a revolved profile on an ``n_s x n_theta`` grid.

    Rings with ``rho = 0`` collapse to a single pole vertex.
    """

    vertices: np.ndarray
    faces: np.ndarray
    index: np.ndarray  # (n_s, n_theta) -> vertex id
    s: np.ndarray
    theta: np.ndarray

    def face_normals(self):
        v = self.vertices[self.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def edges(self):
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        return e

    def boundary_edge_count(self):
        """Edges used by a single face (the two rim circles of an open band)."""
        e = np.sort(self.edges(), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return int(np.sum(counts == 1))

    def is_consistently_oriented(self):
        """No directed edge is used twice (neighbours traverse shared edges oppositely)."""
        e = self.edges()
        return len({tuple(x) for x in e}) == len(e)

    def to_obj(self, header=None, digits=17):
        fmt = f"{{:.{digits}g}}".format
        lines = [f"# {h}" for h in (header or [])]
        lines += [f"v {fmt(x)} {fmt(y)} {fmt(z)}" for x, y, z in self.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.faces]
        return "\n".join(lines) + "\n"


def revolve(curve: EmbeddingCurve, n_theta=128, pole_tol=1e-14) -> Mesh:
    """Revolve the profile; faces are counterclockwise seen from outside.

    Outside is the side of ``Phi_Theta x Phi_s``, which points down at a
    bottom pole and away from the axis on a rising wall.
    """
    if curve.s.size < 2:
        raise MeshError("need at least 2 valid profile samples")
    if n_theta < 3:
        raise MeshError("n_theta must be at least 3")
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ns = curve.s.size
    scale = max(1.0, float(np.max(np.abs(curve.rho))))
    pole = np.abs(curve.rho) <= pole_tol * scale
    if np.any(pole[1:-1]):
        raise MeshError("profile touches the axis at an interior sample")
    verts = []
    index = np.empty((ns, n_theta), dtype=np.int64)
    for i in range(ns):
        if pole[i]:
            index[i, :] = len(verts)
            verts.append((0.0, 0.0, curve.xi[i]))
        else:
            index[i, :] = np.arange(len(verts), len(verts) + n_theta)
            verts.extend(zip(curve.rho[i] * np.cos(th), curve.rho[i] * np.sin(th), np.full(n_theta, curve.xi[i])))
    faces = []
    for i in range(ns - 1):
        for j in range(n_theta):
            jn = (j + 1) % n_theta
            a, b = index[i, j], index[i, jn]
            c, d = index[i + 1, j], index[i + 1, jn]
            if not pole[i]:
                faces.append((a, b, c))
            if not pole[i + 1]:
                faces.append((b, d, c))
    return Mesh(np.array(verts, dtype=float), np.array(faces, dtype=np.int64), index, curve.s.copy(), th)


def induced_metric_error(mesh: Mesh, profile: Profile):
    """Largest relative edge-length error against the target metric.

    Meridian edges are compared with ``int M ds`` over the segment and
    parallel edges with ``N dTheta``. Degenerate (pole) edges are skipped.
    """
    V = mesh.vertices
    idx = mesh.index
    s = mesh.s
    dth = mesh.theta[1] - mesh.theta[0]
    mer_len = np.linalg.norm(V[idx[1:]] - V[idx[:-1]], axis=-1)
    target_mer = quadrature.gk15(profile.M, s[:-1], s[1:])[0]
    err_mer = np.abs(mer_len - target_mer[:, None]) / target_mer[:, None]
    par_len = np.linalg.norm(V[np.roll(idx, -1, axis=1)] - V[idx], axis=-1)
    target_par = profile.N(s) * dth
    keep = target_par > 1e-14 * max(1.0, float(np.max(target_par)))
    err_par = np.abs(par_len[keep] - target_par[keep, None]) / target_par[keep, None]
    return float(max(err_mer.max(), err_par.max() if err_par.size else 0.0))


def angle_defect(mesh: Mesh):
    """Discrete Gauss curvature ``(2 pi - sum of angles) / (area / 3)`` per ring.

    Returns ``(s, K)`` for interior rings (first and last ring excluded);
    values are averaged over each ring.
    """
    V = mesh.vertices
    F = mesh.faces
    nv = V.shape[0]
    ang = np.zeros(nv)
    area = np.zeros(nv)
    tri = V[F]
    A2 = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    for k in range(3):
        p = tri[:, k]
        u = tri[:, (k + 1) % 3] - p
        w = tri[:, (k + 2) % 3] - p
        cosang = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
        np.add.at(ang, F[:, k], np.arccos(np.clip(cosang, -1.0, 1.0)))
        np.add.at(area, F[:, k], A2 / 6.0)
    K = (2 * np.pi - ang) / area
    rings = np.array([K[row].mean() for row in mesh.index[1:-1]])
    return mesh.s[1:-1], rings


def curvature_sign_agreement(mesh: Mesh, profile: Profile, rel_floor=1e-2):
    """Fraction of interior rings where the discrete and intrinsic signs agree.

    Rings where the intrinsic curvature is below ``rel_floor * max|K|`` are
    ignored since their sign is not resolved by the mesh.
    """
    s, Kd = angle_defect(mesh)
    metric = profile.metric()
    Ki = 0.5 * metric.scalar_closed_form(s)
    keep = np.abs(Ki) > rel_floor * np.max(np.abs(Ki)) if np.any(Ki) else np.zeros(s.size, bool)
    if not np.any(keep):
        return 1.0, s, Kd, Ki
    return float(np.mean(np.sign(Kd[keep]) == np.sign(Ki[keep]))), s, Kd, Ki
