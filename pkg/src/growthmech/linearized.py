"""Linearized growth mechanics about a stress-free Euclidean reference.

With isotropic growth ``dG = beta delta`` and Saint-Venant-Kirchhoff
material the displacement obeys

    (lam + mu) U_{b,ab} + mu U_{a,bb} = ((n lam + 2 mu) / 2) beta_{,a}

in dimension ``n`` (``(3 lam + 2 mu) / 2`` in 3D). Material and spatial
indices are identified and a single Cartesian frame is used throughout.
``beta`` is stress free exactly when the linearized curvature of
``beta delta`` vanishes: ``beta`` linear in 3D, harmonic in 2D.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _kernels
from .errors import ConfigurationError, NumericError
from .fields import ScalarField
from .stressfree import _grid, box_axes, fd_derivatives, richardson_tolerance

__all__ = [
    "SVKParams", "DisplacementField", "BetaCheck", "box_axes", "linearized_strain", "svk_stress",
    "svk_tensors", "b_contraction_fd", "eigenstrain_coefficient", "solve_navier", "solve_linearized",
    "navier_residual", "linearized_curvature", "stress_free_beta_check",
]


@dataclass(frozen=True)
class SVKParams:
    """Lame constants of a Saint-Venant-Kirchhoff material (uniform)."""

    lam: float
    mu: float

    def __post_init__(self):
        lam, mu = float(self.lam), float(self.mu)
        if not mu > 0:
            raise ConfigurationError("mu must be positive")
        if not 3 * lam + 2 * mu > 0:
            raise ConfigurationError("3 lam + 2 mu must be positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)


def eigenstrain_coefficient(params: SVKParams, dim=3):
    """``(n lam + 2 mu) / 2``, the factor multiplying ``grad beta``."""
    return 0.5 * (dim * params.lam + 2.0 * params.mu)


# --------------------------------------------------------------------------
# kinematics and material tensors
# --------------------------------------------------------------------------
def _spacing(axes):
    return np.array([a[1] - a[0] for a in axes], dtype=float)


def linearized_strain(U, h):
    """``eps_ab = (U_a,b + U_b,a) / 2`` by second-order differences.

    ``U`` has shape ``(n_1, ..., n_d, d)``. Interior nodes use central
    differences and boundary nodes second-order one-sided ones, so the
    result is exact for quadratic fields.
    """
    U = np.asarray(U, dtype=float)
    d = U.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), (d,))
    grad = np.empty(U.shape + (d,))
    for a in range(d):
        g = np.gradient(U[..., a], *h, edge_order=2)
        for b in range(d):
            grad[..., a, b] = g[b] if d > 1 else g
    return 0.5 * (grad + np.swapaxes(grad, -1, -2))


def svk_stress(F, G, params: SVKParams, g=None):
    """First Piola-Kirchhoff stress ``P = F S`` of Saint-Venant-Kirchhoff.

    ``S = lam tr_G(E) G^{-1} + 2 mu G^{-1} E G^{-1}`` with
    ``E = (C - G) / 2``, ``C = F^T g F``.
    """
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    g = np.eye(F.shape[-2]) if g is None else np.asarray(g, dtype=float)
    Gi = np.linalg.inv(G)
    E = 0.5 * (F.T @ g @ F - G)
    S = params.lam * np.trace(Gi @ E) * Gi + 2.0 * params.mu * Gi @ E @ Gi
    return F @ S


def svk_tensors(params: SVKParams, dim=3):
    """Elasticity tensors at the Euclidean reference ``F = G = g = delta``.

    Returns ``(A, B, B_contracted)`` with

    * ``A[a, A, b, B] = dP^{aA}/dF^b_B
      = lam d_aA d_bB + mu (d_ab d_AB + d_aB d_bA)``,
    * ``B[a, A, C, D] = dP^{aA}/dG_CD
      = -lam/2 d_aA d_CD - mu/2 (d_aC d_AD + d_aD d_AC)``,
    * ``B_contracted = B[a, A, C, D] d_CD = -((n lam + 2 mu)/2) d_aA``.
    """
    lam, mu = params.lam, params.mu
    d = np.eye(dim)
    A = (lam * np.einsum("aA,bB->aAbB", d, d)
         + mu * (np.einsum("ab,AB->aAbB", d, d) + np.einsum("aB,bA->aAbB", d, d)))
    B = (-0.5 * lam * np.einsum("aA,CD->aACD", d, d)
         - 0.5 * mu * (np.einsum("aC,AD->aACD", d, d) + np.einsum("aD,AC->aACD", d, d)))
    return A, B, np.einsum("aACD,CD->aA", B, d)


def b_contraction_fd(params: SVKParams, dim=3, eps=1e-6):
    """``d/de P(F = delta, G = (1 + e) delta)`` by central differences.

    An independent evaluation of ``B[a, A, C, D] delta_CD`` from the stress
    function itself.
    """
    I = np.eye(dim)
    return (svk_stress(I, (1 + eps) * I, params) - svk_stress(I, (1 - eps) * I, params)) / (2 * eps)


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------
@dataclass
class DisplacementField:
    """Grid displacement with solver diagnostics."""

    U: np.ndarray
    axes: list
    residual: float
    history: list = field(default_factory=list)
    iterations: int = 0
    boundary: str = "dirichlet"
    backend: str = ""

    @property
    def h(self):
        return _spacing(self.axes)

    @property
    def coordinates(self):
        return _grid(self.axes)[0]

    def strain(self):
        return linearized_strain(self.U, self.h)

    def to_csv(self, header=None, digits=17, residual=None):
        """CSV rows ``X_i, U_i, eps_ij (i <= j)[, residual_i]`` in C order."""
        fmt = f"{{:.{digits}g}}".format
        X = self.coordinates
        d = X.shape[-1]
        eps = self.strain()
        pairs = [(i, j) for i in range(d) for j in range(i, d)]
        cols = [f"X{i + 1}" for i in range(d)] + [f"U{i + 1}" for i in range(d)]
        cols += [f"eps{i + 1}{j + 1}" for i, j in pairs]
        if residual is not None:
            cols += [f"res{i + 1}" for i in range(d)]
        buf = io.StringIO()
        for line in header or []:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        Xf = X.reshape(-1, d)
        Uf = self.U.reshape(-1, d)
        Ef = eps.reshape(-1, d, d)
        Rf = None if residual is None else residual.reshape(-1, d)
        for k in range(Xf.shape[0]):
            row = [fmt(v) for v in Xf[k]] + [fmt(v) for v in Uf[k]]
            row += [fmt(Ef[k, i, j]) for i, j in pairs]
            if Rf is not None:
                row += [fmt(v) for v in Rf[k]]
            w.writerow(row)
        return buf.getvalue()


def _interior(shape):
    return tuple(slice(1, n - 1) for n in shape)


def navier_residual(U, rhs, h, params: SVKParams, backend=None):
    """``L U - rhs`` on interior nodes (zero on the boundary)."""
    L = _kernels.backends()[backend or _kernels.BACKEND].navier_apply(U, h, params.lam, params.mu)
    out = L - rhs
    d = U.shape[-1]
    mask = np.zeros(U.shape[:d], dtype=bool)
    mask[_interior(U.shape[:d])] = True
    out[~mask] = 0.0
    return out


def solve_navier(params: SVKParams, rhs, axes, boundary=None, tol=1e-12, maxiter=None, backend=None):
    """Solve ``(lam + mu) grad div U + mu lap U = rhs`` with Dirichlet data.

    ``rhs`` has the full grid shape ``(..., d)`` (boundary values ignored).
    ``boundary`` is ``None`` (zero), an array of that shape or a callable
    ``X -> U``. The interior system is symmetric, and ``-L`` is positive
    definite, so conjugate gradients apply. ``tol`` bounds the residual
    norm relative to the right-hand side.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    d = len(axes)
    if any(a.size < 9 for a in axes):
        raise ConfigurationError("need at least 9 nodes per axis")
    X, h = _grid(axes)
    shape = X.shape
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), shape)
    name = backend or _kernels.BACKEND
    apply = _kernels.backends()[name].navier_apply
    inner = _interior(shape[:d])

    Ub = np.zeros(shape)
    if boundary is not None:
        Bv = np.asarray(boundary(X) if callable(boundary) else boundary, dtype=float)
        Ub[...] = np.broadcast_to(Bv, shape)
        Ub[inner] = 0.0
    b = (rhs - apply(Ub, h, params.lam, params.mu))[inner].ravel()
    n_int = b.size
    isize = Ub[inner].shape

    def matvec(v):
        W = np.zeros(shape)
        W[inner] = v.reshape(isize)
        return -apply(W, h, params.lam, params.mu)[inner].ravel()

    op = LinearOperator((n_int, n_int), matvec=matvec, dtype=float)
    bnorm = float(np.linalg.norm(b))
    history = []

    def record(xk):
        history.append(float(np.linalg.norm(-b - matvec(xk))))

    if bnorm == 0.0:
        x, info = np.zeros(n_int), 0
    else:
        maxiter = maxiter if maxiter is not None else 20 * n_int
        x, info = cg(op, -b, rtol=tol, atol=0.0, maxiter=maxiter, callback=record)
    U = Ub.copy()
    U[inner] = x.reshape(isize)
    res = navier_residual(U, rhs, h, params, backend=name)
    if info != 0:
        raise NumericError("conjugate gradients did not converge",
                           {"history": history, "iterations": len(history), "info": info})
    return DisplacementField(U, axes, float(np.max(np.abs(res))), history, len(history), "dirichlet", name)


def _beta_gradient(beta, X, h, t=0.0):
    if isinstance(beta, ScalarField):
        return beta.gradient(X, t)
    if callable(beta):
        beta = ScalarField(beta, X.shape[-1])
        return beta.gradient(X, t)
    vals = np.asarray(beta, dtype=float)
    g = np.gradient(vals, *h, edge_order=2)
    return np.stack(g if vals.ndim > 1 else [g], axis=-1)


def solve_linearized(params: SVKParams, beta, axes, boundary=None, tol=1e-12, maxiter=None, backend=None,
                     t=0.0) -> DisplacementField:
    """Displacement driven by the growth eigenstrain ``beta delta / 2``.

    ``beta`` may be a :class:`ScalarField` (analytic gradient when
    available), a callable ``X -> beta`` or grid values.
    """
    X, h = _grid([np.asarray(a, dtype=float) for a in axes])
    d = X.shape[-1]
    rhs = eigenstrain_coefficient(params, d) * _beta_gradient(beta, X, h, t)
    return solve_navier(params, rhs, axes, boundary, tol, maxiter, backend)


# --------------------------------------------------------------------------
# linearized curvature
# --------------------------------------------------------------------------
def linearized_curvature(dG, h):
    """Curvature variations of a flat Euclidean metric perturbed by ``dG``.

    ``dG`` has shape ``(n_1, ..., n_d, d, d)``. Returns ``(dRiem, dRic,
    dScalar)`` on interior nodes, with

        dR_ABCD = 1/2 (h_AD,BC + h_BC,AD - h_BD,AC - h_AC,BD),
        dR_BD   = sum_A dR_ABAD,   dScalar = sum_A dR_AA.
    """
    dG = np.asarray(dG, dtype=float)
    d = dG.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), (d,))
    # hh[..., C, D, A, B] = d_A d_B dG_CD
    inner_shape = tuple(n - 2 for n in dG.shape[:d])
    hh = np.empty(inner_shape + (d, d, d, d))
    for C in range(d):
        for D in range(C, d):
            _, H = fd_derivatives(dG[..., C, D], h)
            hh[..., C, D, :, :] = H
            hh[..., D, C, :, :] = H
    riem = 0.5 * (np.einsum("...ADBC->...ABCD", hh) + np.einsum("...BCAD->...ABCD", hh)
                  - np.einsum("...BDAC->...ABCD", hh) - np.einsum("...ACBD->...ABCD", hh))
    ric = np.einsum("...ABAD->...BD", riem)
    scalar = np.einsum("...AA->...", ric)
    return riem, ric, scalar


@dataclass(frozen=True)
class BetaCheck:
    """Residuals of the stress-free conditions on ``beta``."""

    residuals: dict
    tolerance: float
    stress_free: bool
    dim: int
    ricci_residual: Optional[float] = None

    @property
    def max_residual(self):
        return max(self.residuals.values())

    @property
    def ricci_stress_free(self):
        """Verdict from the curvature variation (``2 |dRic|`` or ``|dScalar|`` against the tolerance)."""
        return self.ricci_residual is not None and self.ricci_residual <= self.tolerance


def _beta_residuals(dim):
    def fn(grad, H):
        if dim == 2:
            return {"laplacian": H[..., 0, 0] + H[..., 1, 1]}
        lap = np.trace(H, axis1=-2, axis2=-1)
        out = {f"b_{i + 1}{j + 1}": H[..., i, j] for i, j in ((0, 1), (0, 2), (1, 2))}
        out.update({f"trace_{i + 1}": H[..., i, i] + lap for i in range(3)})
        return out
    return fn


def stress_free_beta_check(beta, axes, tol=None, t=0.0) -> BetaCheck:
    """Check the linearized stress-free conditions for ``beta``.

    3D: ``beta_,12 = beta_,13 = beta_,23 = 0`` and
    ``beta_,II + lap beta = 0`` for each ``I``. 2D: ``lap beta = 0``.
    Second derivatives are central differences on the grid. The default
    tolerance is a Richardson bound on their truncation error
    (:func:`~growthmech.stressfree.richardson_tolerance`).

    The curvature cross-check uses ``dG = beta delta``: in 3D the six
    conditions equal ``-2 dR_AB``, in 2D ``lap beta = -dScalar``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    X, h = _grid(axes)
    d = X.shape[-1]
    if d not in (2, 3):
        raise ConfigurationError("stress-free check needs dimension 2 or 3")
    if isinstance(beta, ScalarField) or callable(beta):
        vals = np.asarray(beta(X, t), dtype=float)
    else:
        vals = np.asarray(beta, dtype=float)
    residual_fn = _beta_residuals(d)
    grad, H = fd_derivatives(vals, h)
    res = {k: float(np.max(np.abs(v))) for k, v in residual_fn(grad, H).items()}
    tol = richardson_tolerance(residual_fn, vals, h) if tol is None else float(tol)
    dG = vals[..., None, None] * np.eye(d)
    _, ric, scal = linearized_curvature(dG, h)
    ricci = float(np.max(np.abs(scal))) if d == 2 else 2.0 * float(np.max(np.abs(ric)))
    flat = max(res.values()) <= tol
    return BetaCheck(res, float(tol), bool(flat), d, ricci)
