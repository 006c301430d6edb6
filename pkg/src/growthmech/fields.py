"""Scalar fields over a chart, with analytic or finite-difference derivatives.

A :class:`ScalarField` wraps ``f(X, t)`` where ``X`` has shape ``(..., dim)``.
Radial fields use ``dim = 1`` with the single coordinate ``R``; the helpers
``radial``, ``radial_d1``, ``radial_d2`` and ``radial_rate`` accept plain
arrays of ``R`` for convenience.
"""
from __future__ import annotations

import csv
import os

import numpy as np
from scipy.interpolate import CubicSpline

from . import expr as _expr
from .errors import ConfigurationError, ParseError


class ScalarField:
    """Scalar field ``f(X, t)`` with optional analytic derivatives.

    Parameters
    ----------
    func : callable
        ``func(X, t)`` with ``X`` of shape ``(..., dim)``; returns shape ``(...)``.
    dim : int
        Chart dimension.
    grad, hess, rate : callable, optional
        Analytic gradient ``(..., dim)``, Hessian ``(..., dim, dim)`` and time
        derivative ``(...)``. Missing ones fall back to central differences.
    step : float
        Finite-difference step in space (time uses ``1e-6 * max(1, |t|)``).
    source : str, optional
        Human-readable description (used in output metadata).
    """

    def __init__(self, func, dim, grad=None, hess=None, rate=None, step=1e-4, source=None):
        self.func = func
        self.dim = int(dim)
        self._grad = grad
        self._hess = hess
        self._rate = rate
        self.step = float(step)
        self.source = source if source is not None else getattr(func, "__name__", "field")

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c, dim=1):
        c = float(c)

        def f(X, t=0.0):
            X = np.asarray(X, dtype=float)
            return np.full(X.shape[:-1], c)

        def g(X, t=0.0):
            X = np.asarray(X, dtype=float)
            return np.zeros(X.shape)

        def h(X, t=0.0):
            X = np.asarray(X, dtype=float)
            return np.zeros(X.shape + (X.shape[-1],))

        def r(X, t=0.0):
            return f(X, t) * 0.0

        return cls(f, dim, g, h, r, source=repr(c))

    @classmethod
    def from_expr(cls, text, dim=1, line=1):
        """Build a field from DSL text or ``table:path.csv``.

        In ``dim = 1`` the coordinate is ``R``. In ``dim >= 2`` the coordinates
        are ``X1..Xdim`` and ``R`` denotes ``|X|``.
        """
        text = str(text).strip()
        if text.startswith("table:"):
            return cls.from_table(text[len("table:"):], dim)
        node = _expr.parse(text, line)
        allowed = {"R", "t"} if dim == 1 else {"R", "t"} | {f"X{i + 1}" for i in range(dim)}
        bad = sorted(node.variables() - allowed)
        if bad:
            col = text.find(bad[0]) + 1
            raise ParseError(f"variable {bad[0]!r} not available in dimension {dim}", line, col, text)
        return _ExprField(node, dim, text)

    @classmethod
    def from_table(cls, path, dim=1):
        """Cubic-spline interpolant of a two-column CSV ``R, value`` (radial only)."""
        if not os.path.exists(path):
            raise ConfigurationError(f"table file not found: {path}")
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ConfigurationError(f"bad row in {path}: {rec}") from None
                    continue  # header
        if len(rows) < 4:
            raise ConfigurationError(f"table {path} needs at least 4 rows")
        data = np.array(sorted(rows))
        spline = CubicSpline(data[:, 0], data[:, 1])
        d1, d2 = spline.derivative(1), spline.derivative(2)

        def radius(X):
            X = np.asarray(X, dtype=float)
            return X[..., 0] if dim == 1 else np.linalg.norm(X, axis=-1)

        def f(X, t=0.0):
            return spline(radius(X))

        def g(X, t=0.0):
            X = np.asarray(X, dtype=float)
            if dim == 1:
                return d1(X[..., 0])[..., None]
            R = radius(X)
            return (d1(R) / R)[..., None] * X

        def h(X, t=0.0):
            X = np.asarray(X, dtype=float)
            if dim == 1:
                return d2(X[..., 0])[..., None, None]
            R = radius(X)
            u = X / R[..., None]
            a = d2(R)[..., None, None]
            b = (d1(R) / R)[..., None, None]
            uu = u[..., :, None] * u[..., None, :]
            return a * uu + b * (np.eye(dim) - uu)

        def r(X, t=0.0):
            return np.zeros(radius(X).shape)

        return cls(f, dim, g, h, r, source=f"table:{path}")

    # -- evaluation ---------------------------------------------------
    def __call__(self, X, t=0.0):
        return np.asarray(self.func(np.asarray(X, dtype=float), t), dtype=float)

    def gradient(self, X, t=0.0):
        X = np.asarray(X, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(X, t), dtype=float)
        return self.fd_gradient(X, t)

    def hessian(self, X, t=0.0):
        X = np.asarray(X, dtype=float)
        if self._hess is not None:
            return np.asarray(self._hess(X, t), dtype=float)
        return self.fd_hessian(X, t)

    def rate(self, X, t=0.0):
        X = np.asarray(X, dtype=float)
        if self._rate is not None:
            return np.asarray(self._rate(X, t), dtype=float) * np.ones(X.shape[:-1])
        dt = 1e-6 * max(1.0, abs(t))
        return (self(X, t + dt) - self(X, t - dt)) / (2.0 * dt)

    @property
    def has_analytic_derivatives(self):
        return self._grad is not None and self._hess is not None

    def fd_gradient(self, X, t=0.0, h=None):
        h = self.step if h is None else h
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out[..., i] = (self(X + e, t) - self(X - e, t)) / (2.0 * h)
        return out

    def fd_hessian(self, X, t=0.0, h=None):
        h = self.step if h is None else h
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape + (self.dim,))
        f0 = self(X, t)
        for i in range(self.dim):
            ei = np.zeros(self.dim)
            ei[i] = h
            out[..., i, i] = (self(X + ei, t) - 2.0 * f0 + self(X - ei, t)) / h**2
            for j in range(i + 1, self.dim):
                ej = np.zeros(self.dim)
                ej[j] = h
                v = (self(X + ei + ej, t) - self(X + ei - ej, t)
                     - self(X - ei + ej, t) + self(X - ei - ej, t)) / (4.0 * h * h)
                out[..., i, j] = v
                out[..., j, i] = v
        return out

    # -- radial conveniences -----------------------------------------
    def radial(self, R, t=0.0):
        return self(np.asarray(R, dtype=float)[..., None], t)

    def radial_d1(self, R, t=0.0):
        return self.gradient(np.asarray(R, dtype=float)[..., None], t)[..., 0]

    def radial_d2(self, R, t=0.0):
        return self.hessian(np.asarray(R, dtype=float)[..., None], t)[..., 0, 0]

    def radial_rate(self, R, t=0.0):
        return self.rate(np.asarray(R, dtype=float)[..., None], t)

    def __repr__(self):
        return f"ScalarField({self.source!r}, dim={self.dim})"


def _cart_diff(node, i):
    """d/dX_i of an expression in X1.., R = |X| (chain rule through R)."""
    name = f"X{i + 1}"
    direct = node.diff(name)
    via_r = node.diff("R")
    return _expr.add(direct, _expr.mul(via_r, _expr.div(_expr.Var(name), _expr.Var("R"))))


class _ExprField(ScalarField):
    """Field from a parsed expression with symbolic derivatives."""

    def __init__(self, node, dim, text):
        self.node = node
        if dim == 1:
            self.d1 = [node.diff("R")]
            self.d2 = [[self.d1[0].diff("R")]]
        else:
            self.d1 = [_cart_diff(node, i) for i in range(dim)]
            self.d2 = [[_cart_diff(self.d1[i], j) for j in range(dim)] for i in range(dim)]
        self.dt = node.diff("t")
        super().__init__(self._f, dim, self._g, self._h, self._r, source=text)

    def _env(self, X, t):
        X = np.asarray(X, dtype=float)
        if self.dim == 1:
            return {"R": X[..., 0], "t": t}, X.shape[:-1]
        env = {f"X{i + 1}": X[..., i] for i in range(self.dim)}
        # a tiny floor keeps chain-rule factors X_i / R finite at the origin
        env["R"] = np.maximum(np.linalg.norm(X, axis=-1), np.finfo(float).tiny)
        env["t"] = t
        return env, X.shape[:-1]

    def _ev(self, node, env, shape):
        return np.broadcast_to(np.asarray(node.eval(env), dtype=float), shape).copy()

    def _f(self, X, t=0.0):
        env, shape = self._env(X, t)
        return self._ev(self.node, env, shape)

    def _g(self, X, t=0.0):
        env, shape = self._env(X, t)
        return np.stack([self._ev(n, env, shape) for n in self.d1], axis=-1)

    def _h(self, X, t=0.0):
        env, shape = self._env(X, t)
        rows = [np.stack([self._ev(n, env, shape) for n in row], axis=-1) for row in self.d2]
        return np.stack(rows, axis=-2)

    def _r(self, X, t=0.0):
        env, shape = self._env(X, t)
        return self._ev(self.dt, env, shape)
