"""Material-metric kinetics coupled to the balance of mass.

The kinetic law is ``Gdot^# = -(rho0 / beta) dPsi/dG`` (indices of ``Gdot``
raised with ``G``), and the density obeys

    d rho0/dt + 1/2 rho0 tr_G Gdot = S_m.

Entropy production is ``Lambda = beta Gdot:Gdot`` (``G``-contracted), which
for the kinetic law equals ``-rho0 dPsi/dG : Gdot``. States are single
material points (``G`` of shape ``(n, n)``) or batches ``(..., n, n)``;
batched points evolve independently.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .diffgeo import check_spd
from .errors import ConfigurationError, ConstitutiveError, DefinitenessError, NumericError, StepSizeError
from .kinematics import trace_G

_SYM_TOL = 1e-10


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


@dataclass(frozen=True)
class EvolutionState:
    """Metric ``G``, density ``rho0`` and time at one or more material points."""

    G: np.ndarray
    rho0: np.ndarray
    t: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        rho0 = np.asarray(self.rho0, dtype=float)
        if G.ndim < 2 or G.shape[-1] != G.shape[-2]:
            raise ConfigurationError("G must have shape (..., n, n)")
        if not np.allclose(G, np.swapaxes(G, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
            raise DefinitenessError("G is not symmetric")
        check_spd(G, "material metric")
        if np.any(rho0 < 0) or not np.all(np.isfinite(rho0)):
            raise ConfigurationError("rho0 must be finite and non-negative")
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "rho0", np.broadcast_to(rho0, G.shape[:-2]).copy())
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def dim(self):
        return self.G.shape[-1]

    @property
    def det_G(self):
        return np.linalg.det(self.G)

    @property
    def mass_form(self):
        """``rho0 sqrt(det G)``, the density of the mass form in chart coordinates."""
        return self.rho0 * np.sqrt(self.det_G)


@dataclass(frozen=True)
class MassSource:
    """Mass rate density ``S_m(X, t)`` sampled at fixed material points.

    ``field`` is a callable ``(X, t) -> S_m`` (e.g. a ScalarField); ``X`` are
    the material points, shape ``(..., dim)`` matching the state batch.
    """

    field: Callable
    X: Optional[np.ndarray] = None

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(lambda X, t: value)

    def __call__(self, t):
        X = np.zeros(1) if self.X is None else np.asarray(self.X, dtype=float)
        val = np.asarray(self.field(X, t), dtype=float)
        if not np.all(np.isfinite(val)):
            raise NumericError("mass source is not finite", {"t": t})
        return val


class FreeEnergy:
    """Free energy ``Psi(G, F, g)`` with analytic or finite-difference ``dPsi/dG``.

    The finite-difference derivative perturbs ``G`` along symmetric unit
    directions with step ``rel * ||G||``, so the result is symmetric by
    construction.
    """

    def __init__(self, psi, dpsi_dG=None, rel=1e-6, name="custom"):
        self.psi = psi
        self._dpsi = dpsi_dG
        self.rel = float(rel)
        self.name = name

    @classmethod
    def neo_hookean(cls, mu=1.0):
        """``Psi = mu tr_G C`` with ``dPsi/dG = -mu G^{-1} C G^{-1}``."""
        mu = float(mu)

        def psi(G, F, g):
            return mu * trace_G(_cauchy_green(F, g), G)

        def dpsi(G, F, g):
            Gi = np.linalg.inv(G)
            return -mu * Gi @ _cauchy_green(F, g) @ Gi

        return cls(psi, dpsi, name=f"neo-hookean(mu={mu!r})")

    @property
    def has_analytic_derivative(self):
        return self._dpsi is not None

    def __call__(self, G, F, g):
        return np.asarray(self.psi(G, F, g), dtype=float)

    def derivative(self, G, F, g, analytic=True):
        """``dPsi/dG_AB`` (contravariant, symmetric)."""
        G = np.asarray(G, dtype=float)
        if analytic and self._dpsi is not None:
            D = np.asarray(self._dpsi(G, F, g), dtype=float)
            D = np.broadcast_to(D, G.shape)
            scale = max(1.0, float(np.abs(D).max()))
            if np.abs(D - np.swapaxes(D, -1, -2)).max() > _SYM_TOL * scale:
                raise ConstitutiveError("dPsi/dG is not symmetric")
            return _sym(D)
        return self.fd_derivative(G, F, g)

    def fd_derivative(self, G, F, g):
        G = np.asarray(G, dtype=float)
        n = G.shape[-1]
        eps = self.rel * np.linalg.norm(G, axis=(-2, -1))[..., None, None]
        out = np.zeros(G.shape)
        for i in range(n):
            for j in range(i, n):
                E = np.zeros((n, n))
                E[i, j] = E[j, i] = 1.0 if i == j else 0.5
                d = (self(G + eps * E, F, g) - self(G - eps * E, F, g)) / (2.0 * eps[..., 0, 0])
                out[..., i, j] = d
                out[..., j, i] = d
        return out


def _cauchy_green(F, g):
    F = np.asarray(F, dtype=float)
    return np.swapaxes(F, -1, -2) @ np.asarray(g, dtype=float) @ F


def _at(value, t):
    return np.asarray(value(t) if callable(value) else value, dtype=float)


def metric_rate(state: EvolutionState, psi: FreeEnergy, F, g=None, analytic=True):
    """Covariant ``Gdot_MN = -(rho0 / beta) G_MA (dPsi/dG)^{AB} G_BN``.

    ``F`` and ``g`` may be arrays or callables of time.
    """
    F = _at(F, state.t)
    g = np.eye(F.shape[-2]) if g is None else _at(g, state.t)
    D = psi.derivative(state.G, F, g, analytic=analytic)
    coef = -(state.rho0 / state.beta)[..., None, None]
    return _sym(coef * (state.G @ D @ state.G))


def _rates(G, rho0, t, beta, psi, F, g, source, gdot):
    if gdot is not None:
        Gd = np.asarray(gdot(G, t), dtype=float)
    else:
        Fv = _at(F, t)
        gv = np.eye(Fv.shape[-2]) if g is None else _at(g, t)
        D = psi.derivative(G, Fv, gv)
        Gd = _sym(-(rho0 / beta)[..., None, None] * (G @ D @ G))
    sm = 0.0 if source is None else source(t)
    rd = sm - 0.5 * rho0 * trace_G(Gd, G)
    return Gd, rd


def rk4_step(G, rho0, t, dt, beta, psi=None, F=None, g=None, source=None, gdot=None):
    """One classical RK4 step of ``(G, rho0)``; no validation."""
    k1 = _rates(G, rho0, t, beta, psi, F, g, source, gdot)
    k2 = _rates(G + 0.5 * dt * k1[0], rho0 + 0.5 * dt * k1[1], t + 0.5 * dt, beta, psi, F, g, source, gdot)
    k3 = _rates(G + 0.5 * dt * k2[0], rho0 + 0.5 * dt * k2[1], t + 0.5 * dt, beta, psi, F, g, source, gdot)
    k4 = _rates(G + dt * k3[0], rho0 + dt * k3[1], t + dt, beta, psi, F, g, source, gdot)
    Gn = G + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    rn = rho0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return _sym(Gn), rn


def step(state: EvolutionState, psi=None, F=None, g=None, source=None, dt=1e-3, gdot=None) -> EvolutionState:
    """Advance the state by ``dt`` with RK4.

    Either ``psi`` (with ``F``, ``g``) drives the kinetic law, or ``gdot``
    prescribes ``Gdot(G, t)`` directly. Raises :class:`StepSizeError` if the
    new ``G`` is not positive-definite or ``rho0`` turns negative.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if gdot is None and psi is None:
        raise ConfigurationError("either psi or gdot is required")
    with np.errstate(all="ignore"):
        Gn, rn = rk4_step(state.G, state.rho0, state.t, dt, state.beta, psi, F, g, source, gdot)
    diag = {"t": state.t, "dt": dt}
    if not (np.all(np.isfinite(Gn)) and np.all(np.isfinite(rn))):
        raise StepSizeError("non-finite state after step", diag)
    try:
        check_spd(Gn, "material metric")
    except DefinitenessError:
        raise StepSizeError("material metric lost positive-definiteness", diag) from None
    if np.any(rn < 0):
        raise StepSizeError("density became negative", diag)
    return replace(state, G=Gn, rho0=rn, t=state.t + dt)


@dataclass(frozen=True)
class EntropyProduction:
    quadratic: np.ndarray
    constraint: np.ndarray

    @property
    def discrepancy(self):
        return np.abs(self.quadratic - self.constraint)


def entropy_production(state: EvolutionState, Gdot, psi=None, F=None, g=None, thermal_term=0.0) -> EntropyProduction:
    """Both evaluations of ``Lambda`` (quadratic and constraint forms).

    The constraint form needs ``psi``; without it the value is ``nan``.
    """
    Gdot = np.asarray(Gdot, dtype=float)
    Gi = np.linalg.inv(state.G)
    M = Gi @ Gdot
    quad = state.beta * np.trace(M @ M, axis1=-2, axis2=-1) - thermal_term
    if psi is None:
        cons = np.full(np.shape(quad), np.nan)
    else:
        Fv = _at(F, state.t)
        gv = np.eye(Fv.shape[-2]) if g is None else _at(g, state.t)
        D = psi.derivative(state.G, Fv, gv)
        cons = -state.rho0 * np.einsum("...ab,...ab->...", D, Gdot) - thermal_term
    return EntropyProduction(np.asarray(quad), np.asarray(cons))


@dataclass
class Trajectory:
    """Accepted steps of an integration with per-step diagnostics."""

    t: list = field(default_factory=list)
    G: list = field(default_factory=list)
    rho0: list = field(default_factory=list)
    trace_rate: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    entropy_constraint: list = field(default_factory=list)
    det_G: list = field(default_factory=list)
    halvings: int = 0
    stopped: Optional[str] = None

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in
                ("t", "G", "rho0", "trace_rate", "entropy", "entropy_constraint", "det_G")}

    def to_csv(self, header=None, digits=17):
        """CSV text: ``t, G_ij (i <= j), rho0, trG_Gdot, Lambda, detG``.

        Batched states are flattened point by point with a ``point`` column.
        """
        a = self.arrays()
        n = a["G"].shape[-1]
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        buf = io.StringIO()
        for line in header or []:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "point"] + [f"G{i + 1}{j + 1}" for i, j in pairs] + ["rho0", "trG_Gdot", "Lambda", "detG"])
        fmt = f"{{:.{digits}g}}".format
        batch = a["G"].shape[1:-2]
        for k in range(a["t"].size):
            for idx in np.ndindex(*batch) if batch else [()]:
                row = [fmt(a["t"][k]), ";".join(map(str, idx)) or "0"]
                row += [fmt(a["G"][(k,) + idx + (i, j)]) for i, j in pairs]
                row += [fmt(a[key][(k,) + idx]) for key in ("rho0", "trace_rate", "entropy", "det_G")]
                w.writerow(row)
        return buf.getvalue()


def _record(traj, state, psi, F, g, source, gdot):
    Gd, _ = _rates(state.G, state.rho0, state.t, state.beta, psi, F, g, source, gdot)
    ep = entropy_production(state, Gd, psi if gdot is None else None, F, g)
    traj.t.append(state.t)
    traj.G.append(state.G.copy())
    traj.rho0.append(state.rho0.copy())
    traj.trace_rate.append(trace_G(Gd, state.G))
    traj.entropy.append(ep.quadratic)
    traj.entropy_constraint.append(ep.constraint)
    traj.det_G.append(state.det_G)


def integrate(state: EvolutionState, t_end, dt, psi=None, F=None, g=None, source=None, gdot=None,
              max_time=1e6, max_conformal=1e6, min_dt=1e-12) -> Trajectory:
    """Integrate to ``t_end``, halving ``dt`` on step-size failures.

    The run stops early (``Trajectory.stopped`` set) once the conformal
    factor ``(det G / det G0)^{1/n}`` exceeds ``max_conformal``; the simple
    neo-Hookean law inflates without bound, so this guard is expected to
    trigger on long horizons.
    """
    if not (t_end - state.t) <= max_time:
        raise ConfigurationError(f"time horizon exceeds max_time={max_time}")
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    traj = Trajectory()
    det0 = state.det_G
    _record(traj, state, psi, F, g, source, gdot)
    n_steps = int(round((t_end - state.t) / dt))
    if n_steps < 1 or not np.isclose(state.t + n_steps * dt, t_end, rtol=1e-12, atol=1e-14):
        n_steps = max(1, int(np.ceil((t_end - state.t) / dt)))
        dt = (t_end - state.t) / n_steps
    t0 = state.t
    for k in range(n_steps):
        target = t0 + (k + 1) * dt
        h = target - state.t
        sub = 1
        while True:
            try:
                trial = state
                for _ in range(sub):
                    trial = step(trial, psi, F, g, source, h / sub, gdot)
                break
            except StepSizeError as exc:
                sub *= 2
                traj.halvings += 1
                if h / sub < min_dt:
                    raise NumericError("step size underflow", {**exc.diagnostics, "min_dt": min_dt}) from None
        state = replace(trial, t=target)
        _record(traj, state, psi, F, g, source, gdot)
        factor = np.max((state.det_G / det0) ** (1.0 / state.dim))
        if factor > max_conformal:
            traj.stopped = "conformal-factor"
            break
    return traj


def mass_balance_error(state: EvolutionState, t_end, dt, psi=None, F=None, g=None, source=None, gdot=None):
    """Step-doubling check of the coupled integration.

    Returns ``(max |rho0_dt - rho0_dt/2|, max identity residual)``. The
    residual is ``|drho0/dt - S_m + 1/2 rho0 tr_G Gdot|`` with ``drho0/dt``
    from a fourth-order difference of the reference (half-step) density.
    """
    coarse = integrate(state, t_end, dt, psi, F, g, source, gdot)
    fine = integrate(state, t_end, dt / 2, psi, F, g, source, gdot)
    rc = np.asarray(coarse.rho0)
    rf = np.asarray(fine.rho0)[::2]
    m = min(len(rc), len(rf))
    diff = float(np.max(np.abs(rc[:m] - rf[:m])))
    rho = np.asarray(fine.rho0)
    t = np.asarray(fine.t)
    h = dt / 2
    d = (rho[:-4] - 8 * rho[1:-3] + 8 * rho[3:-1] - rho[4:]) / (12 * h)
    tr = np.asarray(fine.trace_rate)[2:-2]
    sm = np.array([0.0 if source is None else source(tk) for tk in t[2:-2]])
    sm = sm.reshape((-1,) + (1,) * (d.ndim - 1)) if sm.ndim == 1 else sm
    resid = np.abs(d - sm + 0.5 * rho[2:-2] * tr)
    return diff, float(resid.max()) if resid.size else 0.0
