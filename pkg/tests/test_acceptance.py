"""Acceptance criteria 1-9: one PASS/FAIL line per criterion at the stated tolerances."""
import subprocess
import sys

import numpy as np
import pytest

from growthmech import diffgeo as dg
from growthmech import embed as em
from growthmech import evolution as ev
from growthmech import kinematics as kin
from growthmech import linearized as li
from growthmech import residual as rs
from growthmech import stressfree as sf
from growthmech.fields import ScalarField
from cli_cases import CASES, output_args, read_outputs

S = ScalarField.from_expr


@pytest.fixture
def report(capsys):
    def emit(n, checks):
        """``checks`` is a list of ``(label, value, ok)``; prints and asserts."""
        ok = all(c[2] for c in checks)
        detail = "; ".join(f"{lab}={val:.3g}" if isinstance(val, float) else f"{lab}={val}"
                           for lab, val, _ in checks)
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        failed = [c[0] for c in checks if not c[2]]
        assert ok, f"criterion {n} failed: {failed}"
    return emit


def _axes(lo, hi, h):
    return [np.arange(a, b + h / 2, h) for a, b in zip(lo, hi)]


def _polar(X):
    G = np.zeros(X.shape[:-1] + (2, 2))
    G[..., 0, 0] = 1.0
    G[..., 1, 1] = X[..., 0] ** 2
    return G


def test_criterion_1_curvature_kernel(report):
    pts2 = np.array([[0.5, 0.1], [1.7, 2.0], [3.0, -1.0]])
    pts3 = np.array([[0.5, 0.4, 0.1], [2.0, 1.3, 5.0]])
    analytic = max(
        dg.RadialMetric("iso2d", S("0")).curvature(pts2).norms["riemann"],
        dg.RadialMetric("iso3d", S("0")).curvature(pts3).norms["riemann"],
        dg.ConformalMetric(ScalarField.constant(0.0, 2)).curvature(pts2).norms["riemann"],
        dg.ConformalMetric(ScalarField.constant(0.0, 3)).curvature(pts3).norms["riemann"],
    )
    h = 1 / 64
    fd = max(
        dg.GridMetric.from_function(_polar, _axes([1, 0], [2, 1], h)).curvature().norms["riemann"],
        dg.GridMetric.from_function(lambda X: np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3)),
                                    _axes([0, 0, 0], [0.25, 0.25, 0.25], h)).curvature().norms["riemann"],
    )
    om = S("0.3*sin(X1)*cos(2*X2) + 0.1*X1^2", 2)
    errs = []
    for hh in (1 / 16, 1 / 32, 1 / 64):
        rep = dg.GridMetric.conformal(om, _axes([0, 0], [1, 1], hh)).curvature()
        X = rep.points
        exact = -2 * np.exp(-2 * om(X)) * np.trace(om.hessian(X), axis1=-2, axis2=-1)
        errs.append(float(np.abs(rep.scalar - exact).max()))
    order = float(np.min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    report(1, [("analytic_riem", analytic, analytic <= 1e-10), ("fd_riem_h1/64", fd, fd <= 1e-5),
               ("conformal_order", order, order >= 1.9)])


def test_criterion_2_stress_free_families(report):
    cone = sf.radial_cone_family(2.0, 0.7)
    cone_res = sf.check_2d(cone.growth.omega, sf.box_axes([-2, -2], [2, 2], 65),
                           exclude=sf.annulus_exclusion(radius=0.4))
    gs = sf.general_solution(0.7, 2.8, 2.8, 2.8, 8.4)  # 0.7 |X + (2, 2, 2)|^2
    ricci = []
    verdicts = []
    for n in (17, 33, 65):
        r = sf.check_3d(gs.growth.omega, sf.box_axes([0, 0, 0], [1, 1, 1], n))
        ricci.append(r.extra["ricci_residual"])
        verdicts.append(r.flat)
    ratios = np.array(ricci[:-1]) / np.array(ricci[1:])
    bad = sf.check_3d(S("X1*X2", 3), sf.box_axes([0, 0, 0], [1, 1, 1], 33))
    report(2, [("cone_flat", cone_res.flat, cone_res.flat),
               ("general_flat_member", gs.is_flat_member, gs.is_flat_member and all(verdicts)),
               ("ricci_h1/32", ricci[1], ricci[1] <= 1e-4),
               ("halving_ratio_min", float(ratios.min()), bool(np.all((ratios > 3.0) & (ratios < 5.0)))),
               ("X1X2_rejected", not bad.flat, not bad.flat)])


def test_criterion_3_example2_closed_form(report):
    bvp = rs.GrowthBVP("annulus-aniso", S("-0.05*R"), 1.0, 1.5, mode="paper-exact", n_nodes=512)
    sol = rs.solve_bvp(bvp, verify=False)
    closed = float(np.abs(sol.r - np.sqrt(sol.R**2 + sol.constant)).max())
    agree = float(sol.diagnostics["root_agreement"])
    report(3, [("closed_form", closed, closed <= 1e-10), ("root_agreement", agree, agree <= 1e-10),
               ("momentum_residual", sol.residual_norm, sol.residual_norm <= 1e-5)])


def test_criterion_4_examples_1_and_3(report):
    checks = []
    for ex in ("annulus-iso", "sphere"):
        bvp = rs.GrowthBVP(ex, S("0.1*R"), 1.0, 2.0, mode="traction-free")
        sol = rs.solve_bvp(bvp, verify=False)
        _, p_or = rs.trapezoid_oracle(bvp, sol.r1, refine=10)
        dp = float(np.abs(sol.p - p_or).max())
        dJ = float(np.abs(sol.J - 1).max())
        checks += [(f"{ex}_p_oracle", dp, dp <= 1e-8), (f"{ex}_J", dJ, dJ <= 1e-8),
                   (f"{ex}_hoop", sol.hoop_residual_norm, sol.hoop_residual_norm <= 1e-12)]
        zero = rs.solve_bvp(rs.GrowthBVP(ex, S("0"), 1.0, 2.0, mode="paper-exact"), verify=False)
        zp = float(np.abs(zero.p).max())
        zr = float(np.abs(zero.r - zero.R).max())
        checks += [(f"{ex}_zero_p", zp, zp <= 1e-14), (f"{ex}_zero_map", zr, zr <= 1e-14)]
    report(4, checks)


def test_criterion_5_decomposition_bridge(report):
    rng = np.random.default_rng(2024)
    worst = {"reassembly": 0.0, "det": 0.0, "energy": 0.0, "trace": 0.0}
    for d in (2, 3):
        A = rng.normal(size=(1000, d, d))
        G = A @ np.swapaxes(A, -1, -2) + 0.5 * np.eye(d)
        B = rng.normal(size=(1000, d, d))
        g = B @ np.swapaxes(B, -1, -2) + 0.5 * np.eye(d)
        F = np.eye(d) + 0.5 * rng.normal(size=(1000, d, d))
        dec = kin.decompose(F, G, g)
        scale = np.max(np.abs(F), axis=(-2, -1))
        worst["reassembly"] = max(worst["reassembly"],
                                  float(np.max(np.max(np.abs(dec.reassembled() - F), axis=(-2, -1)) / scale)))
        J = np.sqrt(np.linalg.det(g) / np.linalg.det(G)) * np.linalg.det(F)
        worst["det"] = max(worst["det"], float(np.max(np.abs(dec.det_Fe - J) / np.abs(J))))
        e1, e2 = dec.energy_bridge(1.3)
        worst["energy"] = max(worst["energy"], float(np.max(np.abs(e1 - e2) / np.abs(e2))))
        for k in range(20):
            M, N = rng.normal(size=(2, d, d))
            fam = lambda t, M=M, N=N: (np.eye(d) + t * M) @ (np.eye(d) + t * M).T + t * t * N @ N.T + np.eye(d)  # noqa: E731
            lhs, rhs = kin.growth_trace_identity(fam, 0.3)
            worst["trace"] = max(worst["trace"], abs(float(lhs - rhs)))
    curv, tors = [], []
    for n in (17, 33):
        ax = np.linspace(0, 1, n)
        X = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1)
        Fg = np.zeros(X.shape[:-1] + (2, 2))
        Fg[..., 0, 0] = 1 + 0.3 * X[..., 1] ** 2
        Fg[..., 0, 1] = 0.2 * np.sin(X[..., 0])
        Fg[..., 1, 1] = np.exp(0.4 * X[..., 0])
        con = kin.growth_connection(Fg, 1 / (n - 1))
        curv.append(con.curvature_residual / (1 / (n - 1)) ** 2)
        tors.append(con.torsion_norm)
    report(5, [("reassembly", worst["reassembly"], worst["reassembly"] <= 1e-12),
               ("det_Fe", worst["det"], worst["det"] <= 1e-12),
               ("energy", worst["energy"], worst["energy"] <= 1e-12),
               ("trace_Lg_fd", worst["trace"], worst["trace"] <= 1e-6),
               ("connection_curv/h2", max(curv), max(curv) <= 1.0),
               ("torsion", min(tors), min(tors) > 0.1)])


def test_criterion_6_evolution(report):
    psi = ev.FreeEnergy.neo_hookean(1.3)
    worst_gap, min_lambda, mb_diff, mb_res = 0.0, np.inf, 0.0, 0.0
    rng = np.random.default_rng(7)
    for d, src in ((3, None), (2, ev.MassSource.constant(0.2)), (3, ev.MassSource(lambda X, t: 0.1 * np.cos(t) * np.ones(())))):
        F = np.eye(d) + 0.2 * rng.normal(size=(d, d))
        state = ev.EvolutionState(np.eye(d), 1.0, beta=1.5)
        a = ev.integrate(state, 1.0, 1e-3, psi, F, source=src).arrays()
        min_lambda = min(min_lambda, float(a["entropy"].min()))
        worst_gap = max(worst_gap, float(np.abs(a["entropy"] - a["entropy_constraint"]).max()))
        diff, resid = ev.mass_balance_error(state, 1.0, 1e-3, psi, F, source=src)
        mb_diff, mb_res = max(mb_diff, diff), max(mb_res, resid)
    report(6, [("min_Lambda", min_lambda, min_lambda >= 0), ("Lambda_gap", worst_gap, worst_gap <= 1e-10),
               ("rk4_vs_half_step", mb_diff, mb_diff <= 1e-8), ("mass_identity", mb_res, mb_res <= 1e-8)])


def test_criterion_7_embedding(report):
    cases = [
        ("iso", "-R", None, (0.0, 3.0), lambda R: np.exp(-2 * R) * (2 * R - R**2), (0.0, 2.0)),
        ("iso", "-R^2", None, (0.0, 2.0), lambda R: 4 * R**2 * np.exp(-2 * R**2) * (1 - R**2), (0.0, 1.0)),
        ("aniso", "cos(R)^2", "0", (0.05, 6.0), lambda R: np.exp(2 * np.cos(R) ** 2) - 1, (0.05, 6.0)),
        ("aniso", "0", "-ln(R^2)", (0.5, 3.0), lambda R: 1 - 1 / R**4, (1.0, 3.0)),
    ]
    disc, interval, metric = 0.0, 0.0, 0.0
    for fam, om, pi, rng_, ref, valid in cases:
        prof = em.family_profile(fam, om, pi)
        s = np.linspace(max(rng_[0], 1e-3), rng_[1], 1001)
        disc = max(disc, float(np.abs(prof.discriminant(s) - ref(s)).max()))
        curve = em.embed_metric(prof, rng_, n_samples=256)
        interval = max(interval, float(np.abs(np.subtract(curve.interval, valid)).max()))
        metric = max(metric, em.induced_metric_error(em.revolve(curve, 128), prof))
    report(7, [("discriminant", disc, disc <= 1e-12), ("interval_endpoints", interval, interval <= 1e-10),
               ("induced_metric_256x128", metric, metric <= 1e-3)])


def test_criterion_8_linearized(report):
    p = li.SVKParams(1.0, 1.0)
    a = np.array([0.3, -0.7, 0.5])
    axes = li.box_axes([-1, -1, -1], [1, 1, 1], 17)
    X, h = li._grid(axes)
    U = 0.5 * (X @ a)[..., None] * X - 0.25 * a * np.sum(X * X, -1)[..., None]
    rhs = li.eigenstrain_coefficient(p, 3) * np.broadcast_to(a, X.shape)
    res = max(float(np.abs(li.navier_residual(U, rhs, h, p, backend=b)).max()) for b in li._kernels.backends())
    elastic = float(np.abs(li.linearized_strain(U, h) - 0.5 * (X @ a)[..., None, None] * np.eye(3)).max())

    c = li.eigenstrain_coefficient(p, 3)
    k = -3 * np.pi**2 * (p.lam + 2 * p.mu) / c

    def grad_phi(Y):
        s, co = np.sin(np.pi * Y), np.cos(np.pi * Y)
        return np.pi * np.stack([co[..., 0] * s[..., 1] * s[..., 2], s[..., 0] * co[..., 1] * s[..., 2],
                                 s[..., 0] * s[..., 1] * co[..., 2]], -1)

    beta = ScalarField(lambda Y, t=0.0: k * np.prod(np.sin(np.pi * Y), -1), 3, grad=lambda Y, t=0.0: k * grad_phi(Y))
    errs = []
    for n in (9, 17, 33):
        sol = li.solve_linearized(p, beta, li.box_axes([0] * 3, [1] * 3, n), boundary=grad_phi)
        errs.append(float(np.abs(sol.U - grad_phi(sol.coordinates)).max()))
    order = float(np.log2(errs[-2] / errs[-1]))

    rng = np.random.default_rng(11)
    agree, expected_ok = 0, 0
    for k in range(20):
        d = 2 if k < 10 else 3
        axes_b = li.box_axes([-1] * d, [1] * d, 17)
        lin = rng.normal(size=d + 1)
        if d == 2:
            hc = rng.normal(size=3)
            bad = rng.normal() if k % 2 else 0.0
            f = (lambda Y, lin=lin, hc=hc, bad=bad: lin[0] + Y @ lin[1:] + hc[0] * (Y[..., 0] ** 2 - Y[..., 1] ** 2)
                 + hc[1] * Y[..., 0] * Y[..., 1] + hc[2] * (Y[..., 0] ** 3 - 3 * Y[..., 0] * Y[..., 1] ** 2)
                 + bad * Y[..., 0] ** 2)
        else:
            Q = rng.normal(size=(3, 3)) if k % 2 else np.zeros((3, 3))
            bad = bool(k % 2)
            f = lambda Y, lin=lin, Q=Q: lin[0] + Y @ lin[1:] + np.einsum("...i,ij,...j->...", Y, Q, Y)  # noqa: E731
        r = li.stress_free_beta_check(lambda Y, t=0.0, f=f: f(Y), axes_b)
        agree += int(r.stress_free == r.ricci_stress_free)
        expected_ok += int(r.stress_free == (not bad))
    report(8, [("quadratic_residual", res, res <= 1e-10), ("elastic_strain", elastic, elastic <= 1e-12),
               ("smooth_order", order, 1.8 <= order <= 2.2),
               ("beta_vs_ricci_agree", f"{agree}/20", agree == 20),
               ("verdicts_as_constructed", f"{expected_ok}/20", expected_ok == 20)])


def test_criterion_9_cli_determinism(report, tmp_path):
    identical = 0
    for name, argv in CASES.items():
        outs = []
        for k in range(2):
            d = tmp_path / f"{name}_{k}"
            d.mkdir()
            proc = subprocess.run([sys.executable, "-m", "growthmech"] + argv + output_args(name, d),
                                  capture_output=True)
            assert proc.returncode == 0, proc.stderr.decode()
            outs.append(read_outputs(name, d))
        identical += int(outs[0] == outs[1])
    report(9, [("byte_identical_subcommands", f"{identical}/{len(CASES)}", identical == len(CASES))])
