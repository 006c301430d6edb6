"""Command-line front end.

Every subcommand reads flags and, optionally, a flat ``key = value`` config
file (``--config``); flags take precedence over the file, which takes
precedence over built-in defaults. Numeric outputs are CSV with a ``#``
metadata header that records the resolved configuration and a command line
reproducing the run.

Exit codes: 0 success, 2 verification failure, 1 usage or numeric error.
"""
from __future__ import annotations

import argparse
import os
import shlex
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _kernels
from .errors import GrowthMechError, ParseError, VerificationError
from .fields import ScalarField

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2
DIGITS = 17


class UsageError(GrowthMechError):
    """Bad command line or config file."""


# --------------------------------------------------------------------------
# option table
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Opt:
    kind: str  # float, int, str, expr, pair, list, choice
    default: object = None
    help: str = ""
    choices: tuple = ()
    dim: object = None  # expression dimension (int or name of the dim option)
    required: bool = False


_RADIAL = {
    "omega": Opt("expr", "0", "growth field W(R, t)", dim=1),
    "r1": Opt("float", 1.0, "inner reference radius"),
    "r2": Opt("float", 2.0, "outer reference radius"),
    "mu": Opt("float", 1.0, "shear modulus"),
    "mode": Opt("choice", "paper-exact", "boundary mode", ("paper-exact", "traction-free")),
    "grid": Opt("int", 512, "output nodes"),
    "t": Opt("float", 0.0, "time"),
    "residual_tol": Opt("float", 1e-5, "momentum residual tolerance at 512 nodes"),
    "abstol": Opt("float", 1e-10, "quadrature tolerance"),
}

COMMANDS = {
    "curvature": {
        "family": Opt("choice", "iso2d", "metric family", ("iso2d", "aniso2d", "iso3d")),
        "omega": Opt("expr", "0", "growth field W(R, t)", dim=1),
        "pi": Opt("expr", None, "second factor P(R, t) (aniso2d)", dim=1),
        "range": Opt("pair", (1.0, 2.0), "radial range"),
        "grid": Opt("int", 65, "sample count"),
        "t": Opt("float", 0.0, "time"),
    },
    "annulus-iso": dict(_RADIAL),
    "annulus-aniso": dict(_RADIAL),
    "sphere": dict(_RADIAL),
    "stressfree-2d": {
        "omega": Opt("expr", None, "growth field W(X1, X2)", dim=2, required=True),
        "box": Opt("pair", (-1.0, 1.0), "box [lo, hi] per axis"),
        "grid": Opt("int", 65, "nodes per axis"),
        "tol": Opt("float", None, "flatness tolerance (default: Richardson truncation bound)"),
        "t": Opt("float", 0.0, "time"),
    },
    "stressfree-3d": {
        "omega": Opt("expr", None, "growth field W(X1, X2, X3)", dim=3, required=True),
        "box": Opt("pair", (0.0, 1.0), "box [lo, hi] per axis"),
        "grid": Opt("int", 33, "nodes per axis"),
        "tol": Opt("float", None, "flatness tolerance (default: Richardson truncation bound)"),
        "t": Opt("float", 0.0, "time"),
    },
    "embed": {
        "family": Opt("choice", "iso", "metric family", ("iso", "aniso")),
        "omega": Opt("expr", None, "growth field W(R)", dim=1, required=True),
        "pi": Opt("expr", None, "second factor P(R) (aniso; default -W)", dim=1),
        "range": Opt("pair", None, "profile range s0 s1", required=True),
        "samples": Opt("int", 256, "profile samples"),
        "n_theta": Opt("int", 128, "angular samples"),
        "t": Opt("float", 0.0, "time"),
    },
    "evolve": {
        "dim": Opt("int", 3, "dimension"),
        "mu": Opt("float", 1.0, "shear modulus in Psi = mu tr_G C"),
        "beta": Opt("float", 1.0, "dissipation coefficient"),
        "rho0": Opt("float", 1.0, "initial density"),
        "stretch": Opt("list", None, "principal stretches of the fixed F (default 1)"),
        "source": Opt("expr", "0", "mass source S_m(t)", dim=1),
        "t_end": Opt("float", 1.0, "final time"),
        "dt": Opt("float", 1e-3, "time step"),
        "max_conformal": Opt("float", 1e6, "stop once (det G / det G0)^(1/n) exceeds this"),
    },
    "linearized": {
        "dim": Opt("int", 3, "dimension"),
        "beta": Opt("expr", None, "growth variation beta(X)", dim="dim", required=True),
        "lam": Opt("float", 1.0, "Lame lambda"),
        "mu": Opt("float", 1.0, "Lame mu"),
        "box": Opt("pair", (0.0, 1.0), "box [lo, hi] per axis"),
        "grid": Opt("int", 17, "nodes per axis"),
        "boundary": Opt("choice", "zero", "Dirichlet data", ("zero", "eigenstrain")),
        "tol": Opt("float", 1e-12, "relative CG tolerance"),
        "residual_tol": Opt("float", 1e-8, "assembled residual tolerance (scaled by max(1, |rhs|))"),
    },
    "decompose-check": {
        "dim": Opt("int", 3, "dimension"),
        "samples": Opt("int", 1000, "random cases"),
        "seed": Opt("int", 0, "random seed"),
        "tol": Opt("float", 1e-12, "tolerance"),
    },
}


@dataclass
class RunConfig:
    """Resolved options of one run with the origin of each value."""

    subcommand: str
    values: dict
    sources: dict = field(default_factory=dict)
    output: str = "-"
    fields: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def metadata(self):
        lines = [f"growthmech {__version__} {self.subcommand}", f"backend={_kernels.BACKEND}"]
        for key in sorted(self.values):
            lines.append(f"{key}={_fmt_value(self.values[key])}")
        lines.append("rerun: " + self.command_line())
        return lines

    def command_line(self):
        parts = ["growthmech", self.subcommand]
        for key in sorted(self.values):
            v = self.values[key]
            if v is None:
                continue
            parts.append("--" + key.replace("_", "-"))
            items = [_fmt_num(x) for x in v] if isinstance(v, (tuple, list)) else [_fmt_value(v)]
            parts += [shlex.quote(x) for x in items]
        return " ".join(parts)


def _fmt_num(x):
    return f"{x:.{DIGITS}g}" if isinstance(x, float) else str(x)


def _fmt_value(v):
    if v is None:
        return "auto"
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt_num(x) for x in v)
    return _fmt_num(v)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="growthmech", description="Geometric bulk-growth mechanics toolkit.")
    p.add_argument("--version", action="version", version=f"growthmech {__version__}")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name, help=SUMMARIES[name], description=SUMMARIES[name])
        sp.add_argument("--config", help="key = value config file (flags take precedence)")
        sp.add_argument("-o", "--output", help="output path ('-' for stdout; prefix for embed)")
        for key, opt in opts.items():
            flag = "--" + key.replace("_", "-")
            kw = {"default": None, "help": opt.help, "dest": key}
            if opt.kind == "pair":
                kw.update(nargs=2, type=str, metavar=("LO", "HI"))
            elif opt.kind == "list":
                kw.update(nargs="+", type=str)
            else:
                kw["type"] = str
            sp.add_argument(flag, **kw)
    return p


def _convert(key, opt: Opt, raw, where):
    """Convert a raw string (or list of strings) to the option type."""
    try:
        if opt.kind == "float":
            return float(raw)
        if opt.kind == "int":
            return int(raw)
        if opt.kind == "choice":
            if raw not in opt.choices:
                raise UsageError(f"{where}: {key} must be one of {', '.join(opt.choices)}")
            return raw
        if opt.kind in ("pair", "list"):
            items = raw if isinstance(raw, (list, tuple)) else raw.replace(",", " ").split()
            vals = tuple(float(x) for x in items)
            if opt.kind == "pair" and len(vals) != 2:
                raise UsageError(f"{where}: {key} needs two numbers")
            return vals
        return str(raw)
    except ValueError:
        raise UsageError(f"{where}: invalid value {raw!r} for {key}") from None


def read_config_file(path, opts):
    """Parse ``key = value`` lines; returns ``{key: (raw, line, col)}``."""
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.rstrip("\n")
            stripped = text.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            k, v = text.split("=", 1)
            key = k.strip().replace("-", "_")
            if key not in opts:
                raise UsageError(f"{path}:{lineno}: unknown key {k.strip()!r}")
            value = v.strip()
            col = len(text) - len(v.lstrip()) + 1
            out[key] = (value, lineno, col)
    return out


def _attach_values(argv):
    """Join ``--flag -R`` into ``--flag=-R`` for single-valued options.

    argparse would otherwise read expression values that start with a minus
    sign as unknown options.
    """
    single = {"--config", "-o", "--output"}
    for opts in COMMANDS.values():
        single |= {"--" + k.replace("_", "-") for k, o in opts.items() if o.kind not in ("pair", "list")}
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in single and i + 1 < len(argv) and argv[i + 1].startswith("-") and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_config(argv) -> RunConfig:
    """Resolve flags, config file and defaults into a validated RunConfig."""
    ns = build_parser().parse_args(_attach_values(list(argv)))
    if ns.subcommand is None:
        raise UsageError("a subcommand is required (see --help)")
    opts = COMMANDS[ns.subcommand]
    filed = read_config_file(ns.config, opts) if ns.config else {}
    values, sources, where = {}, {}, {}
    for key, opt in opts.items():
        raw = getattr(ns, key)
        if raw is not None:
            values[key] = _convert(key, opt, raw, f"--{key}")
            sources[key] = "flag"
            where[key] = (1, 1)
        elif key in filed:
            text, line, col = filed[key]
            values[key] = _convert(key, opt, text, f"{ns.config}:{line}")
            sources[key] = "config"
            where[key] = (line, col)
        else:
            if opt.required:
                raise UsageError(f"missing required option --{key.replace('_', '-')}")
            values[key] = opt.default
            sources[key] = "default"
            where[key] = (1, 1)
    cfg = RunConfig(ns.subcommand, values, sources, ns.output or "-")
    _validate(cfg, opts, where)
    return cfg


def _validate(cfg: RunConfig, opts, where):
    v = cfg.values
    for key, opt in opts.items():
        if opt.kind == "expr" and v[key] is not None:
            dim = v[opt.dim] if isinstance(opt.dim, str) else opt.dim
            line, col = where[key]
            try:
                cfg.fields[key] = ScalarField.from_expr(v[key], dim, line=line)
            except ParseError as exc:
                # shift the column to the position inside the config line
                raise ParseError(exc.args[0].rsplit(" (line", 1)[0], exc.line, exc.col + col - 1, exc.text) from None
    for key in ("grid", "samples", "n_theta"):
        if key in v and v[key] is not None and v[key] < 2:
            raise UsageError(f"{key} must be at least 2")
    for key in ("tol", "residual_tol", "abstol", "dt"):
        if key in v and v[key] is not None and not v[key] > 0:
            raise UsageError(f"{key} must be positive")
    for key in ("box", "range"):
        if key in v and v[key] is not None and not v[key][1] > v[key][0]:
            raise UsageError(f"{key} must satisfy lo < hi")
    if "dim" in v and v["dim"] not in ((2, 3) if cfg.subcommand == "linearized" else (1, 2, 3)):
        raise UsageError("unsupported dimension")


def thread_cap():
    """Validated ``GROWTHMECH_THREADS`` (workers are single-threaded; recorded only)."""
    raw = os.environ.get("GROWTHMECH_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError("GROWTHMECH_THREADS must be a positive integer") from None
    if n < 1:
        raise UsageError("GROWTHMECH_THREADS must be a positive integer")
    return n


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------
def _header(cfg, extra=()):
    return cfg.metadata() + list(extra)


def _csv_text(header, columns, rows):
    out = [f"# {h}" for h in header]
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else f"{float(v):.{DIGITS}g}" for v in row))
    return "\n".join(out) + "\n"


def _write(path, text, stdout):
    if path in (None, "-"):
        stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _kv_rows(d):
    return [(k, v if isinstance(v, str) else f"{float(v):.{DIGITS}g}") for k, v in d.items()]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------
def run_curvature(cfg, stdout):
    from .diffgeo import RadialMetric

    R = np.linspace(cfg.range[0], cfg.range[1], cfg.grid)
    metric = RadialMetric(cfg.family, cfg.fields["omega"], pi=cfg.fields.get("pi"),
                          domain=cfg.range, t=cfg.t)
    d = metric.dim
    P = np.zeros((R.size, d))
    P[:, 0] = R
    if d == 3:
        P[:, 1] = np.pi / 2
    rep = metric.curvature(P)
    closed = metric.scalar_closed_form(R)
    rn = np.max(np.abs(rep.riemann.reshape(R.size, -1)), axis=1)
    cn = np.max(np.abs(rep.ricci.reshape(R.size, -1)), axis=1)
    rows = zip(R, rep.scalar, closed, rn, cn)
    _write(cfg.output, _csv_text(_header(cfg), ["R", "scalar", "scalar_closed_form", "riemann_max", "ricci_max"],
                                 rows), stdout)
    return EXIT_OK


def run_radial(cfg, stdout):
    from .residual import GrowthBVP, solve_bvp

    bvp = GrowthBVP(cfg.subcommand, cfg.fields["omega"], cfg.r1, cfg.r2, cfg.mu, cfg.mode, cfg.t, cfg.grid,
                    cfg.abstol)
    failure = None
    try:
        sol = solve_bvp(bvp, residual_tol=cfg.residual_tol)
        verdict = "verified"
    except VerificationError as exc:
        sol = exc.solution
        verdict = f"FAILED: {exc}"
        failure = exc
    cols, data = sol.table()
    extra = [f"constant={sol.constant:.{DIGITS}g}", f"inner_radius={sol.r1:.{DIGITS}g}",
             f"residual_max={sol.residual_norm:.{DIGITS}g}", f"verification={verdict}"]
    _write(cfg.output, _csv_text(_header(cfg, extra), cols, data), stdout)
    if failure is not None:
        raise failure
    return EXIT_OK


def run_stressfree(cfg, stdout):
    from .stressfree import box_axes, check_2d, check_3d

    d = 2 if cfg.subcommand == "stressfree-2d" else 3
    axes = box_axes([cfg.box[0]] * d, [cfg.box[1]] * d, cfg.grid)
    check = check_2d if d == 2 else check_3d
    res = check(cfg.fields["omega"], axes, tol=cfg.tol, t=cfg.t)
    summary = res.summary()
    summary["spacing"] = res.spacing
    rows = _kv_rows({k: (str(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in summary.items()})
    _write(cfg.output, _csv_text(_header(cfg), ["key", "value"], rows), stdout)
    return EXIT_OK


def run_embed(cfg, stdout):
    from .embed import embed_metric, family_profile, induced_metric_error, revolve

    prof = family_profile(cfg.family, cfg.fields["omega"], cfg.fields.get("pi"), t=cfg.t)
    curve = embed_metric(prof, cfg.range, n_samples=cfg.samples)
    mesh = revolve(curve, cfg.n_theta)
    err = induced_metric_error(mesh, prof)
    extra = [f"interval={curve.interval[0]:.{DIGITS}g} {curve.interval[1]:.{DIGITS}g}",
             f"induced_metric_error={err:.{DIGITS}g}"]
    prefix = "embed" if cfg.output in (None, "-") else cfg.output
    header = _header(cfg, extra)
    _write(prefix + ".obj", mesh.to_obj(header), stdout)
    _write(prefix + "_profile.csv", curve.to_csv(header), stdout)
    stdout.write(f"wrote {prefix}.obj and {prefix}_profile.csv\n")
    return EXIT_OK


def run_evolve(cfg, stdout):
    from .evolution import EvolutionState, FreeEnergy, MassSource, integrate

    n = cfg.dim
    stretch = cfg.stretch if cfg.stretch is not None else (1.0,) * n
    if len(stretch) != n:
        raise UsageError(f"stretch needs {n} values")
    F = np.diag(stretch)
    if np.any(np.asarray(stretch) <= 0):
        raise UsageError("stretches must be positive")
    src_field = cfg.fields["source"]
    source = MassSource(lambda X, t: src_field(np.zeros(1), t))
    state = EvolutionState(np.eye(n), cfg.rho0, 0.0, cfg.beta)
    traj = integrate(state, cfg.t_end, cfg.dt, FreeEnergy.neo_hookean(cfg.mu), F, None, source,
                     max_conformal=cfg.max_conformal)
    extra = [f"stopped={traj.stopped or 'no'}", f"halvings={traj.halvings}"]
    _write(cfg.output, traj.to_csv(_header(cfg, extra)), stdout)
    return EXIT_OK


def run_linearized(cfg, stdout):
    from .linearized import SVKParams, eigenstrain_coefficient, navier_residual, solve_linearized
    from .stressfree import _grid, box_axes

    d = cfg.dim
    beta = cfg.fields["beta"]
    params = SVKParams(cfg.lam, cfg.mu)
    axes = box_axes([cfg.box[0]] * d, [cfg.box[1]] * d, cfg.grid)
    boundary = None
    if cfg.boundary == "eigenstrain":
        a = beta.gradient(np.zeros(d))

        def boundary(X):
            b = beta(X)
            return 0.5 * b[..., None] * X - 0.25 * a * np.sum(X * X, axis=-1)[..., None]

    sol = solve_linearized(params, beta, axes, boundary, tol=cfg.tol)
    X, h = _grid(axes)
    rhs = eigenstrain_coefficient(params, d) * beta.gradient(X)
    res = navier_residual(sol.U, rhs, h, params)
    limit = cfg.residual_tol * max(1.0, float(np.max(np.abs(rhs))))
    extra = [f"iterations={sol.iterations}", f"residual_max={sol.residual:.{DIGITS}g}",
             f"residual_limit={limit:.{DIGITS}g}"]
    _write(cfg.output, sol.to_csv(_header(cfg, extra), residual=res), stdout)
    if sol.residual > limit:
        raise VerificationError(f"assembled residual {sol.residual:.3e} exceeds {limit:.3e}", sol.residual, limit)
    return EXIT_OK


def random_cases(dim, samples, seed):
    """Random SPD ``G``, ``g`` and ``F`` with positive determinant."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(samples, dim, dim))
    G = A @ np.swapaxes(A, -1, -2) + 0.5 * np.eye(dim)
    B = rng.normal(size=(samples, dim, dim))
    g = B @ np.swapaxes(B, -1, -2) + 0.5 * np.eye(dim)
    F = np.eye(dim) + 0.5 * rng.normal(size=(samples, dim, dim))
    neg = np.linalg.det(F) < 0
    F[neg, :, 0] *= -1
    return F, G, g


def run_decompose_check(cfg, stdout):
    from .kinematics import decompose

    F, G, g = random_cases(cfg.dim, cfg.samples, cfg.seed)
    dec = decompose(F, G, g)
    scale = np.max(np.abs(F), axis=(-2, -1))
    reassembly = float(np.max(np.max(np.abs(dec.reassembled() - F), axis=(-2, -1)) / scale))
    J = np.sqrt(np.linalg.det(g) / np.linalg.det(G)) * np.linalg.det(F)
    det_rel = float(np.max(np.abs(dec.det_Fe - J) / np.abs(J)))
    e1, e2 = dec.energy_bridge()
    energy = float(np.max(np.abs(e1 - e2) / np.abs(e2)))
    worst = max(reassembly, det_rel, energy)
    summary = {"reassembly": reassembly, "det_relation": det_rel, "energy": energy,
               "verdict": "pass" if worst <= cfg.tol else "fail"}
    _write(cfg.output, _csv_text(_header(cfg), ["key", "value"], _kv_rows(summary)), stdout)
    if worst > cfg.tol:
        raise VerificationError(f"decomposition error {worst:.3e} exceeds {cfg.tol:.3e}", worst, cfg.tol)
    return EXIT_OK


SUMMARIES = {
    "curvature": "Christoffel symbols and curvature of a material metric family",
    "annulus-iso": "residual stress in an isotropically growing annulus",
    "annulus-aniso": "residual stress in an anisotropically growing annulus",
    "sphere": "residual stress in a radially growing ball or shell",
    "stressfree-2d": "flatness check of a 2D conformal growth field",
    "stressfree-3d": "stress-free PDE and Ricci check of a 3D conformal growth field",
    "embed": "surface of revolution realizing a rotationally symmetric 2D metric",
    "evolve": "material-metric flow with mass balance and entropy production",
    "linearized": "linearized momentum solve and stress-free eigenstrain check",
    "decompose-check": "random checks of the F = Fe Fg correspondence",
}

DISPATCH = {
    "curvature": run_curvature,
    "annulus-iso": run_radial,
    "annulus-aniso": run_radial,
    "sphere": run_radial,
    "stressfree-2d": run_stressfree,
    "stressfree-3d": run_stressfree,
    "embed": run_embed,
    "evolve": run_evolve,
    "linearized": run_linearized,
    "decompose-check": run_decompose_check,
}


def dispatch(cfg: RunConfig, stdout=None) -> int:
    return DISPATCH[cfg.subcommand](cfg, stdout or sys.stdout)


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stderr = stderr or sys.stderr
    try:
        thread_cap()
        cfg = parse_config(argv)
        with np.errstate(all="ignore"):
            return dispatch(cfg, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except VerificationError as exc:
        stderr.write(f"growthmech: verification failed: {exc}\n")
        return EXIT_VERIFY
    except (GrowthMechError, ArithmeticError, ValueError, OSError) as exc:
        stderr.write(f"growthmech: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
