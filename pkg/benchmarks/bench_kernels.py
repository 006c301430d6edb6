"""Timing comparison of the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is called on the
same random input for every available backend; the table reports the best of
several repeats and the largest deviation from the python result.
"""
import argparse
import timeit

import numpy as np

from growthmech._kernels import backends


def _metric_inputs(rng, npts, dim):
    A = rng.standard_normal((npts, dim, dim))
    G = A @ A.transpose(0, 2, 1) + dim * np.eye(dim)
    dG = rng.standard_normal((npts, dim, dim, dim))
    dG = 0.5 * (dG + dG.transpose(0, 1, 3, 2))
    ddG = rng.standard_normal((npts, dim, dim, dim, dim))
    ddG = 0.5 * (ddG + ddG.transpose(0, 2, 1, 3, 4))
    ddG = 0.5 * (ddG + ddG.transpose(0, 1, 2, 4, 3))
    return G, dG, ddG


def _navier_inputs(rng, n, dim):
    U = rng.standard_normal((n,) * dim + (dim,))
    return U, [1.0 / (n - 1)] * dim, 1.3, 0.7


def _bench(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=20000, help="metric_curvature points")
    parser.add_argument("--grid", type=int, default=48, help="navier_apply nodes per axis")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    mods = backends()
    cases = []
    for dim in (2, 3):
        cases.append((f"metric_curvature d={dim} N={args.points}", "metric_curvature",
                      _metric_inputs(rng, args.points, dim)))
    for dim in (2, 3):
        n = args.grid if dim == 3 else 8 * args.grid
        cases.append((f"navier_apply d={dim} n={n}", "navier_apply", _navier_inputs(rng, n, dim)))

    print(f"{'kernel':<36}{'backend':<10}{'time [ms]':>12}{'speedup':>10}{'max dev':>12}")
    for label, name, inputs in cases:
        ref = getattr(mods["python"], name)(*inputs)
        ref = ref if isinstance(ref, tuple) else (ref,)
        t_py = None
        for bname, mod in mods.items():
            fn = getattr(mod, name)
            t = _bench(fn, inputs, args.repeat)
            t_py = t if bname == "python" else t_py
            out = fn(*inputs)
            out = out if isinstance(out, tuple) else (out,)
            dev = max(float(np.max(np.abs(np.asarray(a) - b))) for a, b in zip(out, ref))
            print(f"{label:<36}{bname:<10}{1e3 * t:>12.3f}{t_py / t:>10.2f}{dev:>12.2e}")


if __name__ == "__main__":
    main()
