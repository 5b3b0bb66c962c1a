"""Compare the compiled and pure-Python kernel backends.

Times each hot kernel on identical inputs, checks that both backends agree,
and times an end-to-end kernel-copula vine fit with each backend swapped in.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 5] [--json out.json]
"""
import argparse
import json
import platform
import timeit

import numpy as np

from retrovine import _backend, paircop
from retrovine.marginals import pseudo_observations
from retrovine.paircop import FitConfig, _cumulative
from retrovine.vine import fit_vine


def _inputs(n, g=64, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.2, 2.0, (g, g))
    c /= c.mean(axis=0)
    c = np.ascontiguousarray(c)
    u, v, w = rng.uniform(1e-4, 1 - 1e-4, (3, n))
    x = rng.normal(size=n)
    y = 0.5 * x + rng.normal(size=n)
    return c, _cumulative(c), u, v, w, x, y


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(mods, n, repeat):
    c, cum, u, v, w, x, y = _inputs(n)
    nk = min(n, 5000)
    cases = {
        "grid_pdf": lambda k: k.grid_pdf(c, u, v),
        "grid_hfunc": lambda k: k.grid_hfunc(c, cum, u, v),
        "grid_hinv": lambda k: k.grid_hinv(c, cum, w, v, 1e-10, 100),
        f"kendall_tau_b (n={nk})": lambda k: k.kendall_tau_b(x[:nk], y[:nk]),
    }
    rows = []
    for name, fn in cases.items():
        outs = {b: fn(k) for b, k in mods.items()}
        if len(outs) == 2:
            a, b = outs.values()
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)
        times = {b: _best(lambda k=k: fn(k), repeat) for b, k in mods.items()}
        rows.append((name, times))
    return rows


def bench_vine_fit(mods, repeat):
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 8))
    S = A @ A.T
    R = S / np.sqrt(np.outer(np.diag(S), np.diag(S)))
    Z = rng.multivariate_normal(np.zeros(6), R, size=1000)
    U = pseudo_observations(Z)
    cfg = FitConfig(family_set=("independence", "kernel"))
    times = {}
    saved = paircop.kernels
    try:
        for b, k in mods.items():
            paircop.kernels = k
            times[b] = _best(lambda: fit_vine(U, cfg, truncation_level=3), max(1, repeat // 2))
    finally:
        paircop.kernels = saved
    return ("fit_vine kernel, d=6, n=1000, 3 trees", times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="evaluation points per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write results to this file")
    args = ap.parse_args(argv)

    mods = {"python": _backend.get_kernels("python")}
    try:
        mods["cython"] = _backend.get_kernels("cython")
    except ImportError:
        print("compiled kernels not built; timing the Python backend only")

    rows = bench_kernels(mods, args.n, args.repeat)
    rows.append(bench_vine_fit(mods, args.repeat))

    print(f"python {platform.python_version()}, numpy {np.__version__}, n={args.n}")
    print(f"{'case':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for name, t in rows:
        py = t["python"] * 1e3
        cy = t.get("cython")
        if cy is None:
            print(f"{name:40s} {py:12.2f} {'-':>12s} {'-':>9s}")
        else:
            print(f"{name:40s} {py:12.2f} {cy * 1e3:12.2f} {t['python'] / cy:8.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump([{"case": n, **{k: v for k, v in t.items()}} for n, t in rows], fh, indent=2)


if __name__ == "__main__":
    main()
