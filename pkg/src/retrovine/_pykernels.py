"""Numpy implementations of the compiled kernels (fallback backend)."""
import numpy as np
from scipy import stats


def _locate(x, g):
    s = x * g - 0.5
    idx = np.clip(np.floor(s), 0, g - 2).astype(np.intp)
    frac = np.clip(s - idx, 0.0, 1.0)
    return idx, frac


def _column_integral(c, cum, j, x, g):
    delta = 1.0 / g
    s = x * g - 0.5
    i = np.clip(np.floor(s), 0, g - 2).astype(np.intp)
    t = s - i
    ds = t * delta
    mid = cum[i, j] + c[i, j] * ds + (c[i + 1, j] - c[i, j]) * ds * t * 0.5
    low = c[0, j] * x
    high = cum[g - 1, j] + c[g - 1, j] * (x - (g - 0.5) * delta)
    return np.where(s <= 0.0, low, np.where(s >= g - 1, high, mid))


def _hval(c, cum, x, j, tv, g):
    return ((1.0 - tv) * _column_integral(c, cum, j, x, g)
            + tv * _column_integral(c, cum, j + 1, x, g))


def grid_pdf(c, u, v):
    g = c.shape[0]
    i, tu = _locate(np.asarray(u), g)
    j, tv = _locate(np.asarray(v), g)
    return ((1.0 - tu) * ((1.0 - tv) * c[i, j] + tv * c[i, j + 1])
            + tu * ((1.0 - tv) * c[i + 1, j] + tv * c[i + 1, j + 1]))


def grid_hfunc(c, cum, u, v):
    g = c.shape[0]
    j, tv = _locate(np.asarray(v), g)
    return np.clip(_hval(c, cum, np.asarray(u), j, tv, g), 0.0, 1.0)


def grid_hinv(c, cum, w, v, tol, maxiter):
    g = c.shape[0]
    w = np.asarray(w, dtype=np.float64)
    j, tv = _locate(np.asarray(v), g)
    lo = np.zeros_like(w)
    hi = np.ones_like(w)
    it = 0
    # widths shrink uniformly, so one scalar check covers every point
    while 1.0 / 2.0**it > tol:
        if it >= maxiter:
            raise RuntimeError(f"bisection did not reach tol={tol} within {maxiter} iterations")
        mid = 0.5 * (lo + hi)
        below = _hval(c, cum, mid, j, tv, g) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        it += 1
    return 0.5 * (lo + hi)


def kendall_tau_b(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("kendall_tau_b: length mismatch")
    if x.size < 2:
        raise ValueError("kendall_tau_b: need at least two observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("kendall_tau_b: undefined for a constant input vector")
    return float(stats.kendalltau(x, y, variant="b").statistic)
