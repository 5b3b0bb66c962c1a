"""Bivariate copula families: densities, h-functions, sampling and fitting.

Conventions
-----------
``hfunc(spec, u, v, "1|2")`` is ``P(U <= u | V = v)`` (derivative of ``C`` in
its second argument) and ``hfunc(spec, u, v, "2|1")`` is ``P(V <= v | U = u)``.
``hinv`` inverts in the conditioned slot: ``hinv(spec, w, v, "1|2")`` returns
``u`` with ``hfunc(spec, u, v, "1|2") == w`` and ``hinv(spec, w, u, "2|1")``
returns ``v`` with ``hfunc(spec, u, v, "2|1") == w``.

Rotations reflect arguments: 90 flips the first argument, 180 both and 270
the second, so the 180-rotated density at ``(u, v)`` is the base density at
``(1 - u, 1 - v)``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special

from ._backend import kernels
from .rng import make_rng

FAMILIES = ("independence", "gaussian", "clayton", "gumbel", "frank", "kernel")
PARAMETRIC = ("gaussian", "clayton", "gumbel", "frank")
ROTATIONS = (0, 90, 180, 270)
_ROTATED_FAMILIES = ("clayton", "gumbel")
_FLIPS = {0: (False, False), 90: (True, False), 180: (True, True), 270: (False, True)}

PARAM_BOUNDS = {
    "gaussian": (-0.9999, 0.9999),
    "clayton": (1e-6, 28.0),
    "gumbel": (1.0, 50.0),
    "frank": (-50.0, 50.0),
}
EPS = 1e-15  # h-functions and their inverses are clipped to [EPS, 1 - EPS]
HINV_TOL = 1e-12
HINV_MAXITER = 100


@dataclass(frozen=True, eq=False)
class KernelSurface:
    """Gridded copula density on ``grid_size`` cell centres per axis.

    ``density[i, j]`` is the density at ``((i + .5) / G, (j + .5) / G)``; the
    surface is bilinearly interpolated and held flat beyond the outer nodes.
    Both margins integrate to one on the grid.
    """

    density: np.ndarray
    bandwidth: tuple
    multiplier: float
    edf: float = float("nan")

    @property
    def grid_size(self):
        return self.density.shape[0]

    @cached_property
    def _tables(self):
        c = np.ascontiguousarray(self.density, dtype=np.float64)
        ct = np.ascontiguousarray(c.T)
        return c, _cumulative(c), ct, _cumulative(ct)

    def to_dict(self):
        return {
            "grid_size": self.grid_size,
            "density": self.density.ravel().tolist(),
            "bandwidth": list(self.bandwidth),
            "multiplier": self.multiplier,
            "edf": self.edf,
        }

    @classmethod
    def from_dict(cls, d):
        g = int(d["grid_size"])
        dens = np.asarray(d["density"], dtype=np.float64).reshape(g, g)
        return cls(dens, tuple(d["bandwidth"]), float(d["multiplier"]), float(d.get("edf", "nan")))


def _cumulative(c):
    g = c.shape[0]
    delta = 1.0 / g
    cum = np.empty_like(c)
    cum[0] = 0.5 * delta * c[0]
    cum[1:] = cum[0] + np.cumsum(0.5 * delta * (c[:-1] + c[1:]), axis=0)
    return cum


@dataclass(frozen=True, eq=False)
class PairCopulaSpec:
    """One bivariate copula.

    ``parameter`` is ignored for the independence and kernel families.
    ``loglik``/``aic`` are filled in by :func:`fit_pair`.
    """

    family: str = "independence"
    parameter: float = 0.0
    rotation: int = 0
    kernel: KernelSurface | None = None
    loglik: float = float("nan")
    aic: float = float("nan")

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown copula family {self.family!r}")
        if self.rotation not in ROTATIONS:
            raise ValueError(f"rotation must be one of {ROTATIONS}")
        if self.rotation and self.family not in _ROTATED_FAMILIES:
            raise ValueError(f"{self.family} copulas are not rotated")
        p = self.parameter
        if self.family == "gaussian" and not -1.0 < p < 1.0:
            raise ValueError("gaussian parameter must lie in (-1, 1)")
        if self.family == "clayton" and not p > 0.0:
            raise ValueError("clayton parameter must be > 0")
        if self.family == "gumbel" and not p >= 1.0:
            raise ValueError("gumbel parameter must be >= 1")
        if self.family == "frank" and p == 0.0:
            raise ValueError("frank parameter must be nonzero")
        if self.family == "kernel" and self.kernel is None:
            raise ValueError("kernel family needs a kernel surface")

    @property
    def n_params(self):
        return 0 if self.family == "independence" else 1

    @property
    def tau(self):
        """Kendall's tau implied by the parameter (NaN for kernel surfaces)."""
        if self.family == "kernel":
            return float("nan")
        t = parameter_to_tau(self.family, self.parameter)
        return -t if self.rotation in (90, 270) else t

    def to_dict(self):
        d = {"family": self.family, "parameter": self.parameter, "rotation": self.rotation}
        if self.kernel is not None:
            d["kernel"] = self.kernel.to_dict()
        if np.isfinite(self.loglik):
            d["loglik"] = self.loglik
            d["aic"] = self.aic
        return d

    @classmethod
    def from_dict(cls, d):
        kernel = KernelSurface.from_dict(d["kernel"]) if "kernel" in d else None
        return cls(
            family=d["family"],
            parameter=float(d.get("parameter", 0.0)),
            rotation=int(d.get("rotation", 0)),
            kernel=kernel,
            loglik=float(d.get("loglik", "nan")),
            aic=float(d.get("aic", "nan")),
        )


INDEPENDENCE = PairCopulaSpec("independence")


@dataclass(frozen=True)
class FitConfig:
    """Pair-copula fitting options."""

    family_set: tuple = FAMILIES
    selection: str = "aic"
    kernel_bandwidth_multiplier: float = 0.1
    kernel_grid_size: int = 64
    independence_test: bool = True

    def __post_init__(self):
        object.__setattr__(self, "family_set", tuple(self.family_set))
        bad = [f for f in self.family_set if f not in FAMILIES]
        if bad or not self.family_set:
            raise ValueError(f"invalid family_set {self.family_set!r}")
        if self.selection != "aic":
            raise ValueError("only AIC selection is supported")
        if not self.kernel_bandwidth_multiplier > 0:
            raise ValueError("kernel_bandwidth_multiplier must be > 0")
        if int(self.kernel_grid_size) < 16:
            raise ValueError("kernel_grid_size must be >= 16")

    def to_dict(self):
        return {
            "family_set": list(self.family_set),
            "selection": self.selection,
            "kernel_bandwidth_multiplier": self.kernel_bandwidth_multiplier,
            "kernel_grid_size": self.kernel_grid_size,
            "independence_test": self.independence_test,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# --------------------------------------------------------------------------
# dependence measure


def kendall_tau(u, v):
    """Kendall's tau-b of two equal-length samples.

    Raises
    ------
    ValueError
        On length mismatch, fewer than two observations or a constant vector.
    """
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    if u.size != v.size:
        raise ValueError("kendall_tau: length mismatch")
    return float(kernels.kendall_tau_b(u, v))


def _frank_tau(theta):
    a = abs(theta)
    if a < 1e-8:
        return theta / 9.0
    debye, _ = integrate.quad(lambda t: t / np.expm1(t) if t > 0 else 1.0, 0.0, a)
    t = 1.0 - 4.0 / a + 4.0 * debye / a**2
    return float(np.copysign(t, theta))


def parameter_to_tau(family, theta):
    if family == "independence":
        return 0.0
    if family == "gaussian":
        return 2.0 / np.pi * np.arcsin(theta)
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        return _frank_tau(theta)
    raise ValueError(f"no tau mapping for family {family!r}")


def tau_to_parameter(family, tau):
    """Invert Kendall's tau for a base (unrotated) family, clipped to bounds."""
    if not -1.0 < tau < 1.0:
        raise ValueError("degenerate dependence: |tau| = 1")
    lo, hi = PARAM_BOUNDS[family]
    if family == "gaussian":
        theta = np.sin(np.pi * tau / 2.0)
    elif family == "clayton":
        theta = 2.0 * tau / (1.0 - tau)
    elif family == "gumbel":
        theta = 1.0 / (1.0 - tau)
    elif family == "frank":
        if abs(tau) < 1e-6:
            theta = 9.0 * tau if tau else 1e-6
        else:
            target = abs(tau)
            if target >= _frank_tau(hi) - 1e-12:
                theta = hi
            else:
                theta = optimize.brentq(lambda t: _frank_tau(t) - target, 1e-8, hi, xtol=1e-12)
            theta = np.copysign(theta, tau)
    else:
        raise ValueError(f"no tau inversion for family {family!r}")
    return float(np.clip(theta, lo, hi))


# --------------------------------------------------------------------------
# base families (unrotated); arrays strictly inside (0, 1)


def _gaussian_logpdf(u, v, rho):
    x, y = special.ndtri(u), special.ndtri(v)
    r2 = rho * rho
    return -0.5 * np.log1p(-r2) - (r2 * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * (1.0 - r2))


def _gaussian_h(u, v, rho):
    x, y = special.ndtri(u), special.ndtri(v)
    return special.ndtr((x - rho * y) / np.sqrt(1.0 - rho * rho))


def _gaussian_hinv(w, v, rho):
    return special.ndtr(special.ndtri(w) * np.sqrt(1.0 - rho * rho) + rho * special.ndtri(v))


def _clayton_logA(lu, lv, theta):
    # log(u^-t + v^-t - 1) without overflow or cancellation
    a, b = -theta * lu, -theta * lv
    m = np.maximum(a, b)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.log1p(np.expm1(a) + np.expm1(b))
        big = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
    return np.where(m < 30.0, small, big)


def _clayton_logpdf(u, v, theta):
    lu, lv = np.log(u), np.log(v)
    return np.log1p(theta) - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * _clayton_logA(lu, lv, theta)


def _clayton_h(u, v, theta):
    lu, lv = np.log(u), np.log(v)
    return np.exp(-(theta + 1.0) * lv - (1.0 + 1.0 / theta) * _clayton_logA(lu, lv, theta))


def _clayton_hinv(w, v, theta):
    b = -theta * np.log(v)
    t = b - theta / (1.0 + theta) * np.log(w)
    m = np.maximum(t, b)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.log1p(np.expm1(t) - np.expm1(b))
        big = m + np.log(np.exp(t - m) - np.exp(b - m) + np.exp(-m))
    log_inner = np.where(m < 30.0, small, big)
    return np.exp(-log_inner / theta)


def _gumbel_parts(u, v, theta):
    lx, ly = np.log(-np.log(u)), np.log(-np.log(v))
    log_s = np.logaddexp(theta * lx, theta * ly)
    a = np.exp(log_s / theta)
    return lx, ly, log_s, a


def _gumbel_logpdf(u, v, theta):
    lx, ly, log_s, a = _gumbel_parts(u, v, theta)
    return (-a - np.log(u) - np.log(v) + (theta - 1.0) * (lx + ly)
            + (1.0 / theta - 2.0) * log_s + np.log(a + theta - 1.0))


def _gumbel_h(u, v, theta):
    lx, ly, log_s, a = _gumbel_parts(u, v, theta)
    return np.exp(-a + (1.0 / theta - 1.0) * log_s + (theta - 1.0) * ly - np.log(v))


def _frank_parts(u, v, theta):
    # negative theta is the reflection v -> 1 - v of the positive case; the
    # denominator a(1 - e^{-t(1-u)}) + b(1 - a) then has no cancellation
    if theta < 0:
        v, theta = 1.0 - v, -theta
    a, b = np.exp(-theta * u), np.exp(-theta * v)
    denom = -a * np.expm1(-theta * (1.0 - u)) - b * np.expm1(-theta * u)
    return u, v, theta, a, b, denom


def _frank_logpdf(u, v, theta):
    u, v, t, a, b, denom = _frank_parts(u, v, theta)
    return np.log(t * -np.expm1(-t)) - t * (u + v) - 2.0 * np.log(denom)


def _frank_h(u, v, theta):
    u, v, t, a, b, denom = _frank_parts(u, v, theta)
    return b * -np.expm1(-t * u) / denom


def _frank_hinv(w, v, theta):
    em = np.expm1(-theta)
    return -np.log1p(w * em / (w + (1.0 - w) * np.exp(-theta * v))) / theta


def _bisect(fun, w, lo=0.0, hi=1.0, tol=HINV_TOL, maxiter=HINV_MAXITER):
    """Vectorised bisection for an increasing ``fun`` on [lo, hi]."""
    lo = np.full(np.shape(w), lo, dtype=np.float64)
    hi = np.full(np.shape(w), hi, dtype=np.float64)
    for _ in range(maxiter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        below = fun(mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        if np.any(hi - lo > tol):
            raise RuntimeError("h-function inversion did not converge")
    return 0.5 * (lo + hi)


def _base_logpdf(spec, u, v):
    fam, th = spec.family, spec.parameter
    if fam == "independence":
        return np.zeros(np.broadcast(u, v).shape)
    if fam == "gaussian":
        return _gaussian_logpdf(u, v, th)
    if fam == "clayton":
        return _clayton_logpdf(u, v, th)
    if fam == "gumbel":
        return _gumbel_logpdf(u, v, th)
    if fam == "frank":
        return _frank_logpdf(u, v, th)
    with np.errstate(divide="ignore"):
        return np.log(_kernel_call(kernels.grid_pdf, spec.kernel._tables[0], None, u, v))


def _kernel_call(fn, c, cum, a, b, *extra):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    shape = a.shape
    a = np.ascontiguousarray(a.ravel())
    b = np.ascontiguousarray(b.ravel())
    out = fn(c, a, b, *extra) if cum is None else fn(c, cum, a, b, *extra)
    return np.asarray(out).reshape(shape)


def _base_h12(spec, u, v):
    """P(U <= u | V = v) for the unrotated copula."""
    fam, th = spec.family, spec.parameter
    if fam == "independence":
        return np.broadcast_to(u, np.broadcast(u, v).shape).astype(np.float64)
    if fam == "gaussian":
        return _gaussian_h(u, v, th)
    if fam == "clayton":
        return _clayton_h(u, v, th)
    if fam == "gumbel":
        return _gumbel_h(u, v, th)
    if fam == "frank":
        return _frank_h(u, v, th)
    c, cum, _, _ = spec.kernel._tables
    return _kernel_call(kernels.grid_hfunc, c, cum, u, v)


def _base_h21(spec, v, u):
    """P(V <= v | U = u) for the unrotated copula."""
    if spec.family != "kernel":
        return _base_h12(spec, v, u)  # parametric families are exchangeable
    _, _, ct, cumt = spec.kernel._tables
    return _kernel_call(kernels.grid_hfunc, ct, cumt, v, u)


def _base_hinv12(spec, w, v):
    fam, th = spec.family, spec.parameter
    if fam == "independence":
        return np.broadcast_to(w, np.broadcast(w, v).shape).astype(np.float64)
    if fam == "gaussian":
        return _gaussian_hinv(w, v, th)
    if fam == "clayton":
        return _clayton_hinv(w, v, th)
    if fam == "frank":
        return _frank_hinv(w, v, th)
    if fam == "gumbel":
        w, v = np.broadcast_arrays(w, v)
        return _bisect(lambda x: _gumbel_h(np.clip(x, EPS, 1 - EPS), v, th), w)
    c, cum, _, _ = spec.kernel._tables
    return _kernel_call(kernels.grid_hinv, c, cum, w, v, 1e-10, HINV_MAXITER)


def _base_hinv21(spec, w, u):
    if spec.family != "kernel":
        return _base_hinv12(spec, w, u)
    _, _, ct, cumt = spec.kernel._tables
    return _kernel_call(kernels.grid_hinv, ct, cumt, w, u, 1e-10, HINV_MAXITER)


# --------------------------------------------------------------------------
# public evaluation API


def _check_open(*arrays):
    out = []
    for a in arrays:
        a = np.asarray(a, dtype=np.float64)
        if np.any(~(a > 0.0) | ~(a < 1.0)):
            raise ValueError("copula arguments must lie strictly inside (0, 1)")
        out.append(a)
    return out


def _ret(x, *like):
    if all(np.ndim(a) == 0 for a in like):
        return float(x)
    return x


def _reflect(x, flip):
    return 1.0 - x if flip else x


def pair_logpdf(spec, u, v):
    """Log copula density; vectorised over broadcastable ``u`` and ``v``."""
    ua, va = _check_open(u, v)
    fu, fv = _FLIPS[spec.rotation]
    return _ret(_base_logpdf(spec, _reflect(ua, fu), _reflect(va, fv)), u, v)


def pair_pdf(spec, u, v):
    """Copula density ``c(u, v)``."""
    return _ret(np.exp(pair_logpdf(spec, u, v)), u, v)


def hfunc(spec, u, v, direction="1|2"):
    """Conditional distribution function (see module docstring)."""
    ua, va = _check_open(u, v)
    fu, fv = _FLIPS[spec.rotation]
    ru, rv = _reflect(ua, fu), _reflect(va, fv)
    if direction == "1|2":
        h = _base_h12(spec, ru, rv)
        h = 1.0 - h if fu else h
    elif direction == "2|1":
        h = _base_h21(spec, rv, ru)
        h = 1.0 - h if fv else h
    else:
        raise ValueError("direction must be '1|2' or '2|1'")
    return _ret(np.clip(h, EPS, 1.0 - EPS), u, v)


def hinv(spec, w, v, direction="1|2"):
    """Inverse of :func:`hfunc` in its conditioned argument."""
    wa, ca = _check_open(w, v)
    fu, fv = _FLIPS[spec.rotation]
    if direction == "1|2":
        flip_out, cond = fu, _reflect(ca, fv)
        x = _base_hinv12(spec, _reflect(wa, fu), cond)
    elif direction == "2|1":
        flip_out, cond = fv, _reflect(ca, fu)
        x = _base_hinv21(spec, _reflect(wa, fv), cond)
    else:
        raise ValueError("direction must be '1|2' or '2|1'")
    return _ret(np.clip(_reflect(x, flip_out), EPS, 1.0 - EPS), w, v)


def sample_pair(spec, n, seed):
    """Draw ``n`` pairs by conditional inversion; columns are ``(u, v)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    v = rng.uniform(EPS, 1.0 - EPS, size=n)
    w = rng.uniform(EPS, 1.0 - EPS, size=n)
    return np.column_stack([hinv(spec, w, v, "1|2"), v])


# --------------------------------------------------------------------------
# fitting


def independence_test_passes(tau, n):
    """True when |tau| is not significant at the 5% level (asymptotic test)."""
    stat = abs(tau) * np.sqrt(9.0 * n * (n - 1) / (2.0 * (2 * n + 5)))
    return stat < 1.96


def _loglik(spec, u, v):
    ll = float(np.sum(pair_logpdf(spec, u, v)))
    return ll if np.isfinite(ll) else -np.inf


def _cell_masses(z, edges, h):
    # mass of N(z_k, h^2) in each band [edges[i], edges[i+1]], shape (n, G)
    a = (edges[None, :-1] - z[:, None]) / h
    b = (edges[None, 1:] - z[:, None]) / h
    upper = a > 0
    return np.where(upper, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))


def fit_kernel_surface(u, v, multiplier=0.1, grid_size=64):
    """Normal-scale product-kernel estimate of a copula density.

    Data are mapped through the standard normal quantile, smoothed with a
    Gaussian product kernel whose per-axis bandwidth is ``multiplier`` times
    the bivariate rule of thumb ``sd * n ** (-1/6)``, integrated over the cells
    of a ``grid_size``-square grid on the copula scale, and rescaled so both
    grid margins are uniform.
    """
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    n = u.size
    if n < 20:
        raise ValueError("kernel copula needs at least 20 observations")
    g = int(grid_size)
    z1, z2 = special.ndtri(u), special.ndtri(v)
    h1 = multiplier * np.std(z1, ddof=1) * n ** (-1.0 / 6.0)
    h2 = multiplier * np.std(z2, ddof=1) * n ** (-1.0 / 6.0)
    if not (h1 > 0 and h2 > 0):
        raise ValueError("kernel copula: degenerate sample")
    edges = special.ndtri(np.linspace(0.0, 1.0, g + 1))
    a = _cell_masses(z1, edges, h1)
    b = _cell_masses(z2, edges, h2)
    raw = (a.T @ b) * (g * g / n)
    raw = np.maximum(raw, 1e-10)
    dens = raw.copy()
    for _ in range(500):
        dens /= dens.mean(axis=1, keepdims=True)
        dens /= dens.mean(axis=0, keepdims=True)
        if np.abs(dens.mean(axis=1) - 1.0).max() < 1e-12:
            break
    # effective degrees of freedom: each point's share of its own fitted density
    own = _bilinear_rows(a, u, g) * _bilinear_rows(b, v, g) * (g * g / n)
    edf = float(np.sum(own / kernels.grid_pdf(np.ascontiguousarray(raw), u, v)))
    return KernelSurface(dens, (float(h1), float(h2)), float(multiplier), edf)


def _bilinear_rows(masses, x, g):
    s = x * g - 0.5
    i = np.clip(np.floor(s), 0, g - 2).astype(np.intp)
    t = np.clip(s - i, 0.0, 1.0)
    k = np.arange(x.size)
    return (1.0 - t) * masses[k, i] + t * masses[k, i + 1]


def _candidates(family, tau):
    if family == "independence":
        return [INDEPENDENCE]
    if family in ("gaussian", "frank"):
        return [PairCopulaSpec(family, tau_to_parameter(family, tau))]
    theta = tau_to_parameter(family, abs(tau))
    if family == "clayton" and theta <= PARAM_BOUNDS["clayton"][0]:
        return []
    rotations = (0, 180) if tau >= 0 else (90, 270)
    return [PairCopulaSpec(family, theta, r) for r in rotations]


def fit_pair(u, v, config=None, tau=None):
    """Fit a pair copula to pseudo-observations by tau inversion and AIC.

    The independence copula is chosen outright when the asymptotic
    independence test does not reject (and independence is allowed).

    Raises
    ------
    ValueError
        On too few observations, arguments outside (0, 1) or |tau| = 1.
    """
    config = config or FitConfig()
    u, v = _check_open(np.ravel(u), np.ravel(v))
    n = u.size
    if n < 2 or v.size != n:
        raise ValueError("fit_pair needs two equal-length samples of size >= 2")
    if tau is None:
        tau = kendall_tau(u, v)
    if abs(tau) >= 1.0 - 1e-12:
        raise ValueError("degenerate dependence: |tau| = 1")
    families = config.family_set
    if "independence" in families and config.independence_test and independence_test_passes(tau, n):
        return PairCopulaSpec("independence", loglik=0.0, aic=0.0)

    best = None
    for fam in families:
        if fam == "kernel":
            if n < 20:
                continue
            surface = fit_kernel_surface(u, v, config.kernel_bandwidth_multiplier,
                                         config.kernel_grid_size)
            spec = PairCopulaSpec("kernel", kernel=surface)
            ll = _loglik(spec, u, v)
            cands = [(spec, ll, -2.0 * ll + 2.0 * surface.edf)]
        else:
            cands = []
            for spec in _candidates(fam, tau):
                ll = _loglik(spec, u, v)
                cands.append((spec, ll, -2.0 * ll + 2.0 * spec.n_params))
        for spec, ll, aic in cands:
            if best is None or aic < best[2]:
                best = (spec, ll, aic)
    if best is None:
        raise ValueError("no candidate family could be fitted")
    spec, ll, aic = best
    return PairCopulaSpec(spec.family, spec.parameter, spec.rotation, spec.kernel, ll, aic)
