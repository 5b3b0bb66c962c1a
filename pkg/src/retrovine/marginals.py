"""Empirical marginal distributions and pseudo-observations.

Marginals are piecewise-linear interpolations of the empirical CDF through
Weibull plotting positions ``rank / (n + 1)``, so every value handed to a
copula stays strictly inside the unit interval.
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats

SUPPORT_POLICIES = ("clamp", "linear-extrapolate-tails")


@dataclass(frozen=True, eq=False)
class MarginalModel:
    """Fitted univariate marginal.

    Attributes
    ----------
    sorted_samples : ndarray
        Distinct sample values in increasing order (tied values collapse to
        one knot carrying their average rank).
    plotting_positions : ndarray
        Strictly increasing probabilities in (0, 1), one per knot.
    n : int
        Number of samples the model was fitted on.
    support_policy : str
        ``"clamp"`` or ``"linear-extrapolate-tails"``.
    """

    sorted_samples: np.ndarray
    plotting_positions: np.ndarray
    n: int
    support_policy: str = "clamp"
    interpolation: str = "linear"

    def cdf(self, x):
        return cdf(self, x)

    def quantile(self, u):
        return quantile(self, u)

    def to_dict(self):
        return {
            "sorted_samples": self.sorted_samples.tolist(),
            "plotting_positions": self.plotting_positions.tolist(),
            "n": self.n,
            "support_policy": self.support_policy,
            "interpolation": self.interpolation,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            sorted_samples=np.asarray(d["sorted_samples"], dtype=np.float64),
            plotting_positions=np.asarray(d["plotting_positions"], dtype=np.float64),
            n=int(d["n"]),
            support_policy=d.get("support_policy", "clamp"),
            interpolation=d.get("interpolation", "linear"),
        )


def fit_marginal(samples, support_policy="clamp"):
    """Fit the empirical marginal of a 1-d sample.

    Raises
    ------
    ValueError
        If fewer than two samples are given, a value is not finite, or the
        support policy is unknown.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("fit_marginal needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("fit_marginal: samples must be finite")
    if support_policy not in SUPPORT_POLICIES:
        raise ValueError(f"unknown support policy {support_policy!r}")
    n = x.size
    knots, first, counts = np.unique(x, return_index=True, return_counts=True)
    # average rank of a tie group occupying sorted slots [s, s + c)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    positions = (starts + (counts + 1) / 2.0) / (n + 1)
    return MarginalModel(knots, positions, n, support_policy)


def _scalar_or_array(values, like):
    return float(values) if np.ndim(like) == 0 else values


def cdf(model, x):
    """Evaluate the marginal CDF; outputs never touch 0 or 1."""
    xa = np.asarray(x, dtype=np.float64)
    xs, ps = model.sorted_samples, model.plotting_positions
    if xs.size == 1:
        out = np.full_like(xa, ps[0], dtype=np.float64)
        return _scalar_or_array(out, x)
    out = np.interp(xa, xs, ps)
    if model.support_policy == "linear-extrapolate-tails":
        lo_slope = (ps[1] - ps[0]) / (xs[1] - xs[0])
        hi_slope = (ps[-1] - ps[-2]) / (xs[-1] - xs[-2])
        out = np.where(xa < xs[0], ps[0] + lo_slope * (xa - xs[0]), out)
        out = np.where(xa > xs[-1], ps[-1] + hi_slope * (xa - xs[-1]), out)
        floor = 0.5 / (model.n + 1)
        out = np.clip(out, floor, 1.0 - floor)
    return _scalar_or_array(out, x)


def quantile(model, u):
    """Inverse of :func:`cdf` on the sample range.

    Raises
    ------
    ValueError
        If any ``u`` lies outside the open interval (0, 1).
    """
    ua = np.asarray(u, dtype=np.float64)
    if np.any(~(ua > 0.0) | ~(ua < 1.0)):
        raise ValueError("quantile: probabilities must lie in (0, 1)")
    xs, ps = model.sorted_samples, model.plotting_positions
    if xs.size == 1:
        return _scalar_or_array(np.full_like(ua, xs[0]), u)
    out = np.interp(ua, ps, xs)
    if model.support_policy == "linear-extrapolate-tails":
        lo_slope = (xs[1] - xs[0]) / (ps[1] - ps[0])
        hi_slope = (xs[-1] - xs[-2]) / (ps[-1] - ps[-2])
        out = np.where(ua < ps[0], xs[0] + lo_slope * (ua - ps[0]), out)
        out = np.where(ua > ps[-1], xs[-1] + hi_slope * (ua - ps[-1]), out)
    return _scalar_or_array(out, u)


def pseudo_observations(data):
    """Column-wise average ranks divided by ``N + 1``."""
    a = np.asarray(data, dtype=np.float64)
    squeeze = a.ndim == 1
    if squeeze:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 2:
        raise ValueError("pseudo_observations needs an N x d matrix with N >= 2")
    if not np.all(np.isfinite(a)):
        raise ValueError("pseudo_observations: non-finite entries")
    u = stats.rankdata(a, method="average", axis=0) / (a.shape[0] + 1)
    return u[:, 0] if squeeze else u
