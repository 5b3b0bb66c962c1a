"""Interval-quality metrics and diagnostic curves."""
import csv
import json
from dataclasses import dataclass, field

import numpy as np


def _vec(a, name):
    a = np.asarray(a, dtype=np.float64).ravel()
    if np.any(np.isnan(a)):
        raise ValueError(f"{name} contains NaN")
    return a


def picp_mpiw(y, lower, upper):
    """Coverage fraction, mean width and the 0/1 capture vector.

    A target on a bound counts as captured.
    """
    y, lo, hi = _vec(y, "y"), _vec(lower, "lower"), _vec(upper, "upper")
    if not y.size == lo.size == hi.size:
        raise ValueError("y, lower and upper must have equal lengths")
    if y.size == 0:
        raise ValueError("empty input")
    bad = np.flatnonzero(lo > hi)
    if bad.size:
        raise ValueError(f"lower > upper at index {int(bad[0])}")
    k = ((lo <= y) & (y <= hi)).astype(np.int64)
    return float(k.mean()), float(np.mean(hi - lo)), k


def error_retention(abs_errors, scores):
    """Mean error of the ``ceil(rho n)`` least uncertain points for each ``rho = i/n``.

    Returns a list of ``(rho, mean_abs_error)`` pairs; ties in the scores are
    broken by original index.
    """
    e, s = _vec(abs_errors, "abs_errors"), _vec(scores, "scores")
    if e.size == 0:
        raise ValueError("empty input")
    if e.size != s.size:
        raise ValueError("abs_errors and scores must have equal lengths")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    order = np.argsort(s, kind="stable")
    n = e.size
    counts = np.arange(1, n + 1)
    means = np.cumsum(e[order]) / counts
    return [(float(c / n), float(m)) for c, m in zip(counts, means)]


def calibration_curve(y, quantile_predictions, taus):
    """Fraction of targets at or below each predicted quantile column."""
    y = _vec(y, "y")
    Q = np.asarray(quantile_predictions, dtype=np.float64)
    taus = np.asarray(taus, dtype=np.float64).ravel()
    if np.any(~(taus > 0.0) | ~(taus < 1.0)):
        raise ValueError("taus must lie in (0, 1)")
    if np.any(np.diff(taus) < 0):
        raise ValueError("taus must be ordered")
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape != (y.size, taus.size):
        raise ValueError(f"quantile_predictions must have shape ({y.size}, {taus.size})")
    frac = np.mean(y[:, None] <= Q, axis=0)
    return [(float(t), float(f)) for t, f in zip(taus, frac)]


@dataclass
class MetricsReport:
    picp: float
    mpiw: float
    capture: np.ndarray
    retention_curve: list
    calibration_curve: list = field(default_factory=list)
    mae: float = float("nan")

    def to_dict(self):
        return {
            "picp": self.picp,
            "mpiw": self.mpiw,
            "mae": self.mae,
            "n": int(self.capture.size),
            "captured": int(self.capture.sum()),
            "capture_vector": self.capture.tolist(),
            "retention_curve": [list(p) for p in self.retention_curve],
            "calibration_curve": [list(p) for p in self.calibration_curve],
        }

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_curve_csv(curve, path, header):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for a, b in curve:
            w.writerow([repr(float(a)), repr(float(b))])


def evaluate(y, y_hat, lower, upper, quantiles=None, taus=None, scores=None):
    """Bundle coverage, retention and (optionally) calibration.

    The retention score defaults to the interval width ``upper - lower``.
    """
    y, y_hat = _vec(y, "y"), _vec(y_hat, "y_hat")
    picp, mpiw, k = picp_mpiw(y, lower, upper)
    err = np.abs(y - y_hat)
    scores = _vec(upper, "upper") - _vec(lower, "lower") if scores is None else scores
    ret = error_retention(err, scores)
    cal = calibration_curve(y, quantiles, taus) if quantiles is not None else []
    return MetricsReport(picp, mpiw, k, ret, cal, float(err.mean()))
