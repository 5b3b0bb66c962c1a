"""Vine-copula uncertainty for a trained regression network.

A frozen trunk supplies embeddings ``xi = embed(trunk, x)``. A vine copula
fitted on the pseudo-observations of ``(xi, y)`` then serves two purposes:

* epistemic confidence intervals: the vine is sampled to build bootstrap
  training sets, one fresh head is trained per set, and the cross-head
  spread is scaled by a simultaneous critical value ``r``;
* aleatoric prediction intervals: conditional quantiles of ``y`` given
  ``xi`` are weighted empirical quantiles of the training targets, with
  weights given by the vine's conditional density of ``y``.
"""
import csv
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from . import __version__
from .marginals import cdf as marginal_cdf
from .marginals import fit_marginal
from .marginals import quantile as marginal_quantile
from .net import HeadEnsemble, MlpModel, TrainConfig, embed, predict, train_head
from .paircop import FitConfig
from .rng import RNG_ALGORITHM, subseed
from .vine import (DEFAULT_TRUNCATION, VineModel, conditional_logpdf_integrated,
                   conditional_logpdf_last, fit_vine, sample_vine)
from .vine import _map

DEFAULT_TAUS = tuple(round(0.05 * k, 2) for k in range(1, 20))
# mean normalised weight below this means the point is outside the copula's support
SUPPORT_FLOOR = 1e-10
_CHUNK = 256


class OutOfSupportError(ValueError):
    """All quantile weights vanish at a test point."""


@dataclass(frozen=True)
class VcnnConfig:
    S: int = 30
    alpha: float = 0.05
    bootstrap_sample_size: int | None = None
    tau_grid: tuple = DEFAULT_TAUS
    truncation_level: int | None = DEFAULT_TRUNCATION
    fit: FitConfig = field(default_factory=FitConfig)
    head_train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.S < 2:
            raise ValueError("S must be >= 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.bootstrap_sample_size is not None and self.bootstrap_sample_size < 2:
            raise ValueError("bootstrap_sample_size must be >= 2")
        taus = tuple(float(t) for t in self.tau_grid)
        if not taus or any(not 0.0 < t < 1.0 for t in taus) or list(taus) != sorted(taus):
            raise ValueError("tau_grid must be increasing values in (0, 1)")
        object.__setattr__(self, "tau_grid", taus)

    def to_dict(self):
        return {
            "S": self.S,
            "alpha": self.alpha,
            "bootstrap_sample_size": self.bootstrap_sample_size,
            "tau_grid": list(self.tau_grid),
            "truncation_level": self.truncation_level,
            "fit": self.fit.to_dict(),
            "head_train": self.head_train.to_dict(),
            "seed": self.seed,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "fit" in d:
            d["fit"] = FitConfig.from_dict(d["fit"])
        if "head_train" in d:
            d["head_train"] = TrainConfig.from_dict(d["head_train"])
        if "tau_grid" in d:
            d["tau_grid"] = tuple(d["tau_grid"])
        return cls(**d)


@dataclass(eq=False)
class VcnnModel:
    """Trunk, marginals, vine and bootstrapped heads.

    ``marginals`` holds one model per embedding coordinate followed by the
    target's. Constant embedding coordinates carry no dependence and are left
    out of the vine; ``vine_columns`` lists the coordinates that are in it,
    and the target is always the vine's last variable. A coordinate whose
    ranks equal (or reverse) those of an earlier kept one is a deterministic
    monotone function of it; ``twins`` maps it to ``(source, reversed)`` and
    it is rebuilt from the source's uniform when sampling.
    """

    trunk: MlpModel
    marginals: list
    vine: VineModel
    heads: HeadEnsemble
    config: VcnnConfig
    vine_columns: tuple
    y_train: np.ndarray
    twins: dict = field(default_factory=dict)

    @property
    def embedding_dim(self):
        return self.trunk.embedding_dim

    @property
    def target_index(self):
        return len(self.vine_columns)

    @property
    def y_sorted(self):
        return np.sort(self.y_train)


def _embedding_uniforms(model, xi):
    cols = [marginal_cdf(model.marginals[j], xi[:, j]) for j in model.vine_columns]
    U = np.empty((xi.shape[0], len(cols) + 1))
    for i, c in enumerate(cols):
        U[:, i] = c
    U[:, -1] = 0.5
    return U


def fit_vcnn(trunk, X_train, y_train, config=None):
    """Fit marginals, vine and S bootstrap heads around a trained trunk."""
    config = config or VcnnConfig()
    y = np.asarray(y_train, dtype=np.float64).ravel()
    xi = embed(trunk, X_train)
    n, d = xi.shape
    if d == 0:
        raise ValueError("the trunk has an empty embedding")
    if y.size != n:
        raise ValueError("X_train and y_train have different numbers of rows")
    marginals = [fit_marginal(xi[:, j]) for j in range(d)] + [fit_marginal(y)]
    keep, twins = _split_columns(xi)
    if not keep:
        raise ValueError("every embedding coordinate is constant on the training data")
    if np.ptp(y) == 0:
        raise ValueError("training targets are constant")
    cols = list(keep) + [d]
    data = np.column_stack([xi[:, list(keep)], y])
    U = np.column_stack([marginal_cdf(marginals[c], data[:, i]) for i, c in enumerate(cols)])
    vine = fit_vine(U, config.fit, config.truncation_level, leaf=len(keep), threads=config.threads)

    M = config.bootstrap_sample_size or n
    constant = {j: xi[0, j] for j in range(d) if j not in keep and j not in twins}
    position = {c: i for i, c in enumerate(keep)}

    def one_head(s):
        Us = sample_vine(vine, M, subseed(config.seed, f"bootstrap/{s}"))
        xs = np.empty((M, d))
        for i, c in enumerate(keep):
            xs[:, c] = marginal_quantile(marginals[c], Us[:, i])
        for c, value in constant.items():
            xs[:, c] = value
        for c, (src, rev) in twins.items():
            w = Us[:, position[src]]
            xs[:, c] = marginal_quantile(marginals[c], 1.0 - w if rev else w)
        ys = marginal_quantile(marginals[d], Us[:, -1])
        cfg = replace(config.head_train, seed=subseed(config.seed, f"head/{s}"))
        return train_head(xs, ys, cfg)

    heads = HeadEnsemble(_map(one_head, list(range(config.S)), config.threads))
    return VcnnModel(trunk, marginals, vine, heads, config, keep, y.copy(), twins)


def _split_columns(xi):
    """Embedding columns for the vine, plus exact monotone duplicates."""
    n = xi.shape[0]
    keep, twins, seen = [], {}, {}
    for j in range(xi.shape[1]):
        if not np.ptp(xi[:, j]) > 0:
            continue
        r = rankdata(xi[:, j])
        key, rkey = r.tobytes(), (n + 1.0 - r).tobytes()
        if key in seen:
            twins[j] = (seen[key], False)
        elif rkey in seen:
            twins[j] = (seen[rkey], True)
        else:
            seen[key] = j
            keep.append(j)
    return tuple(keep), twins


# --------------------------------------------------------------------------
# epistemic


@dataclass
class EpistemicResult:
    lower: np.ndarray
    upper: np.ndarray
    r: float
    se: np.ndarray
    center: np.ndarray
    y_hat: np.ndarray
    degenerate: bool


def simultaneous_band(F, alpha):
    """Critical value and per-location spread from an (S, L) prediction matrix.

    Returns ``(r, se, center, degenerate)``. Locations where the heads all
    agree (zero spread) do not enter the maximum.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ValueError("need predictions from at least 2 heads")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    center = F.mean(axis=0)
    se = F.std(axis=0, ddof=1)
    live = se > 0
    if not np.any(live):
        return 0.0, se, center, True
    m = np.max(np.abs(F[:, live] - center[live]) / se[live], axis=1)
    return float(np.quantile(m, 1.0 - alpha)), se, center, False


def epistemic_interval(model, X_test, alpha=None):
    """Confidence bounds ``f(x) +- r * SE(x)`` around the trunk prediction."""
    alpha = model.config.alpha if alpha is None else alpha
    xi = embed(model.trunk, X_test)
    F = model.heads.predict_all(xi)
    r, se, center, degenerate = simultaneous_band(F, alpha)
    if degenerate:
        warnings.warn("all heads agree everywhere; epistemic intervals have zero width",
                      RuntimeWarning, stacklevel=2)
    y_hat = predict(model.trunk, X_test)
    return EpistemicResult(y_hat - r * se, y_hat + r * se, r, se, center, y_hat, degenerate)


# --------------------------------------------------------------------------
# aleatoric


def _log_weights(model, U):
    """Log conditional density of the target at each training target, (L, N)."""
    vine = model.vine
    var = model.target_index
    grid = marginal_cdf(model.marginals[-1], model.y_sorted)
    if vine.order[-1] == var:
        return conditional_logpdf_last(vine, var, U, grid)
    return conditional_logpdf_integrated(vine, var, U, grid)


def _weighted_quantiles(logw, y_sorted, taus):
    m = logw.max(axis=1, keepdims=True)
    w = np.exp(logw - m)
    total = w.sum(axis=1, keepdims=True)
    mean_w = np.exp(m[:, 0]) * total[:, 0] / logw.shape[1]
    cum = np.cumsum(w / total, axis=1)
    out = np.empty((logw.shape[0], len(taus)))
    for k, tau in enumerate(taus):
        idx = np.argmax(cum >= tau - 1e-12, axis=1)
        out[:, k] = y_sorted[idx]
    return out, ~(mean_w >= SUPPORT_FLOOR)


def _check_taus(taus):
    taus = np.atleast_1d(np.asarray(taus, dtype=np.float64))
    if np.any(~(taus > 0.0) | ~(taus < 1.0)):
        raise ValueError("quantile levels must lie in (0, 1)")
    return taus


def conditional_quantiles_xi(model, xi, taus, fallback=True):
    """Conditional target quantiles given embeddings.

    Returns ``(Q, outside)`` with ``Q`` of shape (L, len(taus)) and a boolean
    mask of points where the weights vanished. Those points get the
    unconditional quantiles when ``fallback`` is set; otherwise an
    :class:`OutOfSupportError` is raised.
    """
    taus = _check_taus(taus)
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    if xi.shape[1] != model.embedding_dim:
        raise ValueError(f"expected embeddings of width {model.embedding_dim}")
    U = _embedding_uniforms(model, xi)
    ys = model.y_sorted
    chunks = [slice(i, i + _CHUNK) for i in range(0, U.shape[0], _CHUNK)]

    def run(sl):
        return _weighted_quantiles(_log_weights(model, U[sl]), ys, taus)

    parts = _map(run, chunks, model.config.threads)
    Q = np.vstack([p[0] for p in parts])
    outside = np.concatenate([p[1] for p in parts])
    if np.any(outside):
        if not fallback:
            raise OutOfSupportError(
                f"{int(outside.sum())} test point(s) lie outside the copula's support")
        uncond = ys[np.argmax(np.arange(1, ys.size + 1)[None, :] / ys.size
                              >= taus[:, None] - 1e-12, axis=1)]
        Q[outside] = uncond
    return Q, outside


def conditional_quantile(model, xi_test, tau):
    """Conditional ``tau``-quantile of the target at one embedding vector.

    Raises :class:`OutOfSupportError` when the point is outside the support.
    """
    Q, _ = conditional_quantiles_xi(model, np.asarray(xi_test, dtype=np.float64)[None, :],
                                    [tau], fallback=False)
    return float(Q[0, 0])


def conditional_quantiles(model, X_test, taus=None):
    """Quantile matrix (L, len(taus)) at input points, with fallback mask."""
    taus = model.config.tau_grid if taus is None else taus
    return conditional_quantiles_xi(model, embed(model.trunk, X_test), taus)


@dataclass
class AleatoricResult:
    lower: np.ndarray
    upper: np.ndarray
    outside: np.ndarray
    levels: tuple


def aleatoric_interval(model, X_test, alpha=None):
    """Prediction bounds at the ``alpha/2`` and ``1 - alpha/2`` quantiles."""
    alpha = model.config.alpha if alpha is None else alpha
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    levels = (alpha / 2.0, 1.0 - alpha / 2.0)
    Q, outside = conditional_quantiles(model, X_test, levels)
    if np.any(outside):
        warnings.warn(f"{int(outside.sum())} point(s) outside the copula support; "
                      "unconditional quantiles used", RuntimeWarning, stacklevel=2)
    return AleatoricResult(Q[:, 0], Q[:, 1], outside, levels)


def combined_envelope(epistemic, aleatoric):
    """Pointwise hull of two interval sets, each given as ``(lower, upper)``."""
    el, eu = (np.asarray(a, dtype=np.float64) for a in epistemic)
    al, au = (np.asarray(a, dtype=np.float64) for a in aleatoric)
    if not el.shape == eu.shape == al.shape == au.shape:
        raise ValueError("interval sets cover different numbers of points")
    return np.minimum(el, al), np.maximum(eu, au)


# --------------------------------------------------------------------------
# reporting


@dataclass(eq=False)
class IntervalReport:
    X: np.ndarray
    y_hat: np.ndarray
    y_Le: np.ndarray
    y_Ue: np.ndarray
    y_La: np.ndarray
    y_Ua: np.ndarray
    L: np.ndarray
    U: np.ndarray
    r: float
    SE: np.ndarray
    center: np.ndarray
    outside: np.ndarray
    degenerate: bool
    config: VcnnConfig
    y: np.ndarray | None = None

    @property
    def columns(self):
        names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        names += ["y_hat", "y_Le", "y_Ue", "y_La", "y_Ua", "L", "U"]
        return names + (["y"] if self.y is not None else [])

    def rows(self):
        cols = [self.X[:, j] for j in range(self.X.shape[1])]
        cols += [self.y_hat, self.y_Le, self.y_Ue, self.y_La, self.y_Ua, self.L, self.U]
        if self.y is not None:
            cols.append(self.y)
        return np.column_stack(cols)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])

    def to_dict(self):
        return {
            "r": self.r,
            "SE": self.SE.tolist(),
            "bootstrap_mean": self.center.tolist(),
            "degenerate_ensemble": self.degenerate,
            "outside_support": [int(i) for i in np.flatnonzero(self.outside)],
            "alpha": self.config.alpha,
            "config": self.config.to_dict(),
            "rng": RNG_ALGORITHM,
            "version": __version__,
        }

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def interval_report(model, X_test, alpha=None, y_test=None):
    """Run both interval types and their envelope on ``X_test``."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=np.float64))
    if X_test.shape[1] != model.trunk.input_dim and X_test.shape[0] == model.trunk.input_dim:
        X_test = X_test.T
    epi = epistemic_interval(model, X_test, alpha)
    ale = aleatoric_interval(model, X_test, alpha)
    L, U = combined_envelope((epi.lower, epi.upper), (ale.lower, ale.upper))
    y = None if y_test is None else np.asarray(y_test, dtype=np.float64).ravel()
    return IntervalReport(X_test, epi.y_hat, epi.lower, epi.upper, ale.lower, ale.upper,
                          L, U, epi.r, epi.se, epi.center, ale.outside, epi.degenerate,
                          model.config, y)
