"""Synthetic regression toys and CSV ingestion."""
import csv
from dataclasses import dataclass, field

import numpy as np

from .rng import substream

FIG2_MODES = {"A": 1, "B": 2, "C": 3}


@dataclass(eq=False)
class Dataset:
    """Inputs ``X`` (N, p), targets ``y`` (N,) and their provenance.

    ``noise_scale`` is the true per-row noise standard deviation when the
    generator knows it.
    """

    X: np.ndarray
    y: np.ndarray
    split: str = "train"
    meta: dict = field(default_factory=dict)
    columns: tuple | None = None
    target: str = "y"
    noise_scale: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.size:
            raise ValueError("X and y have different numbers of rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset entries must be finite")
        if self.split not in ("train", "test"):
            raise ValueError("split must be 'train' or 'test'")
        if self.columns is None:
            self.columns = tuple(f"x{j + 1}" for j in range(self.X.shape[1]))
        self.columns = tuple(self.columns)
        if len(self.columns) != self.X.shape[1]:
            raise ValueError("one column name per input is required")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def _fig2_inputs(x1, test):
    x2 = np.sin(x1) if test else np.sin(2.0 * x1)
    return np.column_stack([x1, x2, np.sin(x1 * x1)])


def gen_fig2(n_train=280, n_test=100, mode="C", seed=0, noise_sd=0.2, test_noise_sd=0.5):
    """Additive sine toy with a wider, differently generated test range.

    Train rows use ``x1 ~ U[-2pi, 2pi]``, ``x2 = sin(2 x1)``,
    ``x3 = sin(x1^2)`` and ``y = x1 + x2 + x3 + eps`` with
    ``eps ~ N(0, noise_sd^2)``. Test rows use ``x1 ~ U[-4pi, 5pi]``,
    ``x2 = sin(x1)`` and noise ``x1 * eps`` with ``eps ~ N(0, test_noise_sd^2)``.
    ``mode`` picks the visible inputs: A is x1, B adds x2, C adds x3.
    """
    if mode not in FIG2_MODES:
        raise ValueError(f"mode must be one of {sorted(FIG2_MODES)}")
    p = FIG2_MODES[mode]
    rng_tr = substream(seed, "fig2/train")
    rng_te = substream(seed, "fig2/test")
    x1 = rng_tr.uniform(-2 * np.pi, 2 * np.pi, n_train)
    full = _fig2_inputs(x1, test=False)
    eps = rng_tr.normal(0.0, 1.0, n_train) * noise_sd
    y = full.sum(axis=1) + eps
    t1 = rng_te.uniform(-4 * np.pi, 5 * np.pi, n_test)
    tfull = _fig2_inputs(t1, test=True)
    teps = rng_te.normal(0.0, 1.0, n_test) * test_noise_sd
    ty = tfull.sum(axis=1) + t1 * teps
    meta = {"generator": "fig2", "mode": mode, "seed": seed, "noise_sd": noise_sd,
            "test_noise_sd": test_noise_sd, "n_train": n_train, "n_test": n_test}
    train = Dataset(full[:, :p], y, "train", meta, noise_scale=np.full(n_train, float(noise_sd)))
    test = Dataset(tfull[:, :p], ty, "test", meta, noise_scale=np.abs(t1) * test_noise_sd)
    return train, test


def noise_scale_hetero(x1, base=0.1, slope=0.25):
    return base + slope * np.abs(x1)


def gen_heteroscedastic(n_train=1000, n_test=500, seed=0, base=0.1, slope=0.25):
    """In-distribution variant of the additive sine toy with noise sd ``base + slope |x1|``.

    Train and test share ``x1 ~ U[-2pi, 2pi]`` and the train-time inputs
    (``x2 = sin(2 x1)``, ``x3 = sin(x1^2)``), so the test set probes the
    interpolation regime.
    """
    out = []
    for split, n in (("train", n_train), ("test", n_test)):
        rng = substream(seed, f"hetero/{split}")
        x1 = rng.uniform(-2 * np.pi, 2 * np.pi, n)
        X = _fig2_inputs(x1, test=False)
        sd = noise_scale_hetero(x1, base, slope)
        y = X.sum(axis=1) + sd * rng.normal(0.0, 1.0, n)
        meta = {"generator": "heteroscedastic", "seed": seed, "base": base, "slope": slope}
        out.append(Dataset(X, y, split, meta, noise_scale=sd))
    return tuple(out)


def gen_homoscedastic(n_train=1000, n_test=1000, seed=0, noise_sd=0.3):
    """``y = sin(x) + x / 2 + N(0, noise_sd^2)`` with ``x ~ U[-3, 3]``."""
    out = []
    for split, n in (("train", n_train), ("test", n_test)):
        rng = substream(seed, f"homo/{split}")
        x = rng.uniform(-3.0, 3.0, n)
        y = np.sin(x) + 0.5 * x + noise_sd * rng.normal(0.0, 1.0, n)
        meta = {"generator": "homoscedastic", "seed": seed, "noise_sd": noise_sd}
        out.append(Dataset(x[:, None], y, split, meta, noise_scale=np.full(n, float(noise_sd))))
    return tuple(out)


def gen_bimodal(n, seed=0, offset=1.5, noise_sd=0.2, split="train"):
    """Two sine branches ``sin(x) +- offset`` picked with probability 1/2 each."""
    rng = substream(seed, f"bimodal/{split}")
    x = rng.uniform(-3.0, 3.0, n)
    branch = rng.integers(0, 2, n)
    y = np.sin(x) + (2 * branch - 1) * offset + noise_sd * rng.normal(0.0, 1.0, n)
    meta = {"generator": "bimodal", "seed": seed, "offset": offset, "noise_sd": noise_sd,
            "formula": "y = sin(x) + (2b - 1) * offset + N(0, noise_sd^2), x ~ U[-3, 3], b ~ Bernoulli(1/2)",
            "branch": branch.tolist()}
    return Dataset(x[:, None], y, split, meta, noise_scale=np.full(n, float(noise_sd)))


def gen_moons(n, noise_sd=0.1, seed=0, split="train"):
    """Two interleaving unit half-circles labelled 0 (upper) and 1 (lower)."""
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0.0, np.pi, n_out)
    t_in = np.linspace(0.0, np.pi, n_in)
    X = np.vstack([np.column_stack([np.cos(t_out), np.sin(t_out)]),
                   np.column_stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)])])
    y = np.concatenate([np.zeros(n_out), np.ones(n_in)])
    rng = substream(seed, f"moons/{split}")
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]
    if noise_sd > 0:
        X = X + rng.normal(0.0, noise_sd, X.shape)
    meta = {"generator": "moons", "seed": seed, "noise_sd": noise_sd}
    return Dataset(X, y, split, meta)


def save_csv(dataset, path):
    """Write inputs then target with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(dataset.columns) + [dataset.target])
        for row, t in zip(dataset.X, dataset.y):
            w.writerow([format(v, ".17g") for v in row] + [format(t, ".17g")])


def load_csv(path, target_column="y", split="train"):
    """Read a rectangular numeric CSV with a header row.

    Raises
    ------
    ValueError
        On a missing target column, a ragged row or a non-numeric cell; the
        message names the data row (1-based, header excluded) and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise ValueError(f"{path}: target column {target_column!r} not in header {header}")
    width = len(header)
    values = []
    for i, row in enumerate(rows[1:], start=1):
        if not row:
            continue
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} fields, expected {width}")
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: row {i}, column {j} ({header[j]!r}): "
                                 f"non-numeric value {cell!r}") from None
        values.append(parsed)
    if not values:
        raise ValueError(f"{path}: no data rows")
    A = np.asarray(values)
    t = header.index(target_column)
    feats = [j for j in range(width) if j != t]
    return Dataset(A[:, feats], A[:, t], split, {"source": str(path)},
                   tuple(header[j] for j in feats), target_column)
