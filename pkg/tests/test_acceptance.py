"""Acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
values before asserting. A criterion that the implementation does not meet
is marked as a strict expected failure, so it still runs at full tolerance
and the suite notices if it starts passing. Criterion 10 (the large
real-data experiments) is not reproducible at desk scale and has no test.

Run directly with ``python tests/test_acceptance.py`` or through pytest.
"""
import json
import time

import numpy as np
import pytest
from scipy import stats

from conftest import dvine4, gaussian_uniforms
from retrovine import cli
from retrovine.data import _fig2_inputs, gen_fig2, gen_heteroscedastic, gen_homoscedastic
from retrovine.evaluation import calibration_curve, error_retention, picp_mpiw
from retrovine.marginals import cdf, pseudo_observations
from retrovine.net import MlpModel, TrainConfig, train_mlp
from retrovine.paircop import FitConfig, PairCopulaSpec, fit_pair, pair_pdf, sample_pair
from retrovine.rng import subseed
from retrovine.vine import fit_vine, inverse_rosenblatt, rosenblatt, select_structure, vine_pdf
from retrovine.vcnn import (VcnnConfig, aleatoric_interval, conditional_quantile,
                            conditional_quantiles, conditional_quantiles_xi, epistemic_interval,
                            fit_vcnn)

pytestmark = pytest.mark.acceptance

TAUS = tuple(round(0.05 * k, 2) for k in range(1, 20))
NO_HEADS = TrainConfig(epochs=1)  # aleatoric intervals do not depend on the heads


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def identity_trunk(p):
    return MlpModel((p, p, 1), [np.eye(p), np.ones((p, 1))], [np.zeros(p), np.zeros(1)])


def fig2_trunk(train, seed):
    trunk, _ = train_mlp(train.X, train.y, (train.p, 50, 50, 1),
                         TrainConfig(epochs=100, seed=subseed(seed, "trunk")))
    return trunk


def test_criterion_1_copula_oracle(capsys):
    t0 = time.perf_counter()
    uv = sample_pair(PairCopulaSpec("gaussian", 0.6), 2000, seed=1)
    spec = fit_pair(uv[:, 0], uv[:, 1])
    dens = pair_pdf(PairCopulaSpec("gaussian", 0.5), np.array([0.5]), np.array([0.5]))[0]
    elapsed = time.perf_counter() - t0
    ok = (spec.family == "gaussian" and abs(spec.parameter - 0.6) <= 0.05
          and abs(dens - 1.1547) <= 1e-6 and abs(dens - 1 / np.sqrt(0.75)) <= 1e-12
          and elapsed < 1.0)
    report(capsys, 1, ok, f"family={spec.family} rho={spec.parameter:.4f} "
                          f"c(.5,.5)={dens:.7f} time={elapsed:.2f}s")
    assert ok


def test_criterion_2_vine_validity_and_counting(capsys):
    t0 = time.perf_counter()
    valid = []
    for d in range(3, 8):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            A = rng.normal(size=(d, d + 2))
            S = A @ A.T
            R = S / np.sqrt(np.outer(np.diag(S), np.diag(S)))
            U = pseudo_observations(gaussian_uniforms(R, 200, seed))
            for leaf in (None, d - 1):
                s = select_structure(U, FitConfig(family_set=("independence", "gaussian")),
                                     leaf=leaf)
                valid.append(s.is_valid() and s.n_edges == d * (d - 1) // 2)
    R5 = np.full((5, 5), 0.4) + 0.6 * np.eye(5)
    m = fit_vine(pseudo_observations(gaussian_uniforms(R5, 500, 9)),
                 FitConfig(family_set=("independence", "gaussian")), truncation_level=None)
    trees = len(m.structure.trees)
    pcs = sum(len(t) for t in m.pair_copulas)
    elapsed = time.perf_counter() - t0
    ok = all(valid) and trees == 4 and pcs == 10 and m.structure.is_valid()
    report(capsys, 2, ok, f"{sum(valid)}/{len(valid)} structures valid; d=5: {pcs} pair "
                          f"copulas in {trees} trees; time={elapsed:.2f}s")
    assert ok


def test_criterion_3_rosenblatt_roundtrip(capsys):
    t0 = time.perf_counter()
    m = dvine4()
    P = np.random.default_rng(2024).uniform(0.01, 0.99, (100, 4))
    err = float(np.max(np.abs(inverse_rosenblatt(m, rosenblatt(m, P)) - P)))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-6 and elapsed < 1.0
    report(capsys, 3, ok, f"max error={err:.2e} time={elapsed:.3f}s")
    assert ok


def _grid_oracle_quantile(vine, u_rest, tau, n_grid=20001):
    g = np.linspace(0.0, 1.0, n_grid)[1:-1]
    pts = np.column_stack([np.tile(u_rest, (g.size, 1)), g])
    dens = vine_pdf(vine, pts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(g))])
    return float(np.interp(tau, cum / cum[-1], g))


def test_criterion_4_conditional_quantile_oracle(capsys):
    t0 = time.perf_counter()
    z = stats.norm.ppf(gaussian_uniforms([[1, 0.7], [0.7, 1]], 3000, 11))
    cfg = VcnnConfig(S=2, head_train=NO_HEADS)
    m2 = fit_vcnn(identity_trunk(1), z[:, :1], z[:, 1], cfg)
    median = conditional_quantile(m2, [1.0], 0.5)
    err2 = abs(median - 0.7)

    R = np.array([[1.0, 0.5, 0.6], [0.5, 1.0, 0.4], [0.6, 0.4, 1.0]])
    z3 = stats.norm.ppf(gaussian_uniforms(R, 3000, 21))
    m3 = fit_vcnn(identity_trunk(2), z3[:, :2], z3[:, 2], cfg)
    probe = np.random.default_rng(3).uniform(0.1, 0.9, (10, 2))
    xi = np.column_stack([np.quantile(z3[:, j], probe[:, j]) for j in range(2)])
    taus = (0.1, 0.5, 0.9)
    Q, _ = conditional_quantiles_xi(m3, xi, taus)
    err3 = 0.0
    for i in range(10):
        u_rest = [cdf(m3.marginals[j], xi[i, j]) for j in range(2)]
        for k, tau in enumerate(taus):
            est = cdf(m3.marginals[-1], Q[i, k])
            err3 = max(err3, abs(est - _grid_oracle_quantile(m3.vine, u_rest, tau)))
    elapsed = time.perf_counter() - t0
    ok = err2 <= 0.1 and err3 <= 0.05 and elapsed < 30.0
    report(capsys, 4, ok, f"bivariate median={median:.4f} (|err|={err2:.4f}); 3-dim max "
                          f"|err| on u-scale={err3:.4f}; time={elapsed:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "at the default kernel multiplier 0.1 the product-kernel copulas in trees 2-3 "
    "over-fit and the aleatoric intervals under-cover (PICP about 0.86-0.89); "
    "wider kernels restore coverage but lose the width-noise ordering"))
def test_criterion_5_toy_coverage(capsys):
    t0 = time.perf_counter()
    picps, rhos = [], []
    for seed in range(5):
        train, test = gen_heteroscedastic(n_train=1000, n_test=500, seed=seed)
        trunk = fig2_trunk(train, seed)
        model = fit_vcnn(trunk, train.X, train.y,
                         VcnnConfig(S=2, head_train=NO_HEADS, seed=subseed(seed, "vcnn")))
        ale = aleatoric_interval(model, test.X)
        picps.append(picp_mpiw(test.y, ale.lower, ale.upper)[0])
        rhos.append(stats.spearmanr(ale.upper - ale.lower, test.noise_scale).statistic)
    elapsed = time.perf_counter() - t0
    ok = (all(0.90 <= p <= 0.99 for p in picps) and all(r > 0.5 for r in rhos)
          and elapsed < 300.0)
    report(capsys, 5, ok, "PICP per seed=" + ",".join(f"{p:.3f}" for p in picps)
           + " Spearman per seed=" + ",".join(f"{r:.2f}" for r in rhos)
           + f" time={elapsed:.0f}s")
    assert ok


def test_criterion_6_epistemic_widening(capsys):
    t0 = time.perf_counter()
    train, _ = gen_fig2(mode="C", seed=0)
    trunk = fig2_trunk(train, 0)
    model = fit_vcnn(trunk, train.X, train.y, VcnnConfig(S=30, seed=subseed(0, "vcnn")))
    x1 = np.linspace(-4 * np.pi, 5 * np.pi, 901)
    epi = epistemic_interval(model, _fig2_inputs(x1, test=True))
    width = epi.upper - epi.lower
    inside = np.abs(x1) <= 2 * np.pi
    ratio = width[~inside].mean() / width[inside].mean()
    elapsed = time.perf_counter() - t0
    ok = model.heads.size == 30 and ratio >= 2.0 and elapsed < 300.0
    report(capsys, 6, ok, f"outside/inside mean CI width={ratio:.3f} r={epi.r:.3f} "
                          f"time={elapsed:.1f}s")
    assert ok


def test_criterion_7_calibration(capsys):
    t0 = time.perf_counter()
    train, test = gen_homoscedastic(n_train=1000, n_test=1000, seed=0)
    trunk = fig2_trunk(train, 0)
    model = fit_vcnn(trunk, train.X, train.y,
                     VcnnConfig(S=2, head_train=NO_HEADS, seed=subseed(0, "vcnn")))
    Q, _ = conditional_quantiles(model, test.X, TAUS)
    curve = calibration_curve(test.y, Q, TAUS)
    dev = max(abs(f - t) for t, f in curve)
    elapsed = time.perf_counter() - t0
    ok = dev <= 0.10 and elapsed < 300.0
    report(capsys, 7, ok, f"max |fraction - tau|={dev:.3f} time={elapsed:.1f}s")
    assert ok


def test_criterion_8_metrics_unit_truth(capsys):
    picp, mpiw, k = picp_mpiw([1, 2, 3], [0, 0, 0], [2, 2, 2])
    hand = error_retention([1, 2, 3], [0.1, 0.2, 0.3])
    e = np.random.default_rng(0).exponential(size=50)
    oracle, total = [], 0.0
    for i, v in enumerate(sorted(e)):
        total += v
        oracle.append(((i + 1) / 50, total / (i + 1)))
    ok = (picp == 2 / 3 and mpiw == 2.0 and k.tolist() == [1, 1, 0]
          and hand == [(1 / 3, 1.0), (2 / 3, 1.5), (1.0, 2.0)]
          and error_retention(e, e) == oracle)
    report(capsys, 8, ok, f"picp={picp:.4f} mpiw={mpiw} retention={hand}")
    assert ok


def test_criterion_9_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    outs = []
    for name in ("a", "b"):
        code = cli.main(["demo", "fig2c", "--seed", "0", "--out", str(tmp_path / name)])
        assert code == 0
        outs.append(tmp_path / name)
    capsys.readouterr()
    names = sorted(p.name for p in outs[0].iterdir())
    same = [(outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names]
    manifest = json.loads((outs[0] / "manifest.json").read_text())
    elapsed = time.perf_counter() - t0
    ok = all(same) and names == sorted(p.name for p in outs[1].iterdir())
    report(capsys, 9, ok, f"{sum(same)}/{len(same)} files byte-identical "
                          f"({', '.join(names)}); S={manifest['config']['S']} "
                          f"time={elapsed:.1f}s")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
