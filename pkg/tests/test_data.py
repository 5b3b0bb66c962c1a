import numpy as np
import pytest

from retrovine.data import (Dataset, gen_bimodal, gen_fig2, gen_heteroscedastic, gen_homoscedastic,
                            gen_moons, load_csv, save_csv)


def test_fig2_sizes_and_modes():
    tr, te = gen_fig2()
    assert (tr.n, te.n) == (280, 100)
    assert tr.split == "train" and te.split == "test"
    assert gen_fig2(mode="A")[0].p == 1
    assert gen_fig2(mode="B")[0].p == 2
    assert tr.p == 3
    with pytest.raises(ValueError):
        gen_fig2(mode="D")


def test_fig2_noiseless_identity():
    tr, _ = gen_fig2(noise_sd=0.0, seed=3)
    assert np.all(tr.y - (tr.X[:, 0] + tr.X[:, 1] + tr.X[:, 2]) == 0.0)


def test_fig2_generative_process():
    tr, te = gen_fig2(seed=1)
    x1 = tr.X[:, 0]
    assert np.all(np.abs(x1) <= 2 * np.pi)
    np.testing.assert_array_equal(tr.X[:, 1], np.sin(2 * x1))
    np.testing.assert_array_equal(tr.X[:, 2], np.sin(x1 * x1))
    t1 = te.X[:, 0]
    assert t1.min() >= -4 * np.pi and t1.max() <= 5 * np.pi
    np.testing.assert_array_equal(te.X[:, 1], np.sin(t1))
    resid = tr.y - tr.X.sum(axis=1)
    assert 0.15 < resid.std() < 0.25
    np.testing.assert_allclose(te.noise_scale, 0.5 * np.abs(t1))


def test_generators_are_bitwise_deterministic():
    for gen in (lambda: gen_fig2(seed=5), lambda: gen_heteroscedastic(200, 50, seed=5),
                lambda: gen_homoscedastic(200, 50, seed=5)):
        a, b = gen(), gen()
        for da, db in zip(a, b):
            assert da.X.tobytes() == db.X.tobytes() and da.y.tobytes() == db.y.tobytes()
    assert gen_bimodal(100, 5).y.tobytes() == gen_bimodal(100, 5).y.tobytes()
    assert gen_moons(100, 0.1, 5).X.tobytes() == gen_moons(100, 0.1, 5).X.tobytes()
    assert not np.array_equal(gen_fig2(seed=5)[0].y, gen_fig2(seed=6)[0].y)


def test_heteroscedastic_noise_scale():
    tr, te = gen_heteroscedastic(2000, 10, seed=0)
    np.testing.assert_allclose(tr.noise_scale, 0.1 + 0.25 * np.abs(tr.X[:, 0]))
    z = (tr.y - tr.X.sum(axis=1)) / tr.noise_scale
    assert abs(z.std() - 1.0) < 0.05
    assert np.abs(te.X[:, 0]).max() <= 2 * np.pi


def test_bimodal_balance_and_modes():
    d = gen_bimodal(2000, seed=0)
    assert d.p == 1
    frac = np.mean(d.meta["branch"])
    assert abs(frac - 0.5) <= 0.05
    # histogram of y in a thin slice around x = 0 has two separated peaks
    y = d.y[np.abs(d.X[:, 0]) < 0.5]
    counts, edges = np.histogram(y, bins=12, range=(-2.5, 2.5))
    peaks = [i for i in range(1, 11) if counts[i] > counts[i - 1] and counts[i] >= counts[i + 1]]
    assert len(peaks) == 2
    centres = (edges[:-1] + edges[1:]) / 2
    assert centres[peaks[0]] < 0 < centres[peaks[1]]


def test_moons():
    d = gen_moons(400, noise_sd=0.1, seed=0)
    assert d.p == 2 and set(np.unique(d.y)) == {0.0, 1.0}
    assert abs(d.y.mean() - 0.5) <= 0.05
    c = gen_moons(301, noise_sd=0.0, seed=1)
    up = c.X[c.y == 0]
    lo = c.X[c.y == 1]
    np.testing.assert_allclose(np.hypot(up[:, 0], up[:, 1]), 1.0, atol=1e-12)
    assert np.all(up[:, 1] >= 0)
    np.testing.assert_allclose(np.hypot(lo[:, 0] - 1.0, lo[:, 1] - 0.5), 1.0, atol=1e-12)
    assert np.all(lo[:, 1] <= 0.5 + 1e-12)


def test_load_hand_written(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,y,b\n1,2,3\n4.5,5,6\n-7,8e1,9\n")
    d = load_csv(p)
    np.testing.assert_array_equal(d.X, [[1, 3], [4.5, 6], [-7, 9]])
    np.testing.assert_array_equal(d.y, [2, 5, 80])
    assert d.columns == ("a", "b")


def test_csv_roundtrip(tmp_path):
    tr, _ = gen_fig2(seed=2)
    save_csv(tr, tmp_path / "t.csv")
    back = load_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.X, tr.X)
    np.testing.assert_array_equal(back.y, tr.y)
    assert back.columns == tr.columns


def test_load_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x1,y\n1,2\n3\n")
    with pytest.raises(ValueError, match="row 2"):
        load_csv(p)
    p.write_text("x1,y\n1,2\n3,abc\n")
    with pytest.raises(ValueError, match="row 2, column 1"):
        load_csv(p)
    p.write_text("x1,z\n1,2\n")
    with pytest.raises(ValueError, match="target column"):
        load_csv(p)
    p.write_text("")
    with pytest.raises(ValueError):
        load_csv(p)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)), np.zeros(2))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]), np.zeros(1))
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 1)), np.zeros(1), split="dev")
