import numpy as np
import pytest

from retrovine.data import gen_fig2
from retrovine.net import (Head, HeadEnsemble, MlpModel, TrainConfig, embed, init_mlp,
                           loss_and_grads, mse, output_from_embedding, predict, train_head,
                           train_mlp)
from retrovine.rng import subseed


def _line(n=200, slope=2.0, seed=0):
    x = np.random.default_rng(seed).uniform(-1, 1, n)
    return x[:, None], slope * x


def test_linear_function_is_learned():
    X, y = _line()
    m, trace = train_mlp(X, y, (1, 16, 16, 1), TrainConfig(epochs=300))
    assert mse(m, X, y) < 1e-3
    assert len(trace) == 300


def test_zero_epochs_returns_seeded_init():
    X, y = _line()
    m, trace = train_mlp(X, y, (1, 8, 8, 1), TrainConfig(epochs=0, seed=4))
    ref = init_mlp((1, 8, 8, 1), subseed(4, "init"))
    assert trace == []
    for a, b in zip(m.weights + m.biases, ref.weights + ref.biases):
        np.testing.assert_array_equal(a, b)


def test_fig2_configuration():
    train, _ = gen_fig2(mode="C", seed=0)
    assert train.n == 280
    m, trace = train_mlp(train.X, train.y, (3, 50, 50, 1), TrainConfig(epochs=100))
    assert len(trace) == 100
    assert embed(m, train.X).shape == (280, 50)
    assert m.embedding_dim == 50
    assert np.isfinite(mse(m, train.X, train.y))


def test_predict_equals_output_of_embedding():
    X, y = _line()
    m, _ = train_mlp(X, y, (1, 12, 7, 1), TrainConfig(epochs=5))
    np.testing.assert_allclose(output_from_embedding(m, embed(m, X)), predict(m, X),
                               rtol=0, atol=1e-12)


def test_all_zero_weights():
    m = init_mlp((3, 4, 5, 1), 0)
    for w in m.weights:
        w[:] = 0.0
    m.biases[1][:] = [0.5, -1.0, 2.0, 0.0, 3.0]
    m.biases[2][:] = 1.25
    X = np.random.default_rng(1).normal(size=(6, 3))
    np.testing.assert_array_equal(predict(m, X), 1.25)
    np.testing.assert_array_equal(embed(m, X), np.tile(m.biases[1], (6, 1)))


def test_dimension_mismatch():
    m = init_mlp((3, 4, 1), 0)
    with pytest.raises(ValueError):
        predict(m, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        embed(m, np.zeros((2, 4)))
    with pytest.raises(ValueError):
        MlpModel((3, 4, 1), [np.zeros((3, 4)), np.zeros((5, 1))], [np.zeros(4), np.zeros(1)])


def test_head_learns_linear_map():
    xi = np.random.default_rng(2).uniform(-1, 1, 300)
    head = train_head(xi, 3.0 * xi, TrainConfig(epochs=300, seed=1))
    assert isinstance(head, Head) and head.layer_widths == (1, 1, 1)
    assert mse(head, xi[:, None], 3.0 * xi) < 1e-3


def test_head_training_is_bitwise_deterministic():
    rng = np.random.default_rng(3)
    xi, y = rng.normal(size=(100, 4)), rng.normal(size=100)
    a = train_head(xi, y, TrainConfig(epochs=10, seed=7))
    b = train_head(xi, y, TrainConfig(epochs=10, seed=7))
    for p, q in zip(a.weights + a.biases, b.weights + b.biases):
        assert p.tobytes() == q.tobytes()


def test_distinct_seeds_give_distinct_heads():
    rng = np.random.default_rng(3)
    xi, y = rng.normal(size=(100, 4)), rng.normal(size=100)
    heads = [train_head(xi, y, TrainConfig(epochs=3, seed=s)) for s in range(5)]
    for i in range(5):
        for j in range(i + 1, 5):
            assert any(not np.array_equal(p, q) for p, q in
                       zip(heads[i].weights, heads[j].weights))
    ens = HeadEnsemble(heads)
    assert ens.size == 5 and ens.predict_all(xi[:7]).shape == (5, 7)


def test_head_ensemble_contract():
    h = init_mlp((2, 2, 1), 0, cls=Head)
    with pytest.raises(ValueError):
        HeadEnsemble([h])
    with pytest.raises(ValueError):
        HeadEnsemble([h, init_mlp((3, 3, 1), 0, cls=Head)])


def test_gradients_match_finite_differences():
    m = init_mlp((2, 1, 1), 5)
    assert m.n_params() == 5
    m.biases[0][:] = 0.3  # keep the single ReLU active
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(20, 2)), rng.normal(size=20)
    _, gw, gb = loss_and_grads(m, X, y)
    params = m.weights + m.biases
    grads = gw + gb
    h = 1e-5
    for p, g in zip(params, grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss_and_grads(m, X, y)[0]
            p[idx] = old - h
            down = loss_and_grads(m, X, y)[0]
            p[idx] = old
            fd = (up - down) / (2 * h)
            assert abs(fd - g[idx]) <= 1e-4 * max(abs(fd), 1e-8)


def test_running_average_loss_decreases():
    train, _ = gen_fig2(seed=1)
    _, trace = train_mlp(train.X, train.y, (3, 20, 20, 1), TrainConfig(epochs=60))
    loss = np.array([t["loss"] for t in trace])
    smooth = np.convolve(loss, np.ones(10) / 10, mode="valid")
    assert np.all(np.diff(smooth[::10]) <= 0)
    assert smooth[-1] < smooth[0]


def test_step_decay_recorded():
    X, y = _line()
    _, trace = train_mlp(X, y, (1, 4, 1), TrainConfig(epochs=6, lr_decay=0.5, decay_every=2))
    assert [t["learning_rate"] for t in trace] == [1e-2, 1e-2, 5e-3, 5e-3, 2.5e-3, 2.5e-3]


def test_nan_loss_aborts():
    X, y = _line()
    with pytest.raises(FloatingPointError, match="epoch"):
        train_mlp(X, y, (1, 16, 16, 1), TrainConfig(epochs=50, learning_rate=1e3))
    y2 = y.copy()
    y2[0] = np.nan
    with pytest.raises((FloatingPointError, ValueError)):
        train_mlp(X, y2, (1, 4, 1), TrainConfig(epochs=2, standardize=False))


def test_training_preconditions():
    X, y = _line(10)
    with pytest.raises(ValueError):
        train_mlp(X, y, (1, 4, 1), TrainConfig(batch_size=32))
    with pytest.raises(ValueError):
        train_mlp(X, y[:5], (1, 4, 1), TrainConfig(batch_size=2))
    with pytest.raises(ValueError):
        train_head(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)


def test_json_roundtrip(tmp_path):
    X, y = _line()
    m, _ = train_mlp(X, y, (1, 6, 6, 1), TrainConfig(epochs=3))
    m.save(tmp_path / "m.json")
    back = MlpModel.load(tmp_path / "m.json")
    np.testing.assert_array_equal(predict(back, X), predict(m, X))
    with pytest.raises(ValueError):
        MlpModel.from_dict({"format": "other"})
    cfg = TrainConfig(epochs=3, seed=9)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
