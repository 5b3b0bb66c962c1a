import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from retrovine import _backend, _pykernels
from retrovine.paircop import _cumulative

needs_ext = pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled kernels not built")


def _surface(g=16, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.2, 2.0, (g, g))
    c /= c.mean(axis=0)  # each conditional CDF then ends at 1
    return np.ascontiguousarray(c), _cumulative(c)


def test_grid_pdf_hits_nodes(backend):
    c, _ = _surface()
    g = c.shape[0]
    i, j = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    u = ((i + 0.5) / g).ravel()
    v = ((j + 0.5) / g).ravel()
    np.testing.assert_allclose(backend.grid_pdf(c, u, v), c.ravel(), rtol=1e-13)


def test_grid_pdf_flat_beyond_outer_nodes(backend):
    c, _ = _surface()
    out = backend.grid_pdf(c, np.array([1e-6, 1 - 1e-6]), np.array([1e-6, 1 - 1e-6]))
    np.testing.assert_allclose(out, [c[0, 0], c[-1, -1]])


def test_hfunc_matches_quadrature(backend):
    c, cum = _surface()
    v = np.full(7, 0.37)
    u = np.linspace(0.05, 0.95, 7)
    got = backend.grid_hfunc(c, cum, u, v)
    for uk, gk in zip(u, got):
        x = np.linspace(1e-9, uk, 4001)
        ref = np.trapezoid(backend.grid_pdf(c, x, np.full_like(x, 0.37)), x)
        assert gk == pytest.approx(min(ref, 1.0), abs=1e-6)


def test_hinv_inverts_hfunc(backend):
    c, cum = _surface()
    rng = np.random.default_rng(1)
    u = rng.uniform(0.02, 0.98, 200)
    v = rng.uniform(0.02, 0.98, 200)
    h = backend.grid_hfunc(c, cum, u, v)
    back = backend.grid_hinv(c, cum, h, v, 1e-12, 100)
    np.testing.assert_allclose(back, u, atol=1e-9)


def test_hinv_reports_nonconvergence(backend):
    c, cum = _surface()
    with pytest.raises(RuntimeError):
        backend.grid_hinv(c, cum, np.array([0.4]), np.array([0.5]), 1e-300, 3)


@needs_ext
def test_backends_agree_on_grid_kernels():
    ck = _backend.get_kernels("cython")
    c, cum = _surface(24, seed=3)
    rng = np.random.default_rng(2)
    u, v, w = rng.uniform(1e-4, 1 - 1e-4, (3, 500))
    np.testing.assert_allclose(ck.grid_pdf(c, u, v), _pykernels.grid_pdf(c, u, v), rtol=1e-12)
    np.testing.assert_allclose(ck.grid_hfunc(c, cum, u, v), _pykernels.grid_hfunc(c, cum, u, v),
                               rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(ck.grid_hinv(c, cum, w, v, 1e-12, 100),
                               _pykernels.grid_hinv(c, cum, w, v, 1e-12, 100), atol=1e-10)


def test_kendall_small_cases(backend):
    assert backend.kendall_tau_b(np.array([1.0, 2, 3]), np.array([2.0, 4, 6])) == pytest.approx(1.0)
    assert backend.kendall_tau_b(np.array([1.0, 2, 3]), np.array([3.0, 2, 1])) == pytest.approx(-1.0)


def test_kendall_errors(backend):
    with pytest.raises(ValueError):
        backend.kendall_tau_b(np.array([1.0, 2]), np.array([1.0, 2, 3]))
    with pytest.raises(ValueError):
        backend.kendall_tau_b(np.array([1.0, 1, 1]), np.array([1.0, 2, 3]))
    with pytest.raises(ValueError):
        backend.kendall_tau_b(np.array([1.0]), np.array([1.0]))


@given(arrays(np.float64, st.integers(2, 60), elements=st.integers(-5, 5).map(float)),
       st.integers(0, 2**32 - 1))
def test_kendall_matches_scipy_with_ties(x, seed):
    y = np.random.default_rng(seed).integers(-3, 4, x.size).astype(np.float64)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    ref = stats.kendalltau(x, y, variant="b").statistic
    for name in ["python"] + (["cython"] if _backend.BACKEND == "cython" else []):
        got = _backend.get_kernels(name).kendall_tau_b(x, y)
        assert got == pytest.approx(ref, abs=1e-12)


def test_backend_selection_env(monkeypatch):
    import importlib
    monkeypatch.setenv("RETROVINE_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.BACKEND == "python"
        assert mod.kernels is _pykernels
    finally:
        monkeypatch.delenv("RETROVINE_PURE_PYTHON")
        importlib.reload(_backend)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")
