import numpy as np
import pytest
from hypothesis import settings
from scipy import stats

from retrovine import _backend

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

BACKENDS = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test against each available kernel backend."""
    from retrovine import paircop
    k = _backend.get_kernels(request.param)
    monkeypatch.setattr(paircop, "kernels", k)
    return k


def gaussian_copula_pdf(U, R):
    """Closed-form Gaussian copula density at the rows of U."""
    Z = stats.norm.ppf(np.atleast_2d(U))
    R = np.asarray(R)
    Rinv = np.linalg.inv(R)
    q = np.einsum("ni,ij,nj->n", Z, Rinv - np.eye(R.shape[0]), Z)
    return np.exp(-0.5 * q) / np.sqrt(np.linalg.det(R))


def gaussian_uniforms(R, n, seed):
    rng = np.random.default_rng(seed)
    Z = rng.multivariate_normal(np.zeros(len(R)), R, size=n)
    return stats.norm.cdf(Z)


def dvine4():
    """Hand-built 4-dim D-vine 0-1-2-3 with mixed parametric families."""
    from retrovine.paircop import PairCopulaSpec as P
    from retrovine.vine import Edge, VineModel, VineStructure
    f = frozenset
    t1 = (Edge((0, 1), f(), (0, 1)), Edge((1, 2), f(), (1, 2)), Edge((2, 3), f(), (2, 3)))
    t2 = (Edge((0, 2), f({1}), (0, 1)), Edge((1, 3), f({2}), (1, 2)))
    t3 = (Edge((0, 3), f({1, 2}), (0, 1)),)
    s = VineStructure(4, (t1, t2, t3)).validate()
    pcs = ((P("gaussian", 0.5), P("clayton", 1.5), P("gumbel", 1.6, 90)),
           (P("frank", 3.0), P("clayton", 1.0, 180)),
           (P("gaussian", -0.3),))
    return VineModel(s, pcs, 3)
