import numpy as np
import pytest

from urnlab import kernels
from urnlab.errors import BudgetExceeded, SupportCapExceeded
from urnlab.kernels import _fallback

try:
    from urnlab.kernels import _core
except ImportError:
    _core = None

BACKENDS = [("numpy", _fallback)] + ([("cython", _core)] if _core else [])


def _random_problem_1d(seed):
    rng = np.random.default_rng(seed)
    law = rng.random(31)
    law /= law.sum()
    offs = np.array([-1, 0, 2], dtype=np.int64)
    probs = np.array([0.3, 0.45, 0.25])
    return law, offs, probs


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_dp_1d_mass_conserved(name, impl):
    law, offs, probs = _random_problem_1d(0)
    out, lo, pruned = impl.dp_advance_1d(law.copy(), -15, 1, 2000, offs, probs,
                                         1e-13, 1e-8, 0.0, 10**7)
    assert abs(out.sum() + pruned - 1.0) < 1e-12
    assert pruned >= 0.0
    assert out[0] != 0.0 and out[-1] != 0.0  # trimmed


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_dp_budget_guard(name, impl):
    law, offs, probs = _random_problem_1d(1)
    # absurd per-step budget with a tiny total budget must trip the guard
    with pytest.raises(BudgetExceeded):
        impl.dp_advance_1d(law.copy(), 0, 1, 100, offs, probs,
                           0.5, 1e-12, 0.0, 10**7)


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_dp_cap_guard(name, impl):
    law, offs, probs = _random_problem_1d(2)
    with pytest.raises(SupportCapExceeded):
        impl.dp_advance_1d(law.copy(), 0, 1, 100, offs, probs,
                           0.0, 0.0, 0.0, 40)


@pytest.mark.skipif(_core is None, reason="compiled backend unavailable")
def test_backends_identical_1d():
    law, offs, probs = _random_problem_1d(3)
    a = _core.dp_advance_1d(law.copy(), -15, 1, 500, offs, probs, 1e-14, 1e-6, 0.0, 10**7)
    b = _fallback.dp_advance_1d(law.copy(), -15, 1, 500, offs, probs, 1e-14, 1e-6, 0.0, 10**7)
    assert np.array_equal(a[0], b[0])
    assert a[1] == b[1]
    assert abs(a[2] - b[2]) < 1e-20


@pytest.mark.skipif(_core is None, reason="compiled backend unavailable")
def test_backends_identical_2d():
    rng = np.random.default_rng(4)
    law = rng.random((7, 9))
    law /= law.sum()
    offs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, -1]], dtype=np.int64)
    probs = np.full(5, 0.2)
    a = _core.dp_advance_2d(law.copy(), -3, -4, 1, 300, offs, probs, 1e-14, 1e-6, 0.0, 10**7)
    b = _fallback.dp_advance_2d(law.copy(), -3, -4, 1, 300, offs, probs, 1e-14, 1e-6, 0.0, 10**7)
    assert np.array_equal(a[0], b[0])
    assert (a[1], a[2]) == (b[1], b[2])
    assert abs(a[3] - b[3]) < 1e-20


def _reference_paths(K, xoff, z0):
    reps, n = K.shape
    V = np.empty_like(xoff)
    for r in range(reps):
        for m in range(n):
            if K[r, m] == 0:
                V[r, m] = z0[r, m]
            else:
                V[r, m] = V[r, K[r, m] - 1] + xoff[r, m]
    return V


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_build_paths_semantics(name, impl):
    rng = np.random.default_rng(5)
    n, reps, d = 60, 11, 2
    K = rng.integers(0, 1000, (reps, n)).astype(np.int64) % (np.arange(n) + 1)
    xoff = rng.integers(-2, 3, (reps, n, d)).astype(np.int64)
    z0 = rng.integers(-1, 2, (reps, n, d)).astype(np.int64)
    assert np.array_equal(impl.build_paths(K, xoff, z0),
                          _reference_paths(K, xoff, z0))


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_dp_2d_mass_conserved(name, impl):
    rng = np.random.default_rng(6)
    law = rng.random((5, 5))
    law /= law.sum()
    offs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)
    probs = np.full(4, 0.25)
    out, lo0, lo1, pruned = impl.dp_advance_2d(law.copy(), 0, 0, 1, 800, offs,
                                               probs, 1e-13, 1e-8, 0.0, 10**7)
    assert abs(out.sum() + pruned - 1.0) < 1e-12
    assert out.any(axis=1)[0] and out.any(axis=1)[-1]
    assert out.any(axis=0)[0] and out.any(axis=0)[-1]
