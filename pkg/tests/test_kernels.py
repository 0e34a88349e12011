"""Both kernel implementations against dense linear-algebra oracles."""

import importlib

import numpy as np
import pytest
import scipy.sparse as sp

from singmax.kernels import _fallback

IMPLS = [_fallback]
try:
    IMPLS.append(importlib.import_module("singmax.kernels._core"))
except ImportError:
    pass

IDS = ["fallback", "compiled"][: len(IMPLS)]


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    A = B @ B.T + n * np.eye(n)
    A[np.abs(A) < 0.5] = 0.0  # sparsify a bit, keep SPD via the diagonal shift
    A = 0.5 * (A + A.T)
    A += n * np.eye(n)
    return sp.csr_matrix(A)


def as_arrays(A):
    return A.data, A.indices.astype(np.int32), A.indptr.astype(np.int32)


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_csr_matvec_matches_scipy(impl):
    A = random_spd(40, 1)
    x = np.random.default_rng(2).normal(size=40)
    out = np.zeros(40)
    impl.csr_matvec(*as_arrays(A), x, out)
    assert np.allclose(out, A @ x, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_cg_solves_spd_system(impl):
    n = 60
    A = random_spd(n, 3)
    rng = np.random.default_rng(4)
    b = rng.normal(size=n)
    x = np.zeros(n)
    iters, relres = impl.cg_shifted(*as_arrays(A), np.zeros(n), b, x, 1e-12, 10 * n)
    assert relres <= 1e-12
    exact = np.linalg.solve(A.toarray(), b)
    assert np.allclose(x, exact, rtol=1e-9, atol=1e-11)
    assert 0 < iters <= 10 * n


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_cg_with_diagonal_shift(impl):
    n = 30
    A = random_spd(n, 5)
    rng = np.random.default_rng(6)
    shift = rng.uniform(0.0, 50.0, n)
    b = rng.normal(size=n)
    x = np.zeros(n)
    _, relres = impl.cg_shifted(*as_arrays(A), shift, b, x, 1e-12, 10 * n)
    assert relres <= 1e-12
    exact = np.linalg.solve(A.toarray() + np.diag(shift), b)
    assert np.allclose(x, exact, rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_cg_zero_rhs(impl):
    n = 10
    A = random_spd(n, 7)
    x = np.ones(n)
    iters, relres = impl.cg_shifted(*as_arrays(A), np.zeros(n), np.zeros(n), x, 1e-12, 100)
    assert iters == 0 and relres == 0.0
    assert np.all(x == 0.0)


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_cg_warm_start(impl):
    n = 25
    A = random_spd(n, 8)
    b = np.random.default_rng(9).normal(size=n)
    exact = np.linalg.solve(A.toarray(), b)
    x = exact.copy()
    iters, relres = impl.cg_shifted(*as_arrays(A), np.zeros(n), b, x, 1e-12, 100)
    assert iters == 0
    assert relres <= 1e-12


@pytest.mark.parametrize("impl", IMPLS, ids=IDS)
def test_cg_reports_nonconvergence(impl):
    n = 50
    A = random_spd(n, 10)
    b = np.random.default_rng(11).normal(size=n)
    x = np.zeros(n)
    iters, relres = impl.cg_shifted(*as_arrays(A), np.zeros(n), b, x, 1e-15, 2)
    assert iters == 2
    assert relres > 1e-15


def test_implementations_agree():
    if len(IMPLS) < 2:
        pytest.skip("compiled kernels not built")
    n = 80
    A = random_spd(n, 12)
    rng = np.random.default_rng(13)
    shift = rng.uniform(0, 5, n)
    b = rng.normal(size=n)
    xs = []
    for impl in IMPLS:
        x = np.zeros(n)
        impl.cg_shifted(*as_arrays(A), shift, b, x, 1e-13, 10 * n)
        xs.append(x)
    assert np.allclose(xs[0], xs[1], rtol=1e-10, atol=1e-12)
