import os
import subprocess
import sys

import numpy as np
import pytest

from soicf import kernels

nb = pytest.importorskip("numba")
NP = kernels.backend("numpy")
NB = kernels.backend("numba")


def test_backend_lookup():
    assert kernels.BACKEND in ("numba", "numpy")
    with pytest.raises(ValueError):
        kernels.backend("cuda")


def test_env_flag_selects_numpy():
    code = "from soicf import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SOICF_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["SOICF_DISABLE_NUMBA"] = ""
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


@pytest.mark.parametrize("seed", range(5))
def test_sqeuclidean(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((7, 33)), rng.standard_normal((11, 33))
    brute = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    np.testing.assert_allclose(NP.sqeuclidean(A, B), brute, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(NB.sqeuclidean(A, B), brute, rtol=1e-12, atol=1e-12)


def test_js_rows_agree():
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(4), size=300)
    Q = rng.dirichlet(np.ones(4), size=300)
    P[:20, 0] = 0.0
    P[:20] /= P[:20].sum(1, keepdims=True)
    np.testing.assert_allclose(NP.js_rows(P, Q), NB.js_rows(P, Q), rtol=0, atol=1e-14)
    assert np.array_equal(NB.js_rows(P, Q), NB.js_rows(Q, P))
    assert np.array_equal(NP.js_rows(P, Q), NP.js_rows(Q, P))


@pytest.mark.parametrize("seed", range(10))
def test_sorting_agrees(seed):
    rng = np.random.default_rng(seed)
    F = np.ascontiguousarray(rng.integers(0, 8, size=(150, 2)).astype(float))
    r1, r2 = NP.nondominated_ranks(F), NB.nondominated_ranks(F)
    assert np.array_equal(r1, r2)
    np.testing.assert_array_equal(NP.crowding_distance(F, r1), NB.crowding_distance(F, r2))


@pytest.mark.parametrize("n,p", [(2, 3), (5, 4), (20, 1), (50, 6), (9, 4)])
def test_ar_agrees(n, p):
    z = np.random.default_rng(n * 10 + p).standard_normal(n)
    c1, i1 = NP.ar_fit(z, p)
    c2, i2 = NB.ar_fit(z, p)
    np.testing.assert_allclose(c1, c2, atol=1e-10)
    assert abs(i1 - i2) < 1e-10
    np.testing.assert_allclose(NP.ar_fitted(z, c1, i1), NB.ar_fitted(z, c1, i1), atol=1e-12)


def test_ar_singular_paths_agree():
    for z in (np.full(12, 3.0), np.zeros(12), np.tile([1.0, -1.0], 6)):
        c1, i1 = NP.ar_fit(z, 4)
        c2, i2 = NB.ar_fit(z, 4)
        np.testing.assert_allclose(NP.ar_fitted(z, c1, i1), NB.ar_fitted(z, c2, i2), atol=1e-8)
        np.testing.assert_allclose(NP.ar_fitted(z, c1, i1)[c1.shape[0]:], z[c1.shape[0]:], atol=1e-6)


def test_generate_batch_agrees():
    rng = np.random.default_rng(3)
    m = 64
    t = rng.standard_normal(m)
    refs = rng.standard_normal((4, m))
    starts = rng.integers(0, m - 1, size=200)
    ends = np.array([rng.integers(s + 1, m + 1) for s in starts])
    chroms = np.ascontiguousarray(np.stack([starts, ends, rng.integers(0, 4, 200)], 1).astype(np.int64))
    a = NP.generate_batch(t, refs, chroms, 4)
    b = NB.generate_batch(t, refs, chroms, 4)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)
    for row_a, row_b, (s, e, _) in zip(a, b, chroms):
        assert row_a[:s].tobytes() == row_b[:s].tobytes() == t[:s].tobytes()
        assert row_a[e:].tobytes() == row_b[e:].tobytes() == t[e:].tobytes()
