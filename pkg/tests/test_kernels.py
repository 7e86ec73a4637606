import math

import numpy as np
import pytest

from addkern.errors import DenseLimitExceededError
from addkern.kernels import (FAMILIES, KernelSpec, dense_cross_matvec,
                             dense_matrix, dense_matvec, dsigma_matvec,
                             eval_kernel)
from addkern.windows import WindowSet

from conftest import direct_prescaled


def naive_matvec(spec, ws, X, v):
    """Independent per-entry double loop, no vectorization shared with the library."""
    n = X.shape[0]
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            total = 0.0
            for w in ws:
                r2 = 0.0
                for f in w:
                    diff = X[i, f - 1] - X[j, f - 1]
                    r2 += diff * diff
                if spec.family == "gauss":
                    total += math.exp(-r2 / (2 * spec.ell ** 2))
                elif spec.family == "der_gauss":
                    t = r2 / (2 * spec.ell ** 2)
                    total += (2.0 / spec.ell) * t * math.exp(-t)
                elif spec.family == "matern12":
                    total += math.exp(-math.sqrt(r2) / spec.ell)
                else:
                    t = math.sqrt(r2) / spec.ell
                    total += (1.0 / spec.ell) * t * math.exp(-t)
            out[i] += spec.sigma_f ** 2 * total * v[j]
    return out


def test_eval_kernel_special_points():
    assert eval_kernel(KernelSpec("gauss", 0.5), 0.0) == 1.0
    assert eval_kernel(KernelSpec("der_gauss", 0.5), 0.0) == 0.0
    assert eval_kernel(KernelSpec("matern12", 2.0), 0.0) == 1.0
    # t e^{-t} peaks at t = 1, i.e. r^2 = c^2 = 2 ell^2
    ell = 0.7
    val = eval_kernel(KernelSpec("der_gauss", ell), 2 * ell * ell)
    assert abs(val - math.exp(-1)) < 1e-15


def test_eval_kernel_ranges():
    rng = np.random.default_rng(0)
    for fam in FAMILIES:
        spec = KernelSpec(fam, 0.8)
        for arg in rng.uniform(0, 5, size=50):
            v = eval_kernel(spec, float(arg))
            if fam in ("gauss", "matern12"):
                assert 0.0 < v <= 1.0
            else:
                assert 0.0 <= v <= math.exp(-1) + 1e-15


def test_dense_matvec_zero_vector():
    ds = direct_prescaled(30, 4, 2)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    out = dense_matvec(KernelSpec("gauss", 0.5), ws, ds, np.zeros(30))
    np.testing.assert_array_equal(out, np.zeros(30))


def test_dense_matvec_single_point_diagonal():
    ds = direct_prescaled(1, 6, 3)
    ws = WindowSet(((1, 2, 3), (4, 5, 6)), d_max=3)
    spec = KernelSpec("gauss", 1.0, sigma_f=2.0)
    out = dense_matvec(spec, ws, ds, np.array([3.0]))
    assert abs(out[0] - spec.sigma_f ** 2 * len(ws) * 3.0) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_dense_matvec_matches_double_loop(family):
    ds = direct_prescaled(50, 5, 2, seed=3)
    ws = WindowSet(((1, 3), (2, 5), (4,)), d_max=2)
    spec = KernelSpec(family, 0.4, sigma_f=0.9)
    v = np.random.default_rng(5).normal(size=50)
    fast = dense_matvec(spec, ws, ds, v)
    slow = naive_matvec(spec, ws, ds.features, v)
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_dense_cross_matvec_matches_square_case():
    ds = direct_prescaled(40, 4, 2, seed=8)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.5)
    v = np.random.default_rng(2).normal(size=40)
    np.testing.assert_allclose(dense_cross_matvec(spec, ws, ds, ds, v),
                               dense_matvec(spec, ws, ds, v), atol=1e-14)


def test_dsigma_factor_and_zero():
    ds = direct_prescaled(40, 4, 2, seed=1)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.5, sigma_f=1.0)
    v = np.random.default_rng(0).normal(size=40)
    np.testing.assert_allclose(dsigma_matvec(spec, ws, ds, v),
                               2.0 * dense_matvec(spec, ws, ds, v), atol=1e-14)
    np.testing.assert_array_equal(dsigma_matvec(spec, ws, ds, np.zeros(40)), 0.0)


def test_dsigma_matches_central_difference():
    ds = direct_prescaled(60, 4, 2, seed=4)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    v = np.random.default_rng(0).normal(size=60)
    sf, h = 1.3, 1e-5
    up = dense_matvec(KernelSpec("gauss", 0.5, sf + h), ws, ds, v)
    dn = dense_matvec(KernelSpec("gauss", 0.5, sf - h), ws, ds, v)
    fd = (up - dn) / (2 * h)
    an = dsigma_matvec(KernelSpec("gauss", 0.5, sf), ws, ds, v)
    assert np.linalg.norm(fd - an) / np.linalg.norm(an) < 1e-6


@pytest.mark.parametrize("ell", [0.3, 1.0, 3.0])
def test_dell_matches_central_difference(ell):
    ds = direct_prescaled(200, 6, 3, seed=6)
    ws = WindowSet(((1, 2, 3), (4, 5, 6)), d_max=3)
    v = np.random.default_rng(1).normal(size=200)
    h = 1e-5 * ell
    up = dense_matvec(KernelSpec("gauss", ell + h), ws, ds, v)
    dn = dense_matvec(KernelSpec("gauss", ell - h), ws, ds, v)
    fd = (up - dn) / (2 * h)
    an = dense_matvec(KernelSpec("der_gauss", ell), ws, ds, v)
    assert np.linalg.norm(fd - an) / np.linalg.norm(an) < 1e-5


def test_dell_matern_matches_central_difference():
    ds = direct_prescaled(150, 4, 2, seed=7)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    v = np.random.default_rng(2).normal(size=150)
    ell, h = 0.8, 1e-5 * 0.8
    up = dense_matvec(KernelSpec("matern12", ell + h), ws, ds, v)
    dn = dense_matvec(KernelSpec("matern12", ell - h), ws, ds, v)
    fd = (up - dn) / (2 * h)
    an = dense_matvec(KernelSpec("der_matern12", ell), ws, ds, v)
    assert np.linalg.norm(fd - an) / np.linalg.norm(an) < 1e-3


def test_symmetry_exact():
    ds = direct_prescaled(120, 4, 2, seed=9)
    ws = WindowSet(((1, 2), (2, 3), (4,)), d_max=2)
    for fam in FAMILIES:
        K = dense_matrix(KernelSpec(fam, 0.6), ws, ds)
        np.testing.assert_array_equal(K, K.T)


@pytest.mark.parametrize("family", ["gauss", "matern12"])
def test_psd_smallest_eigenvalue(family):
    ds = direct_prescaled(150, 6, 3, seed=10)
    ws = WindowSet(((1, 2, 3), (4, 5, 6)), d_max=3)
    K = dense_matrix(KernelSpec(family, 0.7), ws, ds)
    eigs = np.linalg.eigvalsh(K)
    assert eigs[0] >= -1e-8 * np.linalg.norm(K, 2)


def test_additivity_over_windows():
    ds = direct_prescaled(80, 6, 3, seed=11)
    ws = WindowSet(((1, 2, 3), (4, 5), (6,)), d_max=3)
    spec = KernelSpec("gauss", 0.5, sigma_f=0.8)
    v = np.random.default_rng(3).normal(size=80)
    total = dense_matvec(spec, ws, ds, v)
    parts = sum(dense_matvec(spec, WindowSet((w,), d_max=3), ds, v) for w in ws)
    np.testing.assert_allclose(total, parts, atol=1e-12)


def test_dense_limit_enforced():
    ds = direct_prescaled(10, 2, 1)
    ws = WindowSet(((1,), (2,)), d_max=1)
    big = np.zeros(30000)
    import addkern.kernels as kernels
    with pytest.raises(DenseLimitExceededError):
        kernels._check_limit(30000)
    with pytest.raises(ValueError):
        dense_matvec(KernelSpec("gauss", 1.0), ws, ds, big)
