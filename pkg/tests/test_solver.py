import math

import numpy as np
import pytest

from addkern.dataset import Dataset, train_test_split
from addkern.errors import CgBreakdownError, MaxIterationsError, ScalingMismatchError
from addkern.grouping import consec_windows
from addkern.kernels import KernelSpec, dense_matrix, dense_matvec
from addkern.solver import (GridCell, cg_solve, default_sigma_f, grid_search,
                            krr_fit, krr_predict, rmse)
from addkern.windows import WindowSet

from conftest import direct_prescaled, make_prescaled


def test_rmse_hand_computed():
    assert abs(rmse([1.0, 2.0, 3.0], [2.0, 4.0, 3.0])
               - math.sqrt((1 + 4 + 0) / 3)) < 1e-15


def test_cg_identity_operator_one_iteration():
    y = np.array([2.0, -4.0, 6.0])
    v, iters = cg_solve(lambda u: u, y, beta=1.0, tol=1e-12)
    np.testing.assert_allclose(v, y / 2.0, atol=1e-14)
    assert iters == 1


def test_cg_matches_direct_solve():
    ds = direct_prescaled(300, 6, 3, seed=0)
    ws = WindowSet(((1, 2, 3), (4, 5, 6)), d_max=3)
    spec = KernelSpec("gauss", 0.5, default_sigma_f(2))
    beta = 0.1
    K = dense_matrix(spec, ws, ds)
    direct = np.linalg.solve(K + beta * np.eye(300), ds.targets)
    v, _ = cg_solve(lambda u: dense_matvec(spec, ws, ds, u), ds.targets,
                    beta, tol=1e-6)
    assert np.linalg.norm(v - direct) <= 1e-3 * np.linalg.norm(direct)


def test_cg_error_norm_monotone():
    """||x_k - x*|| decreases monotonically for CG on an SPD system."""
    ds = direct_prescaled(200, 4, 2, seed=3)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.3, default_sigma_f(2))
    beta = 1e-3
    K = dense_matrix(spec, ws, ds)
    x_star = np.linalg.solve(K + beta * np.eye(200), ds.targets)

    errors = []
    x = np.zeros(200)
    r = ds.targets.copy()
    p = r.copy()
    rs = r @ r
    errors.append(np.linalg.norm(x - x_star))
    for _ in range(60):
        Ap = dense_matvec(spec, ws, ds, p) + beta * p
        alpha = rs / (p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        errors.append(np.linalg.norm(x - x_star))
        rs_new = r @ r
        p = r + (rs_new / rs) * p
        rs = rs_new
    slack = 1e-12 * errors[0]
    assert all(b <= a + slack for a, b in zip(errors, errors[1:]))


def test_cg_residual_monotone_well_conditioned():
    ds = direct_prescaled(200, 4, 2, seed=4)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.5, default_sigma_f(2))
    resid = []
    cg_solve(lambda u: dense_matvec(spec, ws, ds, u), ds.targets,
             beta=10.0, tol=1e-10, callback=resid.append)
    slack = 1e-12 * resid[0]
    assert all(b <= a + slack for a, b in zip(resid, resid[1:]))


def test_cg_iteration_peak_at_moderate_ell():
    ds = make_prescaled(600, 9, 3, seed=11, correlated=True)
    ws = consec_windows(9, 3)
    sf = default_sigma_f(len(ws))
    factor = 1.0 / math.sqrt(3.0)
    iters = {}
    for ell in (0.01, 1.0, 100.0):
        spec = KernelSpec("gauss", ell * factor, sf)
        _, it = cg_solve(lambda u: dense_matvec(spec, ws, ds, u),
                         ds.targets, beta=1e-4, tol=1e-4)
        iters[ell] = it
    assert iters[1.0] >= iters[0.01]
    assert iters[1.0] >= iters[100.0]


def test_cg_breakdown_on_negative_operator():
    y = np.ones(5)
    with pytest.raises(CgBreakdownError):
        cg_solve(lambda u: -2.0 * u, y, beta=1.0)


def test_cg_max_iterations():
    ds = direct_prescaled(150, 4, 2, seed=5)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.3, default_sigma_f(2))
    with pytest.raises(MaxIterationsError):
        cg_solve(lambda u: dense_matvec(spec, ws, ds, u), ds.targets,
                 beta=1e-6, tol=1e-12, max_iter=2)


# ---------------------------------------------------------------------------
# fit / predict

def test_krr_zero_targets():
    ds = direct_prescaled(40, 4, 2, seed=6)
    ds = Dataset(ds.features, np.zeros(40), ds.feature_names,
                 scaling_state=ds.scaling_state, d_max=ds.d_max)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    model = krr_fit(ds, ws, KernelSpec("gauss", 0.5), 1.0, backend="dense")
    np.testing.assert_array_equal(model.coefficients, np.zeros(40))


def test_krr_huge_beta_diagonal_dominance():
    ds = direct_prescaled(60, 4, 2, seed=7)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    beta = 1e6
    model = krr_fit(ds, ws, KernelSpec("gauss", 0.5, default_sigma_f(2)),
                    beta, backend="dense", tol=1e-8)
    ref = ds.targets / beta
    assert np.linalg.norm(model.coefficients - ref) <= 0.01 * np.linalg.norm(ref)


def test_krr_dual_backend_agreement():
    ds = make_prescaled(500, 6, 3, seed=8)
    ws = consec_windows(6, 3)
    tol = 1e-3
    spec = KernelSpec("gauss", 1.0 / math.sqrt(3.0), default_sigma_f(len(ws)))
    dense = krr_fit(ds, ws, spec, 0.1, backend="dense", tol=tol)
    fast = krr_fit(ds, ws, spec, 0.1, backend="fastsum", preset="default", tol=tol)
    rel = (np.linalg.norm(dense.coefficients - fast.coefficients)
           / np.linalg.norm(dense.coefficients))
    assert rel <= 10.0 * tol


def test_predict_on_train_consistent_with_fit():
    ds = make_prescaled(300, 4, 2, seed=9)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 0.5, default_sigma_f(2))
    beta, tol = 0.5, 1e-6
    model = krr_fit(ds, ws, spec, beta, backend="dense", tol=tol)
    pred = krr_predict(model, ds)
    lhs = pred + beta * model.coefficients
    assert np.linalg.norm(lhs - ds.targets) <= 2 * tol * np.linalg.norm(ds.targets)


def test_predict_single_point_monotone_decay():
    train = direct_prescaled(1, 2, 2, seed=0)
    ws = WindowSet(((1, 2),), d_max=2)
    model = krr_fit(train, ws, KernelSpec("gauss", 0.2), 1e-6, backend="dense")
    offsets = np.array([0.01, 0.05, 0.1, 0.2])
    pts = train.features[0][None, :] + np.column_stack([offsets, np.zeros(4)])
    test = Dataset(pts, np.zeros(4), train.feature_names,
                   scaling_state="prescaled", d_max=2)
    pred = krr_predict(model, test)
    assert all(a > b for a, b in zip(pred, pred[1:]))


def test_predict_dual_backend_agreement():
    base = make_prescaled(400, 4, 2, seed=10)
    train, test = train_test_split(base, 0.5, seed=1)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    spec = KernelSpec("gauss", 1.0 / math.sqrt(2.0), default_sigma_f(2))
    dense = krr_fit(train, ws, spec, 0.1, backend="dense", tol=1e-6)
    fast = krr_fit(train, ws, spec, 0.1, backend="fastsum", tol=1e-6)
    pd = krr_predict(dense, test)
    pf = krr_predict(fast, test)
    assert np.linalg.norm(pd - pf) / np.linalg.norm(pd) <= 1e-3


def test_predict_scaling_mismatch():
    train = make_prescaled(100, 4, 2, seed=11)
    other = make_prescaled(100, 4, 2, seed=12)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    model = krr_fit(train, ws, KernelSpec("gauss", 0.5), 1.0, backend="dense")
    with pytest.raises(ScalingMismatchError):
        krr_predict(model, other)


# ---------------------------------------------------------------------------
# grid search

def test_grid_search_single_cell():
    base = make_prescaled(200, 4, 2, seed=13)
    train, test = train_test_split(base, 0.5, seed=2)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    res = grid_search(train, test, ws, [1.0], [0.1], backend="dense")
    assert len(res.cells) == 1
    assert res.best_pair == (1.0, 0.1)
    assert res.best.rmse is not None


def test_grid_search_surface_not_flat():
    base = make_prescaled(400, 4, 2, seed=14)
    train, test = train_test_split(base, 0.5, seed=3)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    res = grid_search(train, test, ws, [0.01, 1.0, 100.0], [0.01, 1.0, 100.0],
                      backend="dense")
    vals = [c.rmse for c in res.cells if not c.failed]
    assert min(vals) < max(vals)
    assert res.best.rmse == min(vals)


def test_grid_search_records_failures():
    base = make_prescaled(200, 4, 2, seed=15)
    train, test = train_test_split(base, 0.5, seed=4)
    ws = WindowSet(((1, 2), (3, 4)), d_max=2)
    res = grid_search(train, test, ws, [1.0, 0.1], [1e-8], backend="dense",
                      tol=1e-10, max_iter=1)
    assert all(c.failed for c in res.cells) or any(c.failed for c in res.cells) \
        or pytest.fail("expected at least one failed cell")


def test_grid_search_tie_break_smaller_ell_beta():
    cells = [GridCell(1.0, 1.0, 0.5, 3, 0.0, 0.0),
             GridCell(0.1, 1.0, 0.5, 3, 0.0, 0.0),
             GridCell(0.1, 0.1, 0.5, 3, 0.0, 0.0)]
    best = min(cells, key=lambda c: (c.rmse, c.ell, c.beta))
    assert (best.ell, best.beta) == (0.1, 0.1)
