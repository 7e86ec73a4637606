"""CG-based kernel ridge regression with dense or fast-summation matvecs.

Fits (K + beta I) v = y by unpreconditioned conjugate gradients, predicts
through cross-kernel products, and runs exhaustive (ell, beta) grid
search. Length-scale grids are specified in quarter-box units and are
rescaled internally by the prescaling factor of the training data, so a
grid value of 1 means "1 on data scaled to [-1/4, 1/4]^d".
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import PRESCALED, Dataset, same_scaling
from .errors import (CgBreakdownError, InvalidScalingError, MaxIterationsError,
                     ScalingMismatchError)
from .fastsum import FastsumPlan, build_plan, fast_cross_matvec, fast_matvec, prepare_eval_points
from .kernels import KernelSpec, dense_cross_matvec, dense_matvec
from .windows import WindowSet

DEFAULT_CG_TOL = 1e-3
DEFAULT_CG_MAX_ITER = 5000

DENSE = "dense"
FASTSUM = "fastsum"


def rmse(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def default_sigma_f(n_windows: int) -> float:
    """sigma_f = sqrt(1/P): normalizes the additive kernel's diagonal to 1."""
    return math.sqrt(1.0 / n_windows)


def cg_solve(matvec, y: np.ndarray, beta: float, tol: float = DEFAULT_CG_TOL,
             max_iter: int = DEFAULT_CG_MAX_ITER, callback=None):
    """Solve (A + beta I) v = y for a symmetric PSD operator A.

    Returns (v, iterations). Raises MaxIterationsError past the cap and
    CgBreakdownError on non-positive curvature (a symptom of an operator
    that is not numerically PSD, e.g. excessive transform error).
    """
    y = np.asarray(y, dtype=np.float64)
    y_norm = np.linalg.norm(y)
    x = np.zeros_like(y)
    if y_norm == 0.0:
        return x, 0
    r = y.copy()
    p = r.copy()
    rs = float(r @ r)
    if callback is not None:
        callback(math.sqrt(rs))
    if math.sqrt(rs) <= tol * y_norm:
        return x, 0
    for it in range(1, max_iter + 1):
        Ap = matvec(p) + beta * p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise CgBreakdownError(
                f"p^T A p = {pAp:.3e} <= 0 at iteration {it}")
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        if callback is not None:
            callback(math.sqrt(rs_new))
        if math.sqrt(rs_new) <= tol * y_norm:
            return x, it
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise MaxIterationsError(
        f"CG did not reach tol={tol} within {max_iter} iterations")


@dataclass(frozen=True)
class KrrModel:
    """Fitted ridge-regression state; immutable, reusable for prediction."""

    spec: KernelSpec
    window_set: WindowSet
    beta: float
    backend: str
    preset: object
    coefficients: np.ndarray
    train: Dataset
    cg_iterations: int
    residual: float
    plan: FastsumPlan | None = field(default=None, repr=False, compare=False)


def krr_fit(train: Dataset, ws: WindowSet, spec: KernelSpec, beta: float,
            backend: str = FASTSUM, preset="default",
            tol: float = DEFAULT_CG_TOL, max_iter: int = DEFAULT_CG_MAX_ITER) -> KrrModel:
    """Solve (K + beta I) v = y on the training set."""
    if train.scaling_state != PRESCALED:
        raise InvalidScalingError("krr_fit requires prescaled training data")
    plan = None
    if backend == FASTSUM:
        plan = build_plan(spec, ws, preset, train)
        matvec = lambda v: fast_matvec(plan, v)
    elif backend == DENSE:
        matvec = lambda v: dense_matvec(spec, ws, train, v)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    resid_log = []
    v, iters = cg_solve(matvec, train.targets, beta, tol=tol, max_iter=max_iter,
                        callback=resid_log.append)
    y_norm = np.linalg.norm(train.targets)
    residual = resid_log[-1] / y_norm if y_norm > 0 else 0.0
    return KrrModel(spec=spec, window_set=ws, beta=beta, backend=backend,
                    preset=preset, coefficients=v, train=train,
                    cg_iterations=iters, residual=float(residual), plan=plan)


def krr_predict(model: KrrModel, test: Dataset) -> np.ndarray:
    """h(x_i') = sum_j v_j kappa(x_i', x_j) via the fitted backend."""
    if test.scaling_state != PRESCALED or not same_scaling(model.train, test):
        raise ScalingMismatchError(
            "test data must be prescaled with the training maps")
    if model.backend == DENSE:
        return dense_cross_matvec(model.spec, model.window_set, test,
                                  model.train, model.coefficients)
    geoms = prepare_eval_points(model.plan, test)
    return fast_cross_matvec(model.plan, geoms, model.coefficients, test.n_rows)


@dataclass(frozen=True)
class GridCell:
    ell: float
    beta: float
    rmse: float | None
    cg_iterations: int | None
    fit_seconds: float
    predict_seconds: float
    failed: bool = False
    message: str = ""


@dataclass(frozen=True)
class GridSearchResult:
    cells: tuple[GridCell, ...]
    best: GridCell

    @property
    def best_pair(self) -> tuple[float, float]:
        return self.best.ell, self.best.beta


def grid_search(train: Dataset, test: Dataset, ws: WindowSet,
                ell_grid, beta_grid, family: str = "gauss",
                backend: str = FASTSUM, preset="default",
                sigma_f: float | None = None,
                tol: float = DEFAULT_CG_TOL,
                max_iter: int = DEFAULT_CG_MAX_ITER) -> GridSearchResult:
    """Exhaustively fit/score every (ell, beta) pair; ties favor small ell, beta.

    RMSE is computed on the test targets in the transformed (z-scored)
    space. Cells where CG fails are recorded as failed, not fatal.
    """
    ell_grid = [float(e) for e in ell_grid]
    beta_grid = [float(b) for b in beta_grid]
    if not ell_grid or not beta_grid:
        raise ValueError("grids must be nonempty")
    if train.d_max is None:
        raise InvalidScalingError("training data must be prescaled")
    factor = 1.0 / math.sqrt(train.d_max)
    sf = default_sigma_f(len(ws)) if sigma_f is None else sigma_f
    cells = []
    for ell in ell_grid:
        for beta in beta_grid:
            spec = KernelSpec(family, ell * factor, sf)
            t0 = time.perf_counter()
            try:
                model = krr_fit(train, ws, spec, beta, backend=backend,
                                preset=preset, tol=tol, max_iter=max_iter)
            except (MaxIterationsError, CgBreakdownError) as exc:
                cells.append(GridCell(ell, beta, None, None,
                                      time.perf_counter() - t0, 0.0,
                                      failed=True, message=str(exc)))
                continue
            t1 = time.perf_counter()
            pred = krr_predict(model, test)
            t2 = time.perf_counter()
            cells.append(GridCell(ell, beta, rmse(test.targets, pred),
                                  model.cg_iterations, t1 - t0, t2 - t1))
    ok = [c for c in cells if not c.failed]
    if not ok:
        raise MaxIterationsError("every grid cell failed")
    best = min(ok, key=lambda c: (c.rmse, c.ell, c.beta))
    return GridSearchResult(cells=tuple(cells), best=best)
