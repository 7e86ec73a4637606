"""Variance-based sensitivity analysis of the additive-kernel predictor.

The fitted predictor restricted to one window is a trigonometric
polynomial, so its variance decomposes exactly over frequency supports:
every frequency vector k contributes |c_k S_k|^2 to the feature subset
on which k is nonzero. Summing these contributions per subset (and
across windows) yields variance shares rho_v in [0, 1] that sum to one;
sorting subsets by rho and keeping the smallest prefix whose total
reaches a chosen score turns the report into a new window set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .dataset import PRESCALED, Dataset
from .errors import InvalidScalingError, ZeroVarianceError
from .fastsum import FastsumPlan, build_plan
from .grouping import consec_windows
from .kernels import KernelSpec
from .nufft import freqs, nufft_type1
from .solver import default_sigma_f, krr_fit
from .windows import WindowSet

VARIANCE_FLOOR = 1e-300


@dataclass(frozen=True)
class GsiReport:
    """Sensitivity index per feature subset plus the total variance."""

    indices: dict                  # subset (ascending 1-based tuple) -> rho
    thetas: dict                   # subset -> raw variance contribution
    total_variance: float
    windows: WindowSet
    m: int

    def sorted_subsets(self) -> list:
        """Subsets by descending rho; ties by subset lexicographic order."""
        return sorted(self.indices, key=lambda u: (-self.indices[u], u))

    def to_json(self) -> str:
        entries = [{"subset": list(u), "rho": self.indices[u]}
                   for u in self.sorted_subsets()]
        return json.dumps({"indices": entries,
                           "total_variance": self.total_variance,
                           "m": self.m}, indent=2)


def _support_masks(m: int, q: int):
    """For each nonzero 0/1 pattern over q axes, the grid mask of matching k."""
    nonzero = freqs(m) != 0
    masks = {}
    for pattern in product((0, 1), repeat=q):
        if not any(pattern):
            continue
        mask = np.ones((m,) * q, dtype=bool)
        for axis, bit in enumerate(pattern):
            ax = nonzero if bit else ~nonzero
            shape = [1] * q
            shape[axis] = m
            mask &= ax.reshape(shape)
        masks[pattern] = mask
    return masks


def compute_gsi(plan: FastsumPlan, v: np.ndarray) -> GsiReport:
    """Accumulate variance contributions theta_v per feature subset.

    Per window the node sums S_k = sum_j v_j e^{+2 pi i k.x_j} come from
    one adjoint transform; contributions |c_k S_k|^2 are grouped by the
    support of k inside the window and accumulated across windows (the
    same subset may appear under several windows). The k = 0 term is the
    predictor mean and is excluded.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (plan.n_rows,):
        raise ValueError("coefficient vector length must match the plan")
    thetas: dict = {}
    mask_cache: dict = {}
    for w, geom in zip(plan.window_set, plan.geometries):
        q = len(w)
        if q not in mask_cache:
            mask_cache[q] = _support_masks(plan.m, q)
        nplan = plan.plan_for(w)
        # S with the +i sign convention; v is real so conjugation suffices
        S = np.conj(nufft_type1(nplan, geom, v))
        power = np.abs(plan.table_for(w).values * S) ** 2
        for pattern, mask in mask_cache[q].items():
            subset = tuple(w[axis] for axis, bit in enumerate(pattern) if bit)
            thetas[subset] = thetas.get(subset, 0.0) + float(power[mask].sum())
    total = math.fsum(thetas.values())
    if total <= VARIANCE_FLOOR:
        raise ZeroVarianceError("predictor variance is numerically zero")
    indices = {u: t / total for u, t in thetas.items()}
    return GsiReport(indices=indices, thetas=thetas, total_variance=total,
                     windows=plan.window_set, m=plan.m)


def select_windows_by_gsi(report: GsiReport, gsi_score: float) -> WindowSet:
    """Smallest rho-descending prefix of subsets whose shares reach the score."""
    if not 0.0 < gsi_score < 1.0:
        raise ValueError("gsi_score must lie strictly between 0 and 1")
    chosen = []
    acc = 0.0
    for subset in report.sorted_subsets():
        chosen.append(subset)
        acc += report.indices[subset]
        if acc >= gsi_score:
            break
    d_max = max(len(u) for u in chosen)
    return WindowSet(tuple(chosen), d_max=d_max,
                     metadata={"technique": "gsi", "gsi_score": gsi_score,
                               "covered_rho": acc})


def gsi_pipeline(ds: Dataset, d_max: int, ell_init: float = 1.0,
                 beta_init: float = 1.0, gsi_score: float = 0.99,
                 preset="default", backend: str = "fastsum",
                 tol: float = 1e-3) -> tuple[WindowSet, GsiReport]:
    """Windows from scratch: consec start, ridge fit, sensitivity selection.

    ``ell_init`` is in quarter-box units and is rescaled by the data's
    prescaling factor, matching how grid-search grids are interpreted.
    """
    if ds.scaling_state != PRESCALED:
        raise InvalidScalingError("gsi_pipeline requires prescaled data")
    initial = consec_windows(ds.n_features, d_max)
    spec = KernelSpec("gauss", ell_init / math.sqrt(ds.d_max),
                      default_sigma_f(len(initial)))
    model = krr_fit(ds, initial, spec, beta_init, backend=backend,
                    preset=preset, tol=tol)
    plan = model.plan
    if plan is None:
        plan = build_plan(spec, initial, preset, ds)
    report = compute_gsi(plan, model.coefficients)
    return select_windows_by_gsi(report, gsi_score), report
