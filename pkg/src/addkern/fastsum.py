"""NFFT-based fast summation for the additive (derivative-)kernel.

Per window the product K_s v is approximated by

    type-1 NUFFT of v at the window-restricted nodes
    -> pointwise multiply with the kernel's Fourier coefficients
    -> type-2 NUFFT back to the nodes,

accumulated over windows and scaled by sigma_f^2 (plus 2/ell or 1/ell
for the derivative families). Coefficients come from sampling the
radial kernel on a regular m^q grid over [-1/2, 1/2)^q and applying the
FFT, i.e. the kernel is periodized by simple continuation. Windows of
equal length share one coefficient table: all sub-kernels use the same
length-scale, so the sampled function is identical.

Presets map to the per-dimension grid size: fine (m=64), default
(m=32), rough (m=16).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import PRESCALED, Dataset, same_scaling
from .errors import InvalidScalingError, ScalingMismatchError
from .kernels import DERIVATIVE_PREFACTOR, KernelSpec, radial_profile
from .nufft import (CoefficientTable, NufftPlan, SpreadGeometry,
                    grid_fft_coefficients, grid_positions, nufft_type1,
                    nufft_type2, prepare_points)
from .windows import WindowSet

PRESETS = {"fine": 64, "default": 32, "rough": 16}


class AccuracyWarning(UserWarning):
    """Raised when eta = ell*pi*m/sqrt(2) < 1 (Fourier error may exceed 10)."""


def resolve_m(preset) -> int:
    if isinstance(preset, str):
        try:
            return PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}; use fine/default/rough")
    m = int(preset)
    if m < 2 or m % 2:
        raise ValueError("explicit m must be even and >= 2")
    return m


def kernel_coefficients(family: str, ell: float, q: int, m: int,
                        symmetric_band: bool = True) -> CoefficientTable:
    """FFT coefficients of the radial kernel periodized on [-1/2,1/2)^q.

    With ``symmetric_band`` the unpaired k = -m/2 hyperplanes are zeroed,
    so the trigonometric polynomial is exactly real and even; the dropped
    coefficients belong to the truncation tail either way.
    """
    pos = grid_positions(m)
    grids = np.meshgrid(*([pos] * q), indexing="ij")
    r2 = np.zeros((m,) * q)
    for g in grids:
        r2 += g * g
    table = grid_fft_coefficients(radial_profile(family, ell, r2))
    if not symmetric_band:
        return table
    values = table.values.copy()
    for axis in range(q):
        sl = [slice(None)] * q
        sl[axis] = m // 2
        values[tuple(sl)] = 0.0
    return CoefficientTable(dims=q, m=m, values=values)


@dataclass(frozen=True)
class FastsumPlan:
    """Precomputed tables and spreading geometry bound to one training set."""

    spec: KernelSpec
    window_set: WindowSet
    m: int
    data: Dataset
    nufft_plans: dict = field(repr=False)     # q -> NufftPlan
    tables: dict = field(repr=False)          # q -> CoefficientTable
    geometries: tuple = field(repr=False)     # per window: SpreadGeometry

    @property
    def n_rows(self) -> int:
        return self.data.n_rows

    def table_for(self, window) -> CoefficientTable:
        return self.tables[len(window)]

    def plan_for(self, window) -> NufftPlan:
        return self.nufft_plans[len(window)]

    def eta(self) -> float:
        return self.spec.ell * math.pi * self.m / math.sqrt(2.0)


def build_plan(spec: KernelSpec, window_set: WindowSet, preset,
               data: Dataset, cutoff: int = 6, oversampling: float = 2.0,
               window: str = "kaiser_bessel") -> FastsumPlan:
    """Precompute coefficient tables and per-window spreading geometry."""
    if data.scaling_state != PRESCALED:
        raise InvalidScalingError("fast summation requires prescaled data")
    if data.d_max is None or max(window_set.lengths) > data.d_max:
        raise InvalidScalingError(
            "data prescaled with a smaller d_max than the longest window")
    if window_set.max_feature() > data.n_features:
        raise ValueError("window refers to a feature beyond the data")
    m = resolve_m(preset)
    eta = spec.ell * math.pi * m / math.sqrt(2.0)
    if eta < 1.0:
        warnings.warn(
            f"eta = ell*pi*m/sqrt(2) = {eta:.3g} < 1: Fourier approximation "
            "may be arbitrarily inaccurate for this length-scale",
            AccuracyWarning, stacklevel=2)
    lengths = sorted(set(window_set.lengths))
    nufft_plans = {q: NufftPlan(dims=q, m=m, oversampling=oversampling,
                                cutoff=cutoff, window=window)
                   for q in lengths}
    tables = {q: kernel_coefficients(spec.family, spec.ell, q, m) for q in lengths}
    geometries = tuple(
        prepare_points(nufft_plans[len(w)], data.features[:, window_set.columns(w)])
        for w in window_set)
    return FastsumPlan(spec=spec, window_set=window_set, m=m, data=data,
                       nufft_plans=nufft_plans, tables=tables,
                       geometries=geometries)


def _operator_scale(spec: KernelSpec) -> float:
    pre = DERIVATIVE_PREFACTOR[spec.family]
    return spec.sigma_f ** 2 * (1.0 if pre is None else pre / spec.ell)


def _take_real(acc: np.ndarray) -> np.ndarray:
    scale = np.linalg.norm(acc.real)
    resid = np.linalg.norm(acc.imag)
    if scale > 0 and resid > 1e-8 * scale:
        raise FloatingPointError(
            f"imaginary residue {resid:.3e} exceeds 1e-8 * ||result||")
    return acc.real.copy()


def fast_matvec(plan: FastsumPlan, v: np.ndarray) -> np.ndarray:
    """Approximate K v (or derivative-kernel product) in subquadratic time."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (plan.n_rows,):
        raise ValueError("vector length must equal the number of rows")
    acc = np.zeros(plan.n_rows, dtype=np.complex128)
    for w, geom in zip(plan.window_set, plan.geometries):
        nplan = plan.plan_for(w)
        S = nufft_type1(nplan, geom, v)
        acc += nufft_type2(nplan, geom, plan.table_for(w).values * S)
    return _operator_scale(plan.spec) * _take_real(acc)


def fast_dsigma_matvec(plan: FastsumPlan, v: np.ndarray) -> np.ndarray:
    """(d K / d sigma_f) v = (2 / sigma_f) K v; pure rescale, no transforms."""
    if DERIVATIVE_PREFACTOR[plan.spec.family] is not None:
        raise ValueError("sigma_f derivative applies to the base kernel plan")
    return (2.0 / plan.spec.sigma_f) * fast_matvec(plan, v)


def prepare_eval_points(plan: FastsumPlan, data: Dataset) -> tuple:
    """Spreading geometry for out-of-sample points, one entry per window."""
    if data.scaling_state != PRESCALED or not same_scaling(plan.data, data):
        raise ScalingMismatchError(
            "evaluation data must be prescaled with the training maps")
    return tuple(
        prepare_points(plan.plan_for(w), data.features[:, plan.window_set.columns(w)])
        for w in plan.window_set)


def fast_cross_matvec(plan: FastsumPlan, eval_geoms: tuple, v: np.ndarray,
                      n_eval: int) -> np.ndarray:
    """K(eval, train) v: type-1 at the training nodes, type-2 at eval nodes."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (plan.n_rows,):
        raise ValueError("vector length must equal the number of training rows")
    acc = np.zeros(n_eval, dtype=np.complex128)
    for w, train_geom, eval_geom in zip(plan.window_set, plan.geometries, eval_geoms):
        nplan = plan.plan_for(w)
        S = nufft_type1(nplan, train_geom, v)
        acc += nufft_type2(nplan, eval_geom, plan.table_for(w).values * S)
    return _operator_scale(plan.spec) * _take_real(acc)
