"""Nonuniform FFTs on [-1/2, 1/2)^q for q in {1, 2, 3}.

Type-1 (adjoint direction) computes, for all k in the index set I_m,

    S_k = sum_j v_j exp(-2 pi i k . x_j),

type-2 evaluates a trigonometric polynomial at nonuniform points,

    f(x_j) = sum_{k in I_m} c_k exp(+2 pi i k . x_j).

Both use the standard gridding scheme: convolve with a compactly
supported window onto an oversampled regular grid, FFT, and divide by
the window transform. The window is Kaiser-Bessel by default (Gaussian
kept for cross-checks), with 2 * cutoff taps per dimension and the
shape parameter picked by the Beatty rule for the actual oversampling.

All coefficient arrays use numpy's FFT frequency ordering; integer
frequencies per axis are ``np.fft.fftfreq(m) * m``. The deconvolution
uses the same window transform in both transform types, so type-2 is
the exact matrix adjoint of type-1 by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import i0 as bessel_i0

from .errors import PointOutOfDomainError

KAISER_BESSEL = "kaiser_bessel"
GAUSSIAN_WINDOW = "gaussian_window"


def freqs(m: int) -> np.ndarray:
    """Integer frequencies of I_m in FFT order: 0..m/2-1, -m/2..-1."""
    return (np.fft.fftfreq(m) * m).astype(np.int64)


def grid_positions(m: int) -> np.ndarray:
    """Sampling positions j/m, j in I_m, in FFT order."""
    return np.fft.fftfreq(m)


@dataclass(frozen=True)
class CoefficientTable:
    """Fourier coefficients c_k on the tensor grid I_m, FFT ordering."""

    dims: int
    m: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.m,) * self.dims:
            raise ValueError(f"expected shape {(self.m,) * self.dims}, got {vals.shape}")
        if not np.isfinite(vals.view(np.float64)).all():
            raise ValueError("coefficients must be finite")


def grid_fft_coefficients(samples: np.ndarray) -> CoefficientTable:
    """Discrete Fourier coefficients of samples taken at j/m, j in I_m.

    c_k = m^{-q} sum_j f(j/m) exp(-2 pi i j.k / m). The inverse transform
    reproduces the samples exactly (up to rounding).
    """
    samples = np.asarray(samples)
    dims = samples.ndim
    m = samples.shape[0]
    if samples.shape != (m,) * dims or m % 2:
        raise ValueError("samples must form an even cubic grid")
    values = np.fft.fftn(samples) / samples.size
    return CoefficientTable(dims=dims, m=m, values=values)


def coefficients_to_samples(table: CoefficientTable) -> np.ndarray:
    """Inverse of grid_fft_coefficients (values on the j/m grid)."""
    return np.fft.ifftn(table.values) * table.values.size


@dataclass(frozen=True)
class NufftPlan:
    """Transform sizes and window configuration; immutable once built."""

    dims: int
    m: int
    oversampling: float = 2.0
    cutoff: int = 6
    window: str = KAISER_BESSEL
    n: int = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        if self.dims not in (1, 2, 3):
            raise ValueError("dims must be 1, 2 or 3")
        if self.m < 2 or self.m % 2:
            raise ValueError("m must be even and >= 2")
        if self.oversampling < 1.25:
            raise ValueError("oversampling must be >= 1.25")
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        if self.window not in (KAISER_BESSEL, GAUSSIAN_WINDOW):
            raise ValueError(f"unknown window {self.window!r}")
        n = int(math.ceil(self.oversampling * self.m / 2.0)) * 2
        object.__setattr__(self, "n", n)
        sigma = n / self.m
        taps = 2 * self.cutoff
        if self.window == KAISER_BESSEL:
            # Beatty et al. shape parameter for the actual oversampling
            beta = math.pi * math.sqrt(taps * taps / (sigma * sigma)
                                       * (sigma - 0.5) ** 2 - 0.8)
        else:
            # variance of the truncated Gaussian window, NFFT convention
            beta = 2.0 * sigma * self.cutoff / ((2.0 * sigma - 1.0) * math.pi)
        object.__setattr__(self, "beta", beta)

    @property
    def taps(self) -> int:
        return 2 * self.cutoff

    def window_values(self, z: np.ndarray) -> np.ndarray:
        """Window at offsets z (grid cells), normalized to peak 1."""
        c = float(self.cutoff)
        if self.window == KAISER_BESSEL:
            arg = np.maximum(0.0, 1.0 - (z / c) ** 2)
            return bessel_i0(self.beta * np.sqrt(arg)) / bessel_i0(self.beta)
        return np.exp(-(z * z) / self.beta)

    def window_transform(self, k: np.ndarray) -> np.ndarray:
        """Continuous Fourier transform of the window at frequencies k/n."""
        nu = np.asarray(k, dtype=np.float64) / self.n
        c = float(self.cutoff)
        if self.window == KAISER_BESSEL:
            arg = self.beta ** 2 - (2.0 * math.pi * c * nu) ** 2
            root = np.sqrt(np.maximum(arg, 1e-300))
            out = 2.0 * c * np.sinh(root) / (root * bessel_i0(self.beta))
            # oscillatory branch outside the bessel bandwidth (not hit for k in I_m)
            osc = arg < 0
            if np.any(osc):
                root_o = np.sqrt(-arg[osc])
                out[osc] = 2.0 * c * np.sin(root_o) / (root_o * bessel_i0(self.beta))
            return out
        return np.sqrt(math.pi * self.beta) * np.exp(-(math.pi * nu) ** 2 * self.beta)

    def deconvolution(self) -> np.ndarray:
        """Per-axis spectral correction, FFT order (shared by both types).

        Combines 1 / psi_hat(k/n) with the phase (-1)^k that accounts for
        grid index 0 sitting at position -1/2 rather than 0.
        """
        k = freqs(self.m)
        sign = 1.0 - 2.0 * (k & 1)
        return sign / self.window_transform(k)


@dataclass(frozen=True)
class SpreadGeometry:
    """Precomputed tap indices and window weights for a fixed point set."""

    n_points: int
    first: tuple[np.ndarray, ...]    # per dim: (N,) wrapped first tap index
    weights: tuple[np.ndarray, ...]  # per dim: (N, taps) float64


def prepare_points(plan: NufftPlan, points: np.ndarray) -> SpreadGeometry:
    """Validate points and tabulate per-dimension spreading weights.

    The geometry is reusable across transforms with the same plan and
    points, which is what makes repeated products (CG iterations) cheap.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if plan.dims == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    if pts.ndim != 2 or pts.shape[1] != plan.dims:
        raise ValueError(f"points must have shape (N, {plan.dims})")
    if np.any(pts < -0.5) or np.any(pts >= 0.5):
        raise PointOutOfDomainError("points must lie in [-1/2, 1/2)")
    first, weights = [], []
    offsets = np.arange(plan.taps, dtype=np.float64)
    for axis in range(plan.dims):
        t = (pts[:, axis] + 0.5) * plan.n
        i0 = np.floor(t).astype(np.int64) - plan.cutoff + 1
        z = t[:, None] - (i0[:, None] + offsets[None, :])
        first.append(np.mod(i0, plan.n))
        weights.append(np.ascontiguousarray(plan.window_values(z)))
    return SpreadGeometry(n_points=pts.shape[0], first=tuple(first),
                          weights=tuple(weights))


# ---------------------------------------------------------------------------
# numba spreading / interpolation kernels (serial: deterministic accumulation)

@njit(cache=True)
def _spread_1(first0, w0, values, n, grid):
    taps = w0.shape[1]
    for j in range(values.shape[0]):
        v = values[j]
        i0 = first0[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            grid[ia] += v * w0[j, a]


@njit(cache=True)
def _spread_2(first0, first1, w0, w1, values, n, grid):
    taps = w0.shape[1]
    for j in range(values.shape[0]):
        v = values[j]
        i0 = first0[j]
        i1 = first1[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            va = v * w0[j, a]
            row = ia * n
            for b in range(taps):
                ib = i1 + b
                if ib >= n:
                    ib -= n
                grid[row + ib] += va * w1[j, b]


@njit(cache=True)
def _spread_3(first0, first1, first2, w0, w1, w2, values, n, grid):
    taps = w0.shape[1]
    for j in range(values.shape[0]):
        v = values[j]
        i0 = first0[j]
        i1 = first1[j]
        i2 = first2[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            va = v * w0[j, a]
            plane = ia * n
            for b in range(taps):
                ib = i1 + b
                if ib >= n:
                    ib -= n
                vb = va * w1[j, b]
                row = (plane + ib) * n
                for c in range(taps):
                    ic = i2 + c
                    if ic >= n:
                        ic -= n
                    grid[row + ic] += vb * w2[j, c]


@njit(cache=True)
def _interp_1(first0, w0, n, grid, out):
    taps = w0.shape[1]
    for j in range(out.shape[0]):
        acc = 0.0 + 0.0j
        i0 = first0[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            acc += grid[ia] * w0[j, a]
        out[j] = acc


@njit(cache=True)
def _interp_2(first0, first1, w0, w1, n, grid, out):
    taps = w0.shape[1]
    for j in range(out.shape[0]):
        acc = 0.0 + 0.0j
        i0 = first0[j]
        i1 = first1[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            row = ia * n
            acc_a = 0.0 + 0.0j
            for b in range(taps):
                ib = i1 + b
                if ib >= n:
                    ib -= n
                acc_a += grid[row + ib] * w1[j, b]
            acc += acc_a * w0[j, a]
        out[j] = acc


@njit(cache=True)
def _interp_3(first0, first1, first2, w0, w1, w2, n, grid, out):
    taps = w0.shape[1]
    for j in range(out.shape[0]):
        acc = 0.0 + 0.0j
        i0 = first0[j]
        i1 = first1[j]
        i2 = first2[j]
        for a in range(taps):
            ia = i0 + a
            if ia >= n:
                ia -= n
            plane = ia * n
            acc_a = 0.0 + 0.0j
            for b in range(taps):
                ib = i1 + b
                if ib >= n:
                    ib -= n
                row = (plane + ib) * n
                acc_b = 0.0 + 0.0j
                for c in range(taps):
                    ic = i2 + c
                    if ic >= n:
                        ic -= n
                    acc_b += grid[row + ic] * w2[j, c]
                acc_a += acc_b * w1[j, b]
            acc += acc_a * w0[j, a]
        out[j] = acc


# ---------------------------------------------------------------------------

def _as_geometry(plan: NufftPlan, points) -> SpreadGeometry:
    if isinstance(points, SpreadGeometry):
        return points
    return prepare_points(plan, points)


def _band_indices(plan: NufftPlan) -> np.ndarray:
    m, n = plan.m, plan.n
    return np.concatenate([np.arange(0, m // 2), np.arange(n - m // 2, n)])


def _apply_deconvolution(plan: NufftPlan, table: np.ndarray) -> np.ndarray:
    deconv = plan.deconvolution()
    out = table
    for axis in range(plan.dims):
        shape = [1] * plan.dims
        shape[axis] = plan.m
        out = out * deconv.reshape(shape)
    return out


def nufft_type1(plan: NufftPlan, points, weights: np.ndarray) -> np.ndarray:
    """S_k = sum_j v_j e^{-2 pi i k.x_j} for all k in I_m (FFT order)."""
    geom = _as_geometry(plan, points)
    v = np.ascontiguousarray(np.asarray(weights, dtype=np.complex128))
    if v.shape != (geom.n_points,):
        raise ValueError("weights length must match the number of points")
    grid = np.zeros(plan.n ** plan.dims, dtype=np.complex128)
    if plan.dims == 1:
        _spread_1(geom.first[0], geom.weights[0], v, plan.n, grid)
    elif plan.dims == 2:
        _spread_2(geom.first[0], geom.first[1], geom.weights[0], geom.weights[1],
                  v, plan.n, grid)
    else:
        _spread_3(geom.first[0], geom.first[1], geom.first[2],
                  geom.weights[0], geom.weights[1], geom.weights[2],
                  v, plan.n, grid)
    G = np.fft.fftn(grid.reshape((plan.n,) * plan.dims))
    band = _band_indices(plan)
    sub = G[np.ix_(*([band] * plan.dims))]
    return _apply_deconvolution(plan, sub)


def nufft_type2(plan: NufftPlan, points, coeffs) -> np.ndarray:
    """f(x_j) = sum_{k in I_m} c_k e^{+2 pi i k.x_j} at nonuniform points."""
    geom = _as_geometry(plan, points)
    if isinstance(coeffs, CoefficientTable):
        if coeffs.dims != plan.dims or coeffs.m != plan.m:
            raise ValueError("coefficient table does not match the plan")
        values = coeffs.values
    else:
        values = np.asarray(coeffs, dtype=np.complex128)
        if values.shape != (plan.m,) * plan.dims:
            raise ValueError(f"coefficients must have shape {(plan.m,) * plan.dims}")
    d = _apply_deconvolution(plan, values)
    padded = np.zeros((plan.n,) * plan.dims, dtype=np.complex128)
    band = _band_indices(plan)
    padded[np.ix_(*([band] * plan.dims))] = d
    g = np.ascontiguousarray(np.fft.ifftn(padded) * plan.n ** plan.dims).ravel()
    out = np.empty(geom.n_points, dtype=np.complex128)
    if plan.dims == 1:
        _interp_1(geom.first[0], geom.weights[0], plan.n, g, out)
    elif plan.dims == 2:
        _interp_2(geom.first[0], geom.first[1], geom.weights[0], geom.weights[1],
                  plan.n, g, out)
    else:
        _interp_3(geom.first[0], geom.first[1], geom.first[2],
                  geom.weights[0], geom.weights[1], geom.weights[2],
                  plan.n, g, out)
    return out
