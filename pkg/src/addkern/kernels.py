"""Dense, exact evaluation of the additive kernel and its derivatives.

This is the brute-force reference path: O(P * N^2 * d_max) per product,
usable up to a configurable row limit. Kernel families:

    gauss         exp(-r^2 / (2 ell^2))
    der_gauss     (r^2 / (2 ell^2)) exp(-r^2 / (2 ell^2))
    matern12      exp(-r / ell)
    der_matern12  (r / ell) exp(-r / ell)

The full operator is sigma_f^2 * sum_s K_s for the base families. For the
derivative-with-respect-to-ell operators the per-window factor is 2/ell
(der_gauss) or 1/ell (der_matern12); ``ell`` is always the length-scale in
the same (prescaled) units as the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DenseLimitExceededError
from .windows import WindowSet

GAUSS = "gauss"
DER_GAUSS = "der_gauss"
MATERN12 = "matern12"
DER_MATERN12 = "der_matern12"

FAMILIES = (GAUSS, DER_GAUSS, MATERN12, DER_MATERN12)

#: operator-level factor applied per window, on top of sigma_f^2
DERIVATIVE_PREFACTOR = {GAUSS: None, MATERN12: None, DER_GAUSS: 2.0, DER_MATERN12: 1.0}

#: family of the underlying (non-derivative) kernel
BASE_FAMILY = {GAUSS: GAUSS, DER_GAUSS: GAUSS, MATERN12: MATERN12, DER_MATERN12: MATERN12}

DENSE_ROW_LIMIT = 20_000

_CHUNK = 256  # rows per dense block; bounds peak memory at ~CHUNK*N floats


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters (ell in prescaled units)."""

    family: str
    ell: float
    sigma_f: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if not self.sigma_f > 0:
            raise ValueError("sigma_f must be positive")

    def base(self) -> "KernelSpec":
        return KernelSpec(BASE_FAMILY[self.family], self.ell, self.sigma_f)


def radial_profile(family: str, ell: float, r2: np.ndarray) -> np.ndarray:
    """Evaluate the unit-scale radial kernel on squared distances ``r2``."""
    if family == GAUSS:
        return np.exp(-r2 / (2.0 * ell * ell))
    if family == DER_GAUSS:
        t = r2 / (2.0 * ell * ell)
        return t * np.exp(-t)
    if family == MATERN12:
        return np.exp(-np.sqrt(r2) / ell)
    if family == DER_MATERN12:
        t = np.sqrt(r2) / ell
        return t * np.exp(-t)
    raise ValueError(f"unknown kernel family {family!r}")


def eval_kernel(spec: KernelSpec, arg: float) -> float:
    """Single kernel value; ``arg`` is r^2 for gauss families, r for matern."""
    if arg < 0:
        raise ValueError("distance argument must be nonnegative")
    if spec.family in (GAUSS, DER_GAUSS):
        r2 = arg
    else:
        r2 = arg * arg
    return float(radial_profile(spec.family, spec.ell, np.asarray(r2)))


def _window_sqdist(Xa: np.ndarray, Xb: np.ndarray, cols) -> np.ndarray:
    # accumulate per-feature in ascending column order: reproducible sums
    out = np.zeros((Xa.shape[0], Xb.shape[0]))
    for c in cols:
        diff = Xa[:, c, None] - Xb[None, :, c]
        out += diff * diff
    return out


def dense_window_matvec(family: str, ell: float, ws: WindowSet,
                        Xa: np.ndarray, Xb: np.ndarray, v: np.ndarray) -> list[np.ndarray]:
    """Per-window products K_s(Xa, Xb) @ v without any scaling factors."""
    parts = []
    for w in ws:
        cols = ws.columns(w)
        out = np.empty(Xa.shape[0])
        for start in range(0, Xa.shape[0], _CHUNK):
            stop = min(start + _CHUNK, Xa.shape[0])
            r2 = _window_sqdist(Xa[start:stop], Xb, cols)
            out[start:stop] = radial_profile(family, ell, r2) @ v
        parts.append(out)
    return parts


def _check_limit(*sizes):
    for n in sizes:
        if n > DENSE_ROW_LIMIT:
            raise DenseLimitExceededError(
                f"{n} rows exceeds the dense limit of {DENSE_ROW_LIMIT}")


def dense_matvec(spec: KernelSpec, ws: WindowSet, X: Dataset, v: np.ndarray) -> np.ndarray:
    """Exact additive (derivative-)kernel matrix-vector product.

    gauss/matern12: sigma_f^2 * sum_s K_s v.
    der_gauss:      sigma_f^2 * sum_s (2/ell) K_s^der v   (d/d ell of the above)
    der_matern12:   sigma_f^2 * sum_s (1/ell) K_s^der v
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (X.n_rows,):
        raise ValueError("vector length must equal the number of rows")
    _check_limit(X.n_rows)
    parts = dense_window_matvec(spec.family, spec.ell, ws, X.features, X.features, v)
    pre = DERIVATIVE_PREFACTOR[spec.family]
    scale = spec.sigma_f ** 2 * (1.0 if pre is None else pre / spec.ell)
    return scale * np.sum(parts, axis=0)


def dense_cross_matvec(spec: KernelSpec, ws: WindowSet, X_eval: Dataset,
                       X_train: Dataset, v: np.ndarray) -> np.ndarray:
    """K(X_eval, X_train) @ v with the same scaling rules as dense_matvec."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (X_train.n_rows,):
        raise ValueError("vector length must equal the number of training rows")
    _check_limit(X_eval.n_rows, X_train.n_rows)
    parts = dense_window_matvec(spec.family, spec.ell, ws,
                                X_eval.features, X_train.features, v)
    pre = DERIVATIVE_PREFACTOR[spec.family]
    scale = spec.sigma_f ** 2 * (1.0 if pre is None else pre / spec.ell)
    return scale * np.sum(parts, axis=0)


def dsigma_matvec(spec: KernelSpec, ws: WindowSet, X: Dataset, v: np.ndarray) -> np.ndarray:
    """(d K / d sigma_f) v = (2 / sigma_f) K v for the base kernel family."""
    return (2.0 / spec.sigma_f) * dense_matvec(spec.base(), ws, X, v)


def dense_matrix(spec: KernelSpec, ws: WindowSet, X: Dataset) -> np.ndarray:
    """Materialize the full operator; test/diagnostic use on small N only."""
    _check_limit(X.n_rows)
    N = X.n_rows
    K = np.zeros((N, N))
    for w in ws:
        cols = ws.columns(w)
        r2 = _window_sqdist(X.features, X.features, cols)
        K += radial_profile(spec.family, spec.ell, r2)
    pre = DERIVATIVE_PREFACTOR[spec.family]
    scale = spec.sigma_f ** 2 * (1.0 if pre is None else pre / spec.ell)
    return scale * K
