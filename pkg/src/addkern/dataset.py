"""Dataset container and the scaling pipeline.

The fast summation machinery needs all window-restricted pair distances
bounded by 1/2. Data therefore passes through three stages:

    raw -> zscored -> quarter_box -> prescaled(d_max)

``zscore_normalize`` standardizes columns and the target,
``minmax_to_quarter_box`` maps every column affinely onto [-1/4, 1/4],
and ``prescale`` divides all coordinates by sqrt(d_max) so that points
restricted to any window of length <= d_max satisfy ||x_i - x_j|| <= 1/2.
A length-scale chosen for quarter-box data is rescaled by the same factor,
which leaves all kernel values unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import EmptyDatasetError, InvalidDMaxError, InvalidScalingError

RAW = "raw"
ZSCORED = "zscored"
QUARTER_BOX = "quarter_box"
PRESCALED = "prescaled"


@dataclass(frozen=True)
class ScalingFactor:
    """Prescaling constants for a superposition dimension d_max."""

    d_max: int

    @property
    def delta_max(self) -> float:
        """Max norm of a quarter-box point restricted to d_max features."""
        return math.sqrt(self.d_max) / 4.0

    @property
    def factor(self) -> float:
        """Multiplier applied to coordinates and length-scales."""
        return 1.0 / math.sqrt(self.d_max)


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus targets and scaling bookkeeping.

    ``transform_log`` records enough of each applied map to invert it and
    to verify that two datasets were scaled identically.
    """

    features: np.ndarray          # (N, d) float64
    targets: np.ndarray           # (N,) float64
    feature_names: tuple[str, ...]
    scaling_state: str = RAW
    d_max: int | None = None      # set once prescaled
    transform_log: dict = field(default_factory=dict, compare=False)
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        if X.ndim != 2:
            raise ValueError("features must be 2-D")
        if y.shape != (X.shape[0],):
            raise ValueError("targets length must match feature rows")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise EmptyDatasetError("need at least one row and one column")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length mismatch")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("non-finite entries must be dropped at ingestion")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def from_arrays(X, y, feature_names=None, scaling_state=RAW) -> Dataset:
    """Build a Dataset from in-memory arrays, dropping non-finite rows."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    keep = np.isfinite(X).all(axis=1) & np.isfinite(y)
    dropped = int((~keep).sum())
    X, y = X[keep], y[keep]
    if X.shape[0] == 0:
        raise EmptyDatasetError("no finite rows")
    if feature_names is None:
        feature_names = tuple(f"x{i + 1}" for i in range(X.shape[1]))
    warn = (f"dropped {dropped} rows with non-finite entries",) if dropped else ()
    return Dataset(X, y, tuple(feature_names), scaling_state=scaling_state,
                   transform_log={"rows_dropped": dropped}, warnings=warn)


def load_csv(path, target, delimiter: str = ",") -> Dataset:
    """Read a headered CSV; ``target`` selects the label column by name or index.

    Rows containing missing or non-finite values are dropped and counted.
    """
    df = pd.read_csv(path, delimiter=delimiter)
    if df.shape[1] < 2:
        raise ValueError("need a target column and at least one feature")
    if isinstance(target, int) or (isinstance(target, str) and target.isdigit()):
        target_col = df.columns[int(target)]
    else:
        if target not in df.columns:
            raise ValueError(f"target column {target!r} not in header")
        target_col = target
    y = pd.to_numeric(df[target_col], errors="coerce").to_numpy(dtype=np.float64)
    feats = df.drop(columns=[target_col])
    X = feats.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    ds = from_arrays(X, y, feature_names=tuple(feats.columns))
    return ds


def zscore_normalize(ds: Dataset) -> Dataset:
    """Standardize every column and the target to mean 0, variance 1.

    Constant columns carry no information and would divide by zero; they
    are dropped with a warning record.
    """
    if ds.scaling_state != RAW:
        raise InvalidScalingError(f"expected raw data, got {ds.scaling_state!r}")
    X, y = ds.features, ds.targets
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    keep = std > 0.0
    warn = list(ds.warnings)
    dropped_names = tuple(n for n, k in zip(ds.feature_names, keep) if not k)
    if dropped_names:
        warn.append(f"dropped constant columns: {', '.join(dropped_names)}")
    if not keep.any():
        raise EmptyDatasetError("all columns constant")
    Xz = (X[:, keep] - mean[keep]) / std[keep]
    y_mean, y_std = y.mean(), y.std()
    if y_std == 0.0:
        y_std = 1.0
        warn.append("constant target left unscaled")
    yz = (y - y_mean) / y_std
    log = dict(ds.transform_log)
    log["zscore"] = {
        "mean": mean[keep], "std": std[keep],
        "y_mean": float(y_mean), "y_std": float(y_std),
        "dropped_columns": dropped_names,
    }
    names = tuple(n for n, k in zip(ds.feature_names, keep) if k)
    return Dataset(Xz, yz, names, scaling_state=ZSCORED,
                   transform_log=log, warnings=tuple(warn))


def minmax_to_quarter_box(ds: Dataset) -> Dataset:
    """Affinely map every column onto [-1/4, 1/4]; record the map for inversion."""
    if ds.scaling_state != ZSCORED:
        raise InvalidScalingError(f"expected zscored data, got {ds.scaling_state!r}")
    X = ds.features
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    keep = hi > lo
    warn = list(ds.warnings)
    dropped = tuple(n for n, k in zip(ds.feature_names, keep) if not k)
    if dropped:
        warn.append(f"dropped degenerate columns: {', '.join(dropped)}")
    if not keep.any():
        raise EmptyDatasetError("all columns degenerate")
    lo, hi = lo[keep], hi[keep]
    scale = 0.5 / (hi - lo)
    Xq = (X[:, keep] - lo) * scale - 0.25
    log = dict(ds.transform_log)
    log["quarter_box"] = {"lo": lo, "scale": scale, "dropped_columns": dropped}
    names = tuple(n for n, k in zip(ds.feature_names, keep) if k)
    return Dataset(Xq, ds.targets, names, scaling_state=QUARTER_BOX,
                   transform_log=log, warnings=tuple(warn))


def invert_quarter_box(ds: Dataset) -> np.ndarray:
    """Recover the z-scored feature matrix from a quarter-box dataset."""
    qb = ds.transform_log.get("quarter_box")
    if qb is None:
        raise ValueError("dataset has no quarter-box map recorded")
    return (ds.features + 0.25) / qb["scale"] + qb["lo"]


def prescale(ds: Dataset, d_max: int, ell: float) -> tuple[Dataset, float]:
    """Divide coordinates and the length-scale by sqrt(d_max).

    The kernel argument ||x_i - x_j||^2 / (2 ell^2) is invariant under
    this joint rescaling, while every coordinate shrinks enough that any
    window of length <= d_max has pair distances bounded by 1/2.
    """
    if not isinstance(d_max, int) or not 1 <= d_max <= 3:
        raise InvalidDMaxError(f"d_max must be an int in 1..3, got {d_max!r}")
    if ds.scaling_state != QUARTER_BOX:
        raise InvalidScalingError(f"expected quarter-box data, got {ds.scaling_state!r}")
    if ell <= 0:
        raise ValueError("ell must be positive")
    sf = ScalingFactor(d_max)
    log = dict(ds.transform_log)
    log["prescale"] = {"d_max": d_max, "factor": sf.factor}
    out = Dataset(ds.features * sf.factor, ds.targets, ds.feature_names,
                  scaling_state=PRESCALED, d_max=d_max,
                  transform_log=log, warnings=ds.warnings)
    return out, ell * sf.factor


def train_test_split(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic row split; train gets floor(N * fraction) rows."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n_rows)
    n_train = int(math.floor(ds.n_rows * fraction))
    idx_train, idx_test = np.sort(perm[:n_train]), np.sort(perm[n_train:])

    def take(idx):
        return replace(ds, features=ds.features[idx], targets=ds.targets[idx])

    return take(idx_train), take(idx_test)


def same_scaling(a: Dataset, b: Dataset) -> bool:
    """True when both datasets went through identical scaling maps."""
    if a.scaling_state != b.scaling_state or a.d_max != b.d_max:
        return False
    za, zb = a.transform_log.get("zscore"), b.transform_log.get("zscore")
    qa, qb = a.transform_log.get("quarter_box"), b.transform_log.get("quarter_box")
    for ta, tb in ((za, zb), (qa, qb)):
        if (ta is None) != (tb is None):
            return False
        if ta is not None:
            for key in ta:
                va, vb = ta[key], tb.get(key)
                if isinstance(va, np.ndarray):
                    if vb is None or not np.array_equal(va, vb):
                        return False
                elif va != vb:
                    return False
    return True
