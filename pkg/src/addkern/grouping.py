"""Techniques for arranging features into kernel windows.

Covers plain index-order grouping, importance rankings (mutual
information, Fisher score), sparse regression selection (lasso and
elastic net by coordinate descent), correlation connected-components
clustering, and direct feature-grouping optimization over per-pair
kernel weights. Rankings and selections are turned into windows by the
arrangement strategies:

    consec  consecutive chunks of the ranking, d_max at a time
    distr   deal the ranking round-robin so that similarly ranked
            features land in different windows (columns of the consec
            layout; over-long columns are re-chunked to d_max)
    direct  selected features in index order, chunked to d_max
    single  one singleton window per feature / component representative

All produced windows satisfy length <= d_max; feature indices are
1-based everywhere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .dataset import Dataset
from .errors import NonConvergenceError
from .kernels import radial_profile
from .solver import cg_solve
from .windows import WindowSet

CONSEC = "consec"
DISTR = "distr"
DIRECT = "direct"
SINGLE = "single"

MIS_BINS = 16
FISHER_CLASSES = 5
CD_MAX_SWEEPS = 10_000
CD_GAP_TOL = 1e-6


@dataclass(frozen=True)
class ImportanceRanking:
    """Per-feature scores plus the induced descending order (1-based)."""

    scores: np.ndarray
    order: tuple[int, ...]

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "ImportanceRanking":
        scores = np.asarray(scores, dtype=np.float64)
        # descending score, ties broken by ascending feature index
        idx = np.lexsort((np.arange(scores.size), -scores))
        return cls(scores=scores, order=tuple(int(i) + 1 for i in idx))


@dataclass(frozen=True)
class GroupingConfig:
    """Knobs for all grouping techniques; defaults follow the benchmark setup."""

    d_max: int = 3
    n_feat: int | None = None          # None: keep all features
    strategy: str = CONSEC
    subset_size: int = 1000            # rows used by ranking/selection/cc
    threshold: float = 0.0             # |weight| needed to keep a feature
    lasso_lambda: float = 0.01
    en_lambda: float = 0.01
    en_l1_ratio: float = 0.5
    cc_threshold: float = 0.5          # |corr| needed to connect two features
    fgo_lambda: float = 1.0
    fgo_ell: float = 1.0
    fgo_beta: float = 0.1
    fgo_subset_size: int = 500
    seed: int = 0


def _row_subset(ds: Dataset, subset_size: int, seed: int):
    n = min(int(subset_size), ds.n_rows)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(ds.n_rows, size=n, replace=False))
    return ds.features[idx], ds.targets[idx]


# ---------------------------------------------------------------------------
# plain grouping and arrangement

def consec_windows(d: int, d_max: int) -> WindowSet:
    """Group features by their column order; the last window may be short."""
    if d < 1:
        raise ValueError("d must be positive")
    wins = tuple(tuple(range(s, min(s + d_max, d + 1)))
                 for s in range(1, d + 1, d_max))
    return WindowSet(wins, d_max=d_max, metadata={"technique": "consec"})


def _chunk(seq, size):
    return [tuple(seq[i:i + size]) for i in range(0, len(seq), size)]


def arrange(ranking, strategy: str, d_max: int, n_feat: int | None = None,
            metadata: dict | None = None) -> WindowSet:
    """Turn a ranking (or explicit feature list) into a WindowSet."""
    if isinstance(ranking, ImportanceRanking):
        order = list(ranking.order)
    else:
        order = [int(i) for i in ranking]
    if n_feat is not None:
        order = order[:n_feat]
    if not order:
        raise ValueError("no features left to arrange")
    if strategy == CONSEC:
        groups = _chunk(order, d_max)
    elif strategy == DISTR:
        rows = _chunk(order, d_max)
        cols = [[row[i] for row in rows if i < len(row)]
                for i in range(max(len(r) for r in rows))]
        groups = [c for col in cols for c in _chunk(col, d_max)]
    elif strategy == DIRECT:
        groups = _chunk(sorted(order), d_max)
    elif strategy == SINGLE:
        groups = [(i,) for i in order]
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    wins = tuple(tuple(sorted(g)) for g in groups)
    md = {"strategy": strategy, "n_feat": n_feat}
    if metadata:
        md.update(metadata)
    return WindowSet(wins, d_max=d_max, metadata=md)


# ---------------------------------------------------------------------------
# importance rankings

def _quantile_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin labels; invariant under monotone transforms."""
    edges = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    edges = np.unique(edges)
    return np.searchsorted(edges, x, side="right")


def mis_scores(ds: Dataset, subset_size: int = 1000, seed: int = 0,
               bins: int = MIS_BINS) -> ImportanceRanking:
    """Mutual information between each (binned) feature and the binned target.

    Plug-in estimate on a bins x bins equal-frequency contingency table,
    computed on a row subset for speed. Quantile binning makes the score
    invariant under strictly monotone feature transforms.
    """
    X, y = _row_subset(ds, subset_size, seed)
    iy = _quantile_bins(y, bins)
    ny = iy.max() + 1
    n = X.shape[0]
    scores = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        ix = _quantile_bins(X[:, j], bins)
        nx = ix.max() + 1
        joint = np.zeros((nx, ny))
        np.add.at(joint, (ix, iy), 1.0)
        p = joint / n
        px = p.sum(axis=1, keepdims=True)
        py = p.sum(axis=0, keepdims=True)
        nz = p > 0
        scores[j] = float(np.sum(p[nz] * np.log(p[nz] / (px @ py)[nz])))
    return ImportanceRanking.from_scores(scores)


def fisher_scores(ds: Dataset, subset_size: int = 1000, seed: int = 0,
                  classes: int = FISHER_CLASSES) -> ImportanceRanking:
    """Fisher score with the regression target split into quantile classes.

    score_j = sum_c n_c (mu_jc - mu_j)^2 / sum_c n_c var_jc; a zero
    within-class variance with nonzero separation yields +inf.
    """
    X, y = _row_subset(ds, subset_size, seed)
    labels = _quantile_bins(y, classes)
    mu = X.mean(axis=0)
    num = np.zeros(X.shape[1])
    den = np.zeros(X.shape[1])
    for c in np.unique(labels):
        Xc = X[labels == c]
        nc = Xc.shape[0]
        num += nc * (Xc.mean(axis=0) - mu) ** 2
        den += nc * Xc.var(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(den > 0, num / den,
                          np.where(num > 0, np.inf, 0.0))
    return ImportanceRanking.from_scores(scores)


# ---------------------------------------------------------------------------
# sparse regression selection (coordinate descent)

def _duality_gap(X, y, w, R, alpha_l1, alpha_l2):
    # gap of 0.5||y-Xw||^2 + alpha_l1 ||w||_1 + 0.5 alpha_l2 ||w||^2,
    # normalized afterwards by the row count
    XtA = X.T @ R - alpha_l2 * w
    dual_norm = np.max(np.abs(XtA)) if XtA.size else 0.0
    R2 = float(R @ R)
    if dual_norm > alpha_l1 and dual_norm > 0:
        const = alpha_l1 / dual_norm
        A2 = R2 * const * const
    else:
        const = 1.0
        A2 = R2
    gap = 0.5 * (R2 + A2) - const * float(R @ y)
    gap += alpha_l1 * float(np.abs(w).sum())
    gap += 0.5 * alpha_l2 * (1.0 + const * const) * float(w @ w)
    return gap


def _coordinate_descent(X, y, l1, l2, gap_tol=CD_GAP_TOL,
                        max_sweeps=CD_MAX_SWEEPS):
    """Minimize ||y - Xw||^2/(2n) + l1 ||w||_1 + l2/2 ||w||^2."""
    n, d = X.shape
    col_sq = np.einsum("ij,ij->j", X, X) / n
    w = np.zeros(d)
    R = y.copy()
    alpha_l1, alpha_l2 = l1 * n, l2 * n
    for _ in range(max_sweeps):
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            wj = w[j]
            rho = (X[:, j] @ R) / n + col_sq[j] * wj
            wn = math.copysign(max(abs(rho) - l1, 0.0), rho) / (col_sq[j] + l2)
            if wn != wj:
                R += X[:, j] * (wj - wn)
                w[j] = wn
        if _duality_gap(X, y, w, R, alpha_l1, alpha_l2) / n <= gap_tol:
            return w
    raise NonConvergenceError(
        f"coordinate descent: duality gap above {gap_tol} after {max_sweeps} sweeps")


def lasso_select(ds: Dataset, lam: float = 0.01, subset_size: int = 1000,
                 seed: int = 0, threshold: float = 0.0):
    """Lasso weights on a row subset; returns (weights, selected 1-based indices)."""
    X, y = _row_subset(ds, subset_size, seed)
    w = _coordinate_descent(X, y, l1=lam, l2=0.0)
    selected = tuple(int(j) + 1 for j in np.flatnonzero(np.abs(w) > threshold))
    return w, selected


def elastic_net_select(ds: Dataset, lam: float = 0.01, l1_ratio: float = 0.5,
                       subset_size: int = 1000, seed: int = 0,
                       threshold: float = 0.0):
    """Elastic-net weights; l1_ratio = 1 reduces exactly to the lasso."""
    X, y = _row_subset(ds, subset_size, seed)
    w = _coordinate_descent(X, y, l1=lam * l1_ratio, l2=lam * (1.0 - l1_ratio))
    selected = tuple(int(j) + 1 for j in np.flatnonzero(np.abs(w) > threshold))
    return w, selected


def selection_ranking(weights: np.ndarray, threshold: float = 0.0) -> ImportanceRanking:
    """Rank selected features by |weight| for consec/distr arrangement."""
    scores = np.where(np.abs(weights) > threshold, np.abs(weights), -np.inf)
    return ImportanceRanking.from_scores(scores)


# ---------------------------------------------------------------------------
# correlation clustering

def connected_components_windows(ds: Dataset, corr_threshold: float,
                                 strategy: str = CONSEC, d_max: int = 3,
                                 subset_size: int = 1000, seed: int = 0) -> WindowSet:
    """Windows from connected components of the |Pearson| > threshold graph.

    Components are ordered by their smallest member; members are ordered
    by mutual-information rank before chunking so that splits of large
    components keep important features together. Strategy 'single' keeps
    one representative per component: the member with the most
    within-component connections, ties to the lowest index.
    """
    X, _ = _row_subset(ds, subset_size, seed)
    d = X.shape[1]
    if d < 2:
        raise ValueError("need at least two features to cluster")
    C = np.corrcoef(X, rowvar=False)
    adj = (np.abs(C) > corr_threshold) & ~np.eye(d, dtype=bool)
    n_comp, labels = _cc(csr_matrix(adj), directed=False)
    mis_rank = {f: r for r, f in enumerate(
        mis_scores(ds, subset_size, seed).order)}
    comps = []
    for c in range(n_comp):
        members = [int(j) + 1 for j in np.flatnonzero(labels == c)]
        comps.append(sorted(members, key=lambda f: (mis_rank[f], f)))
    comps.sort(key=lambda ms: min(ms))
    groups = []
    if strategy == SINGLE:
        for members in comps:
            degrees = {f: int(adj[f - 1].sum()) for f in members}
            rep = min(members, key=lambda f: (-degrees[f], f))
            groups.append((rep,))
    elif strategy in (CONSEC, DISTR):
        for members in comps:
            if strategy == CONSEC:
                groups.extend(_chunk(members, d_max))
            else:
                rows = _chunk(members, d_max)
                cols = [[row[i] for row in rows if i < len(row)]
                        for i in range(max(len(r) for r in rows))]
                groups.extend(c for col in cols for c in _chunk(col, d_max))
    else:
        raise ValueError(f"strategy {strategy!r} not supported for clustering")
    wins = tuple(tuple(sorted(g)) for g in groups)
    return WindowSet(wins, d_max=d_max,
                     metadata={"technique": "cc", "strategy": strategy,
                               "corr_threshold": corr_threshold})


# ---------------------------------------------------------------------------
# feature grouping optimization

def _pair_kernels(X, pairs, ell):
    """Dense window kernels K_s for every candidate pair, one (n,n) block each."""
    mats = []
    for (a, b) in pairs:
        cols = [a - 1, b - 1]
        r2 = np.zeros((X.shape[0], X.shape[0]))
        for c in cols:
            diff = X[:, c, None] - X[None, :, c]
            r2 += diff * diff
        mats.append(radial_profile("gauss", ell, r2))
    return np.stack(mats)


def fgo_windows(ds: Dataset, config: GroupingConfig | None = None,
                seed: int | None = None) -> WindowSet:
    """Sparse optimization of per-pair kernel weights.

    Candidate windows are all feature pairs (optionally pre-filtered to
    the top-n_feat features by mutual information). On a small row
    subset, split in half, the hold-out mean squared error of a ridge
    fit with kernel sum_s sigma_s^2 K_s is minimized over sigma >= 0
    together with an L1 penalty; pairs with weight above the threshold
    become windows, ordered by decreasing weight. If everything is
    shrunk to zero the top mutual-information pair is returned with a
    warning so pipelines stay total.
    """
    cfg = config or GroupingConfig()
    seed = cfg.seed if seed is None else seed
    d = ds.n_features
    feats = list(range(1, d + 1))
    if cfg.n_feat is not None and cfg.n_feat < d:
        feats = sorted(mis_scores(ds, cfg.subset_size, seed).order[:cfg.n_feat])
    if len(feats) < 2:
        raise ValueError("need at least two candidate features")
    pairs = [(feats[i], feats[j])
             for i in range(len(feats)) for j in range(i + 1, len(feats))]
    X, y = _row_subset(ds, cfg.fgo_subset_size, seed)
    n_fit = X.shape[0] // 2
    Xf, yf = X[:n_fit], y[:n_fit]
    Xv, yv = X[n_fit:], y[n_fit:]
    K_fit = _pair_kernels(Xf, pairs, cfg.fgo_ell)
    # cross kernels: validation rows against fit rows
    K_val = np.stack([
        radial_profile("gauss", cfg.fgo_ell,
                       sum((Xv[:, c - 1, None] - Xf[None, :, c - 1]) ** 2
                           for c in pair))
        for pair in pairs])

    P = len(pairs)

    def objective(sigma):
        a = sigma * sigma
        A = np.tensordot(a, K_fit, axes=1)
        v, _ = cg_solve(lambda u: A @ u, yf, cfg.fgo_beta,
                        tol=1e-6, max_iter=2000)
        pred = np.tensordot(a, K_val, axes=1) @ v
        return float(np.mean((yv - pred) ** 2))

    def composite(sigma, z):
        return z + cfg.fgo_lambda * float(np.abs(sigma).sum())

    sigma = np.full(P, math.sqrt(1.0 / P))
    z = objective(sigma)
    h = 1e-4
    step = 1.0
    for _ in range(200):
        grad = np.empty(P)
        for s in range(P):
            bumped = sigma.copy()
            bumped[s] += h
            grad[s] = (objective(bumped) - z) / h
        improved = False
        t = step
        while t > 1e-8:
            cand = np.maximum(0.0, sigma - t * grad - t * cfg.fgo_lambda)
            zc = objective(cand)
            if not math.isfinite(zc):
                raise NonConvergenceError("feature grouping objective diverged")
            if composite(cand, zc) < composite(sigma, z) - 1e-12:
                sigma, z = cand, zc
                step = min(t * 2.0, 1.0)
                improved = True
                break
            t /= 2.0
        if not improved:
            break
        if np.max(np.abs(grad)) * step < 1e-8:
            break
    keep = np.flatnonzero(sigma > cfg.threshold)
    if keep.size == 0:
        warnings.warn("all pair weights shrunk to zero; "
                      "falling back to the top mutual-information pair")
        top = mis_scores(ds, cfg.subset_size, seed).order[:2]
        wins, weights = (tuple(sorted(top)),), (0.0,)
    else:
        order = keep[np.argsort(-sigma[keep], kind="stable")]
        wins = tuple(tuple(sorted(pairs[s])) for s in order)
        weights = tuple(float(sigma[s]) for s in order)
    return WindowSet(wins, d_max=2,
                     metadata={"technique": "fgo", "weights": list(weights),
                               "lambda": cfg.fgo_lambda, "seed": seed})
