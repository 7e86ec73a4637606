"""Command-line harness: benchmarks, bound tables, regression runs.

Subcommands:

    matvec-bench   fast vs dense kernel products: errors and timings
    error-bounds   analytic bounds vs measured worst-case Fourier error
    krr            end-to-end additive kernel ridge regression
    group          feature windows from a grouping technique
    gsi            sensitivity-driven window selection

Configuration is a flat JSON key-value file (--config); command-line
flags override file values, and every default mirrors the benchmark
parameter table, so a bare run reproduces that setup. Each command
writes its outputs plus a manifest (config echo, library version, seed)
into --out. Exit codes: 0 success, 1 configuration error, 2 numerical
failure. Set ADDKERN_THREADS to override the compiled-kernel thread
count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundInputs, analytic_bound, measure_worst_case
from .dataset import (load_csv, minmax_to_quarter_box, prescale,
                      train_test_split, zscore_normalize)
from .errors import AddkernError
from .fastsum import build_plan, fast_matvec
from .grouping import (GroupingConfig, arrange, connected_components_windows,
                       consec_windows, elastic_net_select, fgo_windows,
                       fisher_scores, lasso_select, mis_scores,
                       selection_ranking)
from .gsi import gsi_pipeline, select_windows_by_gsi
from .kernels import DENSE_ROW_LIMIT, KernelSpec, dense_matvec
from .solver import default_sigma_f, grid_search
from .windows import WindowSet

CSV_SCHEMA = "addkern-csv v1"

DEFAULTS = {
    "dataset": None,
    "target": None,
    "delimiter": ",",
    "out": "addkern-out",
    "seed": 0,
    "data_split": 0.5,
    "technique": "mis",
    "strategy": "consec",
    "d_max": 3,
    "n_feat": None,
    "kernel": "gauss",
    "preset": "default",
    "backend": "fastsum",
    "tol_cg": 1e-3,
    "subset_size": 1000,
    "threshold": 0.0,
    "lasso_lambda": 0.01,
    "en_lambda": 0.01,
    "en_l1_ratio": 0.5,
    "cc_threshold": 0.5,
    "fgo_lambda": 1.0,
    "fgo_ell": 1.0,
    "fgo_beta": 0.1,
    "fgo_subset_size": 500,
    "gsi_score": 0.99,
    "gsi_ell_init": 1.0,
    "gsi_beta_init": 1.0,
    "ell_grid": [1e-2, 1e-1, 1.0, 1e1, 1e2],
    "beta_grid": [1e-2, 1e-1, 1.0, 1e1, 1e2],
    "sizes": [1000],
    "ells": [1e-2, 1e-1, 1.0, 1e1, 1e2],
    "presets": ["fine", "default", "rough"],
    "families": ["gauss", "der_gauss"],
    "dims": [1, 3],
    "ms": [16, 32, 64],
    "bound_ells": list(np.round(np.logspace(-1.2, 1, 12), 10)),
    "n_probe": 10_000,
    "gsi_scores": None,
}

TECHNIQUES = ("consec", "mis", "fisher", "lasso", "en", "cc", "fgo", "gsi")


class ConfigError(AddkernError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path: Path, command: str, header: list[str], rows: list):
    with open(path, "w") as fh:
        fh.write(f"# {CSV_SCHEMA} {command}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_manifest(out: Path, command: str, cfg: dict):
    echo = {k: v for k, v in sorted(cfg.items())}
    manifest = {"command": command, "version": __version__,
                "seed": cfg["seed"], "config": echo}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  default=str) + "\n")


def load_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    if cfg["technique"] not in TECHNIQUES:
        raise ConfigError(f"technique must be one of {TECHNIQUES}")
    if not 1 <= int(cfg["d_max"]) <= 3:
        raise ConfigError("d_max must be 1, 2 or 3")
    if cfg["dataset"] is not None and not Path(cfg["dataset"]).exists():
        raise ConfigError(f"dataset file {cfg['dataset']!r} does not exist")
    return cfg


def _require_dataset(cfg: dict):
    if cfg["dataset"] is None or cfg["target"] is None:
        raise ConfigError("this command needs --dataset and --target")
    ds = load_csv(cfg["dataset"], cfg["target"], delimiter=cfg["delimiter"])
    return minmax_to_quarter_box(zscore_normalize(ds))


def make_windows(ds_quarter, cfg: dict) -> WindowSet:
    """Windows for quarter-box data via the configured technique."""
    technique = cfg["technique"]
    d = ds_quarter.n_features
    d_max = int(cfg["d_max"])
    n_feat = cfg["n_feat"] and int(cfg["n_feat"])
    seed = int(cfg["seed"])
    subset = int(cfg["subset_size"])
    if technique == "consec":
        return consec_windows(d, d_max)
    if technique in ("mis", "fisher"):
        scorer = mis_scores if technique == "mis" else fisher_scores
        ranking = scorer(ds_quarter, subset, seed)
        return arrange(ranking, cfg["strategy"], d_max, n_feat,
                       metadata={"technique": technique, "seed": seed})
    if technique in ("lasso", "en"):
        if technique == "lasso":
            w, selected = lasso_select(ds_quarter, float(cfg["lasso_lambda"]),
                                       subset, seed, float(cfg["threshold"]))
        else:
            w, selected = elastic_net_select(ds_quarter, float(cfg["en_lambda"]),
                                             float(cfg["en_l1_ratio"]),
                                             subset, seed, float(cfg["threshold"]))
        if not selected:
            raise AddkernError("no features selected; lower the penalty")
        if cfg["strategy"] == "direct":
            src = selected
        else:
            src = [f for f in selection_ranking(w, float(cfg["threshold"])).order
                   if f in set(selected)]
        return arrange(src, cfg["strategy"], d_max,
                       n_feat if n_feat else len(selected),
                       metadata={"technique": technique, "seed": seed})
    if technique == "cc":
        return connected_components_windows(
            ds_quarter, float(cfg["cc_threshold"]), cfg["strategy"], d_max,
            subset, seed)
    if technique == "fgo":
        gcfg = GroupingConfig(
            d_max=2, n_feat=n_feat, subset_size=subset,
            threshold=float(cfg["threshold"]), fgo_lambda=float(cfg["fgo_lambda"]),
            fgo_ell=float(cfg["fgo_ell"]), fgo_beta=float(cfg["fgo_beta"]),
            fgo_subset_size=int(cfg["fgo_subset_size"]), seed=seed)
        return fgo_windows(ds_quarter, gcfg)
    raise ConfigError(f"technique {technique!r} is not valid here")


# ---------------------------------------------------------------------------
# subcommands

def cmd_matvec_bench(cfg: dict, out: Path) -> int:
    ds_q = _require_dataset(cfg)
    windows = make_windows(ds_q, cfg)
    d_max = int(cfg["d_max"])
    rng = np.random.default_rng(int(cfg["seed"]))
    rows = []
    for n in [int(s) for s in cfg["sizes"]]:
        n = min(n, ds_q.n_rows)
        idx = np.sort(rng.choice(ds_q.n_rows, size=n, replace=False))
        sub = replace(ds_q, features=ds_q.features[idx], targets=ds_q.targets[idx])
        v = np.ones(n)
        for ell in [float(e) for e in cfg["ells"]]:
            pre_ds, ell_t = prescale(sub, d_max, ell)
            spec = KernelSpec(cfg["kernel"], ell_t, default_sigma_f(len(windows)))
            dense_p, dense_s = None, None
            if n <= DENSE_ROW_LIMIT:
                t0 = time.perf_counter()
                dense_p = dense_matvec(spec, windows, pre_ds, v)
                dense_s = time.perf_counter() - t0
            for preset in cfg["presets"]:
                t0 = time.perf_counter()
                plan = build_plan(spec, windows, preset, pre_ds)
                fast_p = fast_matvec(plan, v)
                fast_s = time.perf_counter() - t0
                rel = (np.linalg.norm(fast_p - dense_p) / np.linalg.norm(dense_p)
                       if dense_p is not None else None)
                rows.append((n, ell, preset, cfg["kernel"], rel, fast_s, dense_s))
    write_csv(out / "matvec_bench.csv", "matvec-bench",
              ["N", "ell", "preset", "family", "rel_error",
               "fast_seconds", "dense_seconds"], rows)
    (out / "windows.json").write_text(windows.to_json() + "\n")
    return 0


def cmd_error_bounds(cfg: dict, out: Path) -> int:
    rows = []
    for family in cfg["families"]:
        for dims in [int(d) for d in cfg["dims"]]:
            for m in [int(m) for m in cfg["ms"]]:
                for ell in [float(e) for e in cfg["bound_ells"]]:
                    b = BoundInputs(ell=ell, m=m)
                    if b.eta < 1.0:
                        rows.append((family, dims, ell, m, b.eta,
                                     None, None, "not-applicable"))
                        continue
                    bound = analytic_bound(family, dims, b)
                    measured = measure_worst_case(
                        family, dims, ell, m, int(cfg["n_probe"]),
                        int(cfg["seed"]))
                    rows.append((family, dims, ell, m, b.eta, bound, measured,
                                 "yes" if measured <= bound else "VIOLATED"))
    write_csv(out / "error_bounds.csv", "error-bounds",
              ["family", "dims", "ell", "m", "eta", "bound", "measured",
               "dominated"], rows)
    return 0


def cmd_krr(cfg: dict, out: Path) -> int:
    ds_q = _require_dataset(cfg)
    train_q, test_q = train_test_split(ds_q, float(cfg["data_split"]),
                                       int(cfg["seed"]))
    if cfg["technique"] == "gsi":
        d_max = int(cfg["d_max"])
        train_p, _ = prescale(train_q, d_max, 1.0)
        windows, _ = gsi_pipeline(train_p, d_max,
                                  float(cfg["gsi_ell_init"]),
                                  float(cfg["gsi_beta_init"]),
                                  float(cfg["gsi_score"]),
                                  preset=cfg["preset"], tol=float(cfg["tol_cg"]))
    else:
        windows = make_windows(train_q, cfg)
    d_max = max(windows.lengths)
    train_p, _ = prescale(train_q, d_max, 1.0)
    test_p, _ = prescale(test_q, d_max, 1.0)
    result = grid_search(train_p, test_p, windows,
                         cfg["ell_grid"], cfg["beta_grid"],
                         family=cfg["kernel"], backend=cfg["backend"],
                         preset=cfg["preset"], tol=float(cfg["tol_cg"]))
    rows = [(c.ell, c.beta, c.rmse, c.cg_iterations,
             c.fit_seconds, c.predict_seconds, int(c.failed))
            for c in result.cells]
    write_csv(out / "grid_search.csv", "krr",
              ["ell", "beta", "rmse", "cg_iters", "fit_seconds",
               "predict_seconds", "failed"], rows)
    (out / "windows.json").write_text(windows.to_json() + "\n")
    best = result.best
    summary = {"best_ell": best.ell, "best_beta": best.beta,
               "best_rmse": best.rmse, "n_windows": len(windows),
               "technique": cfg["technique"]}
    (out / "best.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


def cmd_group(cfg: dict, out: Path) -> int:
    ds_q = _require_dataset(cfg)
    windows = make_windows(ds_q, cfg)
    (out / "windows.json").write_text(windows.to_json() + "\n")
    return 0


def cmd_gsi(cfg: dict, out: Path) -> int:
    ds_q = _require_dataset(cfg)
    train_q, _ = train_test_split(ds_q, float(cfg["data_split"]),
                                  int(cfg["seed"]))
    d_max = int(cfg["d_max"])
    train_p, _ = prescale(train_q, d_max, 1.0)
    windows, report = gsi_pipeline(train_p, d_max,
                                   float(cfg["gsi_ell_init"]),
                                   float(cfg["gsi_beta_init"]),
                                   float(cfg["gsi_score"]),
                                   preset=cfg["preset"],
                                   tol=float(cfg["tol_cg"]))
    (out / "gsi_report.json").write_text(report.to_json() + "\n")
    (out / "windows.json").write_text(windows.to_json() + "\n")
    scores = cfg["gsi_scores"]
    if scores:
        rows = []
        for score in [float(s) for s in scores]:
            ws = select_windows_by_gsi(report, score)
            rows.append((score, len(ws), ws.metadata["covered_rho"]))
        write_csv(out / "gsi_scores.csv", "gsi",
                  ["gsi_score", "n_windows", "covered_rho"], rows)
    return 0


COMMANDS = {
    "matvec-bench": cmd_matvec_bench,
    "error-bounds": cmd_error_bounds,
    "krr": cmd_krr,
    "group": cmd_group,
    "gsi": cmd_gsi,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="addkern", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--dataset")
        p.add_argument("--target")
        p.add_argument("--delimiter")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--technique", choices=TECHNIQUES)
        p.add_argument("--strategy", choices=["consec", "distr", "direct", "single"])
        p.add_argument("--d-max", dest="d_max", type=int)
        p.add_argument("--n-feat", dest="n_feat", type=int)
        p.add_argument("--kernel",
                       choices=["gauss", "der_gauss", "matern12", "der_matern12"])
        p.add_argument("--preset")
        p.add_argument("--backend", choices=["dense", "fastsum"])
        p.add_argument("--gsi-score", dest="gsi_score", type=float)
        p.add_argument("--gsi-scores", dest="gsi_scores", type=float, nargs="+")
        p.add_argument("--n-probe", dest="n_probe", type=int)
        p.add_argument("--sizes", type=int, nargs="+")
        p.add_argument("--ells", type=float, nargs="+")
        p.add_argument("--bound-ells", dest="bound_ells", type=float, nargs="+")
        p.add_argument("--ms", type=int, nargs="+")
        p.add_argument("--dims", type=int, nargs="+", choices=[1, 3])
        p.add_argument("--families", nargs="+", choices=["gauss", "der_gauss"])
        p.add_argument("--presets", nargs="+")
        p.add_argument("--ell-grid", dest="ell_grid", type=float, nargs="+")
        p.add_argument("--beta-grid", dest="beta_grid", type=float, nargs="+")
    return parser


def main(argv=None) -> int:
    threads = os.environ.get("ADDKERN_THREADS")
    if threads:
        try:
            import numba
            numba.set_num_threads(int(threads))
        except (ImportError, ValueError):
            pass
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        rc = COMMANDS[args.command](cfg, out)
        write_manifest(out, args.command, cfg)
        return rc
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except AddkernError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
