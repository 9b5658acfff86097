"""Command-line experiment runner: ``run``, ``sweep`` and ``plot``.

The scenario file fixes the environment (its ``seed`` key); ``--seeds``
selects the player's exploration seeds. Worker count comes from the
NSBCO_WORKERS environment variable (default 1).

Exit codes: 0 success, 1 run-level failure, 2 bad configuration or I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BcoError, BudgetExceeded, InvalidArgument
from .oracle import MODES
from .regret import EXACT_INTERVAL_LIMIT, adaptive_regret, dynamic_regret, fmt_float, loglog_slope, write_atomic
from .runner import ALGORITHMS, simulate
from .scenarios import build_scenario, read_scenario_file

WORKERS_ENV = "NSBCO_WORKERS"
BOOTSTRAP_RESAMPLES = 2000
BOOTSTRAP_SEED = 20240


@dataclass
class RunConfig:
    algo: str
    mode: str
    scenario: dict
    seeds: list[int]
    out: Path
    T: int | None = None
    intervals: str | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise InvalidArgument(f"unknown algorithm {self.algo!r}")
        if self.mode not in MODES:
            raise InvalidArgument(f"unknown mode {self.mode!r}")
        if not self.seeds:
            raise InvalidArgument("at least one seed is required")
        if self.intervals not in (None, "full", "dyadic"):
            raise InvalidArgument(f"--intervals must be full or dyadic, got {self.intervals!r}")


def parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                if hi < lo:
                    raise InvalidArgument(f"empty seed range {part!r}")
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise InvalidArgument(f"bad seed entry {part!r}") from None
    if not seeds:
        raise InvalidArgument("no seeds given")
    if min(seeds) < 0:
        raise InvalidArgument(f"seeds must be non-negative, got {text!r}")
    if len(set(seeds)) != len(seeds):
        raise InvalidArgument(f"duplicate seeds in {text!r}")
    return seeds


def parse_horizons(text: str) -> list[int]:
    try:
        hs = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidArgument(f"bad horizon list {text!r}") from None
    if any(h < 1 for h in hs):
        raise InvalidArgument(f"horizons must be positive, got {hs}")
    return hs


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgument(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidArgument(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


def run_cell(algo: str, mode: str, scenario_cfg: dict, T: int | None, seed: int,
             intervals: str | None, overrides: dict) -> dict:
    """One (horizon, seed) cell; self-contained so it can run in a worker process."""
    t0 = time.perf_counter()
    sc = build_scenario(scenario_cfg, T=T)
    ledger = simulate(algo, sc, mode, seed, **overrides)
    res = {
        "T": sc.T,
        "seed": seed,
        "ledger_csv": ledger.to_csv(),
        "dynamic_regret": dynamic_regret(ledger, sc),
        "total_queries": ledger.total_queries,
        "path_length": sc.path_length,
    }
    if intervals is not None:
        kind = intervals
        if kind == "full" and sc.T > EXACT_INTERVAL_LIMIT:
            kind = "dyadic"
        res["adaptive_regret"] = adaptive_regret(ledger, sc, kind)
        res["adaptive_kind"] = "exact" if kind == "full" else "dyadic-lower-bound"
    res["wall_time"] = time.perf_counter() - t0
    return res


def run_cells(cfg: RunConfig, horizons: list[int | None]) -> list[dict]:
    jobs = [(cfg.algo, cfg.mode, cfg.scenario, T, s, cfg.intervals, cfg.overrides)
            for T in horizons for s in cfg.seeds]
    workers = min(worker_count(), len(jobs))
    if workers == 1:
        return [run_cell(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_cell, *j) for j in jobs]
        return [f.result() for f in futures]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v):
    return fmt_float(v) if isinstance(v, float) else v


def _result_row(res: dict, adaptive: bool, with_T: bool = False) -> list:
    row = [res["T"]] if with_T else []
    row += [res["seed"], _fmt(res["dynamic_regret"])]
    if adaptive:
        row += [_fmt(res["adaptive_regret"]), res["adaptive_kind"]]
    row.append(res["total_queries"])
    return row


def _result_header(adaptive: bool, with_T: bool = False) -> list[str]:
    head = (["T"] if with_T else []) + ["seed", "dynamic_regret"]
    if adaptive:
        head += ["adaptive_regret", "adaptive_kind"]
    return head + ["total_queries"]


def _write_run_json(out: Path, cfg: RunConfig, results: list[dict], extra: dict | None = None) -> None:
    meta = {
        "version": __version__,
        "algo": cfg.algo,
        "mode": cfg.mode,
        "scenario": cfg.scenario,
        "seeds": cfg.seeds,
        "overrides": cfg.overrides,
        "wall_time": {f"T{r['T']}_seed{r['seed']}": r["wall_time"] for r in results},
    }
    meta.update(extra or {})
    write_atomic(out / "run.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def cmd_run(cfg: RunConfig) -> int:
    results = run_cells(cfg, [cfg.T])
    adaptive = cfg.intervals is not None
    for res in results:
        write_atomic(cfg.out / f"ledger_seed{res['seed']}.csv", res["ledger_csv"])
    rows = [_result_row(r, adaptive) for r in results]
    write_atomic(cfg.out / "summary.csv", _csv_text(_result_header(adaptive), rows))
    _write_run_json(cfg.out, cfg, results, {"T": results[0]["T"], "path_length": results[0]["path_length"]})
    mean = float(np.mean([r["dynamic_regret"] for r in results]))
    print(f"{cfg.algo} {cfg.mode} T={results[0]['T']} seeds={len(results)} "
          f"mean dynamic regret {mean:.6g}; wrote {cfg.out}")
    return 0


def bootstrap_slope(horizons, per_seed: np.ndarray, rng: np.random.Generator,
                    n_resamples: int = BOOTSTRAP_RESAMPLES) -> tuple[float, float]:
    """95% percentile interval of the log-log slope, resampling seeds.

    ``per_seed`` is (n_T, n_seeds); one resample draws a seed multiset and
    reuses it across all horizons.
    """
    n_seeds = per_seed.shape[1]
    slopes = []
    for _ in range(n_resamples):
        idx = rng.integers(0, n_seeds, n_seeds)
        means = per_seed[:, idx].mean(axis=1)
        if np.all(means > 0):
            slopes.append(loglog_slope(horizons, means))
    if not slopes:
        return float("nan"), float("nan")
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return float(lo), float(hi)


def cmd_sweep(cfg: RunConfig, horizons: list[int], plot: bool) -> int:
    if len(horizons) < 4:
        raise InvalidArgument(f"a sweep needs at least 4 horizons, got {len(horizons)}")
    if len(set(horizons)) != len(horizons):
        raise InvalidArgument(f"duplicate horizons in {horizons}")
    results = run_cells(cfg, horizons)
    adaptive = cfg.intervals is not None
    for res in results:
        write_atomic(cfg.out / f"T{res['T']}" / f"ledger_seed{res['seed']}.csv", res["ledger_csv"])
    write_atomic(cfg.out / "sweep.csv",
                 _csv_text(_result_header(adaptive, True), [_result_row(r, adaptive, True) for r in results]))

    metrics = ["dynamic_regret"] + (["adaptive_regret"] if adaptive else [])
    n = len(cfg.seeds)
    table = {m: np.array([r[m] for r in results]).reshape(len(horizons), n) for m in metrics}
    queries = np.array([r["total_queries"] for r in results]).reshape(len(horizons), n)
    paths = [results[i * n]["path_length"] for i in range(len(horizons))]
    head = ["T", "n_seeds", "path_length"] + [f"mean_{m}" for m in metrics] + ["mean_total_queries"]
    rows = []
    for i, T in enumerate(horizons):
        rows.append([T, n, _fmt(float(paths[i]))] + [_fmt(float(table[m][i].mean())) for m in metrics]
                    + [_fmt(float(queries[i].mean()))])
    write_atomic(cfg.out / "summary.csv", _csv_text(head, rows))

    rng = np.random.default_rng(np.random.SeedSequence([BOOTSTRAP_SEED]))
    rate_rows = []
    for m in metrics:
        means = table[m].mean(axis=1)
        if np.all(means > 0):
            slope = loglog_slope(horizons, means)
            lo, hi = bootstrap_slope(horizons, table[m], rng)
        else:
            slope = lo = hi = float("nan")
        rate_rows.append([m, _fmt(slope), _fmt(lo), _fmt(hi), len(horizons), n])
        print(f"{m}: slope {slope:.4f}  95% CI [{lo:.4f}, {hi:.4f}]")
    write_atomic(cfg.out / "rates.csv",
                 _csv_text(["metric", "slope", "ci_low", "ci_high", "n_horizons", "n_seeds"], rate_rows))
    _write_run_json(cfg.out, cfg, results, {"horizons": horizons})
    if plot:
        from .plotting import plot_summary

        for p in plot_summary(cfg.out / "summary.csv"):
            print(f"wrote {p}")
    print(f"wrote {cfg.out}")
    return 0


def cmd_plot(summary: str, out: str | None) -> int:
    from .plotting import plot_summary

    if not Path(summary).is_file():
        raise InvalidArgument(f"summary file not found: {summary}")
    for p in plot_summary(summary, out):
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsbco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, T_help):
        p.add_argument("--algo", required=True, choices=ALGORITHMS)
        p.add_argument("--mode", required=True, choices=MODES)
        p.add_argument("--scenario", required=True, help="scenario file (key = value lines)")
        p.add_argument("--T", dest="T", help=T_help)
        p.add_argument("--seeds", default="0", help="player seeds, e.g. 0-9 or 0,3,7")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--intervals", choices=("full", "dyadic"),
                       help="also report adaptive regret over this interval set")
        p.add_argument("--eta", type=float, help="step size override (bgd, bgd-tuned)")
        p.add_argument("--delta", type=float, help="perturbation override (bgd, bgd-tuned)")

    common(sub.add_parser("run", help="run one horizon over several seeds"), "horizon override")
    p_sweep = sub.add_parser("sweep", help="run several horizons and fit the regret growth rate")
    common(p_sweep, "comma-separated horizons (at least 4)")
    p_sweep.add_argument("--plot", action="store_true", help="also write SVG charts")
    p_plot = sub.add_parser("plot", help="render a sweep summary as SVG charts")
    p_plot.add_argument("summary", help="summary.csv written by sweep")
    p_plot.add_argument("--out", help="output directory (default: next to the summary)")
    return parser


def _config(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in ("eta", "delta") if getattr(args, k) is not None}
    path = Path(args.scenario)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    return RunConfig(args.algo, args.mode, read_scenario_file(path), parse_seeds(args.seeds),
                     Path(args.out), intervals=args.intervals, overrides=overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.verb == "plot":
            return cmd_plot(args.summary, args.out)
        cfg = _config(args)
        if args.verb == "run":
            if args.T is not None:
                hs = parse_horizons(args.T)
                if len(hs) != 1:
                    raise InvalidArgument("run takes a single --T")
                cfg.T = hs[0]
            return cmd_run(cfg)
        if args.T is None:
            raise InvalidArgument("sweep needs --T with at least 4 horizons")
        return cmd_sweep(cfg, parse_horizons(args.T), args.plot)
    except BudgetExceeded as exc:
        print(f"error: ALGORITHM DEFECT: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BcoError as exc:
        print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
