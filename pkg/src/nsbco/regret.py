"""Per-round ledger and regret measures (dynamic, static, adaptive), plus rate fitting."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import IncompleteLedger, InvalidArgument, UnsupportedScenario
from .oracle import Quadratic

LEDGER_COLUMNS = ("t", "player_loss", "comparator_loss", "cum_dynamic_regret", "queries_cum", "n_experts")

EXACT_INTERVAL_LIMIT = 2000


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


class RegretLedger:
    """Round-by-round record of what the player paid and what the comparator paid.

    In two-point mode the player is charged the mean of its two queried
    values.
    """

    def __init__(self):
        self.t: list[int] = []
        self.decisions: list[np.ndarray] = []
        self.query_values: list[list[float]] = []
        self.player_loss: list[float] = []
        self.comparator_loss: list[float] = []
        self.cum_dynamic_regret: list[float] = []
        self.queries_cum: list[int] = []
        self.n_experts: list[int] = []
        self._cum = 0.0

    def __len__(self) -> int:
        return len(self.t)

    def append(self, t: int, decisions, values, comparator_loss: float, queries_cum: int,
               n_experts: int) -> None:
        if t != len(self.t) + 1:
            raise InvalidArgument(f"ledger row {t} appended after {len(self.t)} rows")
        player = sum(values) / len(values)
        self._cum += player - comparator_loss
        self.t.append(t)
        self.decisions.append(np.array(decisions))
        self.query_values.append(list(values))
        self.player_loss.append(player)
        self.comparator_loss.append(float(comparator_loss))
        self.cum_dynamic_regret.append(self._cum)
        self.queries_cum.append(int(queries_cum))
        self.n_experts.append(int(n_experts))

    @property
    def total_queries(self) -> int:
        return self.queries_cum[-1] if self.queries_cum else 0

    @property
    def final_regret(self) -> float:
        return self.cum_dynamic_regret[-1] if self.cum_dynamic_regret else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for row in zip(self.t, self.player_loss, self.comparator_loss, self.cum_dynamic_regret,
                       self.queries_cum, self.n_experts):
            t, pl, cl, cum, q, n = row
            w.writerow((t, fmt_float(pl), fmt_float(cl), fmt_float(cum), q, n))
        return buf.getvalue()

    def write_csv(self, path) -> None:
        write_atomic(path, self.to_csv())


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_ledger_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != LEDGER_COLUMNS:
        raise InvalidArgument(f"{path}: unexpected ledger header {rows[:1]}")
    data = np.array(rows[1:], dtype=float).reshape(-1, len(LEDGER_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(LEDGER_COLUMNS)}


def path_length(points) -> float:
    """Sum of Euclidean distances between consecutive points."""
    u = np.asarray(points, dtype=float)
    if u.ndim != 2:
        raise InvalidArgument(f"expected a (T, d) array, got shape {u.shape}")
    if len(u) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(u, axis=0), axis=1)))


def _check_complete(ledger: RegretLedger, scenario) -> None:
    if len(ledger) != scenario.T:
        raise IncompleteLedger(f"ledger has {len(ledger)} rows, scenario has T={scenario.T}")


def dynamic_regret(ledger: RegretLedger, scenario) -> float:
    """Player loss minus comparator loss, recomputed from the raw queried values."""
    _check_complete(ledger, scenario)
    player = math.fsum(sum(v) / len(v) for v in ledger.query_values)
    return player - math.fsum(scenario.comparator_losses())


def _quadratic_centers(scenario) -> np.ndarray:
    if not all(isinstance(f, Quadratic) for f in scenario.losses):
        raise UnsupportedScenario("interval minimisation needs quadratic losses")
    return np.asarray(scenario.centers, dtype=float)


def interval_min_losses(scenario, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """min over X of sum_{t=q}^{s} (||x - c_t||^2 + b) for 1-based inclusive [q, s]."""
    c = _quadratic_centers(scenario)
    zero = np.zeros((1, c.shape[1]))
    sc = np.vstack([zero, np.cumsum(c, axis=0)])
    scc = np.concatenate([[0.0], np.cumsum(np.einsum("ij,ij->i", c, c))])
    starts = np.asarray(starts)
    ends = np.asarray(ends)
    n = (ends - starts + 1).astype(float)
    csum = sc[ends] - sc[starts - 1]
    # the sum of squares is n ||x - mean||^2 + const, so the minimiser is the projected mean
    p = scenario.fset.project(csum / n[:, None])
    sq = (scc[ends] - scc[starts - 1]) - 2.0 * np.einsum("ij,ij->i", p, csum) + n * np.einsum("ij,ij->i", p, p)
    return sq + n * scenario.offset


def static_regret(ledger: RegretLedger, scenario) -> float:
    """Regret against the best fixed point of X over all T rounds, by direct evaluation."""
    _check_complete(ledger, scenario)
    c = _quadratic_centers(scenario)
    best = scenario.fset.project(c.mean(axis=0))
    comp = math.fsum(f(best) for f in scenario.losses)
    return math.fsum(ledger.player_loss) - comp


def dyadic_intervals(T: int) -> list[tuple[int, int]]:
    out = []
    length = 1
    while length <= T:
        for start in range(1, T - length + 2, length):
            out.append((start, start + length - 1))
        length *= 2
    return out


def adaptive_regret(ledger: RegretLedger, scenario, intervals="full") -> float:
    """Largest interval static regret over the given intervals.

    ``intervals`` is "full" (every [q, s]; only up to T = 2000), "dyadic"
    (aligned power-of-two blocks, a lower bound on the full value), or an
    explicit iterable of 1-based inclusive (q, s) pairs.
    """
    _check_complete(ledger, scenario)
    T = scenario.T
    player = np.concatenate([[0.0], np.cumsum(ledger.player_loss)])
    if isinstance(intervals, str):
        if intervals == "full":
            if T > EXACT_INTERVAL_LIMIT:
                raise InvalidArgument(f"exact interval search is limited to T <= {EXACT_INTERVAL_LIMIT}")
            best = -math.inf
            ends = np.arange(1, T + 1)
            for q in range(1, T + 1):
                s = ends[q - 1:]
                qs = np.full(len(s), q)
                vals = (player[s] - player[q - 1]) - interval_min_losses(scenario, qs, s)
                best = max(best, float(vals.max()))
            return best
        if intervals == "dyadic":
            intervals = dyadic_intervals(T)
        else:
            raise InvalidArgument(f"unknown interval set {intervals!r}")
    pairs = np.array(list(intervals), dtype=int).reshape(-1, 2)
    if len(pairs) == 0:
        raise InvalidArgument("no intervals given")
    qs, ss = pairs[:, 0], pairs[:, 1]
    if np.any(qs < 1) or np.any(ss > T) or np.any(qs > ss):
        raise InvalidArgument("intervals must satisfy 1 <= q <= s <= T")
    vals = (player[ss] - player[qs - 1]) - interval_min_losses(scenario, qs, ss)
    return float(vals.max())


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgument("log-log fit needs strictly positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def rate_fit(points) -> float:
    """Least-squares slope of log(regret) against log(T)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 4:
        raise InvalidArgument(f"need at least 4 (T, regret) points, got {len(pts)}")
    return loglog_slope(pts[:, 0], pts[:, 1])
