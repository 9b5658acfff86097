"""Loss families and the query-budgeted bandit oracle.

Algorithms only ever see a :class:`BanditOracle`; the loss objects stay
behind it. The smoothing helpers at the bottom are full-information test
utilities and are not budget-gated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, InfeasibleQuery, InvalidArgument, ProtocolViolation
from .geometry import FeasibleSet, sample_unit_ball

ONE_POINT = "one-point"
TWO_POINT = "two-point"
MODES = (ONE_POINT, TWO_POINT)


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def query_capacity(mode: str) -> int:
    return 1 if check_mode(mode) == ONE_POINT else 2


def _norm(v) -> float:
    return math.sqrt(float(np.dot(v, v)))


@dataclass(frozen=True, eq=False)
class Quadratic:
    """f(x) = ||x - c||^2 + offset"""

    center: np.ndarray
    offset: float = 0.0

    def __call__(self, x):
        diff = np.asarray(x, dtype=float) - self.center
        if diff.ndim == 1:
            return float(diff @ diff) + self.offset
        return np.einsum("...i,...i->...", diff, diff) + self.offset

    def gradient(self, x) -> np.ndarray:
        return 2.0 * (np.asarray(x, dtype=float) - self.center)

    def lipschitz(self, fset: FeasibleSet) -> float:
        return 2.0 * (fset.R + _norm(self.center))

    def bound(self, fset: FeasibleSet) -> float:
        return (fset.R + _norm(self.center)) ** 2 + abs(self.offset)


@dataclass(frozen=True, eq=False)
class Linear:
    """f(x) = a.x + b"""

    slope: np.ndarray
    offset: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(x @ self.slope) + self.offset
        return x @ self.slope + self.offset

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.slope, x.shape).copy()

    def lipschitz(self, fset: FeasibleSet) -> float:
        return _norm(self.slope)

    def bound(self, fset: FeasibleSet) -> float:
        return _norm(self.slope) * fset.R + abs(self.offset)


@dataclass(frozen=True, eq=False)
class AbsNorm:
    """f(x) = L0 * ||x - c||, convex and nonsmooth at c."""

    scale: float
    center: np.ndarray

    def __call__(self, x):
        diff = np.asarray(x, dtype=float) - self.center
        if diff.ndim == 1:
            return self.scale * _norm(diff)
        return self.scale * np.sqrt(np.einsum("...i,...i->...", diff, diff))

    def gradient(self, x) -> np.ndarray:
        diff = np.asarray(x, dtype=float) - self.center
        n = np.linalg.norm(diff, axis=-1, keepdims=True)
        return self.scale * np.divide(diff, n, out=np.zeros_like(diff), where=n > 0)

    def lipschitz(self, fset: FeasibleSet) -> float:
        return self.scale

    def bound(self, fset: FeasibleSet) -> float:
        return self.scale * (fset.R + _norm(self.center))


LossFunction = Quadratic | Linear | AbsNorm


@dataclass
class BanditOracle:
    """Gatekeeper for f_1..f_T that enforces the per-round query budget.

    Rounds must be opened with :meth:`begin_round` in strict order; each
    round allows one query (one-point) or two (two-point). Queries outside
    the feasible set are rejected.
    """

    losses: list
    fset: FeasibleSet
    mode: str
    round: int = 0
    queries_this_round: int = 0
    total_queries: int = 0
    round_points: list = field(default_factory=list)
    round_values: list = field(default_factory=list)
    queries_per_round: list = field(default_factory=list)

    def __post_init__(self):
        self.capacity = query_capacity(self.mode)

    @property
    def horizon(self) -> int:
        return len(self.losses)

    @property
    def remaining(self) -> int:
        return self.capacity - self.queries_this_round

    def begin_round(self, t: int) -> None:
        if t != self.round + 1:
            raise ProtocolViolation(f"round {t} started after round {self.round}")
        if t > self.horizon:
            raise ProtocolViolation(f"round {t} is past the horizon {self.horizon}")
        if self.round > 0:
            self.queries_per_round.append(self.queries_this_round)
        self.round = t
        self.queries_this_round = 0
        self.round_points = []
        self.round_values = []

    def query(self, x) -> float:
        if self.round == 0:
            raise ProtocolViolation("query before the first round was started")
        if self.queries_this_round >= self.capacity:
            raise BudgetExceeded(
                f"round {self.round}: query {self.queries_this_round + 1} exceeds the "
                f"{self.mode} budget of {self.capacity}"
            )
        x = np.asarray(x, dtype=float)
        if not self.fset.contains(x):
            raise InfeasibleQuery(f"round {self.round}: query point {x} lies outside the feasible set")
        value = self.losses[self.round - 1](x)
        self.queries_this_round += 1
        self.total_queries += 1
        self.round_points.append(x.copy())
        self.round_values.append(value)
        return value


# -- full-information smoothing helpers (tests only) --------------------------

def smoothed_value_mc(fn, x, delta: float, rng: np.random.Generator | None = None,
                      n: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo estimate of E_v[f(x + delta v)], v uniform in the unit ball.

    Returns ``(mean, standard_error)``.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    x = np.asarray(x, dtype=float)
    vals = fn(x + delta * sample_unit_ball(rng, n, x.shape[0]))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


def smoothed_value(fn, x, delta: float, rng: np.random.Generator | None = None) -> float:
    """The delta-smoothed loss at ``x``.

    Closed form for quadratics (the ball second moment is d/(d+2)) and
    linear losses; Monte Carlo over 10^6 ball samples otherwise.
    """
    if not delta > 0:
        raise InvalidArgument(f"delta must be positive, got {delta!r}")
    x = np.asarray(x, dtype=float)
    if isinstance(fn, Quadratic):
        d = x.shape[0]
        return fn(x) + delta ** 2 * d / (d + 2)
    if isinstance(fn, Linear):
        return fn(x)
    return smoothed_value_mc(fn, x, delta, rng)[0]


def smoothed_grad(fn, x, delta: float, rng: np.random.Generator | None = None,
                  n: int = 1_000_000, h: float = 1e-5) -> np.ndarray:
    """Gradient of the delta-smoothed loss.

    Exact for quadratics and linear losses. For other families, a central
    finite difference of the Monte Carlo smoothed value using common ball
    samples for every evaluation.
    """
    if not delta > 0:
        raise InvalidArgument(f"delta must be positive, got {delta!r}")
    x = np.asarray(x, dtype=float)
    if isinstance(fn, (Quadratic, Linear)):
        return fn.gradient(x)
    if rng is None:
        rng = np.random.default_rng(0)
    d = x.shape[0]
    pts = x + delta * sample_unit_ball(rng, n, d)
    grad = np.empty(d)
    for i in range(d):
        step = np.zeros(d)
        step[i] = h
        grad[i] = float(np.mean(fn(pts + step) - fn(pts - step))) / (2 * h)
    return grad
