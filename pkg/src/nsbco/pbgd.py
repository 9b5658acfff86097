"""Parameter-free bandit gradient descent.

A pool of OGD experts with geometrically spaced step sizes runs on the
linear surrogate built from a single shared gradient estimate, so the whole
ensemble costs one (or two) oracle queries per round. An exponentially
weighted forecaster with a non-uniform prior mixes the experts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bgd import explore, ogd_step
from .errors import HorizonTooSmall, InvalidArgument
from .estimators import estimator_bound
from .geometry import FeasibleSet, sample_unit_sphere
from .oracle import ONE_POINT, BanditOracle, check_mode


@dataclass(frozen=True, eq=False)
class StepSizePool:
    etas: np.ndarray
    mode: str

    @property
    def N(self) -> int:
        return len(self.etas)


def pool_size(T: int) -> int:
    return math.ceil(0.5 * math.log2(1.0 + 2.0 * T / 7.0)) + 1


def _base_eta(T: int, fset: FeasibleSet, C: float, L: float, mode: str) -> float:
    d, R = fset.dim, fset.R
    if mode == ONE_POINT:
        return math.sqrt(7.0) * R / (d * C * T ** 0.75)
    return math.sqrt(7.0 * R * R / (2.0 * L * L * d * d * T))


def build_pool(T: int, fset: FeasibleSet, C: float, L: float, mode: str) -> StepSizePool:
    check_mode(mode)
    if T < 1:
        raise InvalidArgument(f"horizon must be >= 1, got {T}")
    eta1 = _base_eta(T, fset, C, L, mode)
    etas = eta1 * 2.0 ** np.arange(pool_size(T))
    return StepSizePool(etas, mode)


def pool_target_eta(T: int, fset: FeasibleSet, C: float, L: float, mode: str,
                    path_length: float) -> float:
    """The step size the pool is built to bracket, for a given path-length."""
    R = fset.R
    return _base_eta(T, fset, C, L, mode) * math.sqrt(1.0 + path_length / (7.0 * R))


def init_weights(N: int) -> np.ndarray:
    """Prior w_i = (N+1)/N * 1/(i(i+1)); the terms telescope to exactly one."""
    if N < 1:
        raise InvalidArgument(f"N must be >= 1, got {N}")
    i = np.arange(1, N + 1, dtype=float)
    return (N + 1) / N / (i * (i + 1))


def default_epsilon(T: int, G: float, R: float) -> float:
    return 1.0 / math.sqrt(2.0 * T * G * G * R * R)


def perturbation(T: int, mode: str) -> float:
    return T ** -0.25 if mode == ONE_POINT else T ** -0.5


def hedge_update(log_w: np.ndarray, losses: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Multiplicative-weights step in log space.

    Returns ``(log_weights, weights)`` with the log weights renormalised so
    that they stay bounded over long horizons.
    """
    z = log_w - eps * losses
    z = z - z.max()
    w = np.exp(z)
    total = w.sum()
    return z - math.log(total), w / total


class PBGD:
    """Fixed-horizon parameter-free BGD."""

    def __init__(self, T: int, fset: FeasibleSet, C: float, L: float, mode: str,
                 epsilon: float | None = None):
        check_mode(mode)
        self.T = T
        self.fset = fset
        self.mode = mode
        self.pool = build_pool(T, fset, C, L, mode)
        self.delta = perturbation(T, mode)
        self.alpha = self.delta / fset.r
        if self.alpha >= 1.0:
            raise HorizonTooSmall(
                f"T={T}: perturbation {self.delta:.4g} is not below the inner radius {fset.r:.4g}"
            )
        self.G = estimator_bound(mode, fset.dim, C, L, self.delta)
        self.epsilon = default_epsilon(T, self.G, fset.R) if epsilon is None else epsilon
        self.weights = init_weights(self.pool.N)
        self.log_w = np.log(self.weights)
        self.iterates = np.zeros((self.pool.N, fset.dim))
        self.t = 0
        self.last_estimate = None
        self.last_surrogate_values = None

    @property
    def n_experts(self) -> int:
        return self.pool.N

    def combined(self) -> np.ndarray:
        return self.weights @ self.iterates

    def step(self, oracle: BanditOracle, rng: np.random.Generator) -> int:
        y = self.combined()
        s = sample_unit_sphere(rng, self.fset.dim)
        est = explore(oracle, y, self.delta, s)
        # surrogate <g, y_i - y> at every expert iterate, before the experts move
        surrogate = (self.iterates - y) @ est.g
        self.log_w, self.weights = hedge_update(self.log_w, surrogate, self.epsilon)
        self.iterates = ogd_step(self.iterates, est.g, self.pool.etas, self.fset, self.alpha)
        self.last_estimate = est
        self.last_surrogate_values = surrogate
        self.t += 1
        return self.pool.N


def epoch_schedule(T: int) -> list[tuple[int, int]]:
    """(start round, length) of each doubling epoch touched within T rounds.

    Epoch i nominally lasts 2^i rounds (i = 1, 2, ...); the last one is
    truncated at T.
    """
    out = []
    start, i = 1, 1
    while start <= T:
        length = 2 ** i
        out.append((start, min(length, T - start + 1)))
        start += length
        i += 1
    return out


class AnytimePBGD:
    """Doubling-trick wrapper: restart a fresh PBGD(T=2^i) at each epoch."""

    def __init__(self, fset: FeasibleSet, C: float, L: float, mode: str):
        check_mode(mode)
        self.fset, self.C, self.L, self.mode = fset, C, L, mode
        self.t = 0
        self.epoch = 0
        self.next_restart = 1
        self.restarts: list[int] = []
        self.inner: PBGD | None = None

    @property
    def last_estimate(self):
        return None if self.inner is None else self.inner.last_estimate

    def step(self, oracle: BanditOracle, rng: np.random.Generator) -> int:
        t = self.t + 1
        if t == self.next_restart:
            self.epoch += 1
            length = 2 ** self.epoch
            self.inner = PBGD(length, self.fset, self.C, self.L, self.mode)
            self.restarts.append(t)
            self.next_restart = t + length
        n = self.inner.step(oracle, rng)
        self.t = t
        return n
