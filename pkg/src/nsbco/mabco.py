"""Adaptive-regret BCO with coin-betting sleeping experts.

Experts are OGD instances born every round and kept alive for a dyadic
block of rounds (geometric covering), so at most floor(log2 t) + 1 are
awake at round t. Each expert is weighted by a Krichevsky-Trofimov bettor
on its instantaneous regret against the combined decision. All experts
learn from the same affine surrogate, rescaled into [0, 1], so a round
still costs one (or two) oracle queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bgd import explore
from .errors import HorizonTooSmall, InvalidArgument
from .estimators import SurrogateLoss, estimator_bound, make_adaptive_surrogate
from .geometry import FeasibleSet, sample_unit_sphere
from .oracle import ONE_POINT, BanditOracle, check_mode


def lifetime(q: int) -> int:
    """Last round of an expert born at q = m * 2^k (m odd): q + 2^k - 1."""
    if q < 1:
        raise InvalidArgument(f"birth round must be >= 1, got {q}")
    block = q & -q  # largest power of two dividing q
    return q + block - 1


def prior(q: int) -> float:
    if q < 1:
        raise InvalidArgument(f"birth round must be >= 1, got {q}")
    return 1.0 / (q * q * (1 + (q.bit_length() - 1)))


def instantaneous_regret(w: float, loss_combined: float, loss_expert: float) -> float:
    diff = loss_combined - loss_expert
    if w > 0:
        return diff
    return max(diff, 0.0)


@dataclass
class SleepingExpert:
    birth: int
    end: int
    prior: float
    iterate: np.ndarray
    weight: float = 0.0
    sum_regret: float = 0.0
    sum_weighted_regret: float = 0.0

    @classmethod
    def born(cls, q: int, dim: int) -> "SleepingExpert":
        return cls(q, lifetime(q), prior(q), np.zeros(dim))

    def awake(self, t: int) -> bool:
        return self.birth <= t <= self.end


def betting_update(expert: SleepingExpert, m: float, t: int) -> float:
    """Fold round t's regret into the bettor and return w_{i,t+1}.

    w_{t+1} = (sum m_j) / (t - q + 1) * (1 + sum m_j w_j), sums over j = q..t.
    """
    expert.sum_weighted_regret += m * expert.weight
    expert.sum_regret += m
    expert.weight = expert.sum_regret / (t - expert.birth + 1) * (1.0 + expert.sum_weighted_regret)
    return expert.weight


def combine_probs(experts: list[SleepingExpert]) -> np.ndarray:
    pri = np.array([e.prior for e in experts])
    p_hat = pri * np.maximum([e.weight for e in experts], 0.0)
    total = p_hat.sum()
    if total > 0:
        return p_hat / total
    return pri / pri.sum()


def expert_step_size(t: int, birth: int, R: float) -> float:
    # R / (G_hat sqrt(t - q)) with G_hat = 1/(4R), the surrogate gradient bound
    return 4.0 * R * R / math.sqrt(t - birth)


def expert_ogd_step(expert: SleepingExpert, surrogate: SurrogateLoss | None, t: int,
                    fset: FeasibleSet, alpha: float) -> np.ndarray:
    """Move ``expert`` to its round-t iterate using the previous surrogate."""
    if t == expert.birth or surrogate is None:
        expert.iterate = np.zeros(fset.dim)
        return expert.iterate
    eta = expert_step_size(t, expert.birth, fset.R)
    expert.iterate = fset.project(expert.iterate - eta * surrogate.gradient(), alpha)
    return expert.iterate


def mabco_delta(T: int, fset: FeasibleSet, C: float, L: float, mode: str) -> float:
    """Perturbation radius for a horizon of T rounds.

    One-point uses the bound-optimal value (natural log inside the square
    root); two-point uses T^(-1/2). Raises if delta is not below r.
    """
    check_mode(mode)
    d, R, r = fset.dim, fset.R, fset.r
    if mode == ONE_POINT:
        root_t = math.sqrt(T)
        num = C * d * (15.0 * R * root_t + 8.0 * R * math.sqrt(7.0 * math.log(T) + 5.0) * root_t)
        delta = math.sqrt(num / (3.0 * L * T + L * R * T / r))
    else:
        delta = 1.0 / math.sqrt(T)
    if delta / r >= 1.0:
        raise HorizonTooSmall(f"T={T}: perturbation {delta:.4g} is not below r={r:.4g}")
    return delta


class MABCO:
    def __init__(self, T: int, fset: FeasibleSet, C: float, L: float, mode: str,
                 delta: float | None = None):
        check_mode(mode)
        self.T = T
        self.fset = fset
        self.mode = mode
        self.delta = mabco_delta(T, fset, C, L, mode) if delta is None else delta
        self.alpha = self.delta / fset.r
        if self.alpha >= 1.0:
            raise HorizonTooSmall(f"delta={self.delta:.4g} is not below r={fset.r:.4g}")
        self.G = estimator_bound(mode, fset.dim, C, L, self.delta)
        self.experts = [SleepingExpert.born(1, fset.dim)]
        self.probs = np.ones(1)
        self.t = 0
        self.last_estimate = None
        self.last_surrogate: SurrogateLoss | None = None
        self.last_surrogate_values: np.ndarray | None = None
        self.fallback_rounds = 0

    @property
    def n_experts(self) -> int:
        return len(self.experts)

    def step(self, oracle: BanditOracle, rng: np.random.Generator) -> int:
        t = self.t + 1
        fset = self.fset
        for e in self.experts:
            expert_ogd_step(e, self.last_surrogate, t, fset, self.alpha)
        iterates = np.array([e.iterate for e in self.experts])
        y = self.probs @ iterates
        s = sample_unit_sphere(rng, fset.dim)
        est = explore(oracle, y, self.delta, s)
        surrogate = make_adaptive_surrogate(est.g, y, self.G, fset.R)
        values = surrogate(iterates)
        base = surrogate(y)
        n_awake = len(self.experts)
        for e, v in zip(self.experts, values):
            betting_update(e, instantaneous_regret(e.weight, base, float(v)), t)
        # experts whose block ends at t sleep from t+1 on; the expert born at t+1 joins
        self.experts = [e for e in self.experts if e.end > t]
        self.experts.append(SleepingExpert.born(t + 1, fset.dim))
        self.probs = combine_probs(self.experts)
        if not any(e.weight > 0 for e in self.experts):
            self.fallback_rounds += 1
        self.last_estimate = est
        self.last_surrogate = surrogate
        self.last_surrogate_values = values
        self.t = t
        return n_awake
