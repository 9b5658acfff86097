"""Bandit gradient descent for one- and two-point feedback.

Also holds the projected OGD step every expert in the package reuses, and
the oracle-tuned parameter settings that need the true path-length. Those
tuned settings are baselines only; the parameter-free algorithms never
call them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooSmall, InvalidArgument
from .estimators import GradientEstimate, one_point_estimate, two_point_estimate
from .geometry import FeasibleSet, sample_unit_sphere
from .oracle import ONE_POINT, BanditOracle, check_mode


@dataclass(frozen=True)
class BgdParams:
    delta: float
    alpha: float
    eta: float
    mode: str

    def __post_init__(self):
        check_mode(self.mode)
        if not self.delta > 0:
            raise InvalidArgument(f"delta must be positive, got {self.delta!r}")
        if not self.eta > 0:
            raise InvalidArgument(f"eta must be positive, got {self.eta!r}")
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidArgument(f"alpha must lie in [0, 1), got {self.alpha!r}")

    def check_feasible(self, fset: FeasibleSet) -> None:
        # perturbed points stay inside X only when delta <= alpha * r
        if self.delta > self.alpha * fset.r * (1.0 + 1e-12):
            raise InvalidArgument(
                f"delta={self.delta:.6g} exceeds alpha*r={self.alpha * fset.r:.6g}; "
                "perturbed queries could leave the feasible set"
            )


def make_params(fset: FeasibleSet, delta: float, eta: float, mode: str,
                alpha: float | None = None) -> BgdParams:
    """Build parameters with alpha = delta / r unless given explicitly."""
    if alpha is None:
        alpha = delta / fset.r
        if alpha >= 1.0:
            raise HorizonTooSmall(f"delta={delta:.6g} is not below r={fset.r:.6g}")
    params = BgdParams(float(delta), float(alpha), float(eta), mode)
    params.check_feasible(fset)
    return params


def ogd_step(y: np.ndarray, g: np.ndarray, eta, fset: FeasibleSet, alpha: float) -> np.ndarray:
    """Proj_{(1-alpha)X}[y - eta g]. ``y`` may hold one iterate per row."""
    if np.shape(g) != (fset.dim,):
        raise InvalidArgument(f"gradient shape {np.shape(g)} does not match dimension {fset.dim}")
    if np.ndim(eta) == 1:
        eta = np.asarray(eta)[:, None]
    return fset.project(y - eta * g, alpha)


def explore(oracle: BanditOracle, y: np.ndarray, delta: float, s: np.ndarray) -> GradientEstimate:
    """Query the oracle around ``y`` along ``s`` and build the matching estimator."""
    d = y.shape[0]
    if oracle.mode == ONE_POINT:
        f_val = oracle.query(y + delta * s)
        return one_point_estimate(f_val, s, d, delta, y)
    f_plus = oracle.query(y + delta * s)
    f_minus = oracle.query(y - delta * s)
    return two_point_estimate(f_plus, f_minus, s, d, delta, y)


class BGD:
    """Projected bandit gradient descent started from y_1 = 0."""

    def __init__(self, fset: FeasibleSet, params: BgdParams):
        params.check_feasible(fset)
        self.fset = fset
        self.params = params
        self.mode = params.mode
        self.y = np.zeros(fset.dim)
        self.t = 0
        self.last_estimate: GradientEstimate | None = None

    def step(self, oracle: BanditOracle, rng: np.random.Generator) -> int:
        p = self.params
        s = sample_unit_sphere(rng, self.fset.dim)
        est = explore(oracle, self.y, p.delta, s)
        self.y = ogd_step(self.y, est.g, p.eta, self.fset, p.alpha)
        self.last_estimate = est
        self.t += 1
        return 1


def _check_path_length(T: int, fset: FeasibleSet, path_length: float) -> None:
    if not 0.0 <= path_length <= 2.0 * fset.R * T * (1 + 1e-12):
        raise InvalidArgument(f"path-length {path_length!r} outside [0, 2RT]")


def tuned_params(T: int, fset: FeasibleSet, C: float, L: float, mode: str,
                 path_length: float) -> BgdParams:
    """Regret-bound-optimal (delta, eta) given the true path-length.

    One-point:
        delta = (A/T)^(1/4) 2^(-1/4) (dC/E)^(1/2)
        eta   = (A/T)^(3/4) 2^(-3/4) (dC E)^(-1/2)
    two-point:
        delta = T^(-1/2),  eta = sqrt(A / (2 L^2 d^2 T))
    with A = 7R^2 + R P_T and E = 3L + LR/r; alpha = delta / r.
    """
    check_mode(mode)
    _check_path_length(T, fset, path_length)
    d, R, r = fset.dim, fset.R, fset.r
    A = 7.0 * R * R + R * path_length
    if mode == ONE_POINT:
        E = 3.0 * L + L * R / r
        delta = (A / T) ** 0.25 * 2.0 ** -0.25 * math.sqrt(d * C / E)
        eta = (A / T) ** 0.75 * 2.0 ** -0.75 / math.sqrt(d * C * E)
    else:
        delta = 1.0 / math.sqrt(T)
        eta = math.sqrt(A / (2.0 * L * L * d * d * T))
    return make_params(fset, delta, eta, mode)


def regret_bound(params: BgdParams, T: int, fset: FeasibleSet, C: float, L: float,
                 path_length: float) -> float:
    """Right-hand side of the expected dynamic-regret bound for BGD."""
    d, R, r = fset.dim, fset.R, fset.r
    drift = (7.0 * R * R + R * path_length) / (4.0 * params.eta)
    if params.mode == ONE_POINT:
        variance = params.eta * d * d * C * C * T / (2.0 * params.delta ** 2)
    else:
        variance = params.eta * L * L * d * d * T / 2.0
    bias = (3.0 * L + L * R / r) * params.delta * T
    return drift + variance + bias
