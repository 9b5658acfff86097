"""Spherical gradient estimators and the surrogate losses built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimatorBoundViolation, InvalidArgument
from .oracle import ONE_POINT, TWO_POINT

DYNAMIC = "dynamic-linear"
ADAPTIVE = "adaptive-affine"


@dataclass(frozen=True, eq=False)
class GradientEstimate:
    g: np.ndarray
    direction: np.ndarray
    delta: float
    mode: str
    anchor: np.ndarray | None = None

    @property
    def norm(self) -> float:
        return math.sqrt(float(self.g @ self.g))


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise InvalidArgument(f"delta must be positive, got {delta!r}")


def one_point_estimate(f_val: float, s: np.ndarray, d: int, delta: float,
                       anchor: np.ndarray | None = None) -> GradientEstimate:
    """g = (d / delta) * f(y + delta s) * s"""
    _check_delta(delta)
    return GradientEstimate((d / delta) * f_val * s, s, delta, ONE_POINT, anchor)


def two_point_estimate(f_plus: float, f_minus: float, s: np.ndarray, d: int, delta: float,
                       anchor: np.ndarray | None = None) -> GradientEstimate:
    """g = (d / (2 delta)) * (f(y + delta s) - f(y - delta s)) * s"""
    _check_delta(delta)
    return GradientEstimate((d / (2.0 * delta)) * (f_plus - f_minus) * s, s, delta, TWO_POINT, anchor)


def estimator_bound(mode: str, d: int, C: float, L: float, delta: float) -> float:
    """Almost-sure norm bound of the estimator: dC/delta (one-point) or Ld (two-point)."""
    if mode == ONE_POINT:
        return d * C / delta
    return L * d


@dataclass(frozen=True, eq=False)
class SurrogateLoss:
    """Affine function y -> scale * <g, y - anchor> + offset.

    The dynamic-regret surrogate has scale 1 and offset 0; the
    adaptive-regret one has scale 1/(4GR) and offset 1/2, which maps every
    point within distance 2R of the anchor into [0, 1] when ||g|| <= G.
    """

    kind: str
    grad_estimate: np.ndarray
    anchor: np.ndarray
    scale: float = 1.0
    offset: float = 0.0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.anchor.shape[0]:
            raise InvalidArgument(f"dimension mismatch: {y.shape} vs anchor {self.anchor.shape}")
        val = ((y - self.anchor) @ self.grad_estimate) * self.scale + self.offset
        return float(val) if y.ndim == 1 else val

    evaluate = __call__

    def gradient(self, y=None) -> np.ndarray:
        if self.kind == DYNAMIC:
            return self.grad_estimate
        return self.grad_estimate * self.scale


def make_dynamic_surrogate(g: np.ndarray, anchor: np.ndarray) -> SurrogateLoss:
    g = np.asarray(g, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    if g.shape != anchor.shape:
        raise InvalidArgument(f"dimension mismatch: {g.shape} vs {anchor.shape}")
    return SurrogateLoss(DYNAMIC, g, anchor)


def make_adaptive_surrogate(g: np.ndarray, anchor: np.ndarray, G: float, R: float) -> SurrogateLoss:
    g = np.asarray(g, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    if g.shape != anchor.shape:
        raise InvalidArgument(f"dimension mismatch: {g.shape} vs {anchor.shape}")
    if not (G > 0 and R > 0):
        raise InvalidArgument(f"G and R must be positive, got G={G!r}, R={R!r}")
    gnorm = math.sqrt(float(g @ g))
    if gnorm > G * (1.0 + 1e-12):
        raise EstimatorBoundViolation(f"estimate norm {gnorm:.6g} exceeds the bound G={G:.6g}")
    return SurrogateLoss(ADAPTIVE, g, anchor, 1.0 / (4.0 * G * R), 0.5)
