"""Feasible sets, Euclidean projection onto shrunk copies, and sphere sampling.

Only origin-centred balls and symmetric boxes are supported. Both contain
the ball of radius ``r`` and sit inside the ball of radius ``R``, and both
have closed-form projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

CONTAINS_TOL = 1e-9
BALL = "ball"
BOX = "box"


@dataclass(frozen=True)
class FeasibleSet:
    kind: str
    dim: int
    size: float  # ball radius, or box half-width

    def __post_init__(self):
        if self.kind not in (BALL, BOX):
            raise InvalidArgument(f"unknown set kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidArgument(f"dimension must be a positive integer, got {self.dim!r}")
        if not self.size > 0:
            raise InvalidArgument(f"set size must be positive, got {self.size!r}")

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "FeasibleSet":
        return cls(BALL, int(dim), float(radius))

    @classmethod
    def box(cls, dim: int, halfwidth: float = 1.0) -> "FeasibleSet":
        return cls(BOX, int(dim), float(halfwidth))

    @property
    def inner_radius(self) -> float:
        return self.size

    @property
    def outer_radius(self) -> float:
        if self.kind == "ball":
            return self.size
        return self.size * math.sqrt(self.dim)

    # short aliases matching the usual notation
    r = inner_radius
    R = outer_radius

    def _check(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.ndim not in (1, 2) or p.shape[-1] != self.dim:
            raise InvalidArgument(f"expected trailing dimension {self.dim}, got shape {p.shape}")
        return p

    def _check_alpha(self, alpha: float) -> float:
        if not 0.0 <= alpha < 1.0:
            raise InvalidArgument(f"shrink factor must lie in [0, 1), got {alpha!r}")
        return float(alpha)

    def project(self, p, alpha: float = 0.0) -> np.ndarray:
        """Nearest point of ``(1 - alpha) * X`` to ``p`` (row-wise for 2-D input)."""
        p = self._check(p)
        scale = (1.0 - self._check_alpha(alpha)) * self.size
        if self.kind == "box":
            return np.clip(p, -scale, scale)
        if p.ndim == 1:
            return self.project(p[None, :], alpha)[0]
        n = _row_norms(p)
        out = p.copy()
        over = n > scale
        if np.any(over):
            out[over] = p[over] * (scale / n[over])[:, None]
            # rescaling can overshoot by an ulp; shrink until a second projection is a no-op
            while True:
                bad = _row_norms(out) > scale
                if not np.any(bad):
                    break
                out[bad] *= np.nextafter(1.0, 0.0)
        return out

    def contains(self, p, alpha: float = 0.0, tol: float = CONTAINS_TOL) -> bool:
        p = self._check(p)
        scale = (1.0 - self._check_alpha(alpha)) * self.size
        if self.kind == "box":
            return bool(np.all(np.abs(p) <= scale + tol))
        return bool(np.all(_row_norms(np.atleast_2d(p)) <= scale + tol))

    def sample(self, rng: np.random.Generator, n: int | None = None, scale: float = 1.0) -> np.ndarray:
        """Uniform draw(s) from ``scale * X``."""
        shape = (1 if n is None else n, self.dim)
        if self.kind == "box":
            out = rng.uniform(-scale * self.size, scale * self.size, size=shape)
        else:
            out = sample_unit_ball(rng, shape[0], self.dim) * (scale * self.size)
        return out[0] if n is None else out


def _row_norms(p: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", p, p))


def sample_unit_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    """A direction drawn uniformly from the unit sphere in R^d."""
    if d < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {d}")
    while True:
        g = rng.standard_normal(d)
        n = math.sqrt(float(g @ g))
        if n > 0.0:
            return g / n


def sample_unit_sphere_many(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if d < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {d}")
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    # measure-zero event, but keep the output on the sphere
    while np.any(norms == 0.0):
        z = norms == 0.0
        g[z] = rng.standard_normal((int(z.sum()), d))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def sample_unit_ball(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    s = sample_unit_sphere_many(rng, n, d)
    radii = rng.uniform(size=n) ** (1.0 / d)
    return s * radii[:, None]
