"""Non-stationary quadratic scenarios and the flat key-value scenario file.

Every scenario uses losses f_t(x) = ||x - c_t||^2. Loss centers and
comparators live in (1/2)X so that perturbed queries from any iterate in
(1 - alpha)X with delta <= r/2 are never the cause of a feasibility error.

An optional ``noise`` level sigma shifts each round's loss center by
sigma * s_t (s_t uniform on the sphere) while the comparator stays at the
unshifted center. The comparator then is no longer each round's exact
minimiser, which gives the two-point estimator a nonzero noise floor.
A constant ``offset`` b (losses ||x - c_t||^2 + b) leaves every regret
unchanged but keeps loss values away from zero, which is what drives the
variance of the one-point estimator.

Seed derivation: the scenario with seed k draws its centers from
SeedSequence([k, 0, 0]) and its noise from SeedSequence([k, 0, 1]); the
player's sphere directions use SeedSequence([k, 1]) (see ``sphere_rng``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .geometry import BALL, BOX, FeasibleSet, sample_unit_sphere, sample_unit_sphere_many
from .oracle import Quadratic
from .regret import path_length, write_atomic

KINDS = ("drift", "piecewise", "lowerbound")
PATH_TOL = 1e-9


def scenario_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0, stream]))


def sphere_rng(seed: int) -> np.random.Generator:
    """Generator for the player's exploration directions."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), 1]))


@dataclass(frozen=True, eq=False)
class Scenario:
    kind: str
    fset: FeasibleSet
    centers: np.ndarray  # (T, d) loss centers
    comparators: np.ndarray  # (T, d)
    path_length: float
    C: float
    L: float
    seed: int | None = None
    params: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.centers.shape != self.comparators.shape:
            raise InvalidArgument("centers and comparators must have the same shape")
        if self.centers.ndim != 2 or self.centers.shape[1] != self.fset.dim:
            raise InvalidArgument(f"centers must be (T, {self.fset.dim}), got {self.centers.shape}")

    @property
    def T(self) -> int:
        return len(self.centers)

    @property
    def d(self) -> int:
        return self.fset.dim

    @cached_property
    def losses(self) -> list[Quadratic]:
        return [Quadratic(c, self.offset) for c in self.centers]

    def comparator_losses(self) -> np.ndarray:
        diff = self.comparators - self.centers
        return np.einsum("ij,ij->i", diff, diff) + self.offset


def _constants(fset: FeasibleSet, centers: np.ndarray, offset: float) -> tuple[float, float]:
    # bounds over X: value <= (R + |c|)^2 + offset, Lipschitz <= 2(R + |c|)
    worst = fset.R + float(np.max(np.linalg.norm(centers, axis=1)))
    return worst * worst + offset, 2.0 * worst


def _add_noise(base: np.ndarray, noise: float, seed: int) -> np.ndarray:
    if noise < 0:
        raise InvalidArgument(f"noise must be >= 0, got {noise!r}")
    if noise == 0:
        return base.copy()
    rng = scenario_rng(seed, 1)
    return base + noise * sample_unit_sphere_many(rng, len(base), base.shape[1])


def _build(kind: str, fset: FeasibleSet, comparators: np.ndarray, noise: float, offset: float,
           seed: int, params: dict) -> Scenario:
    if offset < 0:
        raise InvalidArgument(f"offset must be >= 0, got {offset!r}")
    centers = _add_noise(comparators, noise, seed)
    C, L = _constants(fset, centers, offset)
    params = dict(params, noise=noise, offset=offset)
    return Scenario(kind, fset, centers, comparators, path_length(comparators), C, L, seed, params,
                    float(offset))


def _check_T(T: int) -> None:
    if int(T) != T or T < 1:
        raise InvalidArgument(f"T must be a positive integer, got {T!r}")


def gen_drift(T: int, fset: FeasibleSet, rate: float, seed: int, noise: float = 0.0,
              offset: float = 0.0) -> Scenario:
    """Centers follow a random walk of step ``rate`` projected onto (1/2)X."""
    _check_T(T)
    if rate < 0:
        raise InvalidArgument(f"rate must be >= 0, got {rate!r}")
    rng = scenario_rng(seed, 0)
    c = np.empty((T, fset.dim))
    c[0] = fset.sample(rng, scale=0.5)
    for t in range(1, T):
        step = rate * sample_unit_sphere(rng, fset.dim)
        c[t] = fset.project(c[t - 1] + step, 0.5)
    return _build("drift", fset, c, noise, offset, seed, {"rate": rate})


def _blocks(T: int, K: int) -> np.ndarray:
    """Block index of each round for K (nearly) equal blocks."""
    return (np.arange(T) * K) // T


def gen_piecewise(T: int, fset: FeasibleSet, pieces: int, seed: int, noise: float = 0.0,
                  offset: float = 0.0, centers=None) -> Scenario:
    """K equal blocks, each with its own center drawn uniformly in (1/2)X.

    All K centers are drawn before anything else, so for a given seed the
    path-length does not depend on T. ``centers`` overrides the draw.
    """
    _check_T(T)
    if not 1 <= pieces <= T:
        raise InvalidArgument(f"pieces must satisfy 1 <= K <= T, got K={pieces}, T={T}")
    if centers is None:
        rng = scenario_rng(seed, 0)
        centers = fset.sample(rng, pieces, scale=0.5)
    else:
        centers = np.asarray(centers, dtype=float).reshape(pieces, fset.dim)
        if not all(fset.contains(c) for c in centers):
            raise InvalidArgument("piece centers must lie in X")
    return _build("piecewise", fset, centers[_blocks(T, pieces)], noise, offset, seed,
                  {"pieces": pieces})


def _jump_from(c: np.ndarray, length: float, fset: FeasibleSet, rng: np.random.Generator,
               tries: int = 1000) -> np.ndarray:
    for _ in range(tries):
        cand = c + length * sample_unit_sphere(rng, fset.dim)
        if fset.contains(cand, 0.5, tol=0.0):
            return cand
    # heading straight for the origin always stays inside when length <= r/2
    norm = float(np.linalg.norm(c))
    u = -c / norm if norm > 0 else np.eye(fset.dim)[0]
    return c + length * u


def gen_lowerbound(T: int, fset: FeasibleSet, path_length_target: float, seed: int,
                   jump: float | None = None, noise: float = 0.0,
                   offset: float = 0.0) -> Scenario:
    """Piecewise-stationary comparators with a prescribed total path-length.

    The horizon is cut into K equal blocks with K - 1 = ceil(tau / jump),
    and every change point moves the center by exactly tau / (K - 1). The
    jump is capped at r/2 (hence also at 2R), so a random direction that
    keeps the center in (1/2)X always exists.
    """
    _check_T(T)
    tau = float(path_length_target)
    if tau < 0:
        raise InvalidArgument(f"path-length must be >= 0, got {tau!r}")
    cap = fset.r / 2.0
    jump = cap if jump is None else float(jump)
    if not 0 < jump <= cap * (1 + 1e-12):
        raise InvalidArgument(f"jump must lie in (0, r/2 = {cap:.6g}], got {jump!r}")
    n_jumps = math.ceil(tau / jump - 1e-12) if tau > 0 else 0
    K = n_jumps + 1
    if K > T:
        raise InvalidArgument(f"path-length {tau} needs {K} blocks, more than T={T}")
    rng = scenario_rng(seed, 0)
    pts = np.empty((K, fset.dim))
    pts[0] = fset.sample(rng, scale=0.5)
    each = tau / n_jumps if n_jumps else 0.0
    for k in range(1, K):
        pts[k] = _jump_from(pts[k - 1], each, fset, rng)
    sc = _build("lowerbound", fset, pts[_blocks(T, K)], noise, offset, seed,
                {"path_length": tau, "jump": jump})
    if abs(sc.path_length - tau) > 1e-9 * max(1.0, tau):
        raise AssertionError(f"path-length {sc.path_length} drifted from target {tau}")
    return sc


# -- scenario files ---------------------------------------------------------

INT_KEYS = {"T", "d", "pieces", "seed"}
FLOAT_KEYS = {"set.R", "set.b", "rate", "path_length", "jump", "noise", "offset"}
STR_KEYS = {"kind", "set.kind"}


def parse_scenario_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in cfg:
            raise InvalidArgument(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in INT_KEYS:
                cfg[key] = int(value)
            elif key in FLOAT_KEYS:
                cfg[key] = float(value)
            elif key in STR_KEYS:
                cfg[key] = value
            else:
                raise InvalidArgument(f"line {lineno}: unknown key {key!r}")
        except ValueError:
            raise InvalidArgument(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    return cfg


def read_scenario_file(path) -> dict:
    return parse_scenario_text(Path(path).read_text())


def format_scenario(cfg: dict) -> str:
    order = ["kind", "T", "d", "set.kind", "set.R", "set.b", "rate", "pieces", "path_length",
             "jump", "noise", "offset", "seed"]
    lines = [f"{k} = {cfg[k]!r}" if isinstance(cfg[k], float) else f"{k} = {cfg[k]}"
             for k in order if k in cfg]
    return "\n".join(lines) + "\n"


def write_scenario_file(cfg: dict, path) -> None:
    parse_scenario_text(format_scenario(cfg))  # refuse to write what cannot be read back
    write_atomic(path, format_scenario(cfg))


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise InvalidArgument(f"scenario is missing {key!r}")
    return cfg[key]


def feasible_set_from_config(cfg: dict) -> FeasibleSet:
    d = _require(cfg, "d")
    kind = _require(cfg, "set.kind")
    if kind == BALL:
        return FeasibleSet.ball(d, _require(cfg, "set.R"))
    if kind == BOX:
        return FeasibleSet.box(d, _require(cfg, "set.b"))
    raise InvalidArgument(f"set.kind must be {BALL!r} or {BOX!r}, got {kind!r}")


def build_scenario(cfg: dict, T: int | None = None, seed: int | None = None) -> Scenario:
    """Regenerate a scenario from its config; ``T``/``seed`` override the file."""
    kind = _require(cfg, "kind")
    T = _require(cfg, "T") if T is None else T
    seed = cfg.get("seed", 0) if seed is None else seed
    fset = feasible_set_from_config(cfg)
    noise = cfg.get("noise", 0.0)
    offset = cfg.get("offset", 0.0)
    if kind == "drift":
        return gen_drift(T, fset, _require(cfg, "rate"), seed, noise, offset)
    if kind == "piecewise":
        return gen_piecewise(T, fset, _require(cfg, "pieces"), seed, noise, offset)
    if kind == "lowerbound":
        return gen_lowerbound(T, fset, _require(cfg, "path_length"), seed, cfg.get("jump"), noise,
                              offset)
    raise InvalidArgument(f"kind must be one of {KINDS}, got {kind!r}")
