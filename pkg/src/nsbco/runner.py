"""Drive an algorithm through a scenario and record the ledger."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .bgd import BGD, make_params, tuned_params
from .errors import InvalidArgument
from .mabco import MABCO
from .oracle import BanditOracle, check_mode
from .pbgd import PBGD, AnytimePBGD
from .regret import RegretLedger
from .scenarios import Scenario, sphere_rng

ALGORITHMS = ("bgd", "bgd-tuned", "pbgd", "pbgd-anytime", "mabco")


def make_algorithm(name: str, scenario: Scenario, mode: str, eta: float | None = None,
                   delta: float | None = None):
    """Instantiate ``name`` for ``scenario``.

    ``bgd`` is plain BGD tuned as if the environment were stationary
    (P_T = 0) unless ``eta``/``delta`` are given; ``bgd-tuned`` receives the
    scenario's true path-length. The other three never see P_T.
    """
    check_mode(mode)
    fset, T, C, L = scenario.fset, scenario.T, scenario.C, scenario.L
    if name in ("bgd", "bgd-tuned"):
        P = scenario.path_length if name == "bgd-tuned" else 0.0
        base = tuned_params(T, fset, C, L, mode, P)
        if eta is not None or delta is not None:
            base = make_params(fset, base.delta if delta is None else delta,
                               base.eta if eta is None else eta, mode)
        return BGD(fset, base)
    if eta is not None or delta is not None:
        raise InvalidArgument(f"{name} takes no step-size overrides")
    if name == "pbgd":
        return PBGD(T, fset, C, L, mode)
    if name == "pbgd-anytime":
        return AnytimePBGD(fset, C, L, mode)
    if name == "mabco":
        return MABCO(T, fset, C, L, mode)
    raise InvalidArgument(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")


def run_algorithm(algo, scenario: Scenario, mode: str, rng: np.random.Generator,
                  rounds: int | None = None,
                  on_round: Callable[[int, object, BanditOracle], None] | None = None) -> RegretLedger:
    """Play ``rounds`` (default T) rounds; ``on_round`` sees every finished round."""
    oracle = BanditOracle(scenario.losses, scenario.fset, mode)
    comp = scenario.comparator_losses()
    ledger = RegretLedger()
    rounds = scenario.T if rounds is None else rounds
    for t in range(1, rounds + 1):
        oracle.begin_round(t)
        n = algo.step(oracle, rng)
        ledger.append(t, oracle.round_points, oracle.round_values, comp[t - 1],
                      oracle.total_queries, n)
        if on_round is not None:
            on_round(t, algo, oracle)
    return ledger


def simulate(name: str, scenario: Scenario, mode: str, seed: int, on_round=None,
             **overrides) -> RegretLedger:
    algo = make_algorithm(name, scenario, mode, **overrides)
    return run_algorithm(algo, scenario, mode, sphere_rng(seed), on_round=on_round)


def anytime_run(scenario: Scenario, mode: str, rng: np.random.Generator,
                rounds: int | None = None) -> tuple[RegretLedger, AnytimePBGD]:
    """Run the doubling-trick PBGD; it is never told how many rounds remain."""
    algo = AnytimePBGD(scenario.fset, scenario.C, scenario.L, mode)
    return run_algorithm(algo, scenario, mode, rng, rounds), algo
