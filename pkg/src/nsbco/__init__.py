"""Bandit convex optimization in non-stationary environments."""

from __future__ import annotations

from .bgd import BGD, BgdParams, make_params, regret_bound, tuned_params
from .errors import (
    BcoError,
    BudgetExceeded,
    EstimatorBoundViolation,
    HorizonTooSmall,
    IncompleteLedger,
    InfeasibleQuery,
    InvalidArgument,
    ProtocolViolation,
    UnsupportedScenario,
)
from .estimators import one_point_estimate, two_point_estimate
from .geometry import FeasibleSet
from .mabco import MABCO
from .oracle import ONE_POINT, TWO_POINT, AbsNorm, BanditOracle, Linear, Quadratic
from .pbgd import PBGD, AnytimePBGD
from .regret import RegretLedger, adaptive_regret, dynamic_regret, path_length, rate_fit
from .runner import make_algorithm, run_algorithm, simulate
from .scenarios import Scenario, build_scenario, gen_drift, gen_lowerbound, gen_piecewise

__version__ = "0.1.0"
