"""Numerical laboratory for viscous shocks of the stochastic Burgers equation.

The model is ``du = 1/2 (u_xx - (u^2)_x) dt + d(dV/dx)`` on a periodic
interval, driven by spatially smooth, temporally white noise. Two ordered
solutions ``u_B <= u_T`` sharing the noise are glued into a viscous shock
by the logistic shock operator; this package simulates the triple, tracks
the shock, and tests the stationarity of the shock-frame measure.
"""

from .config import Config
from .dynamics import (
    BurgersState,
    CompanionState,
    SchemeConfig,
    TripleRun,
    run_realization,
    step_burgers,
    step_kpz,
    step_she,
    step_z,
)
from .errors import (
    DegenerateEnsembleError,
    GridMismatchError,
    NonFiniteError,
    NotAShockError,
    OutOfRangeError,
    SchemeAbort,
    ShockLabError,
)
from .grid import Field, GridSpec, MonotoneField, l1_distance
from .measures import EnsembleMember, Observable, TiltSpec, shift_sample, stationarity_report, weighted_stats
from .noise import ForcingSampler, Mollifier, ZeroForcing, build_mollifier
from .shock import center_of, gamma_of, shock_profile, tail_integrals, zbar

__version__ = "0.1.0"

__all__ = [
    "BurgersState", "CompanionState", "Config", "DegenerateEnsembleError", "EnsembleMember", "Field",
    "ForcingSampler", "GridMismatchError", "GridSpec", "Mollifier", "MonotoneField", "NonFiniteError",
    "NotAShockError", "Observable", "OutOfRangeError", "SchemeAbort", "SchemeConfig", "ShockLabError",
    "TiltSpec", "TripleRun", "ZeroForcing", "build_mollifier", "center_of", "gamma_of", "l1_distance",
    "run_realization", "shift_sample", "shock_profile", "stationarity_report", "step_burgers", "step_kpz",
    "step_she", "step_z", "tail_integrals", "weighted_stats", "zbar",
]
