"""Monte Carlo estimators for the size-biased pair measure.

A burned-in pair ``(v_B, v_T)`` is a sample of the stationary pair law.
Reweighting it by ``(v_T - v_B)(b) / B`` with ``B`` the spatial mean gap
gives the tilted law seen from a shock at ``b``. The same law is sampled
directly by cyclically shifting the pair so that a uniformly chosen
level of ``Zbar_b`` lands on ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import DegenerateEnsembleError
from .grid import Field, GridSpec, interpolate_array, invert_increasing
from .shock import logistic_mix, zbar

ERGODIC = "ergodic_constant"
PER_MEMBER = "per_member_spatial_mean"
MIN_ENSEMBLE = 30


def gap_mean(v_B: Field, v_T: Field) -> float:
    """Spatial mean of ``v_T - v_B``; over one period this is the Birkhoff limit.

    Summed exactly (``math.fsum``) so cyclic shifts give bit-identical values.
    """
    return math.fsum(v_T.values - v_B.values) / v_B.grid.n


@dataclass(frozen=True)
class TiltSpec:
    b: float = 0.0
    normalization: str = ERGODIC
    gap: Optional[float] = None  # a_T - a_B, for the ergodic constant

    def __post_init__(self):
        if self.normalization not in (ERGODIC, PER_MEMBER):
            raise ValueError(f"normalization must be {ERGODIC!r} or {PER_MEMBER!r}")
        if self.normalization == ERGODIC and not (self.gap is not None and self.gap > 0):
            raise ValueError("ergodic normalization needs a_T - a_B > 0")


@dataclass(frozen=True, eq=False)
class EnsembleMember:
    """One realization seen from the frame anchored at ``b``.

    ``shock_b`` is where the shock sits in this frame (equal to ``b``
    up to the sub-cell remainder of a nearest-node shift).
    """

    v_B: Field
    v_T: Field
    u: Optional[Field]
    b: float
    seed: int
    weight: float = 1.0
    shock_b: Optional[float] = None
    gamma: float = 0.0

    def __post_init__(self):
        if not self.weight >= 0.0:
            raise ValueError("weight must be non-negative")


@dataclass(frozen=True)
class Observable:
    """Named bounded functional of a member.

    ``informational`` observables are reported but excluded from the pass
    fraction.
    """

    name: str
    fn: Callable[[EnsembleMember], float]
    informational: bool = False

    def __call__(self, member: EnsembleMember) -> float:
        return float(self.fn(member))


def _at(values: np.ndarray, grid: GridSpec, x: float) -> float:
    return float(interpolate_array(values, grid, x))


def tilt_weight(member: EnsembleMember, spec: TiltSpec) -> float:
    """Radon-Nikodym factor ``gap(b) / B``."""
    g = member.v_B.grid
    num = _at(member.v_T.values - member.v_B.values, g, spec.b)
    if not num > 0:
        raise ValueError(f"gap at b={spec.b} is not positive ({num:.3g})")
    den = spec.gap if spec.normalization == ERGODIC else gap_mean(member.v_B, member.v_T)
    return num / den


def gap_at_anchor() -> Observable:
    return Observable("gap_at_anchor", lambda m: _at(m.v_T.values - m.v_B.values, m.v_B.grid, m.b))


def u_at(x: float) -> Observable:
    """Shock profile value at ``b + x``."""
    return Observable(f"u_at({x:+g})", lambda m: _at(m.u.values, m.u.grid, m.b + x))


def mean_profile_at(x: float, width: float = 1.0) -> Observable:
    """Average of ``u`` over ``[b + x - width/2, b + x + width/2]``."""

    def fn(m):
        xs = np.asarray(m.u.grid.x)
        sel = np.abs(xs - (m.b + x)) <= 0.5 * width
        return float(np.mean(m.u.values[sel]))

    return Observable(f"mean_profile_at({x:+g})", fn)


def shock_L1_to_explicit(window: float = 5.0) -> Observable:
    """L1 distance, near the anchor, from ``u`` to the shock operator applied to the pair.

    Informational: it is zero by construction for members built from the
    operator, so a two-sample test against it only measures scheme error.
    """

    def fn(m):
        g = m.v_B.grid
        pos = m.b if m.shock_b is None else m.shock_b
        s = logistic_mix(m.v_B.values, m.v_T.values, zbar(m.v_B, m.v_T, _wrap(pos, g)).values, m.gamma)
        xs = np.asarray(g.x)
        sel = np.abs(xs - m.b) <= window
        return float(g.dx * np.abs(m.u.values[sel] - s[sel]).sum())

    return Observable("shock_L1_to_explicit", fn, informational=True)


def _wrap(x: float, g: GridSpec) -> float:
    return (x + g.half_length) % g.length - g.half_length


def builtin_observables(offsets=(-2.0, -1.0, 0.0, 1.0, 2.0), profile_offsets=(-1.0, 0.0, 1.0)) -> List[Observable]:
    obs = [gap_at_anchor()]
    obs += [u_at(x) for x in offsets]
    obs += [mean_profile_at(x) for x in profile_offsets]
    obs.append(shock_L1_to_explicit())
    return obs


def _sorted(ensemble: Sequence[EnsembleMember]) -> List[EnsembleMember]:
    return sorted(ensemble, key=lambda m: m.seed)


def weighted_stats(ensemble: Sequence[EnsembleMember], observable, spec: Optional[TiltSpec] = None,
                   weights: Optional[np.ndarray] = None):
    """Self-normalised weighted mean with a jackknife standard error.

    Weights come from ``weights`` if given, else from ``spec`` via
    :func:`tilt_weight`, else from each member's stored weight.
    """
    members = _sorted(ensemble)
    if not members:
        raise DegenerateEnsembleError("empty ensemble")
    F = np.array([observable(m) for m in members])
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
    elif spec is not None:
        w = np.array([tilt_weight(m, spec) for m in members])
    else:
        w = np.array([m.weight for m in members])
    return weighted_mean_se(F, w)


def weighted_mean_se(F: np.ndarray, w: np.ndarray):
    F = np.asarray(F, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DegenerateEnsembleError("weights must be finite and non-negative")
    sw = w.sum()
    if sw <= 0:
        raise DegenerateEnsembleError("all weights vanish")
    swf = float(np.dot(w, F))
    est = swf / sw
    M = len(F)
    if M < 2:
        return est, float("nan")
    den = sw - w
    if np.any(den <= 0):
        raise DegenerateEnsembleError("a single member carries all the weight")
    loo = (swf - w * F) / den
    se = float(np.sqrt((M - 1) / M * np.sum((loo - loo.mean()) ** 2)))
    # clear round-off when F is constant
    if np.ptp(F) == 0.0:
        se = 0.0
    return float(est), se


def shift_sample(member: EnsembleMember, b: float, rng: np.random.Generator) -> EnsembleMember:
    """Size-biased resample by a nearest-node cyclic shift.

    A level ``zeta`` is drawn uniformly over one period of ``Zbar_b`` and
    all fields are rotated so the point where ``Zbar_b = zeta`` moves to
    ``b``. The returned member has weight 1.
    """
    g = member.v_B.grid
    z = zbar(member.v_B, member.v_T, b).values
    period = 0.5 * g.dx * float((member.v_T.values - member.v_B.values).sum())
    zeta = rng.uniform(0.0, period)
    # zbar vanishes at b; levels in [0, period) lie in [b, b + 2L)
    level = zeta if zeta <= z[-1] else zeta - period
    if level < z[0]:
        level += period
    if level > z[-1]:
        x_star = g.x[-1] + (level - z[-1]) / (z[0] + period - z[-1]) * g.dx
    else:
        x_star = invert_increasing(z, g, level)
    k = int(np.rint((b - x_star) / g.dx))
    return shift_member(member, k, b)


def shift_member(member: EnsembleMember, k: int, b: Optional[float] = None, shock_b=None) -> EnsembleMember:
    """Rotate every field of ``member`` by ``k`` cells to the right."""
    u = None if member.u is None else Field(member.u.grid, np.roll(member.u.values, k))
    return replace(member, v_B=member.v_B.shifted(k), v_T=member.v_T.shifted(k), u=u,
                   b=member.b if b is None else b, weight=1.0,
                   shock_b=shock_b)


def two_sample_z(est0, se0, est1, se1) -> float:
    den = float(np.hypot(se0, se1))
    diff = est0 - est1
    if den == 0.0:
        return 0.0 if diff == 0.0 else float(np.copysign(np.inf, diff))
    return float(diff / den)


def stationarity_report(ensemble_t0, ensemble_t1, observables, z_crit: float = 3.0,
                        weights_t0=None, weights_t1=None) -> dict:
    """Two-sample z-scores of weighted means, one record per observable.

    Members' stored weights are used unless explicit weight arrays are
    given (in seed order). Both ensembles need at least 30 members.
    """
    for ens in (ensemble_t0, ensemble_t1):
        if len(ens) < MIN_ENSEMBLE:
            raise DegenerateEnsembleError(f"ensemble of {len(ens)} members is below {MIN_ENSEMBLE}")
    records = []
    for obs in observables:
        e0, s0 = weighted_stats(ensemble_t0, obs, weights=weights_t0)
        e1, s1 = weighted_stats(ensemble_t1, obs, weights=weights_t1)
        z = two_sample_z(e0, s0, e1, s1)
        rec = {"name": obs.name, "est_t0": e0, "se_t0": s0, "est_t1": e1, "se_t1": s1,
               "z": z, "pass": bool(abs(z) <= z_crit)}
        if obs.informational:
            rec["informational"] = True
        records.append(rec)
    graded = [r for r in records if not r.get("informational")]
    frac = sum(r["pass"] for r in graded) / len(graded) if graded else 1.0
    return {"records": records, "pass_fraction": frac, "z_crit": z_crit}
