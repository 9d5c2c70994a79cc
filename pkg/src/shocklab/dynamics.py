"""Time integration of the coupled Burgers system and its companions.

All fields of one realization receive the same forcing increment each
step. The Burgers update is conservative,

    u_j <- u_j - dt/dx (F_{j+1/2} - F_{j-1/2}) + dt/(2 dx^2) (u_{j+1} - 2u_j + u_{j-1}) + dVx_j,

with a numerical flux ``F`` for ``u^2/2``. The companions are the KPZ
heights ``h`` (``u = h_x``), the heat-equation fields ``phi = exp(-h)``
and the half height difference ``Z`` whose level sets locate the shock.

Periodic runs wrap indices. Heights are quasi-periodic: ``h`` gains the
conserved mass ``P = int u`` over one period, so its ghost values are
``h_{-1} = h_{n-1} - P`` and ``h_n = h_0 + P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .errors import GridMismatchError, SchemeAbort
from .grid import Field, GridSpec, MonotoneField, cumulative_from, invert_increasing
from .shock import logistic_mix, zbar

FLUXES = tuple(kernels.FLUX_CODES)
DIFFUSIONS = ("explicit", "imex")
ODE, LEVELSET, WEAKFORM = "ode", "levelset", "weakform"
TRACKERS = (ODE, LEVELSET, WEAKFORM)


@dataclass(frozen=True)
class SchemeConfig:
    """Discretisation choices.

    ``central`` is second order and monotone while ``max|u| dx <= 1`` and
    ``dt <= dx^2``. ``engquist_osher`` and ``lax_friedrichs`` are monotone
    for any ``|u|`` under ``dt (max|u|/dx + 1/dx^2) <= 1`` but only first
    order. ``imex`` treats diffusion implicitly; it is faster but leaves
    the certified-monotone regime.
    """

    flux: str = "central"
    diffusion: str = "explicit"
    cfl: float = 0.9
    dt_max: Optional[float] = None
    z_advection: str = "central"
    gap_floor: float = 1e-8

    def __post_init__(self):
        if self.flux not in FLUXES:
            raise ValueError(f"flux must be one of {FLUXES}")
        if self.diffusion not in DIFFUSIONS:
            raise ValueError(f"diffusion must be one of {DIFFUSIONS}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.z_advection not in ("central", "upwind"):
            raise ValueError("z_advection must be central or upwind")

    @property
    def flux_code(self) -> int:
        return kernels.FLUX_CODES[self.flux]

    @property
    def monotone(self) -> bool:
        return self.diffusion == "explicit"

    @classmethod
    def from_config(cls, config) -> "SchemeConfig":
        return cls(
            flux=config["scheme.flux"],
            diffusion=config["scheme.diffusion"],
            cfl=float(config["scheme.cfl"]),
            dt_max=config["scheme.dt_max"],
            z_advection=config["scheme.z_advection"],
            gap_floor=float(config["scheme.gap_floor"]),
        )


def max_dt(cfg: SchemeConfig, dx: float, umax: float) -> float:
    """Largest step allowed by ``cfg`` for fields bounded by ``umax``."""
    umax = max(float(umax), 1e-300)
    if cfg.diffusion == "imex":
        dt = dx / umax
    elif cfg.flux == "central":
        dt = dx * dx
    else:
        dt = 1.0 / (umax / dx + 1.0 / (dx * dx))
    dt *= cfg.cfl
    if cfg.dt_max is not None:
        dt = min(dt, float(cfg.dt_max))
    return dt


def check_step(cfg: SchemeConfig, dt: float, dx: float, umax: float, t=None):
    """Reject a step outside the stability region before taking it."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    bound = max_dt(replace(cfg, cfl=1.0, dt_max=None), dx, umax)
    if dt > bound * (1.0 + 1e-12):
        raise SchemeAbort(f"CFL violation: dt={dt:.4g} exceeds {bound:.4g}", t=t)
    if cfg.flux == "central" and umax * dx > 1.0:
        raise SchemeAbort(
            f"cell Peclet number max|u|*dx={umax * dx:.3g} > 1; central flux no longer monotone", t=t
        )


def _implicit_diffusion(rhs: np.ndarray, mu: float, periodic: bool, gl, gr) -> np.ndarray:
    # solve (1 - mu * Laplacian) u = rhs row by row
    nf, n = rhs.shape
    if periodic:
        k = np.arange(n // 2 + 1)
        symbol = 1.0 + mu * (2.0 - 2.0 * np.cos(2.0 * np.pi * k / n))
        return np.fft.irfft(np.fft.rfft(rhs, axis=1) / symbol, n=n, axis=1)
    ab = np.empty((3, n))
    ab[0] = -mu
    ab[1] = 1.0 + 2.0 * mu
    ab[2] = -mu
    b = rhs.T.copy()
    b[0] += mu * gl
    b[-1] += mu * gr
    return solve_banded((1, 1), ab, b).T


def burgers_arrays(U, dvx, dt, dx, cfg: SchemeConfig, periodic=True, gl=None, gr=None) -> np.ndarray:
    """One step for the rows of ``U``; returns a new array."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    if periodic:
        gl, gr = U[:, -1].copy(), U[:, 0].copy()
    gl = np.ascontiguousarray(gl, dtype=np.float64)
    gr = np.ascontiguousarray(gr, dtype=np.float64)
    out = np.empty_like(U)
    explicit = cfg.diffusion == "explicit"
    kernels.burgers_step(U, out, np.ascontiguousarray(dvx), dt, dx, cfg.flux_code, gl, gr, explicit)
    if not explicit:
        out = _implicit_diffusion(out, 0.5 * dt / (dx * dx), periodic, gl, gr)
    return out


def _incr_arrays(incr):
    if hasattr(incr, "dVx"):
        return incr.dV.values, incr.dVx.values, incr.dt
    return incr


def _same_nodes(a: GridSpec, b: GridSpec):
    if a.n != b.n or a.half_length != b.half_length:
        raise GridMismatchError(f"forcing grid {b} does not match state grid {a}")


@dataclass(frozen=True, eq=False)
class BurgersState:
    """``N`` Burgers fields sharing one grid, optionally with a designated (B, T) pair."""

    grid: GridSpec
    t: float
    fields: Tuple[Field, ...]
    pair: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        for f in self.fields:
            if f.grid != self.grid:
                raise GridMismatchError("all fields must share the state grid")
        if self.pair is not None:
            iB, iT = self.pair
            if np.any(self.fields[iT].values <= self.fields[iB].values):
                raise ValueError("designated pair is not ordered (need u_B < u_T)")

    @property
    def array(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields])

    @property
    def min_gap(self) -> Optional[float]:
        if self.pair is None:
            return None
        iB, iT = self.pair
        return float(np.min(self.fields[iT].values - self.fields[iB].values))


def step_burgers(state: BurgersState, incr, cfg: SchemeConfig, ghosts=None) -> BurgersState:
    """Advance every field by one step with the shared increment ``incr``.

    On a clamped grid ``ghosts = (left, right)`` gives per-field values
    at ``x_{-1}`` and ``x_n``; without them the end values are repeated.
    """
    if hasattr(incr, "dVx"):
        _same_nodes(state.grid, incr.dVx.grid)
    _, dvx, dt = _incr_arrays(incr)
    U = state.array
    dx = state.grid.dx
    check_step(cfg, dt, dx, float(np.abs(U).max()), t=state.t)
    periodic = state.grid.periodic
    gl = gr = None
    if not periodic:
        gl, gr = ghosts if ghosts is not None else (U[:, 0], U[:, -1])
    out = burgers_arrays(U, dvx, dt, dx, cfg, periodic, gl, gr)
    if not np.all(np.isfinite(out)):
        raise SchemeAbort("non-finite values after Burgers step", t=state.t, snapshot={"u": U})
    t = state.t + dt
    if state.pair is not None:
        iB, iT = state.pair
        if np.any(out[iT] <= out[iB]):
            raise SchemeAbort("ordering of the (B, T) pair lost", t=t, snapshot={"u": U})
    return BurgersState(state.grid, t, tuple(Field(state.grid, r) for r in out), state.pair)


@dataclass(frozen=True, eq=False)
class CompanionState:
    """KPZ heights, SHE fields and the shock anchor ``Z`` on a periodic grid.

    ``h_period[i]`` is the increment of ``h[i]`` over one period; ``phi[i]``
    shares it (``phi = exp(-h)``). ``z_period`` is the increment of ``z``.
    """

    grid: GridSpec
    t: float
    h: Tuple[Field, ...] = ()
    phi: Tuple[Field, ...] = ()
    h_period: Tuple[float, ...] = ()
    z: Optional[MonotoneField] = None
    z_period: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "phi", tuple(self.phi))
        object.__setattr__(self, "h_period", tuple(float(p) for p in self.h_period))
        for p in self.phi:
            if np.any(p.values <= 0.0):
                raise ValueError("phi must be strictly positive")


def companion_from_burgers(fields: Sequence[Field], b: float = 0.0, pair=(0, 1)) -> CompanionState:
    """Heights anchored at ``b`` (``h(b) = 0``), their SHE fields and ``Z``."""
    grid = fields[0].grid
    if not grid.periodic:
        raise ValueError("companions live on a periodic grid")
    hs = [cumulative_from(f, b, order=4) for f in fields]
    periods = [grid.dx * float(f.values.sum()) for f in fields]
    phis = [Field(grid, np.exp(-h.values)) for h in hs]
    z, zp = None, 0.0
    if pair is not None and len(fields) >= 2:
        uB, uT = fields[pair[0]], fields[pair[1]]
        z = zbar(uB, uT, b)
        zp = 0.5 * grid.dx * float((uT.values - uB.values).sum())
    return CompanionState(grid, 0.0, hs, phis, periods, z, zp, b)


def step_kpz(comp: CompanionState, incr, cfg: SchemeConfig, forcing_l2_sq: float = 0.0) -> CompanionState:
    """Explicit KPZ step; ``forcing_l2_sq`` (``||A rho||^2``) switches the Ito term on."""
    dv, _, dt = _incr_arrays(incr)
    dx = comp.grid.dx
    if dt > dx * dx * (1.0 + 1e-12):
        raise SchemeAbort(f"CFL violation: dt={dt:.4g} > dx^2", t=comp.t)
    H = np.stack([h.values for h in comp.h])
    P = np.asarray(comp.h_period)
    out = np.empty_like(H)
    kernels.kpz_step(H, out, np.ascontiguousarray(dv), dt, dx, 0.5 * forcing_l2_sq * dt,
                     H[:, -1] - P, H[:, 0] + P)
    if not np.all(np.isfinite(out)):
        raise SchemeAbort("non-finite KPZ height", t=comp.t, snapshot={"h": H})
    return replace(comp, t=comp.t + dt, h=tuple(Field(comp.grid, r) for r in out))


def step_she(comp: CompanionState, incr, cfg: SchemeConfig, forcing_l2_sq: float = 0.0) -> CompanionState:
    """Heat half-step, then the exponential factor ``exp(-dV - ||rho||^2 dt/2)``."""
    dv, _, dt = _incr_arrays(incr)
    dx = comp.grid.dx
    if dt > dx * dx * (1.0 + 1e-12):
        raise SchemeAbort(f"CFL violation: dt={dt:.4g} > dx^2", t=comp.t)
    Phi = np.stack([p.values for p in comp.phi])
    P = np.asarray(comp.h_period)
    out = np.empty_like(Phi)
    kernels.she_step(Phi, out, np.ascontiguousarray(dv), dt, dx, 0.5 * forcing_l2_sq * dt,
                     Phi[:, -1] * np.exp(P), Phi[:, 0] * np.exp(-P))
    if not np.all(out > 0.0) or not np.all(np.isfinite(out)):
        raise SchemeAbort("SHE lost positivity; reduce dt", t=comp.t, snapshot={"phi": Phi})
    return replace(comp, t=comp.t + dt, phi=tuple(Field(comp.grid, r) for r in out))


def z_arrays(z, z_period, vel, dt, dx, upwind=False, t=None) -> np.ndarray:
    out = np.empty_like(z)
    kernels.z_step(z, out, vel, dt, dx, z[-1] - z_period, z[0] + z_period, upwind)
    if np.any(out[1:] <= out[:-1]):
        raise SchemeAbort("Z lost strict monotonicity", t=t, snapshot={"z": z})
    return out


def step_z(comp: CompanionState, u_B_mid, u_T_mid, dt: float, cfg: SchemeConfig = SchemeConfig()) -> CompanionState:
    """Noise-free update ``Z_t = Z_xx/2 - (u_T + u_B) Z_x / 2``."""
    uB = getattr(u_B_mid, "values", u_B_mid)
    uT = getattr(u_T_mid, "values", u_T_mid)
    vel = 0.5 * (np.asarray(uT) + np.asarray(uB))
    z = np.asarray(comp.z.values)
    out = z_arrays(z, comp.z_period, vel, dt, comp.grid.dx, cfg.z_advection == "upwind", t=comp.t)
    return replace(comp, t=comp.t + dt, z=MonotoneField(comp.grid, out))


# ---------------------------------------------------------------- trackers


def _pair_of(obj):
    if isinstance(obj, BurgersState):
        iB, iT = obj.pair or (0, 1)
        return obj.fields[iB].values, obj.fields[iT].values
    uB, uT = obj
    return getattr(uB, "values", uB), getattr(uT, "values", uT)


def shock_velocity(uB: np.ndarray, uT: np.ndarray, grid: GridSpec, b: float) -> float:
    """``(-(log(u_T - u_B))_x + u_B + u_T)/2`` at ``b``, linearly interpolated.

    Only the two nodes bracketing ``b`` are evaluated; indices wrap.
    """
    n, dx = grid.n, grid.dx
    s = (b + grid.half_length) / dx
    j = int(np.floor(s))
    w = s - j
    idx = np.arange(j - 1, j + 3) % n
    gap = uT[idx] - uB[idx]
    lg = np.log(gap)
    f0 = 0.5 * (-(lg[2] - lg[0]) / (2.0 * dx) + uB[idx[1]] + uT[idx[1]])
    f1 = 0.5 * (-(lg[3] - lg[1]) / (2.0 * dx) + uB[idx[2]] + uT[idx[2]])
    return float((1.0 - w) * f0 + w * f1)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Smooth bump of unit mass centred at ``center``, sampled with its derivative."""

    center: float
    radius: float
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)


def bump_test_function(grid: GridSpec, center: float, radius: float = 2.0) -> TestFunction:
    if radius < 4.0 * grid.dx:
        raise ValueError("test function radius must span at least four cells")
    if radius >= grid.half_length:
        raise ValueError("test function does not fit in the domain")
    y = np.asarray(grid.x) - center
    if grid.periodic:
        y = (y + grid.half_length) % grid.length - grid.half_length
    elif center - radius < -grid.half_length or center + radius >= grid.half_length:
        raise ValueError("test function must sit inside the clamped domain")
    s = y / radius
    inside = np.abs(s) < 1.0
    phi = np.zeros_like(s)
    dphi = np.zeros_like(s)
    q = 1.0 - s[inside] ** 2
    phi[inside] = np.exp(-1.0 / q)
    dphi[inside] = phi[inside] * (-2.0 * s[inside] / (radius * q**2))
    mass = grid.dx * phi.sum()
    return TestFunction(float(center), float(radius), phi / mass, dphi / mass)


@dataclass(frozen=True, eq=False)
class ShockTrack:
    """Position ``b`` of one shock under one tracking method.

    ``zeta`` is the tracked level. The weak-form fields hold the anchor
    ``b0``, the test function, ``q0 = int Zbar_{b0}[u(0)] phi``, the running
    time integral ``q_acc`` and the last integrand (trapezoid rule).
    """

    method: str
    b: float
    zeta: float = 0.0
    b0: float = 0.0
    test: Optional[TestFunction] = None
    q0: float = 0.0
    q_acc: float = 0.0
    last_integrand: float = 0.0

    def __post_init__(self):
        if self.method not in TRACKERS:
            raise ValueError(f"method must be one of {TRACKERS}")


def advance_shock_ode(track: ShockTrack, state_pre, state_post, dt: float, grid: GridSpec,
                      gap_floor: float = 0.0, edge_margin: Optional[float] = None, t=None) -> ShockTrack:
    """Heun step of the shock-position ODE."""
    b = track.b
    uB0, uT0 = _pair_of(state_pre)
    uB1, uT1 = _pair_of(state_post)
    if edge_margin is not None and abs(b) > grid.half_length - edge_margin:
        raise SchemeAbort(f"shock at b={b:.4g} within {edge_margin:.3g} of the domain edge", t=t)
    j = grid.nearest_index(b)
    idx = np.arange(j - 3, j + 4) % grid.n
    if np.min(uT0[idx] - uB0[idx]) <= gap_floor or np.min(uT1[idx] - uB1[idx]) <= gap_floor:
        raise SchemeAbort(f"gap below floor {gap_floor:.3g} near b={b:.4g}", t=t)
    k1 = shock_velocity(uB0, uT0, grid, b)
    k2 = shock_velocity(uB1, uT1, grid, b + dt * k1)
    return replace(track, b=b + 0.5 * dt * (k1 + k2))


def levelset_position(z: np.ndarray, z_period: float, grid: GridSpec, zeta: float) -> float:
    """Solve ``Z(x) = zeta`` for quasi-periodic increasing ``Z``.

    Levels beyond the sampled range are brought back by whole periods
    (``Z(x + 2L) = Z(x) + z_period``); without a period they raise.
    """
    lo, hi = z[0], z[-1]
    k = 0
    if (zeta < lo or zeta > hi) and grid.periodic and z_period > 0:
        k = int(np.floor((zeta - lo) / z_period))
        zeta = zeta - k * z_period
        if zeta > hi:
            # between the last node and the wrapped first node
            w = (zeta - hi) / (lo + z_period - hi)
            return float(grid.x[-1] + w * grid.dx + k * grid.length)
    return invert_increasing(z, grid, zeta) + k * grid.length


def locate_shock_levelset(comp: CompanionState, zeta: float = 0.0) -> float:
    """Position where the anchor field ``Z`` crosses ``zeta``."""
    if comp.z is None:
        raise ValueError("companion carries no Z field")
    return levelset_position(np.asarray(comp.z.values), comp.z_period, comp.grid, zeta)


def _zbar_nodes(uB, uT, grid: GridSpec, b: float) -> np.ndarray:
    # the order-4 antiderivative wants b inside [-L, L); shift by periods
    Lg = grid.length
    k = np.floor((b + grid.half_length) / Lg)
    half = 0.5 * (uT - uB)
    z = cumulative_from(Field(grid, half), b - k * Lg, order=4).values
    return z - k * grid.dx * half.sum()


def _wf_integrand(uB, uT, test: TestFunction, dx: float) -> float:
    return 0.25 * dx * float(np.sum((uT - uB) * (-test.dphi - (uT + uB) * test.phi)))


def weakform_track(state, grid: GridSpec, b0: float, radius: float = 2.0, zeta: float = 0.0) -> ShockTrack:
    """Weak-form tracker anchored at ``b0`` for the current pair."""
    uB, uT = _pair_of(state)
    test = bump_test_function(grid, b0, radius)
    zb = _zbar_nodes(uB, uT, grid, b0)
    q0 = grid.dx * float(np.sum(zb * test.phi))
    return ShockTrack(WEAKFORM, float(b0), zeta, float(b0), test, q0, 0.0,
                      _wf_integrand(uB, uT, test, grid.dx))


def weakform_anchor_update(track: ShockTrack, state, dt: float, grid: GridSpec) -> ShockTrack:
    """Accumulate the anchor's time integral over one step (trapezoid rule)."""
    uB, uT = _pair_of(state)
    new = _wf_integrand(uB, uT, track.test, grid.dx)
    return replace(track, q_acc=track.q_acc + 0.5 * dt * (track.last_integrand + new), last_integrand=new)


def weakform_anchor_value(track: ShockTrack, state, grid: GridSpec) -> float:
    """Height ``Z_{b0,t}(b0)`` recovered from the time integral alone."""
    uB, uT = _pair_of(state)
    zb = _zbar_nodes(uB, uT, grid, track.b0)
    return track.q0 + track.q_acc - grid.dx * float(np.sum(zb * track.test.phi))


def weakform_position(track: ShockTrack, state, grid: GridSpec) -> ShockTrack:
    """Shock position from the weak-form anchor: ``Zbar_{b0}[u(t)] = zeta - anchor``."""
    uB, uT = _pair_of(state)
    zb = _zbar_nodes(uB, uT, grid, track.b0)
    level = track.zeta - weakform_anchor_value(track, state, grid)
    period = 0.5 * grid.dx * float((uT - uB).sum())
    return replace(track, b=levelset_position(zb, period, grid, level))


# ---------------------------------------------------------------- runners


def aligned_dt(dt_bound: float, output_every: float) -> float:
    """Largest step not above ``dt_bound`` that divides ``output_every``."""
    k = int(np.ceil(output_every / dt_bound - 1e-12))
    return output_every / max(k, 1)


def burn_in_pair(pair: np.ndarray, sampler, cfg: SchemeConfig, dx: float, dt: float, n_blocks: int,
                 first_block: int = 0, t0: float = 0.0) -> np.ndarray:
    """Evolve a periodic (B, T) pair over whole noise blocks with the fused kernel."""
    pair = np.ascontiguousarray(pair, dtype=np.float64).copy()
    if not cfg.monotone:
        raise ValueError("block burn-in uses explicit diffusion only")
    t = t0
    for blk in range(first_block, first_block + n_blocks):
        check_step(cfg, dt, dx, float(np.abs(pair).max()), t=t)
        _, dvx_rows = sampler.block_arrays(blk, dt)
        kernels.burgers_block(pair, np.ascontiguousarray(dvx_rows), dt, dx, cfg.flux_code)
        t += dt * dvx_rows.shape[0]
        if not np.all(np.isfinite(pair)):
            raise SchemeAbort("non-finite values during burn-in", t=t)
        if np.min(pair[1] - pair[0]) <= 0.0:
            raise SchemeAbort("gap underflow during burn-in", t=t)
    return pair


class TripleRun:
    """Periodic (B, T) pair plus ``m`` shocks between them on a clamped grid.

    Each shock row ``i`` carries a label ``(b_i, gamma_i)`` and is tracked
    three ways: the ODE, the level set of one shared ``Z`` field anchored
    at ``b_0``, and the weak-form anchor. The clamped rows take their
    ghost values from the pair: ``u_T`` at ``x_{-1}`` on the left and ``u_B``
    at ``x_n`` on the right.

    Parameters
    ----------
    grid : GridSpec
        Periodic grid of the pair; shocks use its clamped twin.
    cfg : SchemeConfig
    sampler : ForcingSampler or ZeroForcing
    uB0, uT0 : ndarray
        Initial pair.
    labels : sequence of (b, gamma)
    rows : ndarray, optional
        Initial shocks, shape ``(m, n)``. Defaults to the shock operator
        applied to the pair with each label.
    dt : float
        Fixed time step.
    """

    def __init__(self, grid: GridSpec, cfg: SchemeConfig, sampler, uB0, uT0, labels, dt: float,
                 rows=None, zeta: float = 0.0, test_radius: float = 2.0, edge_fraction: float = 0.5,
                 start_step: int = 0, t0: float = 0.0):
        if not grid.periodic:
            raise ValueError("the pair needs a periodic grid")
        self.grid = grid
        self.cgrid = grid.with_topology("clamped")
        self.cfg = cfg
        self.sampler = sampler
        self.dt = float(dt)
        self.step = int(start_step)
        self.t = float(t0)
        self.pair = np.stack([np.asarray(uB0, float), np.asarray(uT0, float)])
        if np.any(self.pair[1] <= self.pair[0]):
            raise ValueError("initial pair is not ordered")
        self.labels = [(float(b), float(g)) for b, g in labels]
        uBf, uTf = Field(grid, self.pair[0]), Field(grid, self.pair[1])
        if rows is None:
            rows = [logistic_mix(self.pair[0], self.pair[1], zbar(uBf, uTf, b).values, g) for b, g in self.labels]
        self.rows = np.atleast_2d(np.asarray(rows, dtype=np.float64)).copy()
        if self.rows.shape != (len(self.labels), grid.n):
            raise ValueError("need one initial row per label")
        self.zeta = float(zeta)
        self.b_ref = self.labels[0][0]
        z0 = zbar(uBf, uTf, self.b_ref).values
        self.z = np.array(z0)
        self.z_period = 0.5 * grid.dx * float((self.pair[1] - self.pair[0]).sum())
        self.levels = [_level_at(z0, grid, b) + self.zeta for b, _ in self.labels]
        self.gap_floor = cfg.gap_floor * float(np.mean(self.pair[1] - self.pair[0]))
        self.edge = edge_fraction * grid.half_length
        state = (self.pair[0], self.pair[1])
        b_lv = [levelset_position(self.z, self.z_period, grid, lv) for lv in self.levels]
        self.ode = [ShockTrack(ODE, b) for b in b_lv]
        self.wf = [weakform_track(state, grid, b, test_radius, self.zeta) for b, _ in self.labels]
        self.mass0 = grid.dx * float((self.pair[1] - self.pair[0]).sum())
        self.max_step_drift = 0.0
        self.prev = None
        self.zeta_nodes = self._zeta_grid()

    def _zeta_grid(self):
        L = self.grid.half_length
        lo = _level_at(self.z, self.grid, -0.5 * L)
        hi = _level_at(self.z, self.grid, 0.5 * L)
        return np.linspace(lo, hi, self.grid.n // 2)

    def advance(self):
        g, dt, dx = self.grid, self.dt, self.grid.dx
        _, dvx = self.sampler.increment_arrays(self.step, dt)
        pre_pair, pre_rows, pre_z = self.pair, self.rows, self.z
        umax = max(float(np.abs(pre_pair).max()), float(np.abs(pre_rows).max()))
        check_step(self.cfg, dt, dx, umax, t=self.t)
        pair = burgers_arrays(pre_pair, dvx, dt, dx, self.cfg, True)
        m = pre_rows.shape[0]
        rows = burgers_arrays(pre_rows, dvx, dt, dx, self.cfg, False,
                              np.full(m, pre_pair[1, -1]), np.full(m, pre_pair[0, 0]))
        if not (np.isfinite(pair.sum()) and np.isfinite(rows.sum())):
            raise SchemeAbort("non-finite values", t=self.t, snapshot={"pair": pre_pair, "rows": pre_rows})
        if np.min(pair[1] - pair[0]) <= self.gap_floor:
            raise SchemeAbort("gap underflow", t=self.t, snapshot={"pair": pre_pair})
        vel = 0.25 * (pre_pair[0] + pre_pair[1] + pair[0] + pair[1])
        self.z = z_arrays(pre_z, self.z_period, vel, dt, dx, self.cfg.z_advection == "upwind", t=self.t)
        pre_state, post_state = (pre_pair[0], pre_pair[1]), (pair[0], pair[1])
        self.ode = [advance_shock_ode(tr, pre_state, post_state, dt, g, self.gap_floor, t=self.t)
                    for tr in self.ode]
        self.wf = [weakform_anchor_update(tr, post_state, dt, g) for tr in self.wf]
        mass = dx * float((pair[1] - pair[0]).sum())
        prev_mass = dx * float((pre_pair[1] - pre_pair[0]).sum())
        self.max_step_drift = max(self.max_step_drift, abs(mass - prev_mass))
        self.prev = (pre_pair, pre_rows, pre_z)
        self.pair, self.rows = pair, rows
        self.t += dt
        self.step += 1
        for lv in self.levels:
            b = levelset_position(self.z, self.z_period, g, lv)
            if abs(b) > self.edge:
                raise SchemeAbort(f"shock left the central window (b={b:.4g})", t=self.t)

    def positions(self):
        g = self.grid
        state = (self.pair[0], self.pair[1])
        lv = [levelset_position(self.z, self.z_period, g, v) for v in self.levels]
        wf = [weakform_position(tr, state, g).b for tr in self.wf]
        return [tr.b for tr in self.ode], lv, wf

    def explicit_rows(self, positions):
        """Shock operator applied to the current pair at the given positions."""
        out = []
        for (_, gamma), b in zip(self.labels, positions):
            out.append(logistic_mix(self.pair[0], self.pair[1], _zbar_nodes(self.pair[0], self.pair[1], self.grid, b),
                                    gamma - 2.0 * self.zeta))
        return np.array(out)

    def residual(self, row: int = 0):
        """Shock-frame residual of the last step for shock ``row``."""
        from .shock import dtU_residual, to_coords

        if self.prev is None:
            return None
        g = self.grid
        coords = []
        for pair, rows, z in (self.prev, (self.pair, self.rows, self.z)):
            coords.append(to_coords(Field(g, pair[0]), Field(g, pair[1]), Field(self.cgrid, rows[row]),
                                    MonotoneField(g, z), self.zeta_nodes))
        _, res = dtU_residual(coords[0], coords[1], self.dt)
        return res

    def record(self) -> dict:
        b_ode, b_lv, b_wf = self.positions()
        S = self.explicit_rows(b_lv)
        dx = self.grid.dx
        rec = {
            "t": round(self.t, 9),
            "step": self.step,
            "min_gap": float(np.min(self.pair[1] - self.pair[0])),
            "pair_mass_drift": abs(dx * float((self.pair[1] - self.pair[0]).sum()) - self.mass0),
            "max_step_drift": self.max_step_drift,
            "dtU_residual": self.residual(0),
            "shocks": [],
        }
        for i in range(len(self.labels)):
            trio = (b_ode[i], b_lv[i], b_wf[i])
            rec["shocks"].append({
                "b_ode": b_ode[i],
                "b_levelset": b_lv[i],
                "b_weakform": b_wf[i],
                "tracker_spread": max(trio) - min(trio),
                "l1_to_explicit": dx * float(np.abs(self.rows[i] - S[i]).sum()),
                "mass_defect": dx * float((self.rows[i] - S[i]).sum()),
            })
        return rec

    def run(self, horizon: float, output_every: float, callback=None):
        """Advance to ``t0 + horizon``; collect a record at every output time."""
        per_out = int(round(output_every / self.dt))
        n_out = int(round(horizon / output_every))
        records = [self.record()]
        for _ in range(n_out):
            for _ in range(per_out):
                self.advance()
            records.append(self.record())
            if callback is not None:
                callback(self)
        return records


def _level_at(z: np.ndarray, grid: GridSpec, x: float) -> float:
    from .grid import lagrange4

    return float(lagrange4(np.asarray(grid.x), z, x))


def forcing_from_config(config, grid: GridSpec, stream: int, amplitude: Optional[float] = None):
    """Sampler for realization ``stream`` under the master seed ``noise.seed``."""
    from .noise import ForcingSampler, ZeroForcing, build_mollifier

    amp = float(config["noise.amplitude"] if amplitude is None else amplitude)
    if amp == 0.0:
        return ZeroForcing(grid), 0.0
    kind = config["noise.kind"]
    param = config["noise.sigma"] if kind == "gaussian" else config["noise.radius"]
    moll = build_mollifier(kind, float(param), grid, amp)
    return ForcingSampler(moll, int(config["noise.seed"]), stream), moll.forcing_l2_sq


def run_realization(config, seed: int, n: Optional[int] = None, rows=None, labels=None,
                    dt_scale: float = 1.0, return_run: bool = False):
    """One shock-triple realization from constant ``(a_B, a_T)``.

    Returns one record per output time (see :meth:`TripleRun.record`),
    each tagged with the seed. ``n`` overrides ``domain.n``; ``rows`` and
    ``labels`` replace the default shocks built from ``shock.bs`` and
    ``shock.gammas``. ``dt_scale`` shrinks the step (refinement studies).
    With ``return_run`` the finished :class:`TripleRun` is returned too.
    """
    n = int(config["domain.n"] if n is None else n)
    grid = GridSpec(float(config["domain.L"]), n)
    cfg = SchemeConfig.from_config(config)
    sampler, _ = forcing_from_config(config, grid, seed)
    aB, aT = float(config["shock.a_B"]), float(config["shock.a_T"])
    if labels is None:
        bs, gs = list(config["shock.bs"]), list(config["shock.gammas"])
        m = max(len(bs), len(gs))
        labels = [(bs[min(i, len(bs) - 1)], gs[min(i, len(gs) - 1)]) for i in range(m)]
    # headroom for noise-driven growth of |u|
    umax = 2.0 * max(abs(aB), abs(aT)) + 1.0
    out_every = float(config["time.output_every"])
    dt = aligned_dt(max_dt(cfg, grid.dx, umax) * dt_scale, out_every)
    run = TripleRun(grid, cfg, sampler, np.full(n, aB), np.full(n, aT), labels, dt, rows=rows,
                    zeta=float(config["tracker.zeta"]), test_radius=float(config["tracker.test_radius"]))
    records = run.run(float(config["time.horizon"]), out_every)
    for r in records:
        r["seed"] = int(seed)
        r["dx"] = grid.dx
        r["dt"] = dt
    return (records, run) if return_run else records
