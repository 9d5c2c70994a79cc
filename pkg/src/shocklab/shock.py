"""Closed-form shock layer.

Given an ordered pair ``v_B < v_T``, the anchor ``Zbar_b(x)`` is half the
integral of the gap from ``b`` to ``x``. The shock operator mixes the pair
with logistic weights in ``2*Zbar_b - gamma``; the shock coordinates
``(zeta, U)`` straighten every such shock into ``-tanh(zeta - gamma/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatchError, NotAShockError, OutOfRangeError
from .grid import (
    Field,
    GridSpec,
    MonotoneField,
    cumulative_from,
    cumulative_nodes,
    lagrange4,
)

EXP_CLAMP = 700.0
TAIL_RTOL = 1e-6


def _check_pair(v_B: Field, v_T: Field):
    if v_B.grid.n != v_T.grid.n or v_B.grid.half_length != v_T.grid.half_length:
        raise GridMismatchError("v_B and v_T live on different grids")
    if np.any(v_T.values <= v_B.values):
        raise ValueError("pair is not strictly ordered (need v_B < v_T at every node)")


def zbar(v_B: Field, v_T: Field, b: float) -> MonotoneField:
    """Half the integral of the gap, measured from ``b``."""
    _check_pair(v_B, v_T)
    half_gap = Field(v_B.grid, 0.5 * (v_T.values - v_B.values))
    z = cumulative_from(half_gap, b, order=4)
    return MonotoneField(z.grid, z.values)


def logistic_mix(vB: np.ndarray, vT: np.ndarray, z: np.ndarray, gamma: float) -> np.ndarray:
    """Array form of the shock operator given anchor values ``z``."""
    e = np.clip(gamma - 2.0 * z, -EXP_CLAMP, EXP_CLAMP)
    w_T = 1.0 / (1.0 + np.exp(-e))
    w_B = 1.0 / (1.0 + np.exp(e))
    return vB * w_B + vT * w_T


def shock_profile(v_B: Field, v_T: Field, b: float, gamma: float, topology: Optional[str] = None) -> Field:
    """Shock connecting ``v_T`` on the left to ``v_B`` on the right.

    ``gamma`` labels the member of the one-parameter family; larger gamma
    moves the transition to the right. The result is returned on the
    grid of ``v_B`` unless another ``topology`` is requested (the triple is
    usually simulated on a clamped grid).
    """
    z = zbar(v_B, v_T, b)
    out = logistic_mix(v_B.values, v_T.values, z.values, gamma)
    grid = v_B.grid if topology is None else v_B.grid.with_topology(topology)
    return Field(grid, out)


class _Primitive:
    """High-order antiderivative of nodal data, queryable anywhere."""

    def __init__(self, values: np.ndarray, grid: GridSpec):
        clamped = grid.with_topology("clamped")
        self.x = np.asarray(grid.x)
        self.c = cumulative_nodes(values, clamped, order=4)
        self.total = float(self.c[-1])

    def __call__(self, x):
        return lagrange4(self.x, self.c, x)


def _tail_scale(v_B: Field, v_T: Field) -> float:
    return float(np.mean(v_T.values - v_B.values))


def _tails(v_B: Field, v_T: Field, v: Field):
    _check_pair(v_B, v_T)
    upper = _Primitive(v.values - v_T.values, v.grid)
    lower = _Primitive(v.values - v_B.values, v.grid)
    return upper, lower


def tail_integrals(v_B: Field, v_T: Field, v: Field, b: float):
    """``(int_{x_0}^b (v - v_T), int_b^{x_end} (v - v_B))``."""
    upper, lower = _tails(v_B, v_T, v)
    return float(upper(b)), float(lower.total - lower(b))


def _check_tails(v_B: Field, v_T: Field, v: Field, rtol: float = TAIL_RTOL):
    scale = _tail_scale(v_B, v_T)
    left = abs(v.values[0] - v_T.values[0])
    right = abs(v.values[-1] - v_B.values[-1])
    if left > rtol * scale or right > rtol * scale:
        raise NotAShockError(
            f"tails do not settle: |v-v_T| at left edge {left:.3g}, "
            f"|v-v_B| at right edge {right:.3g}, tolerance {rtol * scale:.3g}"
        )


def _in_nodes(grid: GridSpec, b: float):
    if not (grid.x[0] <= b <= grid.x[-1]):
        raise OutOfRangeError(f"b={b} outside the sampled nodes")


def gamma_of(v_B: Field, v_T: Field, v: Field, b: float, rtol: float = TAIL_RTOL) -> float:
    """Shock label: ``int_{-inf}^b (v - v_T) + int_b^inf (v - v_B)``."""
    _in_nodes(v.grid, b)
    _check_tails(v_B, v_T, v, rtol)
    left, right = tail_integrals(v_B, v_T, v, b)
    return left + right


def center_of(v_B: Field, v_T: Field, v: Field, gamma: float = 0.0, rtol: float = TAIL_RTOL) -> float:
    """The unique ``b`` whose label is ``gamma``; found by bisection.

    The label is strictly decreasing in ``b`` (its derivative is
    ``v_B - v_T < 0``).
    """
    _check_tails(v_B, v_T, v, rtol)
    upper, lower = _tails(v_B, v_T, v)
    label = lambda c: float(upper(c) + lower.total - lower(c))
    lo, hi = float(v.grid.x[0]), float(v.grid.x[-1])
    f_lo, f_hi = label(lo) - gamma, label(hi) - gamma
    if f_lo < 0 or f_hi > 0:
        raise OutOfRangeError(
            f"gamma={gamma} not attainable on this window (range [{label(hi):.4g}, {label(lo):.4g}])"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if label(mid) - gamma > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class ShockTriple:
    v_B: Field
    v_T: Field
    v: Field


@dataclass(frozen=True, eq=False)
class ShockCoords:
    zeta_nodes: np.ndarray
    U: np.ndarray
    J: np.ndarray
    Q: Optional[np.ndarray] = None

    @property
    def dzeta(self) -> float:
        return float(self.zeta_nodes[1] - self.zeta_nodes[0])


def zeta_grid(anchor: Field, m: Optional[int] = None, margin_cells: float = 2.0) -> np.ndarray:
    """Uniform zeta grid inside the anchor's range, ``margin_cells`` from each end."""
    m = anchor.grid.n if m is None else m
    lo, hi = float(anchor.values[0]), float(anchor.values[-1])
    dz = (hi - lo) / (m - 1 + 2.0 * margin_cells)
    return lo + dz * (margin_cells + np.arange(m))


def to_coords(v_B: Field, v_T: Field, v: Field, anchor: Field, zeta_nodes=None) -> ShockCoords:
    """Change variables to ``zeta = anchor(x)`` and the normalised ``U``.

    Values are carried to the zeta grid through the nodal pairs
    ``(anchor(x_j), U(x_j))`` with four-point Lagrange interpolation,
    which keeps the transform accurate to O(dzeta^4).
    """
    z = np.asarray(anchor.values)
    if np.any(np.diff(z) <= 0):
        raise ValueError("anchor is not strictly increasing")
    _check_pair(v_B, v_T)
    if zeta_nodes is None:
        zeta_nodes = zeta_grid(anchor)
    zeta_nodes = np.asarray(zeta_nodes, dtype=np.float64)
    if zeta_nodes[0] < z[0] or zeta_nodes[-1] > z[-1]:
        raise OutOfRangeError("zeta grid leaves the anchor's range")
    gap = v_T.values - v_B.values
    u_nodes = (2.0 * v.values - v_T.values - v_B.values) / gap
    U = lagrange4(z, u_nodes, zeta_nodes)
    J = lagrange4(z, gap**2, zeta_nodes)
    dz = zeta_nodes[1] - zeta_nodes[0]
    Q = np.concatenate([[0.0], np.cumsum(0.5 * dz * (U[1:] + U[:-1]))])
    return ShockCoords(zeta_nodes, np.asarray(U), np.asarray(J), Q)


def from_coords(coords: ShockCoords, v_B: Field, v_T: Field, anchor: Field) -> Field:
    """Inverse change of variables back onto the x grid of ``v_B``.

    Nodes whose anchor value falls outside the zeta grid are filled with
    the saturated value (``U = +1`` on the left, ``-1`` on the right).
    """
    z = np.asarray(anchor.values)
    U = np.asarray(lagrange4(coords.zeta_nodes, coords.U, z))
    U = np.where(z < coords.zeta_nodes[0], 1.0, U)
    U = np.where(z > coords.zeta_nodes[-1], -1.0, U)
    gap = v_T.values - v_B.values
    return Field(v_B.grid, 0.5 * (gap * U + v_T.values + v_B.values))


def d_zeta(values: np.ndarray, dz: float) -> np.ndarray:
    """Fourth-order central difference; third-order one-sided at the ends."""
    d = np.empty_like(values)
    d[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * dz)
    for j in (0, 1):
        d[j] = (-11 * values[j] + 18 * values[j + 1] - 9 * values[j + 2] + 2 * values[j + 3]) / (6 * dz)
    for j in (-1, -2):
        k = len(values) + j
        d[k] = (11 * values[k] - 18 * values[k - 1] + 9 * values[k - 2] - 2 * values[k - 3]) / (6 * dz)
    return d


def flux_gap(coords: ShockCoords) -> np.ndarray:
    """``dU/dzeta - U^2 + 1``; identically zero on every exact shock."""
    return d_zeta(coords.U, coords.dzeta) - coords.U**2 + 1.0


def dtU_residual(coords_pre: ShockCoords, coords_post: ShockCoords, dt: float, interior: int = 4):
    """Residual of the shock-frame PDE between two states one step apart.

    Returns ``(flux_gap, residual)`` where ``flux_gap`` is evaluated on
    ``coords_post`` and ``residual`` is the zeta-L1 norm over interior
    nodes of ``(U_post - U_pre)/dt - (1/8) d/dzeta (J * flux_gap)`` with the
    right side averaged over both states.
    """
    a, b = coords_pre.zeta_nodes, coords_post.zeta_nodes
    if a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise GridMismatchError("coords live on different zeta grids")
    dz = coords_post.dzeta
    g_post = flux_gap(coords_post)
    g_pre = flux_gap(coords_pre)
    rhs = 0.5 * (d_zeta(coords_pre.J * g_pre, dz) + d_zeta(coords_post.J * g_post, dz)) / 8.0
    r = (coords_post.U - coords_pre.U) / dt - rhs
    sl = slice(interior, len(r) - interior)
    return g_post, float(dz * np.abs(r[sl]).sum())


def check_membership(triple: ShockTriple, b: float, gap_floor: float = 0.0, rtol: float = TAIL_RTOL) -> dict:
    """Diagnostics for the ordered-pair and shock-space surrogates."""
    v_B, v_T, v = triple.v_B, triple.v_T, triple.v
    gap = v_T.values - v_B.values
    min_gap = float(gap.min())
    rec = {"b": float(b), "min_gap": min_gap, "bt_pass": bool(min_gap > gap_floor)}
    scale = abs(float(gap.mean())) or 1.0
    # tail integrals are meaningful even when ordering fails
    upper = _Primitive(v.values - v_T.values, v.grid)
    lower = _Primitive(v.values - v_B.values, v.grid)
    rec["left_tail"] = float(upper(b))
    rec["right_tail"] = float(lower.total - lower(b))
    rec["gamma"] = rec["left_tail"] + rec["right_tail"]
    left_edge = abs(v.values[0] - v_T.values[0])
    right_edge = abs(v.values[-1] - v_B.values[-1])
    rec["left_edge_residual"] = float(left_edge)
    rec["right_edge_residual"] = float(right_edge)
    tails_ok = left_edge <= rtol * scale and right_edge <= rtol * scale
    rec["sh_pass"] = bool(rec["bt_pass"] and tails_ok)
    return rec
