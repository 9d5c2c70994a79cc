"""Uniform 1-D grids, sampled fields and the calculus primitives on them.

The whole line is replaced by the window ``[-L, L)`` sampled at
``x_j = -L + j*dx``. Periodic grids wrap indices; clamped grids use
one-sided stencils at the ends.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import GridMismatchError, NonFiniteError, OutOfRangeError

PERIODIC = "periodic"
CLAMPED = "clamped"


@dataclass(frozen=True)
class GridSpec:
    half_length: float
    n: int
    topology: str = PERIODIC

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"need at least 8 cells, got n={self.n}")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")
        if self.topology not in (PERIODIC, CLAMPED):
            raise ValueError(f"unknown topology {self.topology!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @property
    def periodic(self) -> bool:
        return self.topology == PERIODIC

    def with_topology(self, topology: str) -> "GridSpec":
        return GridSpec(self.half_length, self.n, topology)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.half_length, self.n * factor, self.topology)

    def contains(self, x: float) -> bool:
        return -self.half_length <= x < self.half_length

    def nearest_index(self, x: float) -> int:
        j = int(np.rint((x + self.half_length) / self.dx))
        return j % self.n if self.periodic else min(max(j, 0), self.n - 1)


def _same_grid(f: "Field", g: "Field"):
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")


@dataclass(frozen=True, eq=False)
class Field:
    """Real values sampled at the nodes of a grid. Immutable."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("field has non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        return cls(grid, fn(np.asarray(grid.x)))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "Field":
        return cls(grid, np.full(grid.n, float(c)))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def _binop(self, other, op):
        if isinstance(other, Field):
            _same_grid(self, other)
            return Field(self.grid, op(self.values, other.values))
        return Field(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binop(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __rsub__(self, other):
        return Field(self.grid, other - self.values)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, np.divide)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __len__(self):
        return self.grid.n

    def shifted(self, k: int) -> "Field":
        """Cyclic shift by ``k`` cells to the right (periodic grids)."""
        return Field(self.grid, np.roll(self.values, k))


class MonotoneField(Field):
    """A field whose nodal values increase strictly from left to right."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(np.diff(self.values) <= 0.0):
            raise ValueError("values are not strictly increasing")


def spatial_derivative(f: Field) -> Field:
    """Second-order central difference; one-sided at clamped ends."""
    return Field(f.grid, derivative_array(f.values, f.grid.dx, f.grid.periodic))


def derivative_array(v: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    if periodic:
        d[0] = (v[1] - v[-1]) / (2.0 * dx)
        d[-1] = (v[0] - v[-2]) / (2.0 * dx)
    else:
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
        d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return d


def cumulative_from(f: Field, b: float, order: int = 2) -> Field:
    """Antiderivative of ``f`` normalised to vanish at ``b``.

    ``order=2`` is the plain trapezoid rule with the value at ``b`` taken
    by linear interpolation between the neighbouring nodes. ``order=4``
    adds the Euler-Maclaurin end correction and evaluates at ``b`` with a
    four-point Lagrange interpolant; use it where identities must hold to
    ~1e-6 on non-constant data.
    """
    grid = f.grid
    if not grid.contains(b):
        raise OutOfRangeError(f"b={b} outside [{-grid.half_length}, {grid.half_length})")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    c = cumulative_nodes(f.values, grid, order)
    if order == 2:
        s = (b + grid.half_length) / grid.dx
        j = min(int(np.floor(s)), grid.n - 1)
        w = s - j
        if j < grid.n - 1:
            cb = (1.0 - w) * c[j] + w * c[j + 1]
        elif grid.periodic:
            # segment between the last node and the wrapped first node
            c_end = c[-1] + 0.5 * grid.dx * (f.values[-1] + f.values[0])
            cb = (1.0 - w) * c[-1] + w * c_end
        else:
            cb = c[-1] + w * (c[-1] - c[-2])
    else:
        xs, cs = np.asarray(grid.x), c
        if grid.periodic:
            # extend by two wrapped nodes so b in the last cell is bracketed
            inc = _period_integral(f.values, grid.dx)
            xs = np.concatenate([xs, xs[:2] + grid.length])
            cs = np.concatenate([c, c[:2] + inc])
        cb = float(lagrange4(xs, cs, b))
    return Field(grid, c - cb)


def _period_integral(v: np.ndarray, dx: float) -> float:
    return float(dx * v.sum())


def cumulative_nodes(v: np.ndarray, grid: GridSpec, order: int = 2) -> np.ndarray:
    """Nodal antiderivative from ``x_0`` (trapezoid, optionally end-corrected)."""
    dx = grid.dx
    c = np.empty_like(v, dtype=np.float64)
    c[0] = 0.0
    np.cumsum(0.5 * dx * (v[1:] + v[:-1]), out=c[1:])
    if order == 4:
        d = derivative_array(v, dx, grid.periodic)
        c -= dx * dx / 12.0 * (d - d[0])
    return c


def lagrange4(xs: np.ndarray, ys: np.ndarray, xq):
    """Cubic interpolation through the four nodes bracketing each query.

    ``xs`` must be strictly increasing (not necessarily uniform). Queries
    outside ``[xs[0], xs[-1]]`` are extrapolated from the end stencils.
    """
    xq = np.asarray(xq, dtype=np.float64)
    m = len(xs)
    j = np.searchsorted(xs, xq, side="right") - 2
    j = np.clip(j, 0, m - 4)
    out = np.zeros_like(xq)
    idx = [j + k for k in range(4)]
    for a in range(4):
        w = np.ones_like(xq)
        xa = xs[idx[a]]
        for k in range(4):
            if k != a:
                xk = xs[idx[k]]
                w = w * (xq - xk) / (xa - xk)
        out = out + w * ys[idx[a]]
    return out if out.ndim else float(out)


def interpolate(f: Field, x: float) -> float:
    """Linear interpolation of ``f`` at ``x``."""
    return float(interpolate_array(f.values, f.grid, x))


def interpolate_array(v: np.ndarray, grid: GridSpec, x) -> np.ndarray:
    """Vectorised linear interpolation of nodal values ``v`` at points ``x``."""
    x = np.asarray(x, dtype=np.float64)
    L, dx, n = grid.half_length, grid.dx, grid.n
    if grid.periodic:
        s = np.mod(x + L, 2.0 * L) / dx
        j = np.floor(s).astype(np.int64)
        j = np.minimum(j, n - 1)
        w = s - j
        return (1.0 - w) * v[j] + w * v[(j + 1) % n]
    if np.any(x < -L) or np.any(x >= L):
        raise OutOfRangeError(f"x outside [{-L}, {L}) on a clamped grid")
    s = (x + L) / dx
    j = np.minimum(np.floor(s).astype(np.int64), n - 2)
    w = s - j
    return (1.0 - w) * v[j] + w * v[j + 1]


def invert_monotone(F: Field, target: float) -> float:
    """Solve ``F(x) = target`` for piecewise-linear increasing ``F``.

    Bisection (via ``searchsorted``) finds the bracketing cell, then the
    linear piece is solved exactly.
    """
    return invert_increasing(F.values, F.grid, target)


def invert_increasing(v: np.ndarray, grid: GridSpec, target: float) -> float:
    lo, hi = v[0], v[-1]
    if not (lo <= target <= hi):
        raise OutOfRangeError(
            f"target {target:.6g} outside attained range [{lo:.6g}, {hi:.6g}]"
        )
    j = int(np.searchsorted(v, target, side="right")) - 1
    j = min(max(j, 0), grid.n - 2)
    dv = v[j + 1] - v[j]
    w = (target - v[j]) / dv if dv > 0 else 0.0
    return float(grid.x[j] + w * grid.dx)


def l1_distance(f: Field, g: Field, window: Optional[Tuple[float, float]] = None) -> float:
    """Riemann-sum L1 distance, optionally restricted to ``[x0, x1]``."""
    _same_grid(f, g)
    diff = np.abs(f.values - g.values)
    if window is not None:
        x0, x1 = window
        if x0 > x1:
            raise ValueError("window must satisfy x0 <= x1")
        x = f.grid.x
        diff = diff[(x >= x0) & (x <= x1)]
    return float(f.grid.dx * diff.sum())


def write_csv(f: Field, path) -> None:
    """Write a snapshot as ``x,value`` rows in node order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(f.grid.x, f.values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_csv(path, grid: GridSpec) -> Field:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    xs = np.array([float(r["x"]) for r in rows])
    if xs.shape != (grid.n,) or not np.allclose(xs, grid.x, rtol=0, atol=1e-9 * grid.dx):
        raise GridMismatchError(f"{path}: nodes do not match {grid}")
    return Field(grid, np.array([float(r["value"]) for r in rows]))
