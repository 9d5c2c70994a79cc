"""Spatially smooth, temporally white Gaussian forcing.

The forcing is ``V = rho * W`` with ``W`` a cylindrical Wiener process.
On the periodic grid white noise over one step is ``xi_j * sqrt(dt/dx)``
with iid standard normals ``xi_j``; convolving with ``rho*dx`` and
``rho'*dx`` gives the increments of ``V`` and ``dV/dx`` from the same draw.

Draws come from a Philox counter-based generator keyed by
``(seed, stream)``; the counter's top word holds the block index, so the
increment at a given step never depends on how realizations are
scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .grid import Field, GridSpec

GAUSSIAN = "gaussian"
BUMP = "bump"

# Steps drawn per RNG block. Changing this changes every stream.
BLOCK_STEPS = 32
_MASK64 = (1 << 64) - 1


def _gaussian(x, sigma):
    rho = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    return rho, -x / sigma**2 * rho


def _bump(x, r):
    s = np.asarray(x, dtype=np.float64) / r
    inside = np.abs(s) < 1.0
    rho = np.zeros_like(s)
    rho_p = np.zeros_like(s)
    q = 1.0 - s[inside] ** 2
    rho[inside] = np.exp(-1.0 / q)
    rho_p[inside] = rho[inside] * (-2.0 * s[inside] / (r * q**2))
    return rho, rho_p


def _profile(kind, param, x):
    if kind == GAUSSIAN:
        return _gaussian(x, param)
    if kind == BUMP:
        return _bump(x, param)
    raise ValueError(f"unknown mollifier kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Mollifier:
    kind: str
    param: float
    grid: GridSpec
    rho: Field
    rho_prime: Field
    l2_rho_sq: float
    l2_rho_prime_sq: float
    amplitude: float = 1.0
    # continuum normalisation constant, used by covariance_rate quadrature
    norm: float = 1.0

    @property
    def forcing_l2_sq(self) -> float:
        """``||A rho||^2``: the Ito correction entering KPZ and SHE."""
        return self.amplitude**2 * self.l2_rho_sq

    def profile(self, x):
        """Continuum ``(rho, rho')`` at ``x`` (normalised, without amplitude)."""
        rho, rho_p = _profile(self.kind, self.param, np.asarray(x, dtype=np.float64))
        return rho / self.norm, rho_p / self.norm


def build_mollifier(kind: str, param: float, grid: GridSpec, amplitude: float = 1.0) -> Mollifier:
    """Sample a unit-mass mollifier and its derivative on ``grid``.

    ``param`` is the standard deviation for ``gaussian`` and the support
    radius for ``bump``. Both must span at least four cells, and the
    kernel must sit well inside the periodic window.
    """
    if not grid.periodic:
        raise ValueError("forcing needs a periodic grid (circular convolution)")
    if grid.n % 2:
        raise ValueError("forcing needs an even number of cells")
    if param < 4.0 * grid.dx:
        raise ValueError(
            f"{kind} width {param} is under 4*dx={4 * grid.dx:.4g}; refine the grid (raise n)"
        )
    reach = 12.0 * param if kind == GAUSSIAN else param
    if reach >= grid.half_length:
        raise ValueError(f"{kind} kernel of width {param} does not fit in half-length {grid.half_length}")

    x = np.asarray(grid.x)
    rho, rho_p = _profile(kind, param, x)
    # fine quadrature of the continuum mass, so profile() integrates to one
    xf = np.linspace(-reach, reach, 200001)
    norm = float(np.trapezoid(_profile(kind, param, xf)[0], xf))
    mass = grid.dx * rho.sum()
    rho = rho / mass
    rho_p = rho_p / mass
    # exact odd symmetry of rho' about x=0 (node n/2); x=-L has no partner
    c = grid.n // 2
    m = np.arange(1, c)
    odd = 0.5 * (rho_p[c + m] - rho_p[c - m])
    rho_p = rho_p.copy()
    rho_p[c + m] = odd
    rho_p[c - m] = -odd
    rho_p[c] = 0.0
    rho_p[0] = 0.0
    return Mollifier(
        kind=kind,
        param=float(param),
        grid=grid,
        rho=Field(grid, rho),
        rho_prime=Field(grid, rho_p),
        l2_rho_sq=float(grid.dx * np.sum(rho**2)),
        l2_rho_prime_sq=float(grid.dx * np.sum(rho_p**2)),
        amplitude=float(amplitude),
        norm=norm,
    )


def covariance_rate(mollifier: Mollifier, lag: float) -> float:
    """Per-unit-time covariance of ``dV/dx`` at spatial separation ``lag``.

    Evaluates ``A^2 * int rho'(y) rho'(y + lag) dy`` by trapezoid
    quadrature of the continuum kernel on a fine grid.
    """
    if abs(lag) >= mollifier.grid.length:
        raise ValueError("|lag| must be below the domain length")
    reach = (12.0 if mollifier.kind == GAUSSIAN else 1.0) * mollifier.param
    y = np.linspace(-reach - abs(lag), reach + abs(lag), 400001)
    _, a = mollifier.profile(y)
    _, b = mollifier.profile(y + lag)
    return float(mollifier.amplitude**2 * np.trapezoid(a * b, y))


@dataclass(frozen=True, eq=False)
class ForcingIncrement:
    dV: Field
    dVx: Field
    dt: float


def stream_key(seed: int, stream: int = 0) -> np.ndarray:
    """Philox key for a (master seed, realization) pair."""
    return np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)


class ForcingSampler:
    """Reproducible source of forcing increments for one realization.

    The sampler keeps a step counter; :meth:`draw` returns the increment
    of the current step and advances. ``increment_arrays(step, dt)`` gives
    random access without touching the counter.
    """

    def __init__(self, mollifier: Mollifier, seed: int, stream: int = 0):
        self.mollifier = mollifier
        self.seed = int(seed)
        self.stream = int(stream)
        self.step = 0
        grid = self.grid = mollifier.grid
        self._n = grid.n
        self._dx = grid.dx
        a = mollifier.amplitude * grid.dx
        self._k = np.fft.rfft(np.fft.ifftshift(mollifier.rho.values)) * a
        kp = np.fft.rfft(np.fft.ifftshift(mollifier.rho_prime.values)) * a
        kp[0] = 0.0
        self._kp = kp
        self._key = stream_key(seed, stream)
        self._block = -1
        self._dv_block = None
        self._dvx_block = None

    def _load_block(self, block: int):
        counter = np.array([0, 0, 0, block], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=self._key, counter=counter))
        xi = gen.standard_normal((BLOCK_STEPS, self._n))
        xf = np.fft.rfft(xi, axis=1)
        self._dv_block = np.fft.irfft(xf * self._k, n=self._n, axis=1)
        self._dvx_block = np.fft.irfft(xf * self._kp, n=self._n, axis=1)
        self._block = block

    def increment_arrays(self, step: int, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        if not dt > 0:
            raise ValueError("dt must be positive")
        block, row = divmod(int(step), BLOCK_STEPS)
        if block != self._block:
            self._load_block(block)
        s = np.sqrt(dt / self._dx)
        return self._dv_block[row] * s, self._dvx_block[row] * s

    def block_arrays(self, block: int, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """All ``BLOCK_STEPS`` increments of one block, as fresh arrays."""
        if block != self._block:
            self._load_block(block)
        s = np.sqrt(dt / self._dx)
        return self._dv_block * s, self._dvx_block * s

    def draw(self, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        out = self.increment_arrays(self.step, dt)
        self.step += 1
        return out


class ZeroForcing:
    """Drop-in sampler producing identically zero increments."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._z = np.zeros(grid.n)
        self._z.flags.writeable = False
        self.step = 0

    def increment_arrays(self, step, dt):
        return self._z, self._z

    def block_arrays(self, block, dt):
        z = np.zeros((BLOCK_STEPS, self.grid.n))
        return z, z

    def draw(self, dt):
        self.step += 1
        return self._z, self._z


def sample_increment(sampler, dt: float) -> ForcingIncrement:
    """Draw the next forcing increment from ``sampler``."""
    dv, dvx = sampler.draw(dt)
    return ForcingIncrement(Field(sampler.grid, dv), Field(sampler.grid, dvx), float(dt))
