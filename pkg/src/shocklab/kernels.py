"""Explicit finite-difference kernels for the time steppers.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version. ``SHOCKLAB_BACKEND=numpy`` selects the latter;
the two agree to round-off (see ``tests/test_kernels.py``).

Rows of a 2-D array are independent fields on one grid. Boundary data
enters through per-row ghost values ``gl`` (at ``x_{-1}``) and ``gr``
(at ``x_n``); periodic rows simply pass their wrapped neighbours.
"""

import numpy as np

from ._accel import njit, use_numba

CENTRAL = 0
ENGQUIST_OSHER = 1
LAX_FRIEDRICHS = 2

FLUX_CODES = {
    "central": CENTRAL,
    "engquist_osher": ENGQUIST_OSHER,
    "lax_friedrichs": LAX_FRIEDRICHS,
}


@njit
def _flux(a, b, code):
    if code == CENTRAL:
        return 0.25 * (a * a + b * b)
    if code == ENGQUIST_OSHER:
        ap = a if a > 0.0 else 0.0
        bm = b if b < 0.0 else 0.0
        return 0.5 * (ap * ap + bm * bm)
    alpha = abs(a) if abs(a) > abs(b) else abs(b)
    return 0.25 * (a * a + b * b) - 0.5 * alpha * (b - a)


@njit
def _burgers_nb(u, out, dvx, dt, dx, code, gl, gr, diffuse):
    nf, n = u.shape
    lam = dt / dx
    mu = 0.5 * dt / (dx * dx) if diffuse else 0.0
    for r in range(nf):
        left = gl[r]
        f_left = _flux(left, u[r, 0], code)
        for j in range(n):
            uj = u[r, j]
            right = u[r, j + 1] if j < n - 1 else gr[r]
            f_right = _flux(uj, right, code)
            out[r, j] = uj - lam * (f_right - f_left) + mu * (right - 2.0 * uj + left) + dvx[j]
            f_left = f_right
            left = uj


def _burgers_np(u, out, dvx, dt, dx, code, gl, gr, diffuse):
    ext = np.concatenate([gl[:, None], u, gr[:, None]], axis=1)
    a, b = ext[:, :-1], ext[:, 1:]
    if code == CENTRAL:
        f = 0.25 * (a * a + b * b)
    elif code == ENGQUIST_OSHER:
        f = 0.5 * (np.maximum(a, 0.0) ** 2 + np.minimum(b, 0.0) ** 2)
    else:
        alpha = np.maximum(np.abs(a), np.abs(b))
        f = 0.25 * (a * a + b * b) - 0.5 * alpha * (b - a)
    mu = 0.5 * dt / (dx * dx) if diffuse else 0.0
    out[:] = u - (dt / dx) * (f[:, 1:] - f[:, :-1]) + mu * (ext[:, 2:] - 2.0 * u + ext[:, :-2]) + dvx


@njit
def _burgers_block_nb(u, dvx_rows, dt, dx, code):
    # periodic rows only; advances len(dvx_rows) steps in place
    nf, n = u.shape
    tmp = np.empty_like(u)
    gl = np.empty(nf)
    gr = np.empty(nf)
    for k in range(dvx_rows.shape[0]):
        for r in range(nf):
            gl[r] = u[r, n - 1]
            gr[r] = u[r, 0]
        _burgers_nb(u, tmp, dvx_rows[k], dt, dx, code, gl, gr, True)
        u[:, :] = tmp


def _burgers_block_np(u, dvx_rows, dt, dx, code):
    tmp = np.empty_like(u)
    for k in range(dvx_rows.shape[0]):
        _burgers_np(u, tmp, dvx_rows[k], dt, dx, code, u[:, -1].copy(), u[:, 0].copy(), True)
        u[:] = tmp


@njit
def _kpz_nb(h, out, dv, dt, dx, ito, gl, gr):
    nf, n = h.shape
    mu = 0.5 * dt / (dx * dx)
    half = 0.5 * dt / (4.0 * dx * dx)
    for r in range(nf):
        for j in range(n):
            left = h[r, j - 1] if j > 0 else gl[r]
            right = h[r, j + 1] if j < n - 1 else gr[r]
            g = right - left
            out[r, j] = h[r, j] + mu * (right - 2.0 * h[r, j] + left) - half * g * g + ito + dv[j]


def _kpz_np(h, out, dv, dt, dx, ito, gl, gr):
    ext = np.concatenate([gl[:, None], h, gr[:, None]], axis=1)
    g = ext[:, 2:] - ext[:, :-2]
    out[:] = (
        h
        + 0.5 * dt / (dx * dx) * (ext[:, 2:] - 2.0 * h + ext[:, :-2])
        - 0.5 * dt / (4.0 * dx * dx) * g * g
        + ito
        + dv
    )


@njit
def _she_nb(phi, out, dv, dt, dx, ito, gl, gr):
    nf, n = phi.shape
    mu = 0.5 * dt / (dx * dx)
    for r in range(nf):
        for j in range(n):
            left = phi[r, j - 1] if j > 0 else gl[r]
            right = phi[r, j + 1] if j < n - 1 else gr[r]
            heat = phi[r, j] + mu * (right - 2.0 * phi[r, j] + left)
            out[r, j] = heat * np.exp(-dv[j] - ito)


def _she_np(phi, out, dv, dt, dx, ito, gl, gr):
    ext = np.concatenate([gl[:, None], phi, gr[:, None]], axis=1)
    heat = phi + 0.5 * dt / (dx * dx) * (ext[:, 2:] - 2.0 * phi + ext[:, :-2])
    out[:] = heat * np.exp(-dv - ito)


@njit
def _z_nb(z, out, vel, dt, dx, gl, gr, upwind):
    n = z.shape[0]
    mu = 0.5 * dt / (dx * dx)
    lam = dt / dx
    for j in range(n):
        left = z[j - 1] if j > 0 else gl
        right = z[j + 1] if j < n - 1 else gr
        c = vel[j]
        if upwind:
            if c > 0.0:
                adv = c * (z[j] - left)
            else:
                adv = c * (right - z[j])
        else:
            adv = 0.5 * c * (right - left)
        out[j] = z[j] + mu * (right - 2.0 * z[j] + left) - lam * adv


def _z_np(z, out, vel, dt, dx, gl, gr, upwind):
    ext = np.concatenate([[gl], z, [gr]])
    left, right = ext[:-2], ext[2:]
    if upwind:
        adv = np.where(vel > 0.0, vel * (z - left), vel * (right - z))
    else:
        adv = 0.5 * vel * (right - left)
    out[:] = z + 0.5 * dt / (dx * dx) * (right - 2.0 * z + left) - (dt / dx) * adv


if use_numba():
    burgers_step = _burgers_nb
    burgers_block = _burgers_block_nb
    kpz_step = _kpz_nb
    she_step = _she_nb
    z_step = _z_nb
else:
    burgers_step = _burgers_np
    burgers_block = _burgers_block_np
    kpz_step = _kpz_np
    she_step = _she_np
    z_step = _z_np

NUMPY_KERNELS = {
    "burgers_step": _burgers_np,
    "burgers_block": _burgers_block_np,
    "kpz_step": _kpz_np,
    "she_step": _she_np,
    "z_step": _z_np,
}
NUMBA_KERNELS = {
    "burgers_step": _burgers_nb,
    "burgers_block": _burgers_block_nb,
    "kpz_step": _kpz_nb,
    "she_step": _she_nb,
    "z_step": _z_nb,
}
