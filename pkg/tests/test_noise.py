import numpy as np
import pytest

from shocklab.grid import GridSpec, derivative_array
from shocklab.noise import (
    BLOCK_STEPS,
    ForcingSampler,
    ZeroForcing,
    build_mollifier,
    covariance_rate,
    sample_increment,
)

SIGMA = 0.5
# 1/(2 sigma sqrt(pi)) and 1/(4 sqrt(pi) sigma^3) at sigma = 0.5
RHO_SQ = 0.5641895835477563
RHO_PRIME_SQ = 1.1283791670955126


@pytest.fixture(scope="module")
def grid():
    return GridSpec(8.0, 256)


def test_gaussian_norms(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    assert grid.dx * m.rho.values.sum() == pytest.approx(1.0, abs=1e-12)
    assert m.l2_rho_sq == pytest.approx(RHO_SQ, abs=1e-6)
    assert m.l2_rho_prime_sq == pytest.approx(RHO_PRIME_SQ, abs=1e-6)
    assert m.forcing_l2_sq == pytest.approx(RHO_SQ, abs=1e-6)


def test_bump_support(grid):
    r = 1.5
    m = build_mollifier("bump", r, grid)
    assert np.all(m.rho.values >= 0.0)
    outside = np.abs(grid.x) >= r
    assert np.all(m.rho.values[outside] == 0.0)
    assert np.all(m.rho_prime.values[outside] == 0.0)


@pytest.mark.parametrize("kind,param", [("gaussian", 0.2), ("bump", 0.2)])
def test_unresolved_width_is_rejected(grid, kind, param):
    with pytest.raises(ValueError, match="refine the grid"):
        build_mollifier(kind, param, grid)


def test_forcing_needs_periodic_grid():
    with pytest.raises(ValueError):
        build_mollifier("gaussian", SIGMA, GridSpec(8.0, 256, "clamped"))


def test_covariance_rate_oracles(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    c0 = covariance_rate(m, 0.0)
    assert c0 == pytest.approx(RHO_PRIME_SQ, rel=1e-8)
    assert c0 == pytest.approx(m.l2_rho_prime_sq, rel=1e-6)
    # autocorrelation of rho' for a gaussian: (1 - l^2/(2 s^2)) exp(-l^2/(4 s^2))
    assert covariance_rate(m, SIGMA) == pytest.approx(c0 * 0.5 * np.exp(-0.25), rel=1e-8)
    assert covariance_rate(m, 6 * SIGMA) == pytest.approx(c0 * -17.0 * np.exp(-9.0), rel=1e-6)
    assert abs(covariance_rate(m, 10 * SIGMA)) < 1e-6 * c0


def test_same_seed_same_increment(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    a = ForcingSampler(m, 7, 3)
    b = ForcingSampler(m, 7, 3)
    for step in (0, 5, 40, 5):
        np.testing.assert_array_equal(a.increment_arrays(step, 1e-3)[1], b.increment_arrays(step, 1e-3)[1])
    # random access does not depend on the order of earlier requests
    c = ForcingSampler(m, 7, 3)
    np.testing.assert_array_equal(c.increment_arrays(40, 1e-3)[0], a.increment_arrays(40, 1e-3)[0])
    assert not np.array_equal(ForcingSampler(m, 7, 4).increment_arrays(0, 1e-3)[0], a.increment_arrays(0, 1e-3)[0])


def test_block_arrays_match_single_steps(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    s = ForcingSampler(m, 1, 0)
    dv, dvx = s.block_arrays(2, 1e-3)
    t = ForcingSampler(m, 1, 0)
    for r in (0, 17, BLOCK_STEPS - 1):
        a, b = t.increment_arrays(2 * BLOCK_STEPS + r, 1e-3)
        np.testing.assert_array_equal(dv[r], a)
        np.testing.assert_array_equal(dvx[r], b)


def test_derivative_increment_has_zero_mean(grid):
    m = build_mollifier("gaussian", SIGMA, grid, amplitude=2.0)
    s = ForcingSampler(m, 11)
    for _ in range(5):
        inc = sample_increment(s, 1e-2)
        assert abs(inc.dVx.values.sum()) < 1e-12
    assert s.step == 5


def test_dvx_is_derivative_of_dv():
    errs = []
    for n in (256, 512, 1024):
        g = GridSpec(8.0, n)
        m = build_mollifier("gaussian", SIGMA, g)
        # same white noise on every level: project a fixed smooth field
        rng = np.random.default_rng(0)
        coef = (rng.normal(size=20) + 1j * rng.normal(size=20)) / (1 + np.arange(20))
        xi_hat = np.zeros(n // 2 + 1, complex)
        xi_hat[:20] = coef * n
        xi = np.fft.irfft(xi_hat, n=n)
        s = ForcingSampler(m, 0)
        dv = np.fft.irfft(np.fft.rfft(xi) * s._k, n=n)
        dvx = np.fft.irfft(np.fft.rfft(xi) * s._kp, n=n)
        errs.append(np.abs(derivative_array(dv, g.dx, True) - dvx).max() / np.abs(dvx).max())
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(slopes > 1.8), slopes


def test_node_variance_matches_norm(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    s = ForcingSampler(m, 20240601, 0)
    dt = 1e-4
    n_blocks = 100_000 // BLOCK_STEPS
    samples = np.concatenate([s.block_arrays(b, dt)[0][:, 0] for b in range(n_blocks)])
    v = samples**2 / dt
    est, se = v.mean(), v.std(ddof=1) / np.sqrt(len(v))
    assert abs(est - m.l2_rho_sq) <= 5 * se


def test_distinct_seeds_are_uncorrelated(grid):
    m = build_mollifier("gaussian", SIGMA, grid)
    a, b = ForcingSampler(m, 1, 0), ForcingSampler(m, 2, 0)
    n_blocks = 10_000 // BLOCK_STEPS
    x = np.concatenate([a.block_arrays(k, 1.0)[1][:, 0] for k in range(n_blocks)])
    y = np.concatenate([b.block_arrays(k, 1.0)[1][:, 0] for k in range(n_blocks)])
    r = np.corrcoef(x, y)[0, 1]
    assert abs(r) <= 5.0 / np.sqrt(len(x))


def test_zero_forcing(grid):
    z = ZeroForcing(grid)
    dv, dvx = z.draw(0.1)
    assert not dv.any() and not dvx.any() and z.step == 1
    assert z.block_arrays(0, 0.1)[1].shape == (BLOCK_STEPS, grid.n)
