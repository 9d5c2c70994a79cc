import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab.errors import GridMismatchError, NonFiniteError, OutOfRangeError
from shocklab.grid import (
    Field,
    GridSpec,
    MonotoneField,
    cumulative_from,
    interpolate,
    invert_monotone,
    l1_distance,
    lagrange4,
    read_csv,
    spatial_derivative,
    write_csv,
)


def test_gridspec_nodes():
    g = GridSpec(2.0, 8)
    assert g.dx == 0.5
    np.testing.assert_array_equal(g.x, [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    assert not g.contains(2.0) and g.contains(-2.0)


@pytest.mark.parametrize("L,n", [(1.0, 4), (0.0, 16), (-1.0, 16)])
def test_gridspec_rejects_bad_sizes(L, n):
    with pytest.raises(ValueError):
        GridSpec(L, n)


def test_field_rejects_nonfinite_and_mismatch():
    g = GridSpec(1.0, 8)
    with pytest.raises(NonFiniteError):
        Field(g, np.r_[np.nan, np.zeros(7)])
    with pytest.raises(GridMismatchError):
        Field.constant(g, 1.0) + Field.constant(GridSpec(1.0, 16), 1.0)
    f = Field.constant(g, 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_monotone_field_is_strict():
    g = GridSpec(1.0, 8)
    MonotoneField(g, np.arange(8.0))
    with pytest.raises(ValueError):
        MonotoneField(g, np.r_[0.0, 0.0, np.arange(2.0, 8.0)])


def test_derivative_of_constant_is_zero():
    g = GridSpec(3.0, 64)
    assert np.all(spatial_derivative(Field.constant(g, 4.2)).values == 0.0)


def test_derivative_of_linear_on_clamped_grid():
    g = GridSpec(3.0, 64, "clamped")
    d = spatial_derivative(Field.from_function(g, lambda x: x))
    np.testing.assert_allclose(d.values, 1.0, atol=1e-12)


def test_derivative_second_order():
    errs = []
    for n in (256, 512, 1024):
        g = GridSpec(5.0, n)
        f = Field.from_function(g, lambda x: np.sin(np.pi * x / 5.0))
        exact = np.pi / 5.0 * np.cos(np.pi * g.x / 5.0)
        errs.append(np.abs(spatial_derivative(f).values - exact).max())
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((slopes > 1.9) & (slopes < 2.1))


def test_cumulative_from_constant_and_zero():
    g = GridSpec(4.0, 64)
    np.testing.assert_allclose(cumulative_from(Field.constant(g, 2.0), 0.0).values, 2.0 * g.x, atol=1e-13)
    assert np.all(cumulative_from(Field.constant(g, 0.0), 1.3).values == 0.0)
    with pytest.raises(OutOfRangeError):
        cumulative_from(Field.constant(g, 1.0), 4.0)


@pytest.mark.parametrize("order,rate", [(2, 2.0), (4, 4.0)])
def test_cumulative_from_convergence(order, rate):
    L = 5.0
    errs = []
    for n in (128, 256, 512):
        g = GridSpec(L, n)
        f = Field.from_function(g, lambda x: np.cos(np.pi * x / L))
        F = cumulative_from(f, 0.3, order=order).values
        exact = L / np.pi * (np.sin(np.pi * g.x / L) - np.sin(np.pi * 0.3 / L))
        errs.append(np.abs(F - exact).max())
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(slopes > rate - 0.3), slopes


def test_derivative_then_cumulative_recovers_field():
    L = 5.0
    errs = []
    for n in (128, 256, 512):
        g = GridSpec(L, n)
        f = Field.from_function(g, lambda x: np.sin(np.pi * x / L) + 0.5 * np.cos(2 * np.pi * x / L))
        back = cumulative_from(spatial_derivative(f), 0.0).values
        errs.append(np.abs((back - back.mean()) - (f.values - f.values.mean())).max())
    slopes = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((slopes > 1.7) & (slopes < 2.3))


def test_interpolate_examples():
    g = GridSpec(2.0, 8)
    f = Field(g, np.arange(8.0) * 2 + 1)
    assert interpolate(f, g.x[3]) == f.values[3]
    assert interpolate(f, -1.75) == 2.0  # between nodes valued 1 and 3
    assert interpolate(f, 2.0 - g.dx / 2) == 0.5 * (f.values[-1] + f.values[0])
    with pytest.raises(OutOfRangeError):
        interpolate(Field(g.with_topology("clamped"), f.values), 2.0)


def test_invert_monotone_examples():
    g = GridSpec(1.0, 64)
    assert invert_monotone(MonotoneField(g, 2.0 * g.x), 1.0) == pytest.approx(0.5, abs=1e-14)
    assert invert_monotone(MonotoneField(g, g.x.copy()), 0.0) == pytest.approx(0.0, abs=1e-15)
    g = GridSpec(2.0, 1024)
    F = MonotoneField(g, g.x**3 + g.x)
    assert invert_monotone(F, 2.0) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(OutOfRangeError):
        invert_monotone(F, 20.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=255), st.floats(min_value=0.25, max_value=3.0))
def test_invert_monotone_round_trip(j, slope):
    g = GridSpec(3.0, 256)
    F = MonotoneField(g, slope * g.x + 0.2 * np.sin(g.x))
    assert invert_monotone(F, F.values[j]) == pytest.approx(g.x[j], abs=1e-10)


def test_l1_distance_examples():
    g = GridSpec(2.0, 40)
    one, zero = Field.constant(g, 1.0), Field.constant(g, 0.0)
    assert l1_distance(one, one) == 0.0
    assert l1_distance(one, zero) == pytest.approx(4.0, rel=1e-14)
    assert l1_distance(one, zero, window=(0.0, 1.0)) == pytest.approx(g.dx * 11)
    with pytest.raises(ValueError):
        l1_distance(one, zero, window=(1.0, 0.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_l1_symmetry_and_triangle(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(1.0, 32)
    f, h, k = (Field(g, rng.normal(size=32)) for _ in range(3))
    assert l1_distance(f, h) == l1_distance(h, f)
    assert l1_distance(f, k) <= l1_distance(f, h) + l1_distance(h, k) + 1e-15


def test_lagrange4_is_exact_on_cubics():
    xs = np.sort(np.random.default_rng(1).uniform(-2, 2, 12))
    p = lambda x: 1 - 2 * x + 0.5 * x**2 - x**3
    q = np.linspace(-1.5, 1.5, 17)
    np.testing.assert_allclose(lagrange4(xs, p(xs), q), p(q), atol=1e-11)


def test_csv_round_trip(tmp_path):
    g = GridSpec(3.0, 16)
    f = Field.from_function(g, np.sin)
    write_csv(f, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,value"
    back = read_csv(tmp_path / "f.csv", g)
    np.testing.assert_array_equal(back.values, f.values)
    with pytest.raises(GridMismatchError):
        read_csv(tmp_path / "f.csv", GridSpec(3.0, 32))
