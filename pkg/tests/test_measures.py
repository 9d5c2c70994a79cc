import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab.errors import DegenerateEnsembleError
from shocklab.grid import Field, GridSpec
from shocklab.measures import (
    ERGODIC,
    PER_MEMBER,
    EnsembleMember,
    Observable,
    TiltSpec,
    builtin_observables,
    gap_at_anchor,
    gap_mean,
    mean_profile_at,
    shift_member,
    shift_sample,
    stationarity_report,
    tilt_weight,
    two_sample_z,
    u_at,
    weighted_mean_se,
    weighted_stats,
)
from shocklab.shock import shock_profile

# gap 2 + sin(x) on [-2pi, 2pi): size-biased mean of the gap is <g^2>/<g> = (4 + 1/2)/2
SIZE_BIASED_GAP = 2.25


@pytest.fixture(scope="module")
def circle():
    return GridSpec(2 * np.pi, 512)


def sine_pair(grid):
    gap = 2.0 + np.sin(grid.x)
    return Field(grid, -0.5 * gap), Field(grid, 0.5 * gap)


def member(vB, vT, b=0.0, seed=0, weight=1.0, with_u=False):
    u = shock_profile(vB, vT, b, 0.0) if with_u else None
    return EnsembleMember(vB, vT, u, b, seed, weight)


def test_gap_mean_examples(circle):
    assert gap_mean(Field.constant(circle, -1.5), Field.constant(circle, 0.5)) == pytest.approx(2.0, abs=1e-15)
    vB, vT = sine_pair(circle)
    assert gap_mean(vB, vT) == pytest.approx(2.0, abs=1e-14)
    rng = np.random.default_rng(0)
    vB = Field(circle, rng.normal(size=circle.n))
    vT = vB + rng.uniform(0.1, 3.0, size=circle.n)
    for k in (1, 17, 300):
        assert gap_mean(vB.shifted(k), vT.shifted(k)) == gap_mean(vB, vT)


def test_tilt_weight_examples(circle):
    vB, vT = Field.constant(circle, -1.0), Field.constant(circle, 1.0)
    assert tilt_weight(member(vB, vT), TiltSpec(0.0, ERGODIC, 2.0)) == 1.0
    vB, vT = sine_pair(circle)
    peak = np.pi / 2
    w = tilt_weight(member(vB, vT, b=peak), TiltSpec(peak, PER_MEMBER))
    assert w == pytest.approx(1.5, abs=1e-4)
    with pytest.raises(ValueError):
        TiltSpec(0.0, ERGODIC)
    with pytest.raises(ValueError):
        tilt_weight(member(vT, vB), TiltSpec(0.0, PER_MEMBER))


def test_weighted_stats_trivial_cases(circle):
    vB, vT = sine_pair(circle)
    ens = [member(vB, vT, seed=i, weight=w) for i, w in enumerate([0.5, 1.0, 2.0, 0.1])]
    one = Observable("one", lambda m: 1.0)
    assert weighted_stats(ens, one) == (1.0, 0.0)
    F = np.array([1.0, 2.0, 4.0, -3.0])
    est, se = weighted_mean_se(F, np.ones(4))
    assert est == pytest.approx(F.mean(), abs=1e-15)
    # jackknife of the plain mean is the textbook standard error
    assert se == pytest.approx(F.std(ddof=1) / 2.0, rel=1e-12)
    with pytest.raises(DegenerateEnsembleError):
        weighted_mean_se(F, np.zeros(4))
    with pytest.raises(DegenerateEnsembleError):
        weighted_stats([], one)


def test_weighted_stats_is_order_independent(circle):
    vB, vT = sine_pair(circle)
    rng = np.random.default_rng(1)
    ens = [member(vB.shifted(int(k)), vT.shifted(int(k)), seed=i, weight=1.0) for i, k in
           enumerate(rng.integers(0, circle.n, 40))]
    obs = gap_at_anchor()
    assert weighted_stats(ens, obs) == weighted_stats(ens[::-1], obs)


def test_shift_sample_constant_pair_is_plain_rotation():
    g = GridSpec(5.0, 100)
    vB, vT = Field.constant(g, -1.0), Field.constant(g, 1.0)
    m = shift_sample(member(vB, vT, with_u=True), 0.0, np.random.default_rng(0))
    assert m.weight == 1.0
    np.testing.assert_array_equal(m.v_B.values, vB.values)


def test_shift_sample_size_biases_the_gap(circle):
    vB, vT = sine_pair(circle)
    base = member(vB, vT)
    rng = np.random.default_rng(2024)
    obs = gap_at_anchor()
    vals = np.array([obs(shift_sample(base, 0.0, rng)) for _ in range(4000)])
    est, se = vals.mean(), vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(est - SIZE_BIASED_GAP) <= 3 * se
    # and the plain circle average is clearly different
    assert abs(gap_mean(vB, vT) - SIZE_BIASED_GAP) > 20 * se


def test_shift_sample_is_idempotent_in_law(circle):
    vB, vT = sine_pair(circle)
    base = member(vB, vT)
    rng = np.random.default_rng(7)
    obs = gap_at_anchor()
    once = np.array([obs(shift_sample(base, 0.0, rng)) for _ in range(500)])
    twice = np.array([obs(shift_sample(shift_sample(base, 0.0, rng), 0.0, rng)) for _ in range(500)])
    z = two_sample_z(once.mean(), once.std(ddof=1) / np.sqrt(500), twice.mean(), twice.std(ddof=1) / np.sqrt(500))
    assert abs(z) <= 3.0


def test_tilt_and_shift_estimators_agree(circle):
    vB, vT = sine_pair(circle)
    rng = np.random.default_rng(11)
    spec = TiltSpec(0.0, ERGODIC, 2.0)
    plain = [member(vB.shifted(int(k)), vT.shifted(int(k)), seed=i) for i, k in enumerate(rng.integers(0, circle.n, 400))]
    est0, se0 = weighted_stats(plain, gap_at_anchor(), spec)
    direct = [shift_sample(member(vB, vT, seed=i), 0.0, rng) for i in range(400)]
    est1, se1 = weighted_stats(direct, gap_at_anchor())
    assert abs(two_sample_z(est0, se0, est1, se1)) <= 3.0
    assert est0 == pytest.approx(SIZE_BIASED_GAP, abs=3 * se0)


def test_shift_member_rotates_everything(circle):
    vB, vT = sine_pair(circle)
    m = member(vB, vT, with_u=True, weight=3.0)
    s = shift_member(m, 5, shock_b=0.1)
    np.testing.assert_array_equal(s.v_T.values, np.roll(vT.values, 5))
    np.testing.assert_array_equal(s.u.values, np.roll(m.u.values, 5))
    assert s.weight == 1.0 and s.shock_b == 0.1


def test_builtin_observables_are_bounded(circle):
    vB, vT = sine_pair(circle)
    m = member(vB, vT, with_u=True)
    values = {o.name: o(m) for o in builtin_observables()}
    assert values["gap_at_anchor"] == pytest.approx(2.0)
    assert values["shock_L1_to_explicit"] == pytest.approx(0.0, abs=1e-12)
    assert u_at(-5.0)(m) == pytest.approx(vT.values[circle.nearest_index(-5.0)], abs=1e-2)
    assert -1.5 <= mean_profile_at(0.0)(m) <= 1.5
    assert [o.informational for o in builtin_observables()].count(True) == 1


def test_report_on_identical_ensembles(circle):
    vB, vT = sine_pair(circle)
    rng = np.random.default_rng(3)
    ens = [member(vB.shifted(int(k)), vT.shifted(int(k)), seed=i, with_u=True)
           for i, k in enumerate(rng.integers(0, circle.n, 30))]
    rep = stationarity_report(ens, ens, builtin_observables())
    assert all(r["z"] == 0.0 for r in rep["records"])
    assert rep["pass_fraction"] == 1.0
    assert set(rep["records"][0]) >= {"name", "est_t0", "se_t0", "est_t1", "se_t1", "z", "pass"}
    with pytest.raises(DegenerateEnsembleError):
        stationarity_report(ens[:29], ens, builtin_observables())


def test_untilted_control_fails(circle):
    vB, vT = sine_pair(circle)
    rng = np.random.default_rng(5)
    plain = [member(vB.shifted(int(k)), vT.shifted(int(k)), seed=i, with_u=True)
             for i, k in enumerate(rng.integers(0, circle.n, 800))]
    # the means differ by 1/4 with per-member sd near 0.7: z is about 7 at 800 members
    tilted = [shift_sample(member(vB, vT, seed=1000 + i, with_u=True), 0.0, rng) for i in range(800)]
    rep = stationarity_report(plain, tilted, [gap_at_anchor()])
    assert not rep["records"][0]["pass"]


def test_two_sample_z_edges():
    assert two_sample_z(1.0, 0.0, 1.0, 0.0) == 0.0
    assert two_sample_z(2.0, 0.0, 1.0, 0.0) == np.inf
    assert two_sample_z(1.0, 3.0, 0.0, 4.0) == pytest.approx(0.2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=30),
       st.floats(min_value=0.1, max_value=10))
def test_weight_scale_invariance(F, c):
    w = np.linspace(0.5, 2.0, len(F))
    a = weighted_mean_se(np.array(F), w)
    b = weighted_mean_se(np.array(F), c * w)
    assert a[0] == pytest.approx(b[0], rel=1e-12, abs=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-9, abs=1e-12)
