"""Small, fast runs of each experiment: record shape and the obvious checks."""

import numpy as np
import pytest

from shocklab.config import Config
from shocklab.experiments import (
    EXPERIMENTS,
    colehopf_level,
    sandwiched_initial,
)
from shocklab.grid import GridSpec

SMALL = {"domain.n": 512, "run.seeds": 1}


def test_verify_is_informational_on_coarse_grids():
    recs, snaps = EXPERIMENTS["verify"](Config({"verify.n": 64}))
    assert recs and not snaps
    assert not any(r["hard"] for r in recs)
    names = {r["name"] for r in recs}
    assert {"tail_left", "gamma_of", "flux_gap", "l1_equals_gamma_gap", "travelling_wave_reduction"} <= names


def test_simulate_zero_noise_tracks_the_wave():
    cfg = Config(dict(SMALL, **{"noise.amplitude": 0.0, "time.horizon": 1.0, "shock.a_B": -1.0,
                                "shock.a_T": 2.0, "shock.bs": [0.0]}))
    recs, _ = EXPERIMENTS["simulate"](cfg)
    traj = [r for r in recs if r["name"] == "trajectory"]
    assert traj and all(r["pass"] for r in traj)
    last = max(traj, key=lambda r: r["t"])
    assert last["b_expected"] == pytest.approx(0.5 * last["t"])


def test_sandwiched_initial_data():
    g = GridSpec(20.0, 256)
    rows, lo, hi = sandwiched_initial(g, -1.0, 1.0, -4.0, 4.0, 4)
    assert rows.shape == (4, 256)
    assert np.all(lo <= rows) and np.all(rows <= hi)
    assert np.all(lo <= hi)


def test_stability_distances_shrink():
    cfg = Config(dict(SMALL, **{"time.horizon": 4.0}))
    recs, _ = EXPERIMENTS["stability"](cfg)
    summaries = [r for r in recs if r["name"] == "stability_summary"]
    assert len(summaries) == 3
    assert all(r["terminal"] < r["initial"] for r in summaries)


def test_colehopf_level_agrees_without_noise():
    cfg = Config({"noise.amplitude": 0.0, "colehopf.horizon": 0.2})
    coarse = colehopf_level(cfg, 256)
    fine = colehopf_level(cfg, 512)
    assert fine["sup"] < coarse["sup"] < 0.05
    assert fine["superposition_sup"] < 0.05


@pytest.mark.slow
def test_stationarity_record_shape():
    cfg = Config(dict(SMALL, **{"ensemble.M": 30, "ensemble.burn_in": 2.0, "ensemble.delta_T": 1.0,
                                "noise.amplitude": 2.0}))
    recs, _ = EXPERIMENTS["stationarity"](cfg)
    names = {r["name"] for r in recs}
    assert {"survival", "mean_tilt_weight", "stationarity:summary", "estimator_agreement:summary",
            "negative_control:summary"} <= names
    hard = {r["name"] for r in recs if r.get("hard")}
    assert "estimator_agreement:summary" not in hard
    assert "stationarity:summary" in hard


def test_stationarity_rejects_small_ensembles():
    with pytest.raises(ValueError):
        EXPERIMENTS["stationarity"](Config({"ensemble.M": 29}))
