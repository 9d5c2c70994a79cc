import json

import pytest

from shocklab.cli import main
from shocklab.config import DEFAULTS, Config, flatten, parse_override


def test_defaults_and_overrides(tmp_path):
    c = Config()
    assert c["domain.n"] == 1024 and c["scheme.flux"] == "central"
    nested = tmp_path / "nested.yaml"
    nested.write_text("domain:\n  n: 512\nnoise:\n  sigma: 0.25\n")
    flat = tmp_path / "flat.yaml"
    flat.write_text("domain.n: 512\nnoise.sigma: 0.25\n")
    a, b = Config.load(nested), Config.load(flat)
    assert a.as_dict() == b.as_dict()
    assert a.hash() == b.hash()
    c = Config.load(nested, ["domain.n=256", "shock.gammas=[-1, 1]", "scheme.dt_max=null"])
    assert c["domain.n"] == 256 and c["shock.gammas"] == [-1, 1] and c["scheme.dt_max"] is None


def test_unknown_keys_and_bad_values_are_rejected(tmp_path):
    with pytest.raises(KeyError):
        Config({"domain.N": 3})
    with pytest.raises(ValueError):
        Config({"shock.a_B": 1.0, "shock.a_T": 1.0})
    with pytest.raises(ValueError):
        Config({"noise.kind": "cauchy"})
    with pytest.raises(ValueError):
        parse_override("domain.n")
    bad = tmp_path / "list.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        Config.load(bad)


def test_hash_tracks_results_not_workers():
    c = Config()
    assert c.hash() == Config().hash()
    assert c.with_updates(**{"run.workers": 4}).hash() == c.hash()
    assert c.with_updates(**{"noise.seed": 1}).hash() != c.hash()
    assert len(c.hash()) == 16


def test_flatten():
    assert flatten({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {"a.b": 1, "a.c.d": 2, "e": 3}
    assert all(k in flatten({k: 0}) for k in DEFAULTS)


def read(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_verify_writes_report(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--out", str(out)]) == 0
    recs = read(out / "report.ndjson")
    assert recs and all(r["experiment"] == "verify" for r in recs)
    assert len({r["config_hash"] for r in recs}) == 1
    assert all(r["pass"] for r in recs if r.get("hard"))


def test_verify_hard_failure_exits_one(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--set", "verify.n=1024", "--set", "verify.tol=1e-30"]) == 1


def test_config_error_exits_two(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path), "--set", "domain.N=3"]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["verify", "--out", str(tmp_path), "--config", str(tmp_path / "missing.yaml")]) == 2


def test_simulate_is_deterministic_and_writes_snapshots(tmp_path):
    args = ["simulate", "--seed", "5", "--set", "domain.n=512", "--set", "time.horizon=0.5",
            "--set", "run.seeds=2", "--set", "output.snapshots=true"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert (a / "report.ndjson").read_bytes() == (b / "report.ndjson").read_bytes()
    snaps = sorted(p.name for p in (a / "snapshots").glob("*.csv"))
    assert snaps
    assert snaps == sorted(p.name for p in (b / "snapshots").glob("*.csv"))
    recs = read(a / "report.ndjson")
    assert {r["seed"] for r in recs if "seed" in r} == {0, 1}
