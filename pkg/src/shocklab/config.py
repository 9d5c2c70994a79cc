"""Experiment configuration: flat dotted keys, YAML files, CLI overrides.

A config file is a YAML mapping. Keys may be written flat
(``domain.n: 512``) or nested (``domain: {n: 512}``); both flatten to the
same dotted key. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Any, Dict, Iterable, Mapping, Optional

import yaml

WORKERS_ENV = "SHOCKLAB_WORKERS"
HASH_EXEMPT = ("run.workers",)

DEFAULTS: Dict[str, Any] = {
    "domain.L": 20.0,
    "domain.n": 1024,
    "noise.kind": "gaussian",
    "noise.sigma": 0.5,
    "noise.radius": 2.0,
    "noise.seed": 20240601,
    "noise.amplitude": 0.5,
    "scheme.flux": "central",
    "scheme.diffusion": "explicit",
    "scheme.cfl": 0.9,
    "scheme.dt_max": None,
    "scheme.z_advection": "central",
    "scheme.gap_floor": 1e-8,
    "time.horizon": 10.0,
    "time.output_every": 1.0,
    "tracker.method": "levelset",
    "tracker.zeta": 0.0,
    "tracker.test_radius": 2.0,
    "shock.a_B": -1.0,
    "shock.a_T": 1.0,
    "shock.gammas": [0.0],
    "shock.bs": [0.0],
    "ensemble.M": 200,
    "ensemble.delta_T": 5.0,
    "ensemble.burn_in": 20.0,
    "ensemble.z_crit": 3.0,
    "ensemble.min_survival": 0.8,
    "stability.gamma_L": -4.0,
    "stability.gamma_R": 4.0,
    "stability.count": 3,
    "colehopf.levels": [512, 1024, 2048],
    "colehopf.horizon": 1.0,
    "verify.n": 2048,
    "verify.tol": 1e-6,
    "run.seeds": 10,
    "run.workers": None,
    "output.snapshots": False,
}

KINDS = ("verify", "simulate", "stationarity", "stability", "colehopf")


def flatten(mapping: Mapping, prefix: str = "") -> Dict[str, Any]:
    out = {}
    for k, v in mapping.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_override(text: str):
    """``key=value`` with the value parsed as YAML (so ``3``, ``[1,2]``, ``null`` work)."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


class Config:
    """Resolved configuration. Behaves like a read-only mapping of dotted keys."""

    def __init__(self, values: Optional[Mapping[str, Any]] = None):
        merged = dict(DEFAULTS)
        for k, v in (values or {}).items():
            if k not in DEFAULTS:
                raise KeyError(f"unknown config key {k!r}")
            merged[k] = v
        self._v = merged
        self._validate()

    @classmethod
    def load(cls, path=None, overrides: Iterable[str] = ()) -> "Config":
        values = {}
        if path is not None:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
            if not isinstance(data, Mapping):
                raise ValueError(f"{path}: top level must be a mapping")
            values.update(flatten(data))
        for text in overrides:
            k, v = parse_override(text)
            values[k] = v
        return cls(values)

    def with_updates(self, **dotted) -> "Config":
        """Copy with keys replaced; pass dotted keys via ``**{"domain.n": 512}``."""
        v = {k: val for k, val in self._v.items()}
        v.update(dotted)
        return Config(v)

    def __getitem__(self, key):
        return self._v[key]

    def get(self, key, default=None):
        return self._v.get(key, default)

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._v)

    def hash(self) -> str:
        """Short digest of every key that can change results (the worker count cannot)."""
        v = {k: val for k, val in self._v.items() if k not in HASH_EXEMPT}
        blob = json.dumps(v, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def workers(self) -> int:
        w = self._v["run.workers"]
        if w is None:
            w = os.environ.get(WORKERS_ENV, 1)
        return max(1, int(w))

    def _validate(self):
        v = self._v
        if not v["shock.a_B"] < v["shock.a_T"]:
            raise ValueError("need shock.a_B < shock.a_T")
        if v["stability.gamma_L"] >= v["stability.gamma_R"]:
            raise ValueError("need stability.gamma_L < stability.gamma_R")
        if int(v["ensemble.M"]) < 1:
            raise ValueError("ensemble.M must be at least 1")
        if int(v["domain.n"]) < 8:
            raise ValueError("domain.n must be at least 8")
        if float(v["domain.L"]) <= 0:
            raise ValueError("domain.L must be positive")
        if v["noise.kind"] not in ("gaussian", "bump"):
            raise ValueError(f"noise.kind must be gaussian or bump, got {v['noise.kind']!r}")
