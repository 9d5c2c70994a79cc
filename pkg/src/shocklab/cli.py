"""``lab``: run an experiment and write an NDJSON report.

    lab verify|simulate|stationarity|stability|colehopf
        [--config PATH] [--seed N] [--out DIR] [--workers K] [--set key=value]...

Writes ``DIR/report.ndjson`` (one record per line, sorted by experiment,
seed and time) and, when ``output.snapshots`` is true, ``DIR/snapshots/*.csv``.
Every record carries the config hash. The exit status is 1 when any hard
check fails, 2 on a usage or configuration error, 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .config import KINDS, Config
from .errors import ShockLabError
from .grid import write_csv

log = logging.getLogger("shocklab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Viscous-shock laboratory for stochastic Burgers.")
    p.add_argument("experiment", choices=KINDS)
    p.add_argument("--config", type=Path, help="YAML file of dotted keys")
    p.add_argument("--seed", type=int, help="master seed (overrides noise.seed)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    p.add_argument("--workers", type=int, help="worker processes (overrides run.workers)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _sort_key(rec):
    seed = rec.get("seed")
    t = rec.get("t")
    return (rec["experiment"], -1 if seed is None else seed, -1.0 if t is None else t)


def _clean(v):
    # NDJSON must stay parseable by strict readers
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def write_report(records, path: Path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_clean(rec), sort_keys=True) + "\n")


def run(experiment: str, config: Config, out: Path):
    from .experiments import EXPERIMENTS

    records, snapshots = EXPERIMENTS[experiment](config)
    h = config.hash()
    for r in records:
        r["experiment"] = experiment
        r["config_hash"] = h
    records.sort(key=_sort_key)
    out.mkdir(parents=True, exist_ok=True)
    write_report(records, out / "report.ndjson")
    if snapshots:
        sdir = out / "snapshots"
        sdir.mkdir(exist_ok=True)
        for name in sorted(snapshots):
            write_csv(snapshots[name], sdir / f"{name}.csv")
    failed = [r for r in records if r.get("hard") and not r.get("pass")]
    return records, failed


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"noise.seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    try:
        config = Config.load(args.config, overrides)
    except (KeyError, ValueError, OSError) as exc:
        print(f"lab: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        records, failed = run(args.experiment, config, args.out)
    except (ShockLabError, ValueError) as exc:
        print(f"lab {args.experiment}: {exc}", file=sys.stderr)
        return 1
    n_hard = sum(1 for r in records if r.get("hard"))
    print(f"lab {args.experiment}: {len(records)} records, {n_hard - len(failed)}/{n_hard} hard checks passed "
          f"-> {args.out / 'report.ndjson'}", file=sys.stderr)
    for r in failed[:10]:
        print("  FAIL " + json.dumps(_clean(r), sort_keys=True)[:300], file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
