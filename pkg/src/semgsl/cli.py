"""Command line interface.

Exit codes: 0 success, 1 failed run / invariant / check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from importlib import resources
from pathlib import Path

from .dumps import diff_maps
from .errors import ConfigError, GSLError
from .harness import ExperimentConfig, bench, parse_modes, parse_seeds, run_experiment
from .ontology import Ontology, validate

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        scenario=args.scenario,
        ontology=args.ontology,
        modes=parse_modes(args.mode),
        strategy=args.strategy,
        seeds=parse_seeds(args.seeds),
        out=args.out,
        steps=args.steps,
        snapshot_every=args.snapshot_every,
        workers=args.workers,
    )
    summary = run_experiment(cfg)
    print(f"{'mode':<16}{'median_final_m':>16}{'iqr_m':>10}{'median_step10_m':>18}")
    for row in summary:
        print(
            f"{row['mode']:<16}{row['median_final_error_m']:>16.4f}"
            f"{row['iqr_final_error_m']:>10.4f}{row['median_step10_error_m']:>18.4f}"
        )
    print(f"wrote {cfg.out / 'summary.csv'}")
    return EXIT_OK


def _cmd_diff(args) -> int:
    for p in (args.a, args.b):
        if not Path(p).is_file():
            raise ConfigError(f"dump file not found: {p}")
    d = diff_maps(Path(args.a), Path(args.b))
    print(repr(d))
    if args.tol is not None and d > args.tol:
        return EXIT_FAIL
    return EXIT_OK


def _cmd_validate(args) -> int:
    path = Path(args.ontology)
    if not path.is_file():
        raise ConfigError(f"ontology file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"ontology {path}: not valid JSON ({e})") from None
    try:
        problems = validate(Ontology.from_dict(doc))
    except GSLError as e:
        problems = getattr(e, "violations", None) or [str(e)]
    if problems:
        for p in problems:
            print(f"{path}: {p}")
        return EXIT_FAIL
    print(f"{path}: ok")
    return EXIT_OK


def _cmd_bench(args) -> int:
    res = bench(args.size, args.size, args.classes, args.repeats)
    print(
        f"semantic_source+fuse on {res.width}x{res.height}, {res.n_classes} classes: "
        f"median {res.median_ms:.2f} ms over {res.repeats} runs (budget {args.budget_ms} ms)"
    )
    return EXIT_OK if res.median_ms < args.budget_ms else EXIT_FAIL


def _cmd_export(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = resources.files("semgsl.data")
    for name in ("kitchen_ontology.json", "kitchen_scenario.json"):
        with resources.as_file(data.joinpath(name)) as src:
            shutil.copyfile(src, out / name)
        print(out / name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semgsl", description="Semantic-aware gas source localization harness")
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-run progress")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a seeded batch and write metrics, dumps and a summary")
    r.add_argument("--scenario", type=Path, help="scenario JSON (default: bundled kitchen)")
    r.add_argument("--ontology", type=Path, help="ontology JSON (default: bundled kitchen)")
    r.add_argument("--mode", default="all", help="olfaction, semantic, semantic+rooms, a comma list, or all")
    r.add_argument("--strategy", default="scripted", help="scripted or infogain")
    r.add_argument("--seeds", default="0", help="comma list (0,1,2) or half-open range (0:25)")
    r.add_argument("--out", type=Path, required=True, help="output directory")
    r.add_argument("--steps", type=int, help="override the scenario's step budget")
    r.add_argument("--snapshot-every", type=int, default=0, help="SourceDist dump interval in steps")
    r.add_argument("--workers", type=int, default=4, help="worker threads")
    r.set_defaults(func=_cmd_run)

    d = sub.add_parser("diff", help="L-infinity distance between two cell,prob dumps")
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--tol", type=float, help="exit 1 when the distance exceeds this")
    d.set_defaults(func=_cmd_diff)

    v = sub.add_parser("validate", help="check an ontology file")
    v.add_argument("--ontology", required=True)
    v.set_defaults(func=_cmd_validate)

    b = sub.add_parser("bench", help="time one semantic_source + fuse cycle")
    b.add_argument("--size", type=int, default=100, help="grid side length in cells")
    b.add_argument("--classes", type=int, default=20)
    b.add_argument("--repeats", type=int, default=30)
    b.add_argument("--budget-ms", type=float, default=50.0)
    b.set_defaults(func=_cmd_bench)

    e = sub.add_parser("export", help="copy the bundled kitchen ontology and scenario to a directory")
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (GSLError, AssertionError) as e:
        print(f"run failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
