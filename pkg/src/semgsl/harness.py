"""Seeded batch experiments and the fusion micro-benchmark.

Output layout of :func:`run_experiment`::

    OUT/summary.csv                      one row per arm (mode)
    OUT/runs.csv                         one row per (arm, seed)
    OUT/<mode>/seed_<s>/metrics.csv      per-step RunMetrics
    OUT/<mode>/seed_<s>/trace.csv        planner candidates (infogain only)
    OUT/<mode>/seed_<s>/source_<step>.csv / .pgm   SourceDist snapshots

Runs execute on worker threads; every file is written by the calling thread
in (mode, seed) order, so the output does not depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import belief as belief_mod
from .core import Grid2D
from .dumps import write_pgm, write_source_csv
from .errors import ConfigError, GSLError, InvariantError
from .estimation import fuse, semantic_source
from .ontology import Ontology, kitchen_ontology, load_ontology
from .simulator import MODES, STRATEGIES, RunMetrics, Scenario, load_scenario, run, write_metrics_csv, write_trace_csv

log = logging.getLogger(__name__)

SUMMARY_FIELDS = [
    "mode",
    "strategy",
    "n_seeds",
    "median_final_error_m",
    "iqr_final_error_m",
    "q25_final_error_m",
    "q75_final_error_m",
    "median_step10_error_m",
    "declared_runs",
    "fallbacks",
]
RUN_FIELDS = ["mode", "seed", "final_error_m", "step10_error_m", "declared_step", "declared_cell", "fallbacks"]


@dataclass
class ExperimentConfig:
    """One batch: every listed mode runs every seed.

    ``scenario`` / ``ontology`` of None select the bundled reference kitchen.
    ``snapshot_every`` > 0 dumps the fused SourceDist every that many steps
    (plus the last step); 0 dumps only the initial and final steps.
    """

    scenario: Path | None
    ontology: Path | None
    modes: tuple[str, ...] = ("semantic",)
    strategy: str = "scripted"
    seeds: tuple[int, ...] = (0,)
    out: Path = Path("out")
    steps: int | None = None
    snapshot_every: int = 0
    workers: int = 4

    def __post_init__(self):
        self.scenario = Path(self.scenario) if self.scenario is not None else None
        self.ontology = Path(self.ontology) if self.ontology is not None else None
        self.out = Path(self.out)
        self.modes = tuple(self.modes)
        self.seeds = tuple(int(s) for s in self.seeds)

    def check(self) -> None:
        for what, p in (("ontology", self.ontology), ("scenario", self.scenario)):
            if p is not None and not p.is_file():
                raise ConfigError(f"{what} file not found: {p}")
        if not self.modes:
            raise ConfigError("no modes given")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}; choose from {', '.join(MODES)} or 'all'")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seed list has duplicates")
        if self.steps is not None and self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot interval must be non-negative")
        if self.workers < 1:
            raise ConfigError("need at least one worker")


def parse_modes(text: str) -> tuple[str, ...]:
    if text.strip() == "all":
        return MODES
    return tuple(m.strip() for m in text.split(",") if m.strip())


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1,2,3"`` or a half-open range ``"0:25"``."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            return tuple(range(lo, hi))
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}; use a,b,c or lo:hi") from None


def load_inputs(cfg: ExperimentConfig) -> tuple[Scenario, Ontology]:
    """Load and validate ontology and scenario, mapping every failure to ConfigError."""
    cfg.check()
    try:
        ont = kitchen_ontology() if cfg.ontology is None else load_ontology(cfg.ontology)
    except (OSError, json.JSONDecodeError, GSLError) as e:
        raise ConfigError(f"ontology {cfg.ontology}: {e}") from None
    try:
        if cfg.scenario is None:
            from .scenarios import reference_kitchen

            scn = reference_kitchen(ont)
        else:
            scn = load_scenario(cfg.scenario, ont)
    except (OSError, json.JSONDecodeError, GSLError) as e:
        raise ConfigError(f"scenario {cfg.scenario or '<bundled kitchen>'}: {e}") from None
    if "semantic+rooms" in cfg.modes and scn.rooms is None:
        raise ConfigError("mode semantic+rooms needs a scenario with a room map")
    return scn, ont


def check_run(m: RunMetrics, mode: str, seed: int) -> None:
    for r in m.rows:
        for name in ("error_m", "std_m", "entropy_bits"):
            v = getattr(r, name)
            if not math.isfinite(v) or v < -1e-12:
                raise InvariantError(f"{mode} seed {seed} step {r.step}: {name}={v}")


def _quantiles(values: Sequence[float]):
    q25, med, q75 = np.percentile(np.asarray(values, dtype=np.float64), [25, 50, 75])
    return float(q25), float(med), float(q75)


def summarize(cfg: ExperimentConfig, results: dict) -> list[dict]:
    """Per-arm median and IQR of final error, keyed in ``cfg.modes`` order."""
    rows = []
    for mode in cfg.modes:
        runs = [results[(mode, s)] for s in cfg.seeds]
        q25, med, q75 = _quantiles([m.final_error for m in runs])
        rows.append(
            {
                "mode": mode,
                "strategy": cfg.strategy,
                "n_seeds": len(runs),
                "median_final_error_m": med,
                "iqr_final_error_m": q75 - q25,
                "q25_final_error_m": q25,
                "q75_final_error_m": q75,
                "median_step10_error_m": _quantiles([m.error_at(10) for m in runs])[1],
                "declared_runs": sum(m.declared_step is not None for m in runs),
                "fallbacks": sum(m.fallbacks for m in runs),
            }
        )
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_table(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r[f]) for f in fields])


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_run(dest: Path, m: RunMetrics, grid: Grid2D) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(m.rows, dest / "metrics.csv")
    if m.trace:
        write_trace_csv(m.trace, dest / "trace.csv")
    for step in sorted(m.snapshots):
        write_source_csv(m.snapshots[step], dest / f"source_{step:04d}.csv")
        write_pgm(m.snapshots[step], grid, dest / f"source_{step:04d}.pgm")


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run every (mode, seed) pair, write all outputs and return the summary rows."""
    scn, ont = load_inputs(cfg)
    steps = scn.steps if cfg.steps is None else cfg.steps
    # an interval longer than the run leaves just step 0 and the final step
    every = cfg.snapshot_every if cfg.snapshot_every else max(steps, 1) + 1
    jobs = [(mode, seed) for mode in cfg.modes for seed in cfg.seeds]

    def one(job):
        mode, seed = job
        m = run(scn, ont, mode, cfg.strategy, seed=seed, steps=steps, snapshot_every=every)
        check_run(m, mode, seed)
        return m

    results = {}
    with ThreadPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
        # map() yields in submission order, so the collector below is deterministic
        for job, m in zip(jobs, pool.map(one, jobs)):
            results[job] = m
            _write_run(cfg.out / job[0] / f"seed_{job[1]}", m, scn.grid)
            log.info("%s seed %d: final error %.3f m", job[0], job[1], m.final_error)

    run_rows = [
        {
            "mode": mode,
            "seed": seed,
            "final_error_m": m.final_error,
            "step10_error_m": m.error_at(10),
            "declared_step": m.declared_step,
            "declared_cell": m.declared_cell,
            "fallbacks": m.fallbacks,
        }
        for (mode, seed), m in results.items()
    ]
    summary = summarize(cfg, results)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_table(cfg.out / "runs.csv", RUN_FIELDS, run_rows)
    _write_table(cfg.out / "summary.csv", SUMMARY_FIELDS, summary)
    return summary


@dataclass
class BenchResult:
    width: int
    height: int
    n_classes: int
    repeats: int
    times_ms: list[float] = field(default_factory=list)

    @property
    def median_ms(self) -> float:
        return float(np.median(self.times_ms))


def bench_inputs(width: int = 100, height: int = 100, n_classes: int = 20, seed: int = 0):
    """Random ontology, belief and olfaction distribution of the requested size."""
    rng = np.random.default_rng(seed)
    grid = Grid2D(width, height, 1.0)
    classes = [f"c{i}" for i in range(n_classes)]
    ont = Ontology(classes, ["gas"], rng.dirichlet(np.ones(n_classes)), rng.dirichlet(np.ones(n_classes))[None, :])
    b = belief_mod.init(grid, ont)
    probs = rng.dirichlet(np.ones(n_classes), size=grid.n_cells)
    b = belief_mod.SemanticBelief(grid, np.log(probs), b.reference_prior)
    olf = rng.dirichlet(np.ones(grid.n_cells))
    return grid, ont, b, olf


def bench(width: int = 100, height: int = 100, n_classes: int = 20, repeats: int = 30, seed: int = 0) -> BenchResult:
    """Time one semantic_source + fuse cycle; the first call is a discarded warm-up."""
    _, ont, b, olf = bench_inputs(width, height, n_classes, seed)
    fuse(olf, semantic_source(b, ont, 0))
    res = BenchResult(width, height, n_classes, repeats)
    for _ in range(repeats):
        t0 = time.perf_counter()
        fuse(olf, semantic_source(b, ont, 0))
        res.times_ms.append((time.perf_counter() - t0) * 1e3)
    return res
