"""Experiment registry, config handling, sweep execution and CSV output.

Every experiment is named by an id, takes an :class:`ExperimentConfig` and
produces a :class:`ResultTable` with a fixed, documented column schema, so
the output of a given config is reproducible byte for byte no matter how
many workers computed it.

Experiment ids and their columns:

====================  =================================================
id                    columns
====================  =================================================
snapshot              t:int, x:int, f:real
ratio-series          t:int, ratio:real, survival:real
saturation-sweep      t_r:int, sat:real, converged:int
trlim-scan            x_d:int, t_r_lim:int
collapse              x_d:int, t_r:int, sat:real, k:real, converged:int
profile               r:int, ratio:real
correlation           r:int, t:int, g_ratio:real
classical-compare     t_r:int, ratio:real, correlation:real
====================  =================================================
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import classical
from .errors import ValidationError
from .lattice import InitialCondition, SYMMETRIC
from .measurement import BaselineCache, DetectorSchedule, free_schedule, run_quenched, run_siw
from .observables import (
    correlation_ratio,
    default_t_max,
    find_removal_limit,
    ratio_series,
    saturation_for,
    scan_grid_for,
    spatial_ratio_profile,
)

EXPERIMENTS = (
    "snapshot",
    "ratio-series",
    "saturation-sweep",
    "trlim-scan",
    "collapse",
    "profile",
    "correlation",
    "classical-compare",
)

SCHEMAS: dict[str, tuple[tuple[str, str], ...]] = {
    "snapshot": (("t", "int"), ("x", "int"), ("f", "real")),
    "ratio-series": (("t", "int"), ("ratio", "real"), ("survival", "real")),
    "saturation-sweep": (("t_r", "int"), ("sat", "real"), ("converged", "int")),
    "trlim-scan": (("x_d", "int"), ("t_r_lim", "int")),
    "collapse": (("x_d", "int"), ("t_r", "int"), ("sat", "real"), ("k", "real"), ("converged", "int")),
    "profile": (("r", "int"), ("ratio", "real")),
    "correlation": (("r", "int"), ("t", "int"), ("g_ratio", "real")),
    "classical-compare": (("t_r", "int"), ("ratio", "real"), ("correlation", "real")),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run.

    Grid fields (``x_d_grid``, ``t_r_grid``) are used by sweep-style
    experiments; scalar fields by single runs.  ``r_range`` is an inclusive
    ``(lo, hi)`` pair of detector-relative offsets.
    """

    experiment: str
    a0: complex = SYMMETRIC.a0
    b0: complex = SYMMETRIC.b0
    x_d: int | None = None
    x_d_grid: tuple[int, ...] | None = None
    t_r: int | None = None
    t_r_grid: tuple[int, ...] | None = None
    t: int | None = None
    t_max: int | None = None
    r: int | None = None
    r_range: tuple[int, int] | None = None
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"experiment: unknown id {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}"
            )
        if self.workers < 1:
            raise ValidationError(f"workers: must be >= 1, got {self.workers}")
        for name in ("x_d_grid", "t_r_grid"):
            grid = getattr(self, name)
            if grid is not None:
                if len(grid) == 0:
                    raise ValidationError(f"{name}: grid must be nonempty")
                object.__setattr__(self, name, tuple(int(v) for v in grid))
        if self.r_range is not None:
            lo, hi = self.r_range
            if lo > hi:
                raise ValidationError(f"r_range: lo must be <= hi, got {self.r_range}")
            object.__setattr__(self, "r_range", (int(lo), int(hi)))
        if self.t_max is not None and self.t_r is not None and self.t_max < self.t_r:
            raise ValidationError(f"t_max: must be >= t_r, got t_max={self.t_max} < t_r={self.t_r}")
        horizon = self.t_max if self.t_max is not None else self.t
        if horizon is not None and self.x_d is not None and abs(self.x_d) > horizon:
            raise ValidationError(
                f"x_d: site {self.x_d} outside the lattice reachable within {horizon} steps"
            )
        # the initial condition invariant is enforced by InitialCondition
        InitialCondition(self.a0, self.b0)

    @property
    def ic(self) -> InitialCondition:
        return InitialCondition(self.a0, self.b0)

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValidationError(f"unknown config fields: {', '.join(sorted(unknown))}")
        for key in ("a0", "b0"):
            if key in d and isinstance(d[key], (list, tuple)):
                re_part, im_part = d[key]
                d[key] = complex(re_part, im_part)
        for key in ("x_d_grid", "t_r_grid", "r_range"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ValidationError("config JSON must be an object")
        return cls.from_dict(d)

    def digest(self) -> str:
        """Stable hash of the scientific content (output path excluded)."""
        d = self.to_dict()
        d.pop("out", None)
        d.pop("workers", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass
class ResultTable:
    """A named-column table plus run metadata.

    ``schema`` is a tuple of (name, kind) with kind "int" or "real".  The
    CSV form is stable: identical configs give identical bytes, so volatile
    metadata (wall time) is kept in memory only and never written.
    """

    schema: tuple[tuple[str, str], ...]
    rows: list[tuple]
    metadata: dict

    VOLATILE_KEYS = ("wall_time",)

    def to_csv(self) -> str:
        lines = ["# quenchwalk-result v1"]
        for key in sorted(self.metadata):
            if key in self.VOLATILE_KEYS:
                continue
            lines.append(f"# {key}: {self.metadata[key]}")
        lines.append(",".join(name for name, _ in self.schema))
        for row in self.rows:
            lines.append(",".join(_format_cell(v, kind) for v, (_, kind) in zip(row, self.schema)))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        metadata: dict = {}
        header: list[str] | None = None
        rows: list[tuple] = []
        kinds: list[str] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                schema_meta = metadata.get("schema")
                if schema_meta:
                    kinds = [part.split(":")[1] for part in schema_meta.split(",")]
                else:
                    kinds = ["real"] * len(header)
                continue
            cells = line.split(",")
            rows.append(tuple(int(c) if k == "int" else float(c) for c, k in zip(cells, kinds)))
        if header is None:
            raise ValidationError("CSV has no header row")
        schema = tuple(zip(header, kinds))
        return cls(schema=schema, rows=rows, metadata=metadata)

    @classmethod
    def read(cls, path: str | Path) -> "ResultTable":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _format_cell(v, kind: str) -> str:
    if kind == "int":
        return str(int(v))
    return format(float(v), ".17g")


def _need(config: ExperimentConfig, *fields: str) -> None:
    for f in fields:
        if getattr(config, f) is None:
            raise ValidationError(f"{f}: required for experiment {config.experiment!r}")


def _r_values(config: ExperimentConfig) -> list[int]:
    if config.r_range is not None:
        lo, hi = config.r_range
        return list(range(lo, hi + 1))
    if config.r is not None:
        return [config.r]
    raise ValidationError(f"r: required for experiment {config.experiment!r}")


def _exp_snapshot(config: ExperimentConfig) -> list[tuple]:
    _need(config, "t")
    t = int(config.t)
    if config.x_d is None:
        record = run_quenched(config.ic, free_schedule(), t, snapshots=(t,))
    elif config.t_r is None:
        record = run_siw(config.ic, config.x_d, t, snapshots=(t,))
    else:
        record = run_quenched(config.ic, DetectorSchedule(config.x_d, config.t_r), t, snapshots=(t,))
    dist = record.snapshots[t]
    return [(t, x, dist[x]) for x in sorted(dist)]


def _exp_ratio_series(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d", "t_r")
    t_max = config.t_max if config.t_max is not None else default_t_max(config.x_d, config.t_r)
    record = run_quenched(config.ic, DetectorSchedule(config.x_d, config.t_r), t_max, probes=(config.x_d,))
    baseline = cache.free_run(config.ic, t_max, probes=(config.x_d,))
    series = ratio_series(record, baseline)
    surv = record.survival
    return [(int(t), float(v), float(surv[int(t)])) for t, v in zip(series.times, series.values)]


def _exp_saturation_sweep(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d", "t_r_grid")
    rows = []
    for t_r in config.t_r_grid:
        est = saturation_for(config.ic, config.x_d, t_r, cache=cache, t_max=config.t_max)
        rows.append((int(t_r), float(est.value), int(est.converged)))
    return rows


def _exp_trlim_scan(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d_grid")
    rows = []
    for x_d in config.x_d_grid:
        lim = find_removal_limit(x_d, scan_grid_for(x_d), ic=config.ic, cache=cache)
        rows.append((int(x_d), int(lim)))
    return rows


def _exp_collapse(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d_grid", "t_r_grid")
    rows = []
    for x_d in config.x_d_grid:
        for t_r in config.t_r_grid:
            est = saturation_for(config.ic, x_d, t_r, cache=cache)
            k = est.value * t_r / (x_d * x_d)
            rows.append((int(x_d), int(t_r), float(est.value), float(k), int(est.converged)))
    return rows


def _exp_profile(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d", "t_r", "t")
    t = int(config.t)
    record = run_quenched(config.ic, DetectorSchedule(config.x_d, config.t_r), t, snapshots=(t,))
    baseline = cache.free_run(config.ic, t, snapshots=(t,))
    prof = spatial_ratio_profile(record, baseline, t)
    return [(int(r), float(prof[r])) for r in sorted(prof)]


def _exp_correlation(config: ExperimentConfig, cache: BaselineCache) -> list[tuple]:
    _need(config, "x_d", "t_r")
    t_max = config.t_max if config.t_max is not None else 5000
    rows = []
    for r in _r_values(config):
        x2 = config.x_d + r
        record = run_quenched(
            config.ic, DetectorSchedule(config.x_d, config.t_r), t_max, probes=(config.x_d, x2)
        )
        baseline = cache.free_run(config.ic, t_max, probes=(config.x_d, x2))
        series = correlation_ratio(record, baseline, r)
        rows.extend((int(r), int(t), float(v)) for t, v in zip(series.times, series.values))
    return rows


def _exp_classical_compare(config: ExperimentConfig) -> list[tuple]:
    _need(config, "x_d", "t_r_grid")
    rows = []
    for t_r in config.t_r_grid:
        ratio = classical.quenched_ratio(config.x_d, t_r)
        rows.append((int(t_r), float(ratio), float(classical.correlation_ratio(config.x_d, t_r))))
    return rows


def run_experiment(config: ExperimentConfig, cache: dict | None = None) -> ResultTable:
    """Execute one experiment and return its table.

    ``cache``: optional session cache dict keyed by config digest; a hit
    returns the stored table without recomputation.
    """
    if cache is not None:
        hit = cache.get(config.digest())
        if hit is not None:
            return hit

    started = time.perf_counter()
    baselines = BaselineCache()
    exp = config.experiment
    if exp == "snapshot":
        rows = _exp_snapshot(config)
    elif exp == "ratio-series":
        rows = _exp_ratio_series(config, baselines)
    elif exp == "saturation-sweep":
        rows = _exp_saturation_sweep(config, baselines)
    elif exp == "trlim-scan":
        rows = _exp_trlim_scan(config, baselines)
    elif exp == "collapse":
        rows = _exp_collapse(config, baselines)
    elif exp == "profile":
        rows = _exp_profile(config, baselines)
    elif exp == "correlation":
        rows = _exp_correlation(config, baselines)
    else:
        rows = _exp_classical_compare(config)

    from . import __version__

    schema = SCHEMAS[exp]
    table = ResultTable(
        schema=schema,
        rows=rows,
        metadata={
            "config": config.to_json(),
            "engine_version": __version__,
            "schema": ",".join(f"{n}:{k}" for n, k in schema),
            "wall_time": time.perf_counter() - started,
        },
    )
    if cache is not None:
        cache[config.digest()] = table
    return table


def _sweep_cell(config: ExperimentConfig) -> tuple[bool, object]:
    try:
        return True, run_experiment(config)
    except Exception as exc:  # per-cell failure must not kill the sweep
        return False, f"{type(exc).__name__}: {exc}"


def run_sweep(configs: Sequence[ExperimentConfig], workers: int = 1) -> list[ResultTable]:
    """Run several independent experiments, optionally in parallel.

    Results come back in input order; a failing cell yields an empty table
    whose metadata carries the error message, and the sweep continues.  The
    aggregated output is identical for any worker count.
    """
    configs = list(configs)
    if not configs:
        raise ValidationError("empty sweep: no configs given")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    if workers == 1 or len(configs) == 1:
        outcomes = [_sweep_cell(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_cell, configs))

    tables = []
    for config, (ok, payload) in zip(configs, outcomes):
        if ok:
            tables.append(payload)
        else:
            tables.append(
                ResultTable(
                    schema=SCHEMAS[config.experiment],
                    rows=[],
                    metadata={"config": config.to_json(), "error": payload},
                )
            )
    return tables
