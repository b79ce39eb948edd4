"""Command-line front end.

Subcommands map onto the experiment registry in :mod:`quenchwalk.harness`;
each invocation writes plot-ready CSV tables (or prints one to stdout when
no ``--out`` is given) plus a JSON manifest sidecar describing what was run.

    quenchwalk evolve --t 100 --out iw.csv
    quenchwalk quench --xd 10 --tr 50 --tmax 2000 --t 100 --out qqw.csv
    quenchwalk siw --xd 10 --t 500 --out siw.csv
    quenchwalk sweep --experiment saturation-sweep --xd 10 --tr 400,640,1000 --out sat.csv
    quenchwalk sweep --experiment trlim-scan --xd 5,10,15 --out lim.csv
    quenchwalk sweep --experiment collapse --xd 10,15 --tr 500,1000 --out k.csv
    quenchwalk profile --xd 10 --tr 20 --t 100 --out prof.csv
    quenchwalk correlate --xd 10 --tr 50 --r=-5:5 --tmax 5000 --out corr.csv
    quenchwalk classical --xd 10 --tr 1000,10000 --out cl.csv
    quenchwalk fit sat.csv --xcol t_r --ycol sat

Validation problems exit with code 2 and a one-line diagnostic; everything
else exits 0.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .errors import ScanRangeError, ValidationError
from .harness import ExperimentConfig, ResultTable, run_experiment
from .observables import loglog_fit


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"expected integer or comma list, got {text!r}")


def _parse_r(text: str) -> dict:
    """``--r`` accepts a single offset or an inclusive ``lo:hi`` range."""
    if ":" in text:
        lo, _, hi = text.partition(":")
        try:
            return {"r_range": [int(lo), int(hi)]}
        except ValueError:
            raise ValidationError(f"expected lo:hi range, got {text!r}")
    try:
        return {"r": int(text)}
    except ValueError:
        raise ValidationError(f"expected integer offset or lo:hi range, got {text!r}")


def _scalar(values: list[int] | None, flag: str) -> int | None:
    if values is None:
        return None
    if len(values) != 1:
        raise ValidationError(f"{flag}: expected a single value, got {len(values)}")
    return values[0]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quenchwalk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"quenchwalk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, **kwargs):
        sp = sub.add_parser(name, help=help_text, **kwargs)
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--out", help="output CSV path (stdout when omitted)")
        sp.add_argument("--xd", help="detector site, or comma list for sweeps")
        sp.add_argument("--tr", help="removal step, or comma list for sweeps")
        sp.add_argument("--tmax", type=int, help="evolution horizon")
        sp.add_argument("--t", type=int, help="snapshot / profile time")
        sp.add_argument("--r", help="site offset, single value or lo:hi range")
        sp.add_argument("--workers", type=int, help="parallel workers for sweeps")
        return sp

    add("evolve", "free-walk snapshot at a fixed time")
    add("quench", "single quenched run: ratio series, plus a snapshot when --t is given")
    add("siw", "permanently monitored walk snapshot")
    sw = add("sweep", "grid experiments over removal steps and/or detector sites")
    sw.add_argument(
        "--experiment",
        choices=("saturation-sweep", "trlim-scan", "collapse"),
        required=True,
    )
    add("profile", "spatial ratio profile at a fixed time")
    add("correlate", "two-site correlation ratio series")
    add("classical", "classical quenched-walk quantities over a removal grid")

    fit = sub.add_parser("fit", help="log-log power-law fit over two columns of a CSV")
    fit.add_argument("csv", help="input table")
    fit.add_argument("--xcol", required=True)
    fit.add_argument("--ycol", required=True)
    return p


def _base_config(args: argparse.Namespace) -> dict:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
    else:
        cfg = {}
    return cfg


def _overlay(cfg: dict, args: argparse.Namespace, *, grids: tuple[str, ...] = ()) -> dict:
    """Apply CLI flags on top of the config file; flags win."""
    xd = _int_list(args.xd) if args.xd else None
    tr = _int_list(args.tr) if args.tr else None
    if xd is not None:
        if "x_d" in grids:
            cfg["x_d_grid"] = xd
        else:
            cfg["x_d"] = _scalar(xd, "--xd")
    if tr is not None:
        if "t_r" in grids:
            cfg["t_r_grid"] = tr
        else:
            cfg["t_r"] = _scalar(tr, "--tr")
    if args.tmax is not None:
        cfg["t_max"] = args.tmax
    if args.t is not None:
        cfg["t"] = args.t
    if args.r is not None:
        cfg.update(_parse_r(args.r))
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.out is not None:
        cfg["out"] = args.out
    return cfg


def _emit(tables: list[tuple[str | None, ResultTable]], config: ExperimentConfig) -> None:
    """Write tables (or print the single unnamed one) and the run manifest."""
    written = []
    for path, table in tables:
        if path is None:
            sys.stdout.write(table.to_csv())
        else:
            table.write(path)
            written.append(str(path))
    if written:
        first = Path(written[0])
        manifest_path = first.with_suffix(".manifest.json")
        manifest = {
            "tool": "quenchwalk",
            "version": __version__,
            "config": config.to_dict(),
            "outputs": written,
            "rows": [len(t.rows) for _, t in tables if t is not None],
        }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cmd_experiment(args: argparse.Namespace, experiment: str, grids: tuple[str, ...]) -> int:
    cfg = _overlay(_base_config(args), args, grids=grids)
    cfg["experiment"] = experiment
    config = ExperimentConfig.from_dict(cfg)
    table = run_experiment(config)
    _emit([(config.out, table)], config)
    return 0


def _cmd_quench(args: argparse.Namespace) -> int:
    cfg = _overlay(_base_config(args), args)
    snap_t = cfg.pop("t", None)
    cfg["experiment"] = "ratio-series"
    config = ExperimentConfig.from_dict(cfg)
    tables: list[tuple[str | None, ResultTable]] = [(config.out, run_experiment(config))]
    if snap_t is not None:
        snap_cfg = dict(cfg, experiment="snapshot", t=snap_t)
        snap_cfg.pop("t_max", None)
        snap_config = ExperimentConfig.from_dict(snap_cfg)
        snap_path = None
        if config.out is not None:
            snap_path = str(Path(config.out).with_suffix(".snapshot.csv"))
        tables.append((snap_path, run_experiment(snap_config)))
    _emit(tables, config)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    path = Path(args.csv)
    if not path.exists():
        raise ValidationError(f"input table not found: {path}")
    table = ResultTable.read(path)
    names = [n for n, _ in table.schema]
    for col in (args.xcol, args.ycol):
        if col not in names:
            raise ValidationError(f"column {col!r} not in table (have: {', '.join(names)})")
    xi, yi = names.index(args.xcol), names.index(args.ycol)
    xs = [row[xi] for row in table.rows]
    ys = [row[yi] for row in table.rows]
    pairs = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0 and math.isfinite(y)]
    fit = loglog_fit([p[0] for p in pairs], [p[1] for p in pairs])
    print(
        f"slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
        f"points={len(pairs)} max_rel_residual={fit.max_rel_residual:.3g}"
    )
    return 0


_EXPERIMENT_COMMANDS = {
    "evolve": ("snapshot", ()),
    "siw": ("snapshot", ()),
    "profile": ("profile", ()),
    "correlate": ("correlation", ()),
    "classical": ("classical-compare", ("t_r",)),
    "sweep": (None, None),  # resolved from --experiment
}

_SWEEP_GRIDS = {
    "saturation-sweep": ("t_r",),
    "trlim-scan": ("x_d",),
    "collapse": ("x_d", "t_r"),
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "quench":
            return _cmd_quench(args)
        if args.command == "sweep":
            return _cmd_experiment(args, args.experiment, _SWEEP_GRIDS[args.experiment])
        experiment, grids = _EXPERIMENT_COMMANDS[args.command]
        return _cmd_experiment(args, experiment, grids)
    except (ValidationError, ScanRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
