"""Command-line surface: subcommands, config files, and output routing.

Every subcommand validates its parameters up front (never clamping), runs,
and writes CSV tables into the output directory; ``--format svg``
additionally renders the matching matplotlib figure. A flat ``key = value``
config file can pre-set any flag of the subcommand; flags override the
file. Exit codes: 0 success, 1 validation error, 2 runtime error,
3 selftest failure. The only environment dependence is BIMORAN_OUT, the
default output directory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import figures, selftest, theory
from .experiments import (
    ExperimentSpec,
    record_stride,
    run_convergence,
    run_hitting,
    run_sweep,
    run_trajectories,
    simulate_tracked,
)
from .model import RunConfig
from .tables import EventLogWriter, Table, emit_csv
from .theory import LimitParams

__all__ = ["main"]

OUTDIR_ENV = "BIMORAN_OUT"


class ValidationError(Exception):
    """Bad arguments or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _comma_floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated numbers (got {text!r})")
    if not values:
        raise ValueError(f"expected at least one number (got {text!r})")
    return values


def _comma_ints(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated integers (got {text!r})")
    if not values:
        raise ValueError(f"expected at least one integer (got {text!r})")
    return values


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean (got {text!r})")


@dataclass(frozen=True)
class Opt:
    name: str  # long option name, also the config-file key
    parse: object
    default: object
    help: str
    flag: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_COMMON = [
    Opt("out", str, None, f"output directory (default: ${OUTDIR_ENV} or ./out)"),
    Opt("format", str, "csv", "output format: csv, or svg for csv plus figures"),
    Opt("config", str, None, "flat key = value config file; flags override it"),
]

_OPTIONS: dict[str, list[Opt]] = {
    "theory": _COMMON + [
        Opt("a", float, 0.01, "initial advantaged fraction, in (0, 1)"),
        Opt("s", _comma_floats, (1.0,), "selection strength (single value)"),
        Opt("t-max", float, 10.0, "largest rescaled time in the time table"),
        Opt("t-points", int, 201, "number of time-grid points"),
        Opt("b-points", int, 101, "number of hitting-level grid points"),
    ],
    "simulate": _COMMON + [
        Opt("N", int, 1000, "population size, >= 2"),
        Opt("a", float, 0.01, "initial advantaged fraction, in (0, 1)"),
        Opt("s", _comma_floats, (1.0,), "selection strength (single value)"),
        Opt("steps", int, None, "number of steps (default: 20 N)"),
        Opt("stride", int, None, "recording stride in steps (default: ceil(N/100))"),
        Opt("seed", int, 0, "base seed"),
        Opt("binary-log", str, None, "write a fixed-width binary event log here"),
    ],
    "trajectories": _COMMON + [
        Opt("N", int, 1000, "population size, >= 2"),
        Opt("a", float, 0.01, "initial advantaged fraction, in (0, 1)"),
        Opt("s", _comma_floats, (1.0,), "selection strengths (one table per value)"),
        Opt("reps", int, 10, "replicates per selection strength"),
        Opt("t-max", float, 20.0, "rescaled-time horizon"),
        Opt("seed", int, 0, "base seed"),
    ],
    "sweep": _COMMON + [
        Opt("N", int, 1000, "population size, >= 2"),
        Opt("a-grid", _comma_floats, (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5),
            "initial fractions to sweep"),
        Opt("s", _comma_floats, (1.0, 10.0), "selection strengths"),
        Opt("reps", int, 10, "replicates per grid point"),
        Opt("fixed-step", int, 40000, "measurement step of the fixed-step protocol"),
        Opt("until-fixation", _bool, False,
            "measure at absorption instead of at the fixed step", flag=True),
        Opt("horizon", int, None, "step budget for until-fixation runs"),
        Opt("seed", int, 0, "base seed"),
    ],
    "convergence": _COMMON + [
        Opt("N-grid", _comma_ints, (100, 400, 1600), "population sizes"),
        Opt("a", float, 0.1, "initial advantaged fraction, in (0, 1)"),
        Opt("s", _comma_floats, (1.0,), "selection strength (single value)"),
        Opt("t-max", float, 10.0, "rescaled-time horizon of the sup norm"),
        Opt("reps", int, 50, "replicates per population size"),
        Opt("seed", int, 0, "base seed"),
    ],
    "hitting": _COMMON + [
        Opt("N", int, 1000, "population size, >= 2"),
        Opt("a", float, 0.05, "initial advantaged fraction, in (0, 1)"),
        Opt("b", float, 0.5, "hitting level, in (a, 1)"),
        Opt("s", _comma_floats, (1.0,), "selection strength (single value)"),
        Opt("reps", int, 50, "replicates"),
        Opt("horizon", int, None, "step budget before censoring (default: 100 N^2)"),
        Opt("seed", int, 0, "base seed"),
    ],
    "selftest": [],
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="bimoran", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in _OPTIONS.items():
        sp = sub.add_parser(command)
        for opt in opts:
            if opt.flag:
                sp.add_argument(
                    f"--{opt.name}", dest=opt.dest, action="store_const",
                    const=True, default=None, help=opt.help,
                )
            else:
                sp.add_argument(
                    f"--{opt.name}", dest=opt.dest, type=opt.parse,
                    default=None, help=opt.help, metavar="V",
                )
    return parser


def _read_config_file(path: str, opts: list[Opt]) -> dict[str, object]:
    """Parse a flat ``key = value`` file using the subcommand's option types."""
    by_name = {opt.name: opt for opt in opts if opt.name != "config"}
    values: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(
                f"{path}:{lineno}: expected 'key = value' (got {raw!r})"
            )
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in by_name:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        opt = by_name[key]
        parse = _bool if opt.flag else opt.parse
        try:
            values[opt.dest] = parse(value)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}")
    return values


def _effective_options(args: argparse.Namespace, opts: list[Opt]) -> dict[str, object]:
    """Merge defaults, config-file values, and flags (flags win)."""
    from_file: dict[str, object] = {}
    if getattr(args, "config", None):
        from_file = _read_config_file(args.config, opts)
    effective = {}
    for opt in opts:
        flag_value = getattr(args, opt.dest)
        if flag_value is not None:
            effective[opt.dest] = flag_value
        elif opt.dest in from_file:
            effective[opt.dest] = from_file[opt.dest]
        else:
            effective[opt.dest] = opt.default
    return effective


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _single_s(values) -> float:
    _require(len(values) == 1, f"this subcommand takes a single s value (got {values})")
    return values[0]


def _validate_common(o: dict) -> None:
    _require(o["format"] in ("csv", "svg"), f"format must be csv or svg (got {o['format']!r})")


def _validate_fraction(a: float) -> None:
    _require(0.0 < a < 1.0, f"a must lie in the open interval (0, 1) (got {a})")


def _validate_selection(values) -> None:
    for s in values:
        _require(s > 0.0, f"s must be > 0 (got {s})")


def _outdir(o: dict) -> Path:
    out = o.get("out") or os.environ.get(OUTDIR_ENV) or "out"
    return Path(out)


def _science_meta(o: dict, skip=("out", "format", "config")) -> dict:
    """Effective config echoed into table headers (I/O routing excluded)."""
    meta = {}
    for key, value in o.items():
        if key in skip:
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        meta[key.replace("_", "-")] = value
    return meta


def _write_figure(build, path) -> None:
    """Render one figure; on failure fall back to CSV-only with a warning."""
    try:
        figures.save_figure(build(), path)
    except Exception as exc:  # noqa: BLE001 - figures must not sink the run
        print(f"bimoran: warning: figure {path} not written ({exc}); "
              "CSV output is complete", file=sys.stderr)


def _cmd_theory(o: dict) -> int:
    _validate_common(o)
    _validate_fraction(o["a"])
    _validate_selection(o["s"])
    s = _single_s(o["s"])
    _require(o["t_max"] > 0.0, f"t-max must be > 0 (got {o['t_max']})")
    _require(o["t_points"] >= 2, f"t-points must be >= 2 (got {o['t_points']})")
    _require(o["b_points"] >= 2, f"b-points must be >= 2 (got {o['b_points']})")
    params = LimitParams(o["a"], s)
    meta = _science_meta(o)
    times = np.linspace(0.0, o["t_max"], o["t_points"])
    time_table = Table(columns=["t", "y", "u", "v"], meta=dict(meta, table="time"))
    for state in theory.limit_trajectory(params, times):
        time_table.append(state.t, state.y, state.u, state.v)
    levels = np.linspace(o["a"], 1.0, o["b_points"])
    level_table = Table(columns=["b", "u_level", "v_level"], meta=dict(meta, table="levels"))
    for b in levels:
        state = theory.state_at_level(params, min(float(b), 1.0))
        level_table.append(state.level, state.u, state.v)
    outdir = _outdir(o)
    emit_csv(time_table, outdir / "theory_time.csv")
    emit_csv(level_table, outdir / "theory_levels.csv")
    if o["format"] == "svg":
        _write_figure(
            lambda: figures.theory_figure(time_table, level_table),
            outdir / "theory.svg",
        )
    return 0


def _cmd_simulate(o: dict) -> int:
    _validate_common(o)
    s = _single_s(o["s"])
    n = o["N"]
    steps = o["steps"] if o["steps"] is not None else 20 * n
    try:
        config = RunConfig(
            n_individuals=n, initial_fraction=o["a"], selection=s,
            seed=o["seed"], steps=steps,
        )
    except ValueError as exc:
        raise ValidationError(str(exc))
    stride = o["stride"] if o["stride"] is not None else record_stride(n)
    _require(stride >= 1, f"stride must be >= 1 (got {stride})")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    log = None
    if o["binary_log"]:
        log = EventLogWriter(o["binary_log"], n, config.initial_count, s)
    try:
        result = simulate_tracked(
            n, config.initial_fraction, s, rng,
            steps=config.steps, stride=stride, log=log,
        )
    finally:
        if log is not None:
            log.close()
    meta = _science_meta(o, skip=("out", "format", "config", "binary_log"))
    meta["steps"] = steps
    meta["stride"] = stride
    table = Table(columns=["step", "t", "y", "u", "v"], meta=meta)
    for point in result.points:
        table.append(point.step, point.step / n, point.y, point.u, point.v)
    outdir = _outdir(o)
    emit_csv(table, outdir / "simulate.csv")
    if o["format"] == "svg":
        _write_figure(lambda: figures.simulate_figure(table), outdir / "simulate.svg")
    return 0


def _spec_from(o: dict, kind: str, **kwargs) -> ExperimentSpec:
    try:
        return ExperimentSpec(kind=kind, **kwargs)
    except ValueError as exc:
        raise ValidationError(str(exc))


def _cmd_trajectories(o: dict) -> int:
    _validate_common(o)
    spec = _spec_from(
        o, "trajectories",
        replicates=o["reps"], seed=o["seed"],
        n_values=(o["N"],), a_values=(o["a"],), s_values=tuple(o["s"]),
        t_max=o["t_max"],
    )
    _require(
        math.floor(o["a"] * o["N"]) >= 1,
        f"floor(a*N) must be >= 1 (got a={o['a']}, N={o['N']})",
    )
    result = run_trajectories(spec)
    outdir = _outdir(o)
    meta = _science_meta(o)
    meta.pop("s", None)  # each table already carries its own s value
    suffix = len(result.tables) > 1
    for s, table in result.tables.items():
        table.meta.update(meta)
        name = f"trajectories_s{s:g}.csv" if suffix else "trajectories.csv"
        emit_csv(table, outdir / name)
    if o["format"] == "svg":
        _write_figure(
            lambda: figures.trajectories_figure(result.tables),
            outdir / "trajectories.svg",
        )
    return 0


def _cmd_sweep(o: dict) -> int:
    _validate_common(o)
    spec = _spec_from(
        o, "sweep",
        replicates=o["reps"], seed=o["seed"],
        n_values=(o["N"],), a_values=tuple(o["a_grid"]), s_values=tuple(o["s"]),
        fixed_step=o["fixed_step"], horizon=o["horizon"],
        until_fixation=bool(o["until_fixation"]),
    )
    for a in o["a_grid"]:
        _require(
            math.floor(a * o["N"]) >= 1,
            f"floor(a*N) must be >= 1 (got a={a}, N={o['N']})",
        )
    result = run_sweep(spec)
    outdir = _outdir(o)
    meta = _science_meta(o)
    result.detail.meta.update(meta)
    result.summary.meta.update(meta)
    emit_csv(result.detail, outdir / "sweep.csv")
    emit_csv(result.summary, outdir / "sweep_summary.csv")
    if o["format"] == "svg":
        _write_figure(lambda: figures.sweep_figure(result.summary), outdir / "sweep.svg")
    return 0


def _cmd_convergence(o: dict) -> int:
    _validate_common(o)
    spec = _spec_from(
        o, "convergence",
        replicates=o["reps"], seed=o["seed"],
        n_values=tuple(o["N_grid"]), a_values=(o["a"],), s_values=tuple(o["s"]),
        t_max=o["t_max"],
    )
    for n in o["N_grid"]:
        _require(
            math.floor(o["a"] * n) >= 1,
            f"floor(a*N) must be >= 1 (got a={o['a']}, N={n})",
        )
    result = run_convergence(spec)
    outdir = _outdir(o)
    meta = _science_meta(o)
    result.detail.meta.update(meta)
    result.summary.meta.update(meta)
    emit_csv(result.detail, outdir / "convergence.csv")
    emit_csv(result.summary, outdir / "convergence_summary.csv")
    if o["format"] == "svg":
        _write_figure(
            lambda: figures.convergence_figure(result.summary),
            outdir / "convergence.svg",
        )
    return 0


def _cmd_hitting(o: dict) -> int:
    _validate_common(o)
    spec = _spec_from(
        o, "hitting",
        replicates=o["reps"], seed=o["seed"],
        n_values=(o["N"],), a_values=(o["a"],), s_values=tuple(o["s"]),
        level=o["b"], horizon=o["horizon"],
    )
    _require(
        math.floor(o["a"] * o["N"]) >= 1,
        f"floor(a*N) must be >= 1 (got a={o['a']}, N={o['N']})",
    )
    result = run_hitting(spec)
    outdir = _outdir(o)
    meta = _science_meta(o)
    result.detail.meta.update(meta)
    result.summary.meta.update(meta)
    emit_csv(result.detail, outdir / "hitting.csv")
    emit_csv(result.summary, outdir / "hitting_summary.csv")
    if o["format"] == "svg":
        _write_figure(
            lambda: figures.hitting_figure(result.detail, result.theory_u),
            outdir / "hitting.svg",
        )
    return 0


_HANDLERS = {
    "theory": _cmd_theory,
    "simulate": _cmd_simulate,
    "trajectories": _cmd_trajectories,
    "sweep": _cmd_sweep,
    "convergence": _cmd_convergence,
    "hitting": _cmd_hitting,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "selftest":
            return 0 if selftest.run_selftest() else 3
        options = _effective_options(args, _OPTIONS[args.command])
        return _HANDLERS[args.command](options)
    except ValidationError as exc:
        print(f"bimoran: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"bimoran: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
