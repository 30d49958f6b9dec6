"""Replicated simulation experiments over the full tracked model.

Four kinds are provided: trajectory overlays against the limit flow,
asymptotic-weight sweeps over the initial fraction, sup-norm convergence
studies in the population size, and first-hitting observations of the
advantaged-carried weight. Replicates are seeded by spawning one child
stream per (parameter combination, replicate) from the base seed, so equal
specs reproduce byte-identical tables and replicates can run concurrently.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from . import theory
from .chains import default_horizon
from .model import PopulationState, StepEvent, apply_event, sample_event
from .tables import Table, read_event_log
from .theory import LimitParams, LimitState
from .weights import TrajectoryPoint, WeightTracker, observe

__all__ = [
    "ExperimentSpec",
    "RunResult",
    "simulate_tracked",
    "replicate_rng",
    "record_stride",
    "run_trajectories",
    "run_sweep",
    "run_convergence",
    "run_hitting",
    "replay_event_log",
    "TrajectoriesResult",
    "SweepResult",
    "ConvergenceResult",
    "HittingResult",
]

KINDS = ("trajectories", "sweep", "convergence", "hitting")


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameter grid, replicate count and base seed of one experiment."""

    kind: str
    replicates: int
    seed: int
    n_values: tuple[int, ...]
    a_values: tuple[float, ...]
    s_values: tuple[float, ...]
    level: float | None = None
    t_max: float = 10.0
    fixed_step: int | None = None
    horizon: int | None = None
    until_fixation: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS} (got {self.kind!r})")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1 (got {self.replicates})")
        for name, values in (
            ("n_values", self.n_values),
            ("a_values", self.a_values),
            ("s_values", self.s_values),
        ):
            if not values:
                raise ValueError(f"{name} must be non-empty")
        for n in self.n_values:
            if n < 2:
                raise ValueError(f"population sizes must be >= 2 (got {n})")
        for a in self.a_values:
            if not 0.0 < a < 1.0:
                raise ValueError(f"initial fractions must lie in (0, 1) (got {a})")
        for s in self.s_values:
            if s <= 0.0:
                raise ValueError(f"selection strengths must be > 0 (got {s})")
        if self.t_max <= 0.0:
            raise ValueError(f"t_max must be > 0 (got {self.t_max})")
        if self.kind in ("trajectories", "sweep", "hitting"):
            if len(self.n_values) != 1:
                raise ValueError(f"{self.kind} uses a single population size")
        if self.kind in ("trajectories", "convergence", "hitting"):
            if len(self.a_values) != 1:
                raise ValueError(f"{self.kind} uses a single initial fraction")
        if self.kind in ("convergence", "hitting") and len(self.s_values) != 1:
            raise ValueError(f"{self.kind} uses a single selection strength")
        if self.kind == "sweep" and not self.until_fixation:
            if self.fixed_step is None or self.fixed_step < 1:
                raise ValueError("sweep needs fixed_step >= 1 (or until_fixation)")
        if self.kind == "hitting":
            if self.level is None:
                raise ValueError("hitting needs a level")
            a = self.a_values[0]
            if not a <= self.level < 1.0:
                raise ValueError(
                    f"hitting level must lie in [initial_fraction={a}, 1) "
                    f"(got {self.level})"
                )


def replicate_rng(base_seed: int, combo_index: int, rep_index: int) -> np.random.Generator:
    """Independent PCG64 stream for one replicate of one parameter combo.

    Streams are spawned as SeedSequence(base_seed, spawn_key=(combo, rep)),
    which is deterministic and collision-free across the grid.
    """
    return np.random.default_rng(
        np.random.SeedSequence(base_seed, spawn_key=(combo_index, rep_index))
    )


def record_stride(n: int) -> int:
    """Recording stride in steps: about 100 points per unit of rescaled time."""
    return max(1, math.ceil(n / 100))


def recorded_steps(steps: int, stride: int) -> list[int]:
    """Step indices a stride-recorded run of ``steps`` steps reports."""
    marks = set(range(stride, steps + 1, stride))
    marks.add(0)
    marks.add(steps)
    return sorted(marks)


@dataclass
class RunResult:
    """Recorded points of one run plus how it ended."""

    points: list[TrajectoryPoint]
    outcome: str  # "steps" | "target" | "absorbed" | "horizon"
    fixed: bool

    @property
    def final(self) -> TrajectoryPoint:
        return self.points[-1]


def simulate_tracked(
    n: int,
    initial_fraction: float,
    selection: float,
    rng: np.random.Generator,
    *,
    steps: int | None = None,
    target_count: int | None = None,
    stop_at_absorption: bool = False,
    stride: int = 1,
    horizon: int | None = None,
    log=None,
) -> RunResult:
    """Run the full model with weight tracking and record stride points.

    Stops after ``steps`` steps when given; otherwise runs until the
    advantaged count hits ``target_count`` or the run is cut off (absorption
    at a boundary when ``stop_at_absorption``, or the horizon). The point at
    the stopping step is always recorded. ``log`` takes an EventLogWriter.
    """
    initial_count = math.floor(initial_fraction * n)
    if initial_count < 1:
        raise ValueError(
            f"floor(initial_fraction * N) must be >= 1 (got {initial_count})"
        )
    state = PopulationState.initial(n, initial_count, selection)
    tracker = WeightTracker.initial(state)
    points = [observe(state, tracker)]
    if target_count is not None and state.advantaged_count == target_count:
        return RunResult(points, "target", state.fixed)
    limit = steps if steps is not None else (horizon or default_horizon(n))
    outcome = "steps" if steps is not None else "horizon"
    for i in range(1, limit + 1):
        event = sample_event(state, rng)
        tracker.apply(
            event,
            state.is_advantaged(event.mother),
            state.is_advantaged(event.killed),
        )
        apply_event(state, event)
        hit = target_count is not None and state.advantaged_count == target_count
        absorbed = stop_at_absorption and state.fixed and not hit
        if i % stride == 0 or i == limit or hit or absorbed:
            points.append(observe(state, tracker))
        if log is not None:
            p = points[-1] if points[-1].step == i else observe(state, tracker)
            log.write(i, event.mother, event.father, event.killed, p.y, p.u, p.v)
        if hit:
            outcome = "target"
            break
        if absorbed:
            outcome = "absorbed"
            break
    return RunResult(points, outcome, state.fixed)


def _distance(point: TrajectoryPoint, state: LimitState) -> float:
    return math.sqrt(
        (point.y - state.y) ** 2 + (point.u - state.u) ** 2 + (point.v - state.v) ** 2
    )


def _base_meta(spec: ExperimentSpec, **extra) -> dict:
    # keys use the CLI flag spellings so table headers stay free of aliases
    meta = {
        "kind": spec.kind,
        "seed": spec.seed,
        "reps": spec.replicates,
    }
    meta.update((key.replace("_", "-"), value) for key, value in extra.items())
    return meta


@dataclass
class TrajectoriesResult:
    tables: dict[float, Table]  # one table per selection strength


def run_trajectories(spec: ExperimentSpec) -> TrajectoriesResult:
    """Replicate trajectories on a uniform rescaled-time grid, with the limit
    flow evaluated on the same grid for overlay."""
    (n,) = spec.n_values
    (a,) = spec.a_values
    steps = math.floor(n * spec.t_max)
    stride = record_stride(n)
    marks = recorded_steps(steps, stride)
    times = [k / n for k in marks]
    tables: dict[float, Table] = {}
    for s_index, s in enumerate(spec.s_values):
        limit = theory.limit_trajectory(LimitParams(a, s), times)
        table = Table(
            columns=["t", "rep", "y_sim", "w_sim", "y_theory", "w_theory"],
            meta=_base_meta(
                spec, N=n, a=a, s=s, t_max=spec.t_max, stride=stride
            ),
        )
        for rep in range(spec.replicates):
            rng = replicate_rng(spec.seed, s_index, rep)
            result = simulate_tracked(n, a, s, rng, steps=steps, stride=stride)
            if len(result.points) != len(limit):
                raise AssertionError("recording grid mismatch")
            for point, ref in zip(result.points, limit):
                table.append(
                    point.step / n, rep, point.y, point.total_weight,
                    ref.y, ref.total_weight,
                )
        tables[s] = table
    return TrajectoriesResult(tables)


@dataclass
class SweepResult:
    detail: Table
    summary: Table


def run_sweep(spec: ExperimentSpec) -> SweepResult:
    """Mean final weight fraction per initial fraction, against references.

    The default protocol measures (u + v) at a fixed step regardless of
    fixation (unfixed runs are included but counted); ``until_fixation``
    switches to measuring at absorption instead.
    """
    (n,) = spec.n_values
    detail = Table(
        columns=["s", "a", "rep", "seed", "w_final", "fixed_at_measure"],
        meta=_base_meta(
            spec, N=n, fixed_step=spec.fixed_step,
            until_fixation=spec.until_fixation, horizon=spec.horizon,
        ),
    )
    summary = Table(
        columns=[
            "s", "a", "w_mean", "w_std", "w_stderr", "replicates",
            "unfixed", "w_theory", "w_neutral", "w_infinite_s",
        ],
        meta=dict(detail.meta),
    )
    combo = 0
    for s in spec.s_values:
        for a in spec.a_values:
            values = []
            unfixed = 0
            for rep in range(spec.replicates):
                rng = replicate_rng(spec.seed, combo, rep)
                if spec.until_fixation:
                    result = simulate_tracked(
                        n, a, s, rng,
                        stop_at_absorption=True,
                        stride=spec.horizon or default_horizon(n),
                        horizon=spec.horizon,
                    )
                    fixed = result.outcome == "absorbed"
                else:
                    result = simulate_tracked(
                        n, a, s, rng, steps=spec.fixed_step, stride=spec.fixed_step
                    )
                    fixed = result.fixed
                w_final = result.final.total_weight
                values.append(w_final)
                unfixed += 0 if fixed else 1
                detail.append(s, a, rep, spec.seed, w_final, fixed)
            mean = statistics.fmean(values)
            std = statistics.stdev(values) if len(values) > 1 else 0.0
            summary.append(
                s, a, mean, std, std / math.sqrt(len(values)),
                len(values), unfixed,
                theory.asymptotic_weight(LimitParams(a, s)),
                a,
                theory.infinite_selection_weight(a),
            )
            combo += 1
    return SweepResult(detail, summary)


@dataclass
class ConvergenceResult:
    detail: Table
    summary: Table
    medians: dict[int, float]


def run_convergence(spec: ExperimentSpec) -> ConvergenceResult:
    """Per-replicate sup-norm distance to the limit flow, for each N.

    The sup runs over the recording grid (about 100 points per unit of
    rescaled time, endpoints included).
    """
    (a,) = spec.a_values
    (s,) = spec.s_values
    params = LimitParams(a, s)
    detail = Table(
        columns=["N", "rep", "seed", "sup_error"],
        meta=_base_meta(spec, a=a, s=s, t_max=spec.t_max),
    )
    summary = Table(
        columns=["N", "q25", "median", "q75", "replicates"],
        meta=dict(detail.meta),
    )
    medians: dict[int, float] = {}
    for n_index, n in enumerate(spec.n_values):
        steps = math.floor(n * spec.t_max)
        stride = record_stride(n)
        marks = recorded_steps(steps, stride)
        limit = theory.limit_trajectory(params, [k / n for k in marks])
        errors = []
        for rep in range(spec.replicates):
            rng = replicate_rng(spec.seed, n_index, rep)
            result = simulate_tracked(n, a, s, rng, steps=steps, stride=stride)
            sup = max(map(_distance, result.points, limit))
            errors.append(sup)
            detail.append(n, rep, spec.seed, sup)
        medians[n] = statistics.median(errors)
        if len(errors) > 1:
            q25, _, q75 = statistics.quantiles(errors, n=4)
        else:
            q25 = q75 = errors[0]
        summary.append(n, q25, medians[n], q75, len(errors))
    return ConvergenceResult(detail, summary, medians)


@dataclass
class HittingResult:
    detail: Table
    summary: Table
    mean: float | None
    stderr: float | None
    theory_u: float
    censored: int


def run_hitting(spec: ExperimentSpec) -> HittingResult:
    """Advantaged-carried weight fraction when the count first reaches the
    target level, compared with the limit-flow value at that level.

    Censored replicates (absorbed at 0 first, or horizon exceeded) are
    excluded from the mean and reported in the censored count.
    """
    (n,) = spec.n_values
    (a,) = spec.a_values
    (s,) = spec.s_values
    target = math.floor(spec.level * n)
    theory_u = theory.state_at_level(LimitParams(a, s), spec.level).u
    horizon = spec.horizon or default_horizon(n)
    detail = Table(
        columns=["rep", "seed", "outcome", "steps", "w_at_level"],
        meta=_base_meta(
            spec, N=n, a=a, s=s, b=spec.level, target_count=target,
            horizon=horizon,
        ),
    )
    values = []
    censored = 0
    for rep in range(spec.replicates):
        rng = replicate_rng(spec.seed, 0, rep)
        result = simulate_tracked(
            n, a, s, rng,
            target_count=target, stop_at_absorption=True,
            stride=horizon, horizon=horizon,
        )
        final = result.final
        if result.outcome == "target":
            values.append(final.u)
            detail.append(rep, spec.seed, result.outcome, final.step, final.u)
        else:
            censored += 1
            detail.append(rep, spec.seed, result.outcome, final.step, math.nan)
    mean = statistics.fmean(values) if values else None
    if len(values) > 1:
        stderr = statistics.stdev(values) / math.sqrt(len(values))
    else:
        stderr = None
    summary = Table(
        columns=[
            "N", "a", "s", "level", "target_count", "u_mean", "u_stderr",
            "replicates_used", "censored", "u_theory",
        ],
        meta=dict(detail.meta),
    )
    summary.append(
        n, a, s, spec.level, target,
        math.nan if mean is None else mean,
        math.nan if stderr is None else stderr,
        len(values), censored, theory_u,
    )
    return HittingResult(detail, summary, mean, stderr, theory_u, censored)


def replay_event_log(path):
    """Re-run a recorded event sequence and return (header, points).

    Rebuilds the step-0 state from the log header, applies every logged
    event through a fresh weight tracker, and reports the observables after
    each step; comparing them with the logged ones verifies the log.
    """
    header, records = read_event_log(path)
    state = PopulationState.initial(
        header["n_individuals"], header["initial_count"], header["selection"]
    )
    tracker = WeightTracker.initial(state)
    points = [observe(state, tracker)]
    for _step, mother, father, killed, _y, _u, _v in records:
        event = StepEvent(mother, father, killed)
        tracker.apply(
            event, state.is_advantaged(mother), state.is_advantaged(killed)
        )
        apply_event(state, event)
        points.append(observe(state, tracker))
    return header, points
