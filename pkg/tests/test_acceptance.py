"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <n> PASS/FAIL` line with the measured
deviation and wall time (visible with `pytest -s`), then asserts the
criterion, including its runtime budget.
"""

import hashlib
import math
import time
from fractions import Fraction

import numpy as np
from scipy import stats

from bimoran import theory
from bimoran.chains import YChain, hitting_time, ruin_probability, sample_model_jump_directions, up_fraction
from bimoran.cli import main as cli_main
from bimoran.experiments import ExperimentSpec, run_convergence, run_hitting
from bimoran.model import PopulationState, apply_event, sample_event
from bimoran.oracles import one_step_expectation
from bimoran.theory import LimitParams
from bimoran.weights import (
    ExactWeightMatrix,
    WeightTracker,
    exact_initial_vector,
    observe,
    update_vector,
)

ACCEPTANCE_SEED = 20240601


def report(number: int, passed: bool, detail: str, elapsed: float) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number} {status}: {detail} [{elapsed:.1f}s]")


def test_criterion_1_one_step_expectation_oracle():
    # exhaustive (mother, father, killed) enumeration against the drift map,
    # on every state of 10 random short histories per population size
    started = time.perf_counter()
    worst = 0.0
    for n in (3, 4, 5, 6):
        for history in range(10):
            rng = np.random.default_rng(
                np.random.SeedSequence(ACCEPTANCE_SEED, spawn_key=(1, n, history))
            )
            state = PopulationState.initial(n, max(1, n // 2), 1.0)
            tracker = WeightTracker.initial(state)
            for _ in range(12):
                point = observe(state, tracker)
                enumerated = one_step_expectation(state, tracker)
                predicted = [
                    g / n for g in theory.drift(point.y, point.u, point.v, 1.0)
                ]
                worst = max(
                    worst,
                    max(abs(e - p) for e, p in zip(enumerated, predicted)),
                )
                event = sample_event(state, rng)
                tracker.apply(
                    event,
                    state.is_advantaged(event.mother),
                    state.is_advantaged(event.killed),
                )
                apply_event(state, event)
    elapsed = time.perf_counter() - started
    passed = worst < 1e-12 and elapsed < 10.0
    report(1, passed, f"one-step expectation max deviation {worst:.2e} (tol 1e-12)", elapsed)
    assert worst < 1e-12
    assert elapsed < 10.0


def test_criterion_2_matrix_vector_equivalence():
    # N = 6, 2000 steps in exact rationals: vector equals the matrix
    # origin-weight column sums, rows sum to exactly one, entries dyadic
    started = time.perf_counter()
    n, steps = 6, 2000
    rng = np.random.default_rng(np.random.SeedSequence(ACCEPTANCE_SEED, spawn_key=(2,)))
    state = PopulationState.initial(n, 3, 1.0)
    initial_sites = state.advantaged_sites()
    matrix = ExactWeightMatrix.identity(n)
    vector = exact_initial_vector(state)
    one = Fraction(1)
    mismatches = 0
    for _ in range(steps):
        event = sample_event(state, rng)
        matrix.apply_event(event)
        update_vector(vector, event)
        apply_event(state, event)
        if matrix.origin_weights(initial_sites) != vector:
            mismatches += 1
        if any(total != one for total in matrix.row_sums()):
            mismatches += 1
    dyadic = matrix.is_dyadic()
    elapsed = time.perf_counter() - started
    passed = mismatches == 0 and dyadic and elapsed < 30.0
    report(2, passed, f"exact equivalence over {steps} steps, mismatches {mismatches}", elapsed)
    assert mismatches == 0
    assert dyadic
    assert elapsed < 30.0


def test_criterion_3_closed_form_vs_ode_oracle():
    # nine (a, s) combinations, fixed-step integration at dt = 1e-4 over
    # [0, 20]; sup-norm agreement and the conserved relation on the grid
    started = time.perf_counter()
    worst_gap = 0.0
    worst_conserved = 0.0
    for a in (0.01, 0.1, 0.5):
        for s in (0.2, 1.0, 10.0):
            params = LimitParams(a, s)
            times, values = theory.rk4_trajectory(params, 20.0, dt=1e-4)
            states = theory.limit_trajectory(params, times)
            for state, row in zip(states, values):
                gap = math.sqrt(
                    (state.y - row[0]) ** 2
                    + (state.u - row[1]) ** 2
                    + (state.v - row[2]) ** 2
                )
                worst_gap = max(worst_gap, gap)
                conserved = (
                    state.u / state.y
                    - state.v / state.complement
                    - math.exp(-state.t / 2.0)
                )
                worst_conserved = max(worst_conserved, abs(conserved))
    elapsed = time.perf_counter() - started
    passed = worst_gap < 1e-6 and worst_conserved < 1e-9 and elapsed < 60.0
    report(
        3, passed,
        f"sup gap {worst_gap:.2e} (tol 1e-6), conserved {worst_conserved:.2e} (tol 1e-9)",
        elapsed,
    )
    assert worst_gap < 1e-6
    assert worst_conserved < 1e-9
    assert elapsed < 60.0


def test_criterion_4_headline_numbers():
    started = time.perf_counter()
    moderate = theory.asymptotic_weight(LimitParams(0.01, 1.0))
    strong = theory.asymptotic_weight(LimitParams(0.01, 1e4))
    target = 2.0 * math.sqrt(0.01) - 0.01
    gap = abs(strong - target)
    elapsed = time.perf_counter() - started
    passed = 0.04 <= moderate <= 0.06 and gap < 5e-3 and elapsed < 10.0
    report(
        4, passed,
        f"asymptotic weight {moderate:.4f} in [0.04, 0.06]; "
        f"strong-selection gap {gap:.2e} (tol 5e-3, target {target})",
        elapsed,
    )
    assert 0.04 <= moderate <= 0.06
    assert gap < 5e-3
    assert elapsed < 10.0


def test_criterion_5_trajectory_convergence():
    # median sup-norm distance to the limit flow strictly decreasing in N,
    # with at least a factor two between N = 100 and N = 1600
    started = time.perf_counter()
    spec = ExperimentSpec(
        kind="convergence", replicates=50, seed=ACCEPTANCE_SEED,
        n_values=(100, 400, 1600), a_values=(0.1,), s_values=(1.0,),
        t_max=10.0,
    )
    result = run_convergence(spec)
    medians = [result.medians[n] for n in (100, 400, 1600)]
    decreasing = medians[0] > medians[1] > medians[2]
    factor = medians[0] / medians[2]
    elapsed = time.perf_counter() - started
    passed = decreasing and factor >= 2.0 and elapsed < 600.0
    report(
        5, passed,
        "medians " + ", ".join(f"{m:.4f}" for m in medians)
        + f"; factor {factor:.2f} (needs >= 2)",
        elapsed,
    )
    assert decreasing
    assert factor >= 2.0
    assert elapsed < 600.0


def test_criterion_6_hitting_level_weight():
    # mean advantaged-carried weight at the half level against quadrature
    started = time.perf_counter()
    spec = ExperimentSpec(
        kind="hitting", replicates=50, seed=ACCEPTANCE_SEED,
        n_values=(1000,), a_values=(0.05,), s_values=(1.0,), level=0.5,
    )
    result = run_hitting(spec)
    gap = abs(result.mean - result.theory_u)
    margin = 3.0 * result.stderr
    elapsed = time.perf_counter() - started
    passed = result.censored == 0 or result.censored < 5
    passed = passed and gap <= margin and elapsed < 600.0
    report(
        6, passed,
        f"mean {result.mean:.5f} vs limit {result.theory_u:.5f}, "
        f"gap {gap:.2e} <= 3 se {margin:.2e}, censored {result.censored}",
        elapsed,
    )
    assert gap <= margin
    assert elapsed < 600.0


def test_criterion_7_fixation_probability():
    # 200 marginal-chain replicates at N = 500 from a tenth advantaged
    started = time.perf_counter()
    n, start, s, replicates = 500, 50, 1.0, 200
    fixed = 0
    for rep in range(replicates):
        rng = np.random.default_rng(
            np.random.SeedSequence(ACCEPTANCE_SEED, spawn_key=(7, rep))
        )
        record = hitting_time(YChain(n, s, start), n, rng)
        fixed += record.hit
    fraction = fixed / replicates
    bound = ruin_probability(s, start, 0, n)
    se = math.sqrt(bound * (1.0 - bound) / replicates)
    floor = bound - 3.0 * se
    elapsed = time.perf_counter() - started
    passed = fraction >= floor and fraction >= 0.99 and elapsed < 60.0
    report(
        7, passed,
        f"fixation fraction {fraction:.4f} >= bound {floor:.6f} and >= 0.99",
        elapsed,
    )
    assert fraction >= floor
    assert fraction >= 0.99
    assert elapsed < 60.0


def test_criterion_8_skeleton_jump_law():
    # 1e5 jump directions of full-model runs at N = 50, s = 1, two-sided
    # binomial test against (1+s)/(2+s) at significance 0.01
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(ACCEPTANCE_SEED, spawn_key=(8,)))
    directions = sample_model_jump_directions(50, 1.0, 25, 100_000, rng)
    ups = int(np.sum(directions == 1))
    result = stats.binomtest(ups, directions.size, up_fraction(1.0))
    elapsed = time.perf_counter() - started
    passed = result.pvalue > 0.01 and elapsed < 60.0
    report(
        8, passed,
        f"{ups} of {directions.size} jumps up, p-value {result.pvalue:.3f} (> 0.01)",
        elapsed,
    )
    assert result.pvalue > 0.01
    assert elapsed < 60.0


def test_criterion_9_byte_identical_reruns(tmp_path):
    started = time.perf_counter()
    checks = []
    for args, artifact in (
        (
            ["trajectories", "--N", "100", "--a", "0.1", "--s", "1",
             "--reps", "3", "--t-max", "2", "--seed", "7"],
            "trajectories.csv",
        ),
        (
            ["sweep", "--N", "80", "--a-grid", "0.1,0.25", "--s", "1",
             "--reps", "3", "--fixed-step", "400", "--seed", "7"],
            "sweep.csv",
        ),
    ):
        out = tmp_path / artifact.replace(".csv", "")
        assert cli_main(args + ["--out", str(out)]) == 0
        first = hashlib.sha256((out / artifact).read_bytes()).hexdigest()
        assert cli_main(args + ["--out", str(out)]) == 0
        second = hashlib.sha256((out / artifact).read_bytes()).hexdigest()
        checks.append(first == second)
    elapsed = time.perf_counter() - started
    passed = all(checks)
    report(9, passed, f"checksum equality on reruns: {checks}", elapsed)
    assert all(checks)
