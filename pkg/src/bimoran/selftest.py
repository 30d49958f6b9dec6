"""Built-in verification of the numerical core against independent oracles.

Each check recomputes a quantity along a second route (exhaustive
enumeration, exact rationals, a closed-form antiderivative, a fixed-step
integrator) and reports the worst deviation against its tolerance. The CLI
prints one line per check and exits non-zero if any fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import oracles, theory
from .chains import jump_probability, up_fraction
from .model import PopulationState, apply_event, sample_event
from .theory import LimitParams
from .weights import ExactWeightMatrix, WeightTracker, exact_initial_vector, observe, update_vector

__all__ = ["CheckResult", "run_checks", "run_selftest"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: max deviation {self.max_deviation:.3e} "
            f"(tolerance {self.tolerance:.1e})"
        )


def check_one_step_drift(drift_fn=theory.drift, sizes=(3, 4, 5), history_steps=12) -> CheckResult:
    """Exhaustive one-step expectation equals drift/N at the discrete state."""
    worst = 0.0
    for n in sizes:
        rng = np.random.default_rng(1000 + n)
        state = PopulationState.initial(n, max(1, n // 2), 1.0)
        tracker = WeightTracker.initial(state)
        for _ in range(history_steps):
            expected = oracles.one_step_expectation(state, tracker)
            point = observe(state, tracker)
            predicted = [
                g / n for g in drift_fn(point.y, point.u, point.v, state.selection)
            ]
            worst = max(
                worst, max(abs(e - p) for e, p in zip(expected, predicted))
            )
            event = sample_event(state, rng)
            tracker.apply(
                event,
                state.is_advantaged(event.mother),
                state.is_advantaged(event.killed),
            )
            apply_event(state, event)
    return CheckResult("one-step drift vs exhaustive enumeration", worst, 1e-12)


def check_matrix_vector(n=5, steps=300) -> CheckResult:
    """Exact rational vector equals the matrix origin-weight column sums."""
    rng = np.random.default_rng(2024)
    state = PopulationState.initial(n, 2, 1.0)
    initial = state.advantaged_sites()
    matrix = ExactWeightMatrix.identity(n)
    vector = exact_initial_vector(state)
    one = Fraction(1)
    mismatches = 0
    for _ in range(steps):
        event = sample_event(state, rng)
        matrix.apply_event(event)
        update_vector(vector, event)
        apply_event(state, event)
        if matrix.origin_weights(initial) != vector:
            mismatches += 1
        if any(total != one for total in matrix.row_sums()):
            mismatches += 1
        if not matrix.is_dyadic():
            mismatches += 1
    return CheckResult("rational matrix/vector equivalence and row sums", float(mismatches), 0.0)


def check_count_law(sizes=(3, 4, 5, 6), s_values=(Fraction(1), Fraction(1, 2), Fraction(3))) -> CheckResult:
    """Enumerated one-step count law equals the jump-probability formulas."""
    worst = 0.0
    for n in sizes:
        for s in s_values:
            s_float = float(s)
            for k in range(n + 1):
                down, stay, up = oracles.count_transition_law(n, s, k)
                p_jump = jump_probability(n, s_float, k)
                up_ref = p_jump * up_fraction(s_float)
                down_ref = p_jump / (2.0 + s_float)
                worst = max(
                    worst,
                    abs(float(up) - up_ref),
                    abs(float(down) - down_ref),
                    abs(float(stay) - (1.0 - p_jump)),
                )
    return CheckResult("count-chain law vs enumeration", worst, 1e-12)


def check_conserved_relation() -> CheckResult:
    """u/y - v/(1-y) equals exp(-t/2) along the closed-form flow."""
    worst = 0.0
    times = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0]
    for a in (0.01, 0.1, 0.5):
        for s in (0.2, 1.0, 10.0):
            for state in theory.limit_trajectory(LimitParams(a, s), times):
                lhs = state.u / state.y - state.v / state.complement
                worst = max(worst, abs(lhs - math.exp(-state.t / 2.0)))
    return CheckResult("conserved weight relation", worst, 1e-9)


def check_quadrature_antiderivative() -> CheckResult:
    """Weight integral at selection 1/2 matches its closed antiderivative."""
    worst = 0.0
    for a, y in ((0.25, 0.75), (0.1, 0.9), (0.05, 1.0), (0.5, 0.6)):
        params = LimitParams(a, 0.5)
        exact = oracles.weight_integral_at_half_selection(a, y)
        worst = max(worst, abs(theory.weight_integral(params, y) - exact))
    return CheckResult("quadrature vs closed antiderivative (s=1/2)", worst, 1e-9)


def check_closed_form_vs_rk4(t_max=5.0, dt=1e-4) -> CheckResult:
    """Closed form and the fixed-step integrator agree along one flow."""
    params = LimitParams(0.1, 1.0)
    times, values = theory.rk4_trajectory(params, t_max, dt=dt)
    states = theory.limit_trajectory(params, times)
    worst = 0.0
    for state, row in zip(states, values):
        worst = max(
            worst,
            math.sqrt(
                (state.y - row[0]) ** 2
                + (state.u - row[1]) ** 2
                + (state.v - row[2]) ** 2
            ),
        )
    return CheckResult("closed form vs fixed-step integrator", worst, 1e-6)


def run_checks(drift_fn=theory.drift) -> list[CheckResult]:
    return [
        check_one_step_drift(drift_fn=drift_fn),
        check_matrix_vector(),
        check_count_law(),
        check_conserved_relation(),
        check_quadrature_antiderivative(),
        check_closed_form_vs_rk4(),
    ]


def run_selftest(out=print) -> bool:
    """Run all checks, print one line each, return overall success."""
    results = run_checks()
    for result in results:
        out(result.line())
    ok = all(result.passed for result in results)
    out("selftest " + ("PASSED" if ok else "FAILED"))
    return ok
