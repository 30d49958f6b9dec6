"""Ancestral genetic weights under the biparental replacement dynamics.

Each individual carries, per initial ancestor, the probability that a gene
sampled from it today traces back to that ancestor at step 0. A replacement
sets the new individual's weights to the average of its two parents' weights.
Production runs track only the per-site probability of originating from the
initially advantaged group (an O(N) vector with O(1) updates), together with
running totals over the advantaged / disadvantaged strata. The exact N x N
rational matrix is kept as a small-N test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import PopulationState, StepEvent

__all__ = [
    "TrajectoryPoint",
    "update_vector",
    "WeightTracker",
    "observe",
    "ExactWeightMatrix",
    "exact_initial_vector",
]

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    """Rescaled observables at one step: counts and weights divided by N."""

    step: int
    y: float
    u: float
    v: float

    @property
    def total_weight(self) -> float:
        """Population-wide weight fraction of the initially advantaged group."""
        return self.u + self.v

    def distance(self, other: "TrajectoryPoint") -> float:
        """Euclidean distance between two (y, u, v) triples."""
        return math.sqrt(
            (self.y - other.y) ** 2 + (self.u - other.u) ** 2 + (self.v - other.v) ** 2
        )


def update_vector(w, event: StepEvent):
    """Replace the killed site's weight by the parents' average, in place.

    Works on any mutable sequence whose entries support addition and
    division by 2 (floats or Fractions). Parent values are read before the
    write, so killed == mother or killed == father uses pre-update values.
    """
    w[event.killed] = (w[event.mother] + w[event.father]) / 2
    return w


class WeightTracker:
    """Per-site origin probabilities plus running stratum totals.

    ``w[i]`` is the probability that a gene of individual i originates from
    the initially advantaged group. ``u`` and ``v`` accumulate the totals
    over the advantaged and disadvantaged strata so a step costs O(1);
    ``recompute_totals`` does the full O(N) sums for validation.
    """

    __slots__ = ("w", "u", "v")

    def __init__(self, w, u, v):
        self.w = w
        self.u = u
        self.v = v

    @classmethod
    def initial(cls, state: PopulationState) -> "WeightTracker":
        w = [1.0 if state.is_advantaged(i) else 0.0 for i in range(state.n_individuals)]
        return cls(w, float(state.advantaged_count), 0.0)

    def apply(self, event: StepEvent, mother_advantaged: bool, killed_was_advantaged: bool) -> None:
        """Update for one event, given strata as of before the replacement."""
        w = self.w
        new = (w[event.mother] + w[event.father]) / 2
        old = w[event.killed]
        if killed_was_advantaged:
            self.u -= old
        else:
            self.v -= old
        if mother_advantaged:
            self.u += new
        else:
            self.v += new
        w[event.killed] = new

    def recompute_totals(self, state: PopulationState) -> tuple[float, float]:
        u = math.fsum(self.w[i] for i in range(state.n_individuals) if state.is_advantaged(i))
        v = math.fsum(self.w[i] for i in range(state.n_individuals) if not state.is_advantaged(i))
        return u, v


def observe(state: PopulationState, tracker: WeightTracker) -> TrajectoryPoint:
    """Current rescaled triple (count, advantaged weight, other weight) / N."""
    n = state.n_individuals
    return TrajectoryPoint(
        step=state.step_index,
        y=state.advantaged_count / n,
        u=tracker.u / n,
        v=tracker.v / n,
    )


class ExactWeightMatrix:
    """Exact rational pedigree-weight matrix, as a small-N oracle.

    Row i holds the distribution over time-0 sites of the ancestor a gene
    of individual i traces back to. Rows start as the identity and every
    replacement rewrites one row as the average of the two parent rows, so
    all entries stay dyadic rationals and each row sums to exactly 1.
    """

    __slots__ = ("n", "rows")

    def __init__(self, rows):
        self.rows = rows
        self.n = len(rows)

    @classmethod
    def identity(cls, n: int) -> "ExactWeightMatrix":
        one, zero = Fraction(1), Fraction(0)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    def apply_event(self, event: StepEvent) -> None:
        mrow = self.rows[event.mother]
        frow = self.rows[event.father]
        self.rows[event.killed] = [(a + b) / 2 for a, b in zip(mrow, frow)]

    def row_sums(self) -> list[Fraction]:
        return [sum(row) for row in self.rows]

    def origin_weights(self, initial_sites) -> list[Fraction]:
        """Per-individual total weight of a set of time-0 ancestors."""
        cols = sorted(initial_sites)
        return [sum(row[j] for j in cols) for row in self.rows]

    def is_dyadic(self) -> bool:
        """True iff every entry's denominator is a power of two."""
        return all(
            (e.denominator & (e.denominator - 1)) == 0 for row in self.rows for e in row
        )


def exact_initial_vector(state: PopulationState) -> list[Fraction]:
    """Rational origin-probability vector at step 0 (1 on advantaged sites)."""
    return [
        Fraction(1) if state.is_advantaged(i) else Fraction(0)
        for i in range(state.n_individuals)
    ]
