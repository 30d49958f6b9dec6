"""Independent brute-force oracles used by the test suite and the selftest.

Everything here recomputes quantities along a route deliberately different
from the production code: exhaustive enumeration of one-step events,
backward enumeration of gene ancestries on a recorded pedigree, and a
closed-form antiderivative available at one selection strength.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .model import PopulationState
from .weights import WeightTracker

__all__ = [
    "one_step_expectation",
    "count_transition_law",
    "ancestry_distribution",
    "weight_integral_at_half_selection",
]


def one_step_expectation(state: PopulationState, tracker: WeightTracker):
    """Exact E[Z_next - Z] by summing over every (mother, father, killed).

    Enumerates all N^3 triples with their exact probabilities: parents are
    uniform and the killed site carries weight 1 or 1 + s. Returns the
    expected change of (count/N, advantaged weight/N, other weight/N).
    """
    n = state.n_individuals
    s = state.selection
    w = tracker.w
    total_weight = state.total_death_weight()
    e_count = 0.0
    e_adv = 0.0
    e_dis = 0.0
    pair_p = 1.0 / (n * n)
    for mother in range(n):
        mother_adv = state.is_advantaged(mother)
        for father in range(n):
            parent_avg = (w[mother] + w[father]) / 2.0
            for killed in range(n):
                killed_adv = state.is_advantaged(killed)
                kill_p = (1.0 if killed_adv else 1.0 + s) / total_weight
                p = pair_p * kill_p
                if mother_adv and not killed_adv:
                    e_count += p
                elif killed_adv and not mother_adv:
                    e_count -= p
                gained = parent_avg
                lost = w[killed]
                if mother_adv:
                    e_adv += p * gained
                else:
                    e_dis += p * gained
                if killed_adv:
                    e_adv -= p * lost
                else:
                    e_dis -= p * lost
    return e_count / n, e_adv / n, e_dis / n


def count_transition_law(n: int, s, k: int):
    """Exact one-step law of the advantaged count from k, by enumeration.

    Sums P(mother) * P(killed) over the N^2 relevant pairs (the father does
    not affect the count) with sites 0..k-1 advantaged. Computed in exact
    rationals when ``s`` is a Fraction or int. Returns (down, stay, up).
    """
    s = Fraction(s) if not isinstance(s, float) else s
    total = k + (1 + s) * (n - k)
    down = 0
    up = 0
    for mother in range(n):
        mother_adv = mother < k
        for killed in range(n):
            killed_adv = killed < k
            weight = 1 if killed_adv else 1 + s
            p = weight / (n * total)
            if mother_adv and not killed_adv:
                up += p
            elif killed_adv and not mother_adv:
                down += p
    return down, 1 - down - up, up


def ancestry_distribution(n: int, events, start_site: int) -> list[Fraction]:
    """Distribution of the time-0 ancestor of a gene sampled at ``start_site``.

    Walks the recorded pedigree backwards: after all ``events``, the gene
    sits at ``start_site``; undoing one event moves any mass on the replaced
    site to its two parents, half each (other sites persist). Exact
    rationals throughout.
    """
    dist = [Fraction(0)] * n
    dist[start_site] = Fraction(1)
    for event in reversed(events):
        mass = dist[event.killed]
        if mass:
            dist[event.killed] = Fraction(0)
            half = mass / 2
            dist[event.mother] += half
            dist[event.father] += half
    return dist


def weight_integral_at_half_selection(a: float, y: float) -> float:
    """Closed form of the weight integral at selection 1/2.

    There the integrand reduces to (3/2) x^(-3/2) - (1/2) x^(-1/2), whose
    antiderivative is -3 x^(-1/2) - x^(1/2).
    """

    def anti(x):
        return -3.0 / math.sqrt(x) - math.sqrt(x)

    return anti(y) - anti(a)
