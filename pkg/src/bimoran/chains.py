"""Marginal dynamics of the advantaged count.

The count alone is a birth-death chain on {0..N}: it moves by +-1 with
probabilities p_k (1+s)/(2+s) and p_k / (2+s), where p_k is the per-step
jump probability, and is absorbed at 0 and N. Conditional on jumping, the
direction is a fixed-bias coin, so the embedded jump walk is a simple
biased random walk; that yields closed-form ruin probabilities and cheap
hitting-time simulation without tracking weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PopulationState, apply_event, sample_event

__all__ = [
    "jump_probability",
    "up_fraction",
    "YChain",
    "SkeletonWalk",
    "HittingRecord",
    "hitting_time",
    "ruin_probability",
    "default_horizon",
    "sample_model_jump_directions",
]


def jump_probability(n: int, s: float, k: int) -> float:
    """Probability that the advantaged count changes on one step from k."""
    return k * (n - k) * (2.0 + s) / (n * (k + (1.0 + s) * (n - k)))


def up_fraction(s: float) -> float:
    """Probability that a jump of the count goes up: (1+s)/(2+s)."""
    return (1.0 + s) / (2.0 + s)


@dataclass
class YChain:
    """Advantaged-count chain on {0..N}, absorbed at the boundaries."""

    n_individuals: int
    selection: float
    current: int

    def __post_init__(self):
        if not 0 <= self.current <= self.n_individuals:
            raise ValueError(
                f"current count {self.current} outside 0..{self.n_individuals}"
            )

    @property
    def absorbed(self) -> bool:
        return self.current in (0, self.n_individuals)

    def step(self, rng: np.random.Generator) -> "YChain":
        """One step: up w.p. p_k (1+s)/(2+s), down w.p. p_k/(2+s), else stay."""
        k = self.current
        if k in (0, self.n_individuals):
            return self
        p_jump = jump_probability(self.n_individuals, self.selection, k)
        up = p_jump * up_fraction(self.selection)
        u = rng.random()
        if u < up:
            self.current = k + 1
        elif u < p_jump:
            self.current = k - 1
        return self


@dataclass
class SkeletonWalk:
    """Jump walk of the count: +-1 steps with up-probability (1+s)/(2+s)."""

    n_individuals: int
    selection: float
    current: int

    @property
    def absorbed(self) -> bool:
        return self.current in (0, self.n_individuals)

    def step(self, rng: np.random.Generator) -> "SkeletonWalk":
        if self.absorbed:
            return self
        if rng.random() < up_fraction(self.selection):
            self.current += 1
        else:
            self.current -= 1
        return self


@dataclass(frozen=True)
class HittingRecord:
    """First-passage outcome: either the target was hit at ``steps``, or the
    run ended early (``absorbed`` at the opposite boundary, or ``horizon``).
    """

    target: int
    steps: int
    hit: bool
    outcome: str  # "hit" | "absorbed" | "horizon"


def default_horizon(n: int) -> int:
    """Generous step budget (100 N^2): censoring signals a problem, not bias."""
    return 100 * n * n


def hitting_time(
    chain: YChain, target: int, rng: np.random.Generator, horizon: int | None = None
) -> HittingRecord:
    """Steps until the count chain first visits ``target``.

    Simulates via the exact jump decomposition: the holding time at k is
    Geometric(p_k) and the jump direction a (1+s)/(2+s) coin, which is the
    same law as stepping the chain but with two draws per jump. Absorption
    at the boundary opposite to the target, or exceeding the horizon, ends
    the run with ``hit=False`` (never silently).
    """
    if horizon is None:
        horizon = default_horizon(chain.n_individuals)
    n = chain.n_individuals
    s = chain.selection
    k = chain.current
    if k == target:
        return HittingRecord(target, 0, True, "hit")
    up = up_fraction(s)
    steps = 0
    while True:
        if k in (0, n):
            return HittingRecord(target, steps, False, "absorbed")
        p_jump = jump_probability(n, s, k)
        hold = int(rng.geometric(p_jump))
        if steps + hold > horizon:
            return HittingRecord(target, horizon, False, "horizon")
        steps += hold
        k = k + 1 if rng.random() < up else k - 1
        if k == target:
            chain.current = k
            return HittingRecord(target, steps, True, "hit")
        chain.current = k


def ruin_probability(s: float, start: int, low: int, high: int) -> float:
    """Probability the jump walk reaches ``high`` before ``low`` from ``start``.

    For s > 0 this is the biased gambler's-ruin value
    (1 - r^(start-low)) / (1 - r^(high-low)) with r = 1/(1+s), evaluated
    through expm1/log1p so that exponents of order N neither overflow nor
    lose the near-one regime. s = 0 takes the symmetric branch
    (start-low)/(high-low).
    """
    if s < 0.0:
        raise ValueError(f"selection must be >= 0 (got {s})")
    if not low < start < high:
        raise ValueError(
            f"need low < start < high (got low={low}, start={start}, high={high})"
        )
    if s == 0.0:
        return (start - low) / (high - low)
    log_r = -math.log1p(s)
    return math.expm1((start - low) * log_r) / math.expm1((high - low) * log_r)


def sample_model_jump_directions(
    n: int, s: float, start: int, n_jumps: int, rng: np.random.Generator
) -> np.ndarray:
    """Directions of the first ``n_jumps`` count jumps of full-model runs.

    Steps the actual population model (no weight tracking) and records +-1
    whenever the advantaged count changes, restarting from ``start`` on
    absorption. Jumps from interior states are what the skeleton law
    describes, so absorbed states contribute nothing.
    """
    directions = np.empty(n_jumps, dtype=np.int8)
    found = 0
    state = PopulationState.initial(n, start, s)
    while found < n_jumps:
        if state.fixed:
            state = PopulationState.initial(n, start, s)
        before = state.advantaged_count
        apply_event(state, sample_event(state, rng))
        delta = state.advantaged_count - before
        if delta:
            directions[found] = delta
            found += 1
    return directions
