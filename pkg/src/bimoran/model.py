"""Population state and one-step dynamics of the biparental Moran model.

A population of fixed size N evolves in discrete steps. Each step draws two
parents uniformly at random with replacement, plus one individual to die,
chosen with probability proportional to its death weight: 1 for advantaged
sites and 1 + s for the rest, independently of the parents. The offspring
fills the vacated site and is advantaged iff the advantage-transmitting
parent (the "mother") is.

Sites are labelled 0..N-1. Which sites start advantaged is exchangeable, so
runs always start with sites 0..k-1 advantaged for determinism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepEvent",
    "RunConfig",
    "PopulationState",
    "sample_event",
    "apply_event",
    "death_probabilities",
]


@dataclass(frozen=True, slots=True)
class StepEvent:
    """One step's (mother, father, killed) site triple.

    Mother and father may coincide (parents are drawn with replacement) and
    the killed site may coincide with either parent (it is drawn
    independently of them).
    """

    mother: int
    father: int
    killed: int


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a single reproducible run.

    The initial advantaged count is floor(initial_fraction * n_individuals),
    placed at sites 0..count-1. Exactly one of ``steps`` / ``target_count``
    is typically set; runners interpret both being set as "whichever first".
    """

    n_individuals: int
    initial_fraction: float
    selection: float
    seed: int
    steps: int | None = None
    target_count: int | None = None

    def __post_init__(self):
        if self.n_individuals < 2:
            raise ValueError(
                f"n_individuals must be >= 2 (got {self.n_individuals})"
            )
        if not 0.0 < self.initial_fraction < 1.0:
            raise ValueError(
                "initial_fraction must lie in the open interval (0, 1) "
                f"(got {self.initial_fraction})"
            )
        if self.selection <= 0.0:
            raise ValueError(f"selection must be > 0 (got {self.selection})")
        if self.initial_count < 1:
            raise ValueError(
                "floor(initial_fraction * n_individuals) must be >= 1 "
                f"(got {self.initial_count})"
            )
        if self.steps is not None and self.steps < 0:
            raise ValueError(f"steps must be >= 0 (got {self.steps})")
        if self.target_count is not None and not (
            0 <= self.target_count <= self.n_individuals
        ):
            raise ValueError(
                f"target_count must lie in [0, N] (got {self.target_count})"
            )

    @property
    def initial_count(self) -> int:
        return math.floor(self.initial_fraction * self.n_individuals)


class PopulationState:
    """Advantage membership over sites 0..N-1 with O(1) stratum sampling.

    Keeps a dense per-site flag plus one member list per stratum
    (advantaged / disadvantaged) with swap-remove bookkeeping, so that
    drawing a uniform member of a stratum and moving a site between strata
    are both O(1).
    """

    __slots__ = ("n_individuals", "selection", "step_index", "_flags", "_adv", "_dis", "_pos")

    def __init__(self, n_individuals, advantaged_sites, selection, step_index=0):
        if n_individuals < 1:
            raise ValueError(f"n_individuals must be >= 1 (got {n_individuals})")
        if selection < 0.0:
            raise ValueError(f"selection must be >= 0 (got {selection})")
        self.n_individuals = int(n_individuals)
        self.selection = float(selection)
        self.step_index = int(step_index)
        self._flags = bytearray(self.n_individuals)
        self._adv: list[int] = []
        self._dis: list[int] = []
        self._pos = [0] * self.n_individuals
        for site in advantaged_sites:
            if not 0 <= site < self.n_individuals:
                raise ValueError(f"site {site} outside 0..{self.n_individuals - 1}")
            if self._flags[site]:
                raise ValueError(f"duplicate advantaged site {site}")
            self._flags[site] = 1
        for site in range(self.n_individuals):
            members = self._adv if self._flags[site] else self._dis
            self._pos[site] = len(members)
            members.append(site)

    @classmethod
    def initial(cls, n_individuals, advantaged_count, selection):
        """Fresh step-0 state with sites 0..advantaged_count-1 advantaged."""
        return cls(n_individuals, range(advantaged_count), selection)

    @classmethod
    def from_config(cls, config: RunConfig) -> "PopulationState":
        return cls.initial(config.n_individuals, config.initial_count, config.selection)

    @property
    def advantaged_count(self) -> int:
        return len(self._adv)

    @property
    def fixed(self) -> bool:
        """True once the advantage is everywhere or extinct (absorbing)."""
        return len(self._adv) in (0, self.n_individuals)

    def is_advantaged(self, site: int) -> bool:
        return bool(self._flags[site])

    def advantaged_sites(self) -> frozenset[int]:
        return frozenset(self._adv)

    def total_death_weight(self) -> float:
        y = len(self._adv)
        return y + (1.0 + self.selection) * (self.n_individuals - y)

    def _set_membership(self, site: int, advantaged: bool) -> None:
        if bool(self._flags[site]) == advantaged:
            return
        source, target = (self._dis, self._adv) if advantaged else (self._adv, self._dis)
        # swap-remove from the source stratum, keeping positions consistent
        idx = self._pos[site]
        last = source[-1]
        source[idx] = last
        self._pos[last] = idx
        source.pop()
        self._pos[site] = len(target)
        target.append(site)
        self._flags[site] = 1 if advantaged else 0


def sample_event(state: PopulationState, rng: np.random.Generator) -> StepEvent:
    """Draw one step's (mother, father, killed) triple.

    Mother and father are i.i.d. uniform over all sites. The killed site is
    independent of them: P(killed = i) = (1 + s * [i not advantaged]) / W
    with W the total death weight. Sampling picks a stratum by inverse CDF,
    then a uniform member within it; the call consumes exactly four
    generator draws in a fixed order (mother, father, stratum, member).

    Raises:
        ValueError: if the population has fewer than two individuals.
    """
    n = state.n_individuals
    if n < 2:
        raise ValueError(f"need at least two individuals to step (got {n})")
    mother = int(rng.integers(n))
    father = int(rng.integers(n))
    y = len(state._adv)
    threshold = y / (y + (1.0 + state.selection) * (n - y))
    members = state._adv if rng.random() < threshold else state._dis
    killed = members[int(rng.integers(len(members)))]
    return StepEvent(mother, father, killed)


def apply_event(state: PopulationState, event: StepEvent) -> PopulationState:
    """Apply one replacement in place: the killed site takes the offspring.

    The offspring is advantaged iff the mother is, so the advantaged set
    gains the killed site when the mother is advantaged and loses it when
    she is not. Advances the step index. Returns the same (mutated) state.
    """
    state._set_membership(event.killed, state.is_advantaged(event.mother))
    state.step_index += 1
    return state


def death_probabilities(state: PopulationState) -> np.ndarray:
    """Per-site probability of being the killed individual this step."""
    total = state.total_death_weight()
    out = np.empty(state.n_individuals)
    for site in range(state.n_individuals):
        weight = 1.0 if state.is_advantaged(site) else 1.0 + state.selection
        out[site] = weight / total
    return out
