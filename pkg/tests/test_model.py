"""Population state, event sampling, and the one-step advantage update."""

import math

import numpy as np
import pytest
from scipy import stats

from bimoran.model import (
    PopulationState,
    RunConfig,
    StepEvent,
    apply_event,
    death_probabilities,
    sample_event,
)


class TestRunConfig:
    def test_accepts_valid(self):
        config = RunConfig(10, 0.3, 1.0, seed=1)
        assert config.initial_count == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_individuals=1, initial_fraction=0.5, selection=1.0, seed=0),
            dict(n_individuals=10, initial_fraction=1.5, selection=1.0, seed=0),
            dict(n_individuals=10, initial_fraction=0.0, selection=1.0, seed=0),
            dict(n_individuals=10, initial_fraction=0.3, selection=0.0, seed=0),
            dict(n_individuals=10, initial_fraction=0.3, selection=-1.0, seed=0),
            # floor(a N) = 0
            dict(n_individuals=100, initial_fraction=0.001, selection=1.0, seed=0),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            RunConfig(**kwargs)


class TestPopulationState:
    def test_initial_placement(self):
        state = PopulationState.initial(6, 2, 1.0)
        assert state.advantaged_sites() == frozenset({0, 1})
        assert state.advantaged_count == 2
        assert not state.fixed

    def test_membership_moves(self):
        state = PopulationState.initial(5, 2, 1.0)
        state._set_membership(4, True)
        state._set_membership(0, False)
        assert state.advantaged_sites() == frozenset({1, 4})
        assert state.is_advantaged(4) and not state.is_advantaged(0)

    def test_duplicate_site_rejected(self):
        with pytest.raises(ValueError):
            PopulationState(4, [1, 1], 1.0)


class TestSampleEvent:
    def test_rejects_singleton_population(self):
        state = PopulationState.initial(1, 1, 1.0)
        with pytest.raises(ValueError):
            sample_event(state, np.random.default_rng(0))

    def test_death_uniform_when_all_advantaged(self):
        state = PopulationState.initial(5, 5, 3.0)
        assert death_probabilities(state) == pytest.approx([0.2] * 5)

    def test_death_uniform_when_neutral(self):
        state = PopulationState.initial(5, 2, 0.0)
        assert death_probabilities(state) == pytest.approx([0.2] * 5)

    def test_two_sites_death_law(self):
        # one advantaged of two, s = 1: kill probabilities 1/3 and 2/3
        state = PopulationState.initial(2, 1, 1.0)
        assert death_probabilities(state) == pytest.approx([1 / 3, 2 / 3])
        rng = np.random.default_rng(123)
        draws = 200_000
        killed_second = sum(sample_event(state, rng).killed for _ in range(draws))
        freq = killed_second / draws
        sigma = math.sqrt((2 / 3) * (1 / 3) / draws)
        assert abs(freq - 2 / 3) < 4 * sigma

    def test_parents_uniform_and_may_coincide(self):
        state = PopulationState.initial(3, 1, 1.0)
        rng = np.random.default_rng(5)
        events = [sample_event(state, rng) for _ in range(30_000)]
        counts = np.zeros(3)
        for event in events:
            counts[event.mother] += 1
        assert stats.chisquare(counts).pvalue > 0.001
        assert any(e.mother == e.father for e in events)
        assert any(e.killed in (e.mother, e.father) for e in events)

    def test_killed_frequencies_chi_square(self):
        # fixed state, N = 10, s = 1: per-site kill counts over 1e5 draws
        state = PopulationState.initial(10, 4, 1.0)
        rng = np.random.default_rng(777)
        counts = np.zeros(10)
        for _ in range(100_000):
            counts[sample_event(state, rng).killed] += 1
        expected = death_probabilities(state) * 100_000
        assert stats.chisquare(counts, expected).pvalue > 0.001


class TestApplyEvent:
    def test_advantage_follows_mother(self):
        state = PopulationState.initial(4, 2, 1.0)
        # advantaged mother, disadvantaged killed: count up
        apply_event(state, StepEvent(mother=0, father=3, killed=3))
        assert state.advantaged_sites() == frozenset({0, 1, 3})
        # disadvantaged mother, advantaged killed: count down
        apply_event(state, StepEvent(mother=2, father=0, killed=1))
        assert state.advantaged_sites() == frozenset({0, 3})
        # advantaged mother and killed: set unchanged
        apply_event(state, StepEvent(mother=0, father=1, killed=3))
        assert state.advantaged_sites() == frozenset({0, 3})
        assert state.step_index == 3

    @pytest.mark.parametrize("count", [0, 4])
    def test_absorbing_states_never_change(self, count):
        state = PopulationState.initial(4, count, 1.0)
        rng = np.random.default_rng(9)
        for _ in range(300):
            apply_event(state, sample_event(state, rng))
            assert state.advantaged_count == count
