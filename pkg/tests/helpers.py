"""Shared test utilities: stepping the full model with weight tracking."""

from bimoran.model import apply_event, sample_event
from bimoran.weights import WeightTracker


def step_tracked(state, tracker, rng):
    """Advance the model and tracker one step; returns the event."""
    event = sample_event(state, rng)
    tracker.apply(
        event,
        state.is_advantaged(event.mother),
        state.is_advantaged(event.killed),
    )
    apply_event(state, event)
    return event


def run_tracked(state, rng, steps):
    """Fresh tracker advanced ``steps`` steps; returns (tracker, events)."""
    tracker = WeightTracker.initial(state)
    events = [step_tracked(state, tracker, rng) for _ in range(steps)]
    return tracker, events
