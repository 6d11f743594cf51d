"""Greedy plan repair: reorder a proposed action sequence so preconditions hold.

Each round scans the remaining sequence in its current order and commits the
first applicable action. A round with no applicable action rejects the whole
sequence. Greedy means incomplete on purpose: an applicable action whose
effects block the rest may be committed first even when another ordering
would have succeeded.
"""
from __future__ import annotations

from dataclasses import dataclass

from .world import ActionSpec, WorldState, apply, is_applicable


@dataclass(frozen=True)
class Corrected:
    plan: tuple[ActionSpec, ...]


@dataclass(frozen=True)
class NotCapable:
    blocked: tuple[str, ...]


CorrectionResult = Corrected | NotCapable


def reorder_plan(
    initial_state: WorldState, sequence: list[ActionSpec]
) -> CorrectionResult:
    """Greedily reorder ``sequence`` into an executable plan, or reject it.

    Duplicate instances are tracked by position. Returns ``Corrected`` with a
    permutation of the input, or ``NotCapable`` carrying the titles that
    remained unplaceable.
    """
    remaining = list(sequence)
    ordered: list[ActionSpec] = []
    state = initial_state
    while remaining:
        next_action = None
        for index, option in enumerate(remaining):
            if is_applicable(state, option):
                next_action = index
                break
        if next_action is None:
            return NotCapable(blocked=tuple(a.title for a in remaining))
        action = remaining.pop(next_action)
        ordered.append(action)
        state = apply(state, action)
    return Corrected(plan=tuple(ordered))
