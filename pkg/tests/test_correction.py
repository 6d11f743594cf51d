"""Greedy plan repair: worked examples, oracles, and the incompleteness witness.

Two independent oracles guard reorder_plan: a literal re-transcription of the
greedy loop (trace equivalence) and brute-force permutation search (to prove
the greedy strategy is weaker than exhaustive search, on purpose).
"""
import itertools
import json
import random
from pathlib import Path

import pytest

from dobby.correction import Corrected, NotCapable, reorder_plan
from dobby.world import ActionSpec, Literal, Predicate, WorldState, apply, check_plan, is_applicable, make_action

from helpers import random_domain

WITNESS_PATH = Path(__file__).parent / "data" / "greedy_incompleteness_witness.json"

DRIVE_APPLE = make_action("Drive to Apple", adds=["robot_at:apple_table"], deletes=["robot_at:*"])
PICKUP_APPLE = make_action(
    "Pickup Apple",
    pre=["robot_at:apple_table", "gripper_empty"],
    adds=["holding:apple"],
    deletes=["gripper_empty"],
)
PICKUP_BANANA = make_action(
    "Pickup Banana",
    pre=["robot_at:banana_table", "gripper_empty"],
    adds=["holding:banana"],
    deletes=["gripper_empty"],
)
RETURN_TO_USER = make_action("Return to User", adds=["robot_at:lobby"], deletes=["robot_at:*"])

HOME = WorldState.of("gripper_empty", "robot_at:home")


def greedy_transcription(state: WorldState, sequence: list[ActionSpec]):
    """Independent, line-by-line rendering of the greedy repair loop."""
    sequence = list(sequence)
    plan = []
    while sequence:
        next_action = None
        for option in sequence:
            if is_applicable(state, option):
                next_action = option
                break
        if next_action is None:
            return None
        plan.append(next_action)
        state = apply(state, next_action)
        sequence.remove(next_action)
    return plan


def brute_force_valid_order(state: WorldState, sequence: list[ActionSpec]):
    """Exhaustive oracle: any permutation that executes, else None."""
    for perm in itertools.permutations(range(len(sequence))):
        candidate = [sequence[i] for i in perm]
        if check_plan(state, candidate).valid:
            return candidate
    return None


def test_already_valid_plan_is_unchanged():
    result = reorder_plan(HOME, [DRIVE_APPLE, PICKUP_APPLE])
    assert isinstance(result, Corrected)
    assert list(result.plan) == [DRIVE_APPLE, PICKUP_APPLE]


def test_swapped_plan_is_reordered():
    # greedy trace: pickup inapplicable at home, drive placed first, then pickup
    result = reorder_plan(HOME, [PICKUP_APPLE, DRIVE_APPLE])
    assert isinstance(result, Corrected)
    assert list(result.plan) == [DRIVE_APPLE, PICKUP_APPLE]
    assert check_plan(HOME, list(result.plan)).valid


def test_unreachable_action_rejects_whole_plan():
    state = WorldState.of("gripper_empty", "robot_at:apple_table")
    result = reorder_plan(state, [PICKUP_APPLE, PICKUP_BANANA])
    assert isinstance(result, NotCapable)
    assert result.blocked == ("Pickup Banana",)
    # brute force agrees no order works: both permutations fail
    assert brute_force_valid_order(state, [PICKUP_APPLE, PICKUP_BANANA]) is None


def test_greedy_picks_first_applicable_each_round():
    # pickup inapplicable, return applicable first, then drive, then pickup
    result = reorder_plan(HOME, [PICKUP_APPLE, RETURN_TO_USER, DRIVE_APPLE])
    assert isinstance(result, Corrected)
    assert [a.title for a in result.plan] == ["Return to User", "Drive to Apple", "Pickup Apple"]
    assert check_plan(HOME, list(result.plan)).valid


def test_empty_sequence_corrects_to_empty():
    result = reorder_plan(HOME, [])
    assert isinstance(result, Corrected)
    assert result.plan == ()


def test_duplicate_instances_tracked_by_position():
    sequence = [DRIVE_APPLE, RETURN_TO_USER, DRIVE_APPLE]
    result = reorder_plan(HOME, sequence)
    assert isinstance(result, Corrected)
    assert sorted(a.title for a in result.plan) == sorted(a.title for a in sequence)
    assert len(result.plan) == 3


@pytest.mark.parametrize("seed", range(40))
def test_matches_independent_transcription(seed):
    rng = random.Random(seed)
    state, actions = random_domain(rng)
    sequence = [rng.choice(actions) for _ in range(rng.randint(0, 6))] if actions else []
    expected = greedy_transcription(state, sequence)
    result = reorder_plan(state, sequence)
    if expected is None:
        assert isinstance(result, NotCapable)
    else:
        assert isinstance(result, Corrected)
        assert list(result.plan) == expected


def test_soundness_and_permutation_fuzz():
    """Every corrected output executes and is a multiset permutation; the fuzz
    also finds at least one case where greedy is weaker than brute force."""
    rng = random.Random(20260809)
    witnesses = []
    corrected_count = 0
    for _ in range(2000):
        state, actions = random_domain(rng)
        sequence = [rng.choice(actions) for _ in range(rng.randint(0, 6))] if actions else []
        result = reorder_plan(state, sequence)
        if isinstance(result, Corrected):
            corrected_count += 1
            assert check_plan(state, list(result.plan)).valid
            assert sorted(id(a) for a in result.plan) == sorted(id(a) for a in sequence)
            if sequence and check_plan(state, sequence).valid:
                assert list(result.plan) == sequence  # stability on valid input
        elif not witnesses and len(sequence) <= 6:
            valid_order = brute_force_valid_order(state, sequence)
            if valid_order is not None:
                witnesses.append((state, sequence, valid_order))
    assert corrected_count > 100
    assert witnesses, "fuzz never distinguished greedy from exhaustive search"


def test_incompleteness_witness_fixture():
    """Frozen regression case: greedy rejects, brute force succeeds."""
    data = json.loads(WITNESS_PATH.read_text())
    state = WorldState(frozenset(Predicate(a) for a in data["initial"]))
    actions = [
        ActionSpec(
            title=raw["title"],
            preconditions=frozenset(
                Literal(Predicate(atom), positive) for atom, positive in raw["pre"]
            ),
            adds=frozenset(Predicate(a) for a in raw["adds"]),
            deletes=frozenset(raw["deletes"]),
        )
        for raw in data["actions"]
    ]
    result = reorder_plan(state, actions)
    assert isinstance(result, NotCapable)
    valid = brute_force_valid_order(state, actions)
    assert valid is not None
    assert check_plan(state, valid).valid


def test_handcrafted_incompleteness_shape():
    # consuming a shared resource first blocks the rest even though the
    # reverse order succeeds; greedy never looks ahead
    eat = make_action("Eat Fuel", pre=["fuel"], deletes=["fuel"])
    use = make_action("Use Fuel", pre=["fuel"], adds=["work_done"])
    state = WorldState.of("fuel")
    assert isinstance(reorder_plan(state, [eat, use]), NotCapable)
    assert brute_force_valid_order(state, [eat, use]) is not None


def test_termination_bound():
    # n rounds of at most n scans; a long all-applicable sequence terminates
    actions = [make_action(f"A{i}", adds=[f"done{i}"]) for i in range(50)]
    result = reorder_plan(WorldState(), actions)
    assert isinstance(result, Corrected)
    assert len(result.plan) == 50
