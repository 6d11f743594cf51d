"""World model: canonicalization, applicability, effects, plan checking."""
import pytest
from hypothesis import given, strategies as st

from dobby.errors import PreconditionError
from dobby.world import (
    ActionRegistry,
    Literal,
    Predicate,
    WorldState,
    apply,
    canonicalize,
    check_plan,
    is_applicable,
    make_action,
)

DRIVE = make_action(
    "Drive to Apple", adds=["robot_at:apple_table"], deletes=["robot_at:*"], behavior="drive:apple_table"
)
PICKUP = make_action(
    "Pickup Apple",
    pre=["robot_at:apple_table", "gripper_empty"],
    adds=["holding:apple"],
    deletes=["gripper_empty"],
    behavior="pickup:apple",
)


def test_predicate_canonicalizes_on_construction():
    assert Predicate("Robot At Home").atom == "robot_at_home"
    assert Predicate("  holding:APPLE ").atom == "holding:apple"


def test_predicate_rejects_empty():
    with pytest.raises(ValueError):
        Predicate("   ")


def test_predicate_equality_is_atom_equality():
    assert Predicate("gripper_empty") == Predicate("Gripper Empty")
    assert Predicate("a") != Predicate("b")


@given(st.text(min_size=1).filter(lambda t: t.strip()))
def test_canonicalize_idempotent(text):
    once = canonicalize(text)
    assert canonicalize(once) == once


def test_is_applicable_subset_check():
    state = WorldState.of("gripper_empty", "robot_at:apple_table")
    assert is_applicable(state, PICKUP)


def test_is_applicable_missing_precondition():
    assert not is_applicable(WorldState.of("robot_at:home"), PICKUP)


def test_is_applicable_vacuous():
    assert is_applicable(WorldState(), make_action("Noop"))


def test_negative_literal_requires_absence():
    action = make_action("Park", pre=["!holding:apple"])
    assert is_applicable(WorldState(), action)
    assert not is_applicable(WorldState.of("holding:apple"), action)


def test_apply_wildcard_delete_then_add():
    state = WorldState.of("robot_at:home", "gripper_empty")
    result = apply(state, DRIVE)
    assert result.atoms() == {"robot_at:apple_table", "gripper_empty"}


def test_apply_exact_delete():
    state = WorldState.of("robot_at:apple_table", "gripper_empty")
    result = apply(state, PICKUP)
    assert result.atoms() == {"robot_at:apple_table", "holding:apple"}


def test_apply_identity_on_empty_effects():
    state = WorldState.of("a", "b")
    assert apply(state, make_action("Noop")) == state


def test_apply_leaves_input_state_unchanged():
    state = WorldState.of("robot_at:home", "gripper_empty")
    apply(state, DRIVE)
    assert state.atoms() == {"robot_at:home", "gripper_empty"}


def test_apply_rejects_inapplicable():
    with pytest.raises(PreconditionError):
        apply(WorldState(), PICKUP)


def test_apply_is_deterministic():
    state = WorldState.of("robot_at:home", "gripper_empty")
    assert apply(state, DRIVE) == apply(state, DRIVE)


@given(
    atoms=st.sets(st.sampled_from(["p", "q", "r", "s:t", "s:u"]), max_size=5),
    adds=st.sets(st.sampled_from(["p", "q", "x"]), max_size=2),
    deletes=st.sets(st.sampled_from(["r", "s:t"]), max_size=2),
)
def test_apply_decomposes_into_difference_then_union(atoms, adds, deletes):
    # with no wildcards, apply(S, A) must equal (S \ deletes) | adds elementwise
    deletes = deletes - adds
    state = WorldState(frozenset(Predicate(a) for a in atoms))
    action = make_action("T", adds=sorted(adds), deletes=sorted(deletes))
    expected = (state.atoms() - deletes) | adds
    assert apply(state, action).atoms() == expected


def test_adds_and_exact_deletes_must_not_overlap():
    with pytest.raises(ValueError):
        make_action("Bad", adds=["x"], deletes=["x"])


def test_wildcard_delete_may_overlap_adds():
    action = make_action("Drive", adds=["robot_at:a"], deletes=["robot_at:*"])
    result = apply(WorldState.of("robot_at:b"), action)
    assert result.atoms() == {"robot_at:a"}


def test_wildcard_requires_segment_boundary():
    action = make_action("Clear", deletes=["loc:*"])
    state = WorldState.of("loc:x", "location", "loc")
    assert apply(state, action).atoms() == {"location", "loc"}


def test_check_plan_valid_sequence():
    state = WorldState.of("gripper_empty", "robot_at:home")
    result = check_plan(state, [DRIVE, PICKUP])
    assert result.valid
    assert result.failing_index is None


def test_check_plan_reports_first_failure():
    state = WorldState.of("gripper_empty", "robot_at:home")
    result = check_plan(state, [PICKUP, DRIVE])
    assert not result.valid
    assert result.failing_index == 0


def test_check_plan_empty_is_valid():
    assert check_plan(WorldState(), []).valid


def test_check_plan_matches_fold_of_apply():
    # the two code paths must agree: simulating via apply vs check_plan
    state = WorldState.of("gripper_empty", "robot_at:home")
    plan = [DRIVE, PICKUP]
    folded = state
    for action in plan:
        folded = apply(folded, action)
    assert check_plan(state, plan).final_state == folded


def test_registry_preserves_insertion_order_and_uniqueness():
    registry = ActionRegistry([DRIVE, PICKUP])
    assert registry.titles == ["Drive to Apple", "Pickup Apple"]
    assert registry.get("Pickup Apple") is PICKUP
    with pytest.raises(ValueError):
        registry.add(make_action("Drive to Apple"))


def test_action_title_must_be_nonempty():
    with pytest.raises(ValueError):
        make_action("   ")
