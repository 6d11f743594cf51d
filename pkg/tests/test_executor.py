"""Executor semantics: sequencing, cancellation, override, tour gating."""
import itertools

import pytest

from dobby.errors import StalePlanError
from dobby.executor import Executor, GATED, IDLE, RUNNING
from dobby.sim import SimWorld, build_registry, initial_world_state
from dobby.world import is_applicable


def make_executor(small_lab, small_items, tour_mode=False):
    sim = SimWorld(destinations=small_lab, user_location="lobby", items=dict(small_items))
    registry = build_registry(small_lab, small_items, "lobby")
    events = []
    executor = Executor(sim, initial_world_state("lobby"), tour_mode=tour_mode, emit=events.append)
    return executor, registry, events


def fetch_plan(registry):
    return [
        registry.get("Drive to Apple"),
        registry.get("Pickup Apple"),
        registry.get("Return to User"),
    ]


def kinds(events):
    return [e.kind for e in events]


def run_to_idle(executor, max_ticks=2000):
    ticks = 0
    while executor.phase == RUNNING:
        executor.tick(100)
        ticks += 1
        assert ticks < max_ticks


def test_start_begins_first_action(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    assert executor.phase == RUNNING
    assert executor.cursor == 0
    assert kinds(events) == ["plan_started", "action_started"]
    assert executor.sim.busy


def test_plan_runs_to_completion(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    assert executor.phase == IDLE
    assert kinds(events) == [
        "plan_started",
        "action_started",
        "action_completed",
        "action_started",
        "action_completed",
        "action_started",
        "action_completed",
        "plan_completed",
    ]
    assert executor.state.atoms() == {"robot_at:lobby", "holding:apple"}


def test_start_revalidates_against_current_world(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    plan = fetch_plan(registry)
    executor.start(plan)
    run_to_idle(executor)
    # replaying the same plan is stale: the gripper now holds the apple
    with pytest.raises(StalePlanError):
        executor.start(plan)
    assert executor.phase == IDLE


def test_override_cancels_then_starts(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    executor.tick(500)  # mid-drive
    events.clear()
    executor.start([registry.get("Drive to Banana")])
    assert kinds(events) == ["plan_cancelled", "plan_started", "action_started"]
    assert executor.plan[0].title == "Drive to Banana"
    run_to_idle(executor)
    assert executor.state.atoms() == {"robot_at:banana_table", "gripper_empty"}


def test_cancel_mid_second_action_keeps_one_actions_effects(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    while executor.cursor == 0 and executor.phase == RUNNING:
        executor.tick(100)
    assert executor.cursor == 1  # pickup underway
    executor.tick(100)  # partway through the manipulation
    assert executor.cancel()
    assert executor.phase == IDLE
    # exactly the drive's effects: at the table, gripper still empty
    assert executor.state.atoms() == {"robot_at:apple_table", "gripper_empty"}
    assert executor.sim.gripper is None
    assert events[-1].kind == "plan_cancelled"
    assert events[-1].payload["completed_count"] == 1


def test_cancelled_drive_claims_no_destination(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start([registry.get("Drive to Apple")])
    executor.tick(700)
    executor.cancel()
    # pose is interpolated; symbolically the robot is nowhere
    assert executor.sim.robot_pose.x == pytest.approx(0.7)
    assert not any(a.startswith("robot_at:") for a in executor.state.atoms())


def test_cancel_when_idle_is_silent_noop(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items)
    assert not executor.cancel()
    assert events == []


def test_cancel_while_gated_clears_gate(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items, tour_mode=True)
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    assert executor.phase == GATED
    assert executor.cancel()
    assert executor.phase == IDLE
    assert events[-1].kind == "plan_cancelled"


def test_tour_mode_gates_between_actions(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items, tour_mode=True)
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    assert executor.phase == GATED
    assert not executor.sim.busy  # nothing starts while gated
    continues = 0
    while executor.phase != IDLE:
        assert executor.continue_gate()
        continues += 1
        run_to_idle(executor)
    assert continues == 2  # a 3-action plan needs exactly 2 releases
    assert events[-1].kind == "plan_completed"


def test_continue_when_not_gated_is_noted_noop(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items, tour_mode=True)
    assert not executor.continue_gate()
    assert kinds(events) == ["system_note"]
    assert executor.phase == IDLE


def test_double_continue_second_is_noop(small_lab, small_items):
    executor, registry, events = make_executor(small_lab, small_items, tour_mode=True)
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    assert executor.continue_gate()
    events.clear()
    assert not executor.continue_gate()  # gate already consumed
    assert kinds(events) == ["system_note"]
    assert executor.phase == RUNNING
    assert executor.cursor == 1


def test_boundary_callback_sequence(small_lab, small_items):
    executor, registry, _ = make_executor(small_lab, small_items)
    boundaries = []
    executor.on_boundary = lambda completed, started, done: boundaries.append(
        (completed.title if completed else None, started.title if started else None, done)
    )
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    assert boundaries == [
        (None, "Drive to Apple", False),
        ("Drive to Apple", "Pickup Apple", False),
        ("Pickup Apple", "Return to User", False),
        ("Return to User", None, True),
    ]


COMMANDS = ("start_a", "start_b", "cancel", "continue", "tick")


def _apply_command(executor, registry, command):
    if command == "start_a":
        plan = fetch_plan(registry)
    elif command == "start_b":
        plan = [registry.get("Drive to Banana")]
    elif command == "cancel":
        executor.cancel()
        return
    elif command == "continue":
        executor.continue_gate()
        return
    else:
        executor.tick(700)
        return
    try:
        executor.start(plan)
    except StalePlanError:
        pass  # engine routes this to the not-capable path


def _check_invariants(executor, events, tour_mode):
    # at most one action in flight, and only while running
    assert executor.sim.busy == (executor.phase == RUNNING)
    if executor.phase == RUNNING:
        assert executor.cursor < len(executor.plan)
    if executor.phase == GATED:
        assert tour_mode
        assert 0 < executor.cursor < len(executor.plan)
    if executor.phase == IDLE:
        assert executor.plan == []
    held = [i for i, loc in executor.sim.items.items() if loc == "gripper"]
    assert len(held) <= 1
    # every start resolves to exactly one terminal, modulo the one in flight
    starts = sum(1 for e in events if e.kind == "plan_started")
    terminals = sum(1 for e in events if e.kind in ("plan_completed", "plan_cancelled"))
    in_flight = 1 if executor.phase != IDLE else 0
    assert starts - terminals == in_flight


@pytest.mark.parametrize("tour_mode", [False, True])
def test_exhaustive_interleavings_up_to_length_six(small_lab, small_items, tour_mode):
    checked = 0
    for length in range(1, 7):
        for sequence in itertools.product(COMMANDS, repeat=length):
            executor, registry, events = make_executor(small_lab, small_items, tour_mode)
            for command in sequence:
                _apply_command(executor, registry, command)
                _check_invariants(executor, events, tour_mode)
            checked += 1
    assert checked == sum(len(COMMANDS) ** n for n in range(1, 7))
