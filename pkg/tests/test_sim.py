"""Simulator: destinations parsing, registry generation, kinematics."""
import random

import pytest

from dobby.errors import DestinationsParseError, SimulationError
from dobby.sim import (
    ARRIVAL_THRESHOLD_M,
    Destination,
    Pose,
    SimWorld,
    build_registry,
    initial_world_state,
    load_destinations,
)
from dobby.world import apply, check_plan, is_applicable

WELL_FORMED = """# comment line
lobby|Lobby|0.0|0.0|Start here.
apple_table|Apple|3.0|0.0|Apples live here.

banana_table|Banana|4.0|2.0|Bananas live here.
"""


def test_load_destinations_parses_records_in_order():
    destinations = load_destinations(WELL_FORMED)
    assert [d.id for d in destinations] == ["lobby", "apple_table", "banana_table"]
    assert destinations[1].pose == Pose(3.0, 0.0)
    assert destinations[1].display_name == "Apple"


def test_load_destinations_ten_records(fixtures_dir):
    content = (fixtures_dir / "lab_destinations.txt").read_text()
    assert len(load_destinations(content)) == 10


def test_load_destinations_empty_file():
    assert load_destinations("") == []
    assert load_destinations("# only comments\n") == []


def test_load_destinations_duplicate_id_cites_line():
    content = "a|A|0|0|d\nb|B|1|1|d\n" + "\n" * 4 + "a|A again|2|2|d\n"
    with pytest.raises(DestinationsParseError) as excinfo:
        load_destinations(content)
    assert excinfo.value.line_number == 7
    assert "duplicate" in str(excinfo.value)


def test_load_destinations_wrong_field_count():
    with pytest.raises(DestinationsParseError) as excinfo:
        load_destinations("a|A|0|0\n")
    assert "5" in str(excinfo.value)


def test_load_destinations_non_numeric_coordinate():
    with pytest.raises(DestinationsParseError) as excinfo:
        load_destinations("a|A|zero|0|d\n")
    assert "non-numeric" in str(excinfo.value)


@pytest.fixture
def registry(small_lab, small_items):
    return build_registry(small_lab, small_items, "lobby")


def test_build_registry_counts(small_lab, small_items):
    # 3 drives + 2 pickups + 2 handovers + 1 return
    registry = build_registry(small_lab, small_items, "lobby")
    assert len(registry) == 8


def test_build_registry_ten_destinations_two_items(fixtures_dir):
    destinations = load_destinations((fixtures_dir / "lab_destinations.txt").read_text())
    registry = build_registry(
        destinations, {"apple": "apple_table", "banana": "banana_table"}, "lobby"
    )
    assert len(registry) == 15  # 10 + 2 + 2 + 1


def test_build_registry_order(registry):
    assert registry.titles == [
        "Drive to Lobby",
        "Drive to Apple",
        "Drive to Banana",
        "Pickup Apple",
        "Pickup Banana",
        "Hand over Apple",
        "Hand over Banana",
        "Return to User",
    ]


def test_build_registry_single_destination_no_items(small_lab):
    registry = build_registry(small_lab[:1], {}, "lobby")
    assert registry.titles == ["Drive to Lobby", "Return to User"]


def test_generated_actions_chain_symbolically(registry):
    state = initial_world_state("lobby")
    plan = [
        registry.get("Drive to Apple"),
        registry.get("Pickup Apple"),
        registry.get("Return to User"),
        registry.get("Hand over Apple"),
    ]
    result = check_plan(state, plan)
    assert result.valid
    assert result.final_state.atoms() == {
        "robot_at:lobby",
        "gripper_empty",
        "delivered:apple",
    }


def test_pickup_requires_empty_gripper(registry):
    state = initial_world_state("lobby")
    state = apply(state, registry.get("Drive to Apple"))
    state = apply(state, registry.get("Pickup Apple"))
    state = apply(state, registry.get("Drive to Banana"))
    assert not is_applicable(state, registry.get("Pickup Banana"))


def make_sim(small_lab, items=None) -> SimWorld:
    return SimWorld(destinations=small_lab, user_location="lobby", items=dict(items or {}))


def test_step_advances_along_straight_line(small_lab):
    sim = make_sim(small_lab)
    sim.begin("drive:apple_table")
    finished = sim.step(1000)
    assert not finished
    assert sim.robot_pose == Pose(1.0, 0.0)


def test_arrival_snaps_to_target(small_lab):
    sim = make_sim(small_lab)
    sim.begin("drive:apple_table")
    ticks = 0
    while sim.busy:
        finished = sim.step(100)
        ticks += 1
    assert finished
    assert sim.robot_pose == small_lab[1].pose
    assert ticks == 20  # 2.0 m at 1 m/s in 100 ms steps


def test_arrival_threshold_completes_early(small_lab):
    sim = make_sim(small_lab)
    sim.robot_pose = Pose(2.0 - 0.04, 0.0)
    sim.begin("drive:apple_table")
    assert sim.step(1)  # within 5 cm: snap and finish
    assert sim.robot_pose == small_lab[1].pose


def test_step_while_idle_only_advances_clock(small_lab):
    sim = make_sim(small_lab)
    before = sim.robot_pose
    assert not sim.step(500)
    assert sim.clock_ms == 500
    assert sim.robot_pose == before


def test_step_requires_positive_dt(small_lab):
    sim = make_sim(small_lab)
    with pytest.raises(ValueError):
        sim.step(0)


def test_pickup_and_handover_lifecycle(small_lab, small_items):
    sim = make_sim(small_lab, small_items)
    sim.robot_pose = small_lab[1].pose
    sim.begin("pickup:apple")
    while sim.busy:
        sim.step(100)
    assert sim.gripper == "apple"
    assert sim.items["apple"] == "gripper"
    sim.begin("handover:apple")
    while sim.busy:
        sim.step(100)
    assert sim.gripper is None
    assert sim.items["apple"] == "lobby"


def test_gripper_capacity_enforced(small_lab, small_items):
    sim = make_sim(small_lab, small_items)
    sim.begin("pickup:apple")
    while sim.busy:
        sim.step(100)
    with pytest.raises(SimulationError):
        sim.begin("pickup:banana")


def test_unknown_behavior_rejected(small_lab):
    sim = make_sim(small_lab)
    with pytest.raises(SimulationError):
        sim.begin("teleport:lobby")
    with pytest.raises(SimulationError):
        sim.begin("drive:nowhere")


def test_halt_keeps_interpolated_pose(small_lab):
    sim = make_sim(small_lab)
    sim.begin("drive:apple_table")
    sim.step(700)
    sim.halt()
    assert not sim.busy
    assert sim.robot_pose == Pose(0.7, 0.0)


def test_departure_retractions_only_for_drives(small_lab):
    sim = make_sim(small_lab)
    assert sim.departure_retractions("drive:apple_table") == ["robot_at:*"]
    assert sim.departure_retractions("pickup:apple") == []


def test_trajectories_bitwise_deterministic(small_lab, small_items):
    def run() -> list[tuple[float, float]]:
        sim = make_sim(small_lab, small_items)
        trace = []
        sim.begin("drive:banana_table")
        for _ in range(40):
            sim.step(100)
            trace.append((sim.robot_pose.x, sim.robot_pose.y))
        return trace

    assert run() == run()


def test_random_valid_plans_respect_gripper_invariant(small_lab, small_items):
    """Drive the sim with randomly chosen symbolically-valid actions; the
    physical gripper never holds more than one item."""
    rng = random.Random(3)
    registry = build_registry(small_lab, small_items, "lobby")
    for _ in range(30):
        sim = make_sim(small_lab, small_items)
        state = initial_world_state("lobby")
        for _ in range(rng.randint(1, 8)):
            options = [a for a in registry if is_applicable(state, a)]
            if not options:
                break
            action = rng.choice(options)
            sim.begin(action.behavior)
            while sim.busy:
                sim.step(100)
            state = apply(state, action)
            held = [item for item, loc in sim.items.items() if loc == "gripper"]
            assert len(held) <= 1
            assert (sim.gripper is None) == (len(held) == 0)


def test_symbolic_metric_coherence_at_completion(small_lab, small_items):
    """Whenever a robot_at fact holds after an action completes, the metric
    pose is within the arrival threshold of that destination."""
    registry = build_registry(small_lab, small_items, "lobby")
    sim = make_sim(small_lab, small_items)
    state = initial_world_state("lobby")
    for title in ["Drive to Apple", "Pickup Apple", "Return to User", "Hand over Apple"]:
        action = registry.get(title)
        for pattern in sim.departure_retractions(action.behavior):
            state = state.retract_matching(pattern)
        sim.begin(action.behavior)
        while sim.busy:
            sim.step(100)
            for atom in state.atoms():  # during motion too: no stale location claims
                if atom.startswith("robot_at:"):
                    dest = sim.destination(atom.split(":", 1)[1])
                    assert sim.robot_pose.distance_to(dest.pose) < ARRIVAL_THRESHOLD_M
        state = apply(state, action)
        for atom in state.atoms():
            if atom.startswith("robot_at:"):
                dest = sim.destination(atom.split(":", 1)[1])
                assert sim.robot_pose.distance_to(dest.pose) < ARRIVAL_THRESHOLD_M
