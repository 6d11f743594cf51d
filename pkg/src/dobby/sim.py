"""Kinematic simulation of the tour robot and its lab.

Destinations come from a plain-text file (one ``id|display name|x|y|description``
record per line). Each destination yields a drive action; each item yields a
pickup and a handover; arrival snaps the pose once the robot is within 5 cm of
the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DestinationsParseError, SimulationError
from .world import ActionRegistry, Predicate, WorldState, make_action

ARRIVAL_THRESHOLD_M = 0.05
DEFAULT_SPEED_MPS = 1.0
MANIPULATION_MS = 1500

GRIPPER = "gripper"


@dataclass(frozen=True)
class Pose:
    x: float
    y: float

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Destination:
    id: str
    display_name: str
    pose: Pose
    description: str


def load_destinations(content: str) -> list[Destination]:
    """Parse a destinations file; rejects malformed or duplicate records with
    the offending line number."""
    destinations: list[Destination] = []
    seen: set[str] = set()
    for line_number, raw in enumerate(content.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 5:
            raise DestinationsParseError(
                line_number, f"expected 5 '|'-separated fields, got {len(fields)}"
            )
        dest_id, display_name, x_text, y_text, description = (f.strip() for f in fields)
        if not dest_id:
            raise DestinationsParseError(line_number, "empty destination id")
        if dest_id in seen:
            raise DestinationsParseError(line_number, f"duplicate id {dest_id!r}")
        if not description:
            raise DestinationsParseError(line_number, "empty description")
        try:
            x, y = float(x_text), float(y_text)
        except ValueError:
            raise DestinationsParseError(
                line_number, f"non-numeric coordinate: {x_text!r}, {y_text!r}"
            ) from None
        seen.add(dest_id)
        destinations.append(
            Destination(id=dest_id, display_name=display_name, pose=Pose(x, y), description=description)
        )
    return destinations


def load_destinations_file(path: str | Path) -> list[Destination]:
    return load_destinations(Path(path).read_text(encoding="utf-8"))


def load_topics_file(path: str | Path) -> list[tuple[str, str]]:
    """Topics file: ``name|body`` per line, ``#`` comments ignored."""
    topics = []
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "|" not in line:
            raise DestinationsParseError(line_number, "expected 'name|body'")
        name, body = line.split("|", 1)
        topics.append((name.strip(), body.strip()))
    return topics


def drive_title(destination: Destination) -> str:
    return f"Drive to {destination.display_name}"


RETURN_TITLE = "Return to User"


def build_registry(
    destinations: list[Destination],
    items: dict[str, str],
    user_location: str,
) -> ActionRegistry:
    """Generate the ground action set: one drive per destination, pickup and
    handover per item, plus a return-to-user alias. ``items`` maps item id to
    the destination id where it initially sits."""
    if not destinations:
        raise ValueError("at least one destination is required")
    by_id = {d.id: d for d in destinations}
    if user_location not in by_id:
        raise ValueError(f"user location {user_location!r} is not a destination")
    for item, location in items.items():
        if location not in by_id:
            raise ValueError(f"item {item!r} placed at unknown destination {location!r}")

    registry = ActionRegistry()
    for dest in destinations:
        registry.add(
            make_action(
                drive_title(dest),
                adds=[f"robot_at:{dest.id}"],
                deletes=["robot_at:*"],
                behavior=f"drive:{dest.id}",
            )
        )
    for item, location in items.items():
        registry.add(
            make_action(
                f"Pickup {item.capitalize()}",
                pre=[f"robot_at:{location}", "gripper_empty"],
                adds=[f"holding:{item}"],
                deletes=["gripper_empty"],
                behavior=f"pickup:{item}",
            )
        )
    for item in items:
        registry.add(
            make_action(
                f"Hand over {item.capitalize()}",
                pre=[f"holding:{item}", f"robot_at:{user_location}"],
                adds=["gripper_empty", f"delivered:{item}"],
                deletes=[f"holding:{item}"],
                behavior=f"handover:{item}",
            )
        )
    registry.add(
        make_action(
            RETURN_TITLE,
            adds=[f"robot_at:{user_location}"],
            deletes=["robot_at:*"],
            behavior=f"drive:{user_location}",
        )
    )
    return registry


def initial_world_state(user_location: str) -> WorldState:
    return WorldState(
        frozenset({Predicate(f"robot_at:{user_location}"), Predicate("gripper_empty")})
    )


@dataclass
class _ActiveBehavior:
    kind: str
    target: str
    remaining_ms: float = 0.0


@dataclass
class SimWorld:
    """Deterministic robot/lab state advanced by fixed simulation steps."""

    destinations: list[Destination]
    user_location: str
    items: dict[str, str] = field(default_factory=dict)
    robot_speed: float = DEFAULT_SPEED_MPS
    robot_pose: Pose = None  # type: ignore[assignment]
    gripper: str | None = None
    clock_ms: int = 0

    def __post_init__(self):
        self._by_id = {d.id: d for d in self.destinations}
        if self.user_location not in self._by_id:
            raise ValueError(f"unknown user location {self.user_location!r}")
        if self.robot_pose is None:
            self.robot_pose = self._by_id[self.user_location].pose
        self._active: _ActiveBehavior | None = None

    def destination(self, dest_id: str) -> Destination:
        return self._by_id[dest_id]

    @property
    def busy(self) -> bool:
        return self._active is not None

    def begin(self, behavior: str) -> None:
        """Start a behavior: ``drive:<dest>``, ``pickup:<item>``, or
        ``handover:<item>``."""
        if self._active is not None:
            raise SimulationError(f"behavior {self._active.kind} already active")
        kind, _, target = behavior.partition(":")
        if kind == "drive":
            if target not in self._by_id:
                raise SimulationError(f"unknown drive target {target!r}")
            self._active = _ActiveBehavior(kind="drive", target=target)
        elif kind == "pickup":
            if self.items.get(target) in (None, GRIPPER):
                raise SimulationError(f"item {target!r} is not on the floor plan")
            if self.gripper is not None:
                raise SimulationError("gripper already holds an item")
            self._active = _ActiveBehavior(kind="pickup", target=target, remaining_ms=MANIPULATION_MS)
        elif kind == "handover":
            if self.gripper != target:
                raise SimulationError(f"gripper does not hold {target!r}")
            self._active = _ActiveBehavior(kind="handover", target=target, remaining_ms=MANIPULATION_MS)
        else:
            raise SimulationError(f"unknown behavior {behavior!r}")

    def halt(self) -> None:
        """Abandon the active behavior; the pose stays wherever it is."""
        self._active = None

    def departure_retractions(self, behavior: str) -> list[str]:
        """Facts that become false the moment a behavior begins (a departing
        robot is no longer anywhere)."""
        if behavior.startswith("drive:"):
            return ["robot_at:*"]
        return []

    def step(self, dt_ms: int) -> bool:
        """Advance the simulation by ``dt_ms``; True when the active behavior
        finished during this step."""
        if dt_ms <= 0:
            raise ValueError("dt must be positive")
        self.clock_ms += dt_ms
        active = self._active
        if active is None:
            return False
        if active.kind == "drive":
            target_pose = self._by_id[active.target].pose
            distance = self.robot_pose.distance_to(target_pose)
            travel = self.robot_speed * (dt_ms / 1000.0)
            if travel >= distance or distance - travel < ARRIVAL_THRESHOLD_M:
                self.robot_pose = target_pose
                self._active = None
                return True
            ratio = travel / distance
            self.robot_pose = Pose(
                self.robot_pose.x + (target_pose.x - self.robot_pose.x) * ratio,
                self.robot_pose.y + (target_pose.y - self.robot_pose.y) * ratio,
            )
            return False
        active.remaining_ms -= dt_ms
        if active.remaining_ms > 0:
            return False
        if active.kind == "pickup":
            self.items[active.target] = GRIPPER
            self.gripper = active.target
        else:
            self.items[active.target] = self.user_location
            self.gripper = None
        self._active = None
        return True

    def snapshot(self) -> dict:
        """Immutable view for state frames and console rendering."""
        return {
            "clock_ms": self.clock_ms,
            "robot": {"x": self.robot_pose.x, "y": self.robot_pose.y},
            "gripper": self.gripper,
            "items": dict(self.items),
            "busy": self.busy,
            "destinations": [
                {
                    "id": d.id,
                    "display_name": d.display_name,
                    "x": d.pose.x,
                    "y": d.pose.y,
                }
                for d in self.destinations
            ],
            "user_location": self.user_location,
        }
