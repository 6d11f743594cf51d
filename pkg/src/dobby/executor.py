"""Non-blocking sequential plan execution against the simulator.

Actions progress tick by tick; symbolic effects land atomically when an action
completes. Cancellation keeps the robot's interpolated pose but never claims
facts about waypoints it did not reach. Tour mode gates each subsequent action
behind an explicit continue call.
"""
from __future__ import annotations

from typing import Callable

from . import world
from .errors import StalePlanError
from .events import AgentEvent
from .sim import SimWorld
from .world import ActionSpec, WorldState

IDLE = "idle"
RUNNING = "running"
GATED = "gated"

BoundaryCallback = Callable[[ActionSpec | None, ActionSpec | None, bool], None]


class Executor:
    """Runs one plan at a time; driven by the session's tick messages."""

    def __init__(
        self,
        sim: SimWorld,
        initial_state: WorldState,
        tour_mode: bool = False,
        emit: Callable[[AgentEvent], None] = lambda event: None,
    ):
        self.sim = sim
        self.state = initial_state
        self.tour_mode = tour_mode
        self.emit = emit
        self.on_boundary: BoundaryCallback = lambda completed, started, plan_done: None
        self.phase = IDLE
        self.plan: list[ActionSpec] = []
        self.cursor = 0

    @property
    def current_action(self) -> ActionSpec | None:
        if self.phase in (RUNNING, GATED) and self.cursor < len(self.plan):
            return self.plan[self.cursor]
        return None

    def _event(self, kind: str, **payload) -> None:
        self.emit(AgentEvent(kind=kind, payload=payload, timestamp_ms=self.sim.clock_ms))

    def revalidate(self, plan: list[ActionSpec]) -> None:
        """Raise StalePlanError unless ``plan`` executes from the current
        symbolic state. The world may have moved since the plan was proposed."""
        check = world.check_plan(self.state, plan)
        if not check.valid:
            failing = plan[check.failing_index]
            raise StalePlanError(
                f"plan invalid at step {check.failing_index + 1} ({failing.title})"
            )

    def start(self, plan: list[ActionSpec]) -> None:
        """Begin a validated plan, overriding any plan already running."""
        self.revalidate(plan)
        if self.phase != IDLE:
            self._halt(emit_event=True)
        self.plan = list(plan)
        self.cursor = 0
        self.phase = RUNNING
        self._event("plan_started", titles=[a.title for a in plan])
        self._begin_current(first=True)

    def _begin_current(self, first: bool) -> None:
        action = self.plan[self.cursor]
        for pattern in self.sim.departure_retractions(action.behavior):
            self.state = self.state.retract_matching(pattern)
        self.sim.begin(action.behavior)
        self._event("action_started", index=self.cursor, title=action.title)
        completed = None if first else self.plan[self.cursor - 1]
        self.on_boundary(completed, action, False)

    def tick(self, dt_ms: int) -> None:
        """Advance simulation; completion of the active behavior advances the
        plan."""
        finished = self.sim.step(dt_ms)
        if finished and self.phase == RUNNING:
            self.on_action_finished()

    def on_action_finished(self) -> None:
        action = self.plan[self.cursor]
        self.state = world.apply(self.state, action)
        self._event("action_completed", index=self.cursor, title=action.title)
        if self.cursor + 1 >= len(self.plan):
            titles = [a.title for a in self.plan]
            self.phase = IDLE
            self.plan = []
            self.cursor = 0
            self._event("plan_completed", titles=titles)
            self.on_boundary(action, None, True)
        elif self.tour_mode:
            self.phase = GATED
            self.cursor += 1
            self.on_boundary(action, None, False)
        else:
            self.cursor += 1
            self._begin_current(first=False)

    def cancel(self) -> bool:
        """Halt the current plan; no-op when idle. World state keeps only the
        effects of fully completed actions."""
        if self.phase == IDLE:
            return False
        self._halt(emit_event=True)
        return True

    def _halt(self, emit_event: bool) -> None:
        self.sim.halt()
        if emit_event:
            # actions 0..cursor-1 completed fully; cursor's effects never land
            self._event("plan_cancelled", at_index=self.cursor, completed_count=self.cursor)
        self.phase = IDLE
        self.plan = []
        self.cursor = 0

    def continue_gate(self) -> bool:
        """Release the tour-mode gate; False (with a note) when nothing waits."""
        if self.phase != GATED:
            self._event("system_note", text="ContinuePlan called but no action is awaiting continuation.")
            return False
        self.phase = RUNNING
        self._begin_current(first=True)
        return True
