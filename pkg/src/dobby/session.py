"""Wires one complete session: simulator, executor, engine or baseline guide.

All inputs (utterances, console commands, clock ticks) pass through
``submit``, which serializes them under one lock; observable order is a
linearization of arrival order. Simulated time only advances via tick/idle
commands, so scripted sessions are fully deterministic.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

from .backends import ChatBackend
from .baseline import BaselineGuide
from .chat import ChatMessage
from .engine import AgentConfig, AgentEngine, compose_prompt
from .events import AgentEvent
from .executor import Executor, RUNNING
from .grounding import EmbeddingProvider, RegistryGrounder
from .sim import Destination, SimWorld, build_registry, initial_world_state
from .world import ActionRegistry

TICK_MS = 100
MAX_PUMP_TICKS = 36000  # one simulated hour; a stuck behavior is a bug

CONVERSATIONAL = "conversational"
BASELINE = "baseline"

DEFAULT_PERSONA = (
    "You are Dobby, a service robot giving tours of a robotics laboratory. "
    "You are helpful, a little sarcastic, and you love showing visitors around."
)


@dataclass
class SessionConfig:
    destinations: list[Destination]
    topics: list[tuple[str, str]] = field(default_factory=list)
    items: dict[str, str] = field(default_factory=dict)
    user_location: str = ""
    mode: str = CONVERSATIONAL
    persona: str = DEFAULT_PERSONA
    threshold: float = 0.80
    max_grounding_retries: int = 3
    tour_mode: bool = False
    wake_word: str = "Dobby"
    silence_timeout_ms: int = 6000

    def __post_init__(self):
        if not self.destinations:
            raise ValueError("at least one destination is required")
        if not self.user_location:
            self.user_location = self.destinations[0].id
        if self.mode not in (CONVERSATIONAL, BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class SessionMetrics:
    interaction_time_s: float
    destinations_visited: int

    def to_dict(self) -> dict:
        return {
            "interaction_time_s": self.interaction_time_s,
            "destinations_visited": self.destinations_visited,
        }


class Session:
    """One live or scripted run of the robot, in either mode."""

    def __init__(
        self,
        config: SessionConfig,
        backend: ChatBackend | None,
        provider: EmbeddingProvider,
    ):
        self.config = config
        self.registry: ActionRegistry = build_registry(
            config.destinations, config.items, config.user_location
        )
        self.sim = SimWorld(
            destinations=config.destinations,
            user_location=config.user_location,
            items=dict(config.items),
        )
        self.executor = Executor(
            self.sim,
            initial_world_state(config.user_location),
            tour_mode=config.tour_mode and config.mode == CONVERSATIONAL,
        )
        self._lock = threading.Lock()
        self.message_listeners: list[Callable[[ChatMessage], None]] = []
        self.event_listeners: list[Callable[[AgentEvent], None]] = []
        self.state_listeners: list[Callable[[dict], None]] = []
        self.message_log: list[ChatMessage] = []
        self.event_wire_log: list[dict] = []
        self._first_utterance_ms: int | None = None
        self._visited: set[str] = set()
        self._drive_targets = {
            action.title: action.behavior.split(":", 1)[1]
            for action in self.registry
            if action.behavior.startswith("drive:")
        }

        self.baseline: BaselineGuide | None = None
        self.engine: AgentEngine | None = None
        if config.mode == BASELINE:
            self.baseline = BaselineGuide(
                registry=self.registry,
                destinations=config.destinations,
                topics=config.topics,
                provider=provider,
                executor=self.executor,
                threshold=config.threshold,
                clock=lambda: self.sim.clock_ms,
            )
            self.baseline.subscribers.append(self._observe_event)
        else:
            if backend is None:
                raise ValueError("conversational mode requires a chat backend")
            agent_config = AgentConfig(
                persona_prompt=config.persona,
                grounding_threshold=config.threshold,
                max_grounding_retries=config.max_grounding_retries,
                wake_word=config.wake_word,
                silence_timeout_ms=config.silence_timeout_ms,
                tour_mode=config.tour_mode,
            )
            prompt = compose_prompt(
                config.persona,
                config.destinations,
                config.topics,
                self.registry,
                tour_mode=config.tour_mode,
            )
            self.engine = AgentEngine(
                config=agent_config,
                registry=self.registry,
                grounder=RegistryGrounder(self.registry, provider),
                backend=backend,
                executor=self.executor,
                clock=lambda: self.sim.clock_ms,
                system_prompt=prompt,
            )
            self.engine.subscribers.append(self._observe_event)
            self.engine.history.on_append(self._observe_message)

    # -- observation ------------------------------------------------------

    def _observe_message(self, message: ChatMessage) -> None:
        self.message_log.append(message)
        for listener in self.message_listeners:
            listener(message)

    def _observe_event(self, event: AgentEvent) -> None:
        if event.kind == "action_completed":
            target = self._drive_targets.get(event.payload.get("title", ""))
            if target is not None and target != self.config.user_location:
                self._visited.add(target)
        # baseline mode has no history buffer; synthesize the dialogue record
        if self.baseline is not None and event.kind == "robot_dialogue":
            self._observe_message(
                ChatMessage(
                    role="assistant",
                    content=event.payload.get("text", ""),
                    timestamp_ms=event.timestamp_ms,
                )
            )
        self.event_wire_log.append(event.to_wire())
        for listener in self.event_listeners:
            listener(event)

    def _emit_state(self) -> None:
        if not self.state_listeners:
            return
        snapshot = self.state_snapshot()
        for listener in self.state_listeners:
            listener(snapshot)

    def state_snapshot(self) -> dict:
        snapshot = self.sim.snapshot()
        snapshot.update(
            {
                "mode": self.config.mode,
                "tour_mode": self.config.tour_mode,
                "phase": self.executor.phase,
                "plan": [a.title for a in self.executor.plan],
                "cursor": self.executor.cursor,
                "conversational_state": (
                    self.engine.conversational_state if self.engine else None
                ),
                "facts": sorted(self.executor.state.atoms()),
            }
        )
        return snapshot

    # -- command intake -----------------------------------------------------

    def submit(self, command: dict) -> list[AgentEvent]:
        """Process one inbound command; returns the events it produced."""
        with self._lock:
            events = self._process(command)
            self._emit_state()
            return events

    @contextmanager
    def locked(self):
        """Hold the command lock, e.g. to take a snapshot atomically with a
        listener subscription."""
        with self._lock:
            yield

    def _process(self, command: dict) -> list[AgentEvent]:
        kind = command.get("type")
        if kind == "user_utterance":
            text = command.get("text", "")
            if not isinstance(text, str) or not text.strip():
                raise ValueError("user_utterance requires non-empty text")
            if self._first_utterance_ms is None:
                self._first_utterance_ms = self.sim.clock_ms
            if self.baseline is not None:
                self._observe_message(
                    ChatMessage(role="user", content=text, timestamp_ms=self.sim.clock_ms)
                )
                return self.baseline.handle_user_utterance(text)
            return self.engine.handle_user_utterance(text)
        if kind == "cancel":
            if self.baseline is not None:
                return self.baseline.handle_console_cancel()
            return self.engine.handle_console_cancel()
        if kind == "continue":
            if self.baseline is not None:
                return []
            return self.engine.handle_console_continue()
        if kind == "idle":
            return self._pump(self._silence_timeout_ms())
        if kind == "tick":
            ms = int(command.get("ms", TICK_MS))
            if ms <= 0:
                raise ValueError("tick ms must be positive")
            return self._pump(ms)
        if kind == "run_until_idle":
            return self._run_until_idle()
        raise ValueError(f"unknown command type {kind!r}")

    def _silence_timeout_ms(self) -> int:
        if self.engine is not None:
            return self.engine.config.silence_timeout_ms
        return 6000

    def _pump(self, total_ms: int) -> list[AgentEvent]:
        events: list[AgentEvent] = []
        remaining = total_ms
        while remaining > 0:
            dt = min(TICK_MS, remaining)
            remaining -= dt
            events.extend(self._one_tick(dt))
        return events

    def _one_tick(self, dt_ms: int) -> list[AgentEvent]:
        mark_engine = self.engine or self.baseline
        mark = len(mark_engine.event_log) if mark_engine else 0
        self.executor.tick(dt_ms)
        if self.engine is not None:
            self.engine.maybe_silence_timeout()
        return mark_engine.event_log[mark:] if mark_engine else []

    def _run_until_idle(self) -> list[AgentEvent]:
        """Pump simulation until the executor has nothing in flight (a gated
        plan counts as idle: it waits on ContinuePlan, not on time)."""
        events: list[AgentEvent] = []
        ticks = 0
        while self.executor.phase == RUNNING:
            events.extend(self._one_tick(TICK_MS))
            ticks += 1
            if ticks > MAX_PUMP_TICKS:
                raise RuntimeError("simulation did not quiesce; behavior stuck?")
        return events

    # -- metrics -------------------------------------------------------------

    def metrics(self) -> SessionMetrics:
        if self._first_utterance_ms is None:
            interaction = 0.0
        else:
            interaction = (self.sim.clock_ms - self._first_utterance_ms) / 1000.0
        return SessionMetrics(
            interaction_time_s=interaction,
            destinations_visited=len(self._visited),
        )
