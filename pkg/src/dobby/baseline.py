"""Non-conversational control robot: two command templates, no chat backend.

"Show me the (landmark)." drives to the matched destination and reads its
description verbatim; "Tell me about (topic)." reads the topic body verbatim.
Targets are matched with the same embedding grounding (and threshold) as the
conversational mode; there is no agent to re-prompt, so a miss gets a fixed
reply.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .events import AgentEvent
from .executor import Executor
from .grounding import EmbeddingProvider, TitleMatcher
from .sim import Destination, drive_title
from .world import ActionRegistry

SHOW_PREFIX = "show me the "
TELL_PREFIX = "tell me about "
HELP_TEXT = (
    'I understand two commands: "Show me the (landmark)." and '
    '"Tell me about (topic)."'
)
UNKNOWN_LANDMARK_TEXT = "I don't know that landmark."
UNKNOWN_TOPIC_TEXT = "I don't know that topic."
PUNCTUATION = ".!?"


@dataclass(frozen=True)
class BaselineCommand:
    kind: str  # show_landmark | tell_topic | unrecognized
    target: str = ""


def parse_command(utterance: str) -> BaselineCommand:
    """Case-insensitive prefix match on the two templates; the remainder with
    trailing punctuation stripped is the target."""
    stripped = utterance.strip()
    lowered = stripped.lower()
    for prefix, kind in ((SHOW_PREFIX, "show_landmark"), (TELL_PREFIX, "tell_topic")):
        if lowered.startswith(prefix):
            target = stripped[len(prefix) :].strip().rstrip(PUNCTUATION).strip()
            if target:
                return BaselineCommand(kind=kind, target=target)
    return BaselineCommand(kind="unrecognized")


class BaselineGuide:
    """Executes parsed commands against the shared executor; never touches a
    chat backend."""

    def __init__(
        self,
        registry: ActionRegistry,
        destinations: list[Destination],
        topics: list[tuple[str, str]],
        provider: EmbeddingProvider,
        executor: Executor,
        threshold: float,
        clock: Callable[[], int],
    ):
        self.destinations = list(destinations)
        self.topics = list(topics)
        self.executor = executor
        self.threshold = threshold
        self.clock = clock
        self.event_log: list[AgentEvent] = []
        self.subscribers: list[Callable[[AgentEvent], None]] = []
        self._drive_actions = [registry.get(drive_title(d)) for d in destinations]
        self._drive_matcher = TitleMatcher([a.title for a in self._drive_actions], provider)
        self._topic_matcher = (
            TitleMatcher([name for name, _ in topics], provider) if topics else None
        )
        executor.emit = self.emit
        # description playback happens on arrival, not at command time
        executor.on_boundary = self._on_boundary
        self._pending_description: str | None = None

    def emit(self, event: AgentEvent) -> None:
        self.event_log.append(event)
        for subscriber in self.subscribers:
            subscriber(event)

    def _say(self, text: str) -> None:
        self.emit(
            AgentEvent(
                kind="robot_dialogue", payload={"text": text}, timestamp_ms=self.clock()
            )
        )

    def handle_user_utterance(self, text: str) -> list[AgentEvent]:
        mark = len(self.event_log)
        command = parse_command(text)
        if command.kind == "unrecognized":
            self._say(HELP_TEXT)
        elif command.kind == "show_landmark":
            self._show_landmark(command.target)
        else:
            self._tell_topic(command.target)
        return self.event_log[mark:]

    def _show_landmark(self, target: str) -> None:
        index, similarity = self._drive_matcher.best(f"Drive to {target}")
        if similarity < self.threshold:
            self._say(UNKNOWN_LANDMARK_TEXT)
            return
        destination = self.destinations[index]
        self._pending_description = destination.description
        self.executor.start([self._drive_actions[index]])

    def _tell_topic(self, target: str) -> None:
        if self._topic_matcher is None:
            self._say(UNKNOWN_TOPIC_TEXT)
            return
        index, similarity = self._topic_matcher.best(target)
        if similarity < self.threshold:
            self._say(UNKNOWN_TOPIC_TEXT)
            return
        self._say(self.topics[index][1])

    def handle_console_cancel(self) -> list[AgentEvent]:
        mark = len(self.event_log)
        if self.executor.cancel():
            self._pending_description = None
        return self.event_log[mark:]

    def _on_boundary(self, completed, started, plan_done: bool) -> None:
        if plan_done and self._pending_description is not None:
            description = self._pending_description
            self._pending_description = None
            self._say(description)
