"""Conversational core: prompt composition, history, function-call dispatch,
grounding retries, wake word, and the system messages that keep the agent's
dialogue consistent with what the robot is actually doing.

All mutation happens on the caller's thread; the session layer serializes
inputs so observable event order is a linearization of arrival order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Protocol

from .backends import ChatBackend
from .chat import (
    CANCEL_PLAN,
    CONTINUE_PLAN,
    EXECUTE_PLAN,
    ChatMessage,
    FunctionCall,
    FunctionDef,
    HistoryBuffer,
)
from .correction import NotCapable, reorder_plan
from .errors import BackendError, StalePlanError
from .events import AgentEvent
from .executor import Executor
from .grounding import RegistryGrounder, Unmatched
from .sim import Destination
from .world import ActionRegistry

AWAITING_UTTERANCE = "awaiting_utterance"
AWAITING_WAKE_WORD = "awaiting_wake_word"

NOT_CAPABLE_MESSAGE = "You are not capable of the requested task. Explain this to the user."
PLAN_COMPLETED_MESSAGE = "Plan completed."
AWAITING_CONTINUE_MESSAGE = "Awaiting ContinuePlan before the next action."
USER_CANCELLED_MESSAGE = "Plan execution was cancelled by the user."
APOLOGY_TEXT = "I'm sorry, I'm having trouble thinking right now. Please try again in a moment."

DIRECTIVES = """Directives:
- Stay in character and keep replies short enough to say aloud.
- To act, call ExecutePlan with a list of action titles from the list above, in order.
- Call CancelPlan if the user asks you to stop.
- Ask a clarifying question when a request is ambiguous."""

TOUR_DIRECTIVE = (
    "- After each action finishes, keep talking with the user; call ContinuePlan "
    "when they are ready to move on."
)


@dataclass
class AgentConfig:
    persona_prompt: str
    grounding_threshold: float = 0.80
    max_grounding_retries: int = 3
    wake_word: str = "Dobby"
    silence_timeout_ms: int = 6000
    tour_mode: bool = False

    def __post_init__(self):
        if self.max_grounding_retries < 1:
            raise ValueError("max_grounding_retries must be at least 1")
        if self.silence_timeout_ms <= 0:
            raise ValueError("silence_timeout_ms must be positive")


class SpeechHooks(Protocol):
    """Optional audio-pipeline seams; the shipped implementation is plain text."""

    def transcribe(self, raw: str) -> str: ...

    def speak(self, text: str) -> None: ...


class TextHooks:
    def transcribe(self, raw: str) -> str:
        return raw

    def speak(self, text: str) -> None:
        pass


def compose_prompt(
    persona: str,
    destinations: list[Destination],
    topics: list[tuple[str, str]],
    registry: ActionRegistry,
    tour_mode: bool = False,
) -> str:
    """Deterministic prompt: persona, environment, topics, action titles in
    registry order, then fixed behavioral directives."""
    if len(registry) == 0:
        raise ValueError("registry must not be empty")
    sections = [persona.strip()]
    if destinations:
        lines = [f"- {d.display_name}: {d.description}" for d in destinations]
        sections.append("Environment:\n" + "\n".join(lines))
    if topics:
        lines = [f"- {name}: {body}" for name, body in topics]
        sections.append("Topics:\n" + "\n".join(lines))
    sections.append(
        "You can perform these actions with ExecutePlan:\n"
        + "\n".join(f"- {title}" for title in registry.titles)
    )
    directives = DIRECTIVES
    if tour_mode:
        directives += "\n" + TOUR_DIRECTIVE
    sections.append(directives)
    return "\n\n".join(sections)


def plan_announcement(titles: list[str]) -> str:
    numbered = " ".join(f"{i}. {title}" for i, title in enumerate(titles, start=1))
    return f"Executing plan: {numbered}"


class AgentEngine:
    """Drives one conversation session against a chat backend."""

    def __init__(
        self,
        config: AgentConfig,
        registry: ActionRegistry,
        grounder: RegistryGrounder,
        backend: ChatBackend,
        executor: Executor,
        clock: Callable[[], int],
        system_prompt: str,
        hooks: SpeechHooks | None = None,
    ):
        self.config = config
        self.registry = registry
        self.grounder = grounder
        self.backend = backend
        self.executor = executor
        self.clock = clock
        self.hooks = hooks or TextHooks()
        self.history = HistoryBuffer(
            ChatMessage(role="system", content=system_prompt, timestamp_ms=clock())
        )
        self.conversational_state = AWAITING_UTTERANCE
        self.event_log: list[AgentEvent] = []
        self.subscribers: list[Callable[[AgentEvent], None]] = []
        self._last_activity_ms = clock()
        executor.emit = self.emit
        executor.on_boundary = self.on_action_boundary

    # -- event plumbing -------------------------------------------------

    def emit(self, event: AgentEvent) -> None:
        self.event_log.append(event)
        if event.kind == "robot_dialogue":
            self._last_activity_ms = self.clock()
            self.hooks.speak(event.payload.get("text", ""))
        for subscriber in self.subscribers:
            subscriber(event)

    def _event(self, kind: str, **payload) -> None:
        self.emit(AgentEvent(kind=kind, payload=payload, timestamp_ms=self.clock()))

    def _append(self, role: str, content: str = "", function_call: FunctionCall | None = None) -> None:
        self.history.append(
            ChatMessage(
                role=role,
                content=content,
                function_call=function_call,
                timestamp_ms=self.clock(),
            )
        )

    def _events_since(self, mark: int) -> list[AgentEvent]:
        return self.event_log[mark:]

    # -- functions advertised to the backend -----------------------------

    def function_defs(self) -> list[FunctionDef]:
        defs = [EXECUTE_PLAN, CANCEL_PLAN]
        if self.config.tour_mode:
            defs.append(CONTINUE_PLAN)
        return defs

    # -- conversation loop -----------------------------------------------

    def handle_user_utterance(self, raw_text: str) -> list[AgentEvent]:
        """Process one user input; in wake-word state, non-matching input is
        dropped without touching the history."""
        mark = len(self.event_log)
        text = self.hooks.transcribe(raw_text)
        if self.conversational_state == AWAITING_WAKE_WORD:
            if self.config.wake_word.lower() not in text.lower():
                return []
            self.conversational_state = AWAITING_UTTERANCE
            self._event("resumed")
        self._last_activity_ms = self.clock()
        self._append("user", text)
        self._query_and_handle()
        return self._events_since(mark)

    def maybe_silence_timeout(self) -> list[AgentEvent]:
        """Called on ticks; after the configured silent interval the engine
        waits for the wake word."""
        mark = len(self.event_log)
        if (
            self.conversational_state == AWAITING_UTTERANCE
            and self.clock() - self._last_activity_ms >= self.config.silence_timeout_ms
        ):
            self.conversational_state = AWAITING_WAKE_WORD
            self._event("awaiting_wake")
        return self._events_since(mark)

    def handle_console_cancel(self) -> list[AgentEvent]:
        """Human override from the console/REPL, outside the dialogue."""
        mark = len(self.event_log)
        if self.executor.cancel():
            self._append("system", USER_CANCELLED_MESSAGE)
        return self._events_since(mark)

    def handle_console_continue(self) -> list[AgentEvent]:
        mark = len(self.event_log)
        self.executor.continue_gate()
        return self._events_since(mark)

    # -- backend round trips ----------------------------------------------

    def _query(self) -> ChatMessage | None:
        """One backend round trip; on failure records the outage in history,
        apologizes out loud, and returns None."""
        try:
            return self.backend.complete(self.history.snapshot(), self.function_defs())
        except BackendError as exc:
            note = f"The language model backend is unavailable: {exc}"
            self._append("system", note)
            self._event("system_note", text=note)
            self._append("assistant", APOLOGY_TEXT)
            self._event("robot_dialogue", text=APOLOGY_TEXT)
            return None

    def _query_and_handle(self, allow_requery: bool = True) -> None:
        response = self._query()
        if response is not None:
            self._handle_response(response, allow_requery)

    def _handle_response(self, response: ChatMessage, allow_requery: bool = True) -> None:
        self._append("assistant", response.content, response.function_call)
        if response.content:
            self._event("robot_dialogue", text=response.content)
        if response.function_call is not None:
            self.dispatch_function_call(response.function_call, allow_requery)

    # -- function dispatch -------------------------------------------------

    @staticmethod
    def _parse_sequence(call: FunctionCall) -> list[str]:
        arguments = call.parse_arguments()
        try:
            sequence = arguments["action_sequence"]
        except KeyError:
            raise ValueError("missing action_sequence") from None
        if not isinstance(sequence, list) or not all(
            isinstance(entry, str) for entry in sequence
        ):
            raise ValueError("action_sequence must be a list of strings")
        return sequence

    def dispatch_function_call(self, call: FunctionCall, allow_requery: bool = True) -> None:
        if call.name == EXECUTE_PLAN.name:
            try:
                sequence = self._parse_sequence(call)
            except (ValueError, json.JSONDecodeError) as exc:
                self._bad_call(f"Malformed arguments for ExecutePlan: {exc}.", allow_requery)
                return
            self._run_execute_plan(sequence)
        elif call.name == CANCEL_PLAN.name:
            if not self.executor.cancel():
                # executor stays silent on idle cancels; still surface the turn
                self._event("system_note", text="CancelPlan called but no plan is executing.")
        elif call.name == CONTINUE_PLAN.name:
            if not self.config.tour_mode:
                self._bad_call("The function ContinuePlan is not available.", allow_requery)
                return
            self.executor.continue_gate()
        else:
            self._bad_call(
                f'Unknown function "{call.name}". Available functions: '
                + ", ".join(f.name for f in self.function_defs())
                + ".",
                allow_requery,
            )

    def _bad_call(self, message: str, allow_requery: bool) -> None:
        self._append("system", message)
        self._event("system_note", text=message)
        if allow_requery:
            self._query_and_handle(allow_requery=False)

    # -- plan intake: grounding retries, reordering, execution -------------

    def _run_execute_plan(self, candidates: list[str]) -> None:
        attempts = 0
        while True:
            attempts += 1
            outcome = self.grounder.ground_plan(candidates, self.config.grounding_threshold)
            if isinstance(outcome, Unmatched):
                if attempts >= self.config.max_grounding_retries:
                    self._reject_plan(
                        f'no action matches "{outcome.candidate}" '
                        f"(best {outcome.best_title!r} at {outcome.best_similarity:.2f})"
                    )
                    return
                self._append(
                    "system",
                    f'No action matches "{outcome.candidate}". Valid actions are: '
                    + ", ".join(self.registry.titles)
                    + ".",
                )
                response = self._query()
                if response is None:
                    return
                self._append("assistant", response.content, response.function_call)
                if response.content:
                    self._event("robot_dialogue", text=response.content)
                call = response.function_call
                if call is not None and call.name == EXECUTE_PLAN.name:
                    try:
                        candidates = self._parse_sequence(call)
                    except (ValueError, json.JSONDecodeError) as exc:
                        self._bad_call(f"Malformed arguments for ExecutePlan: {exc}.", True)
                        return
                    continue
                if call is not None:
                    self.dispatch_function_call(call, allow_requery=False)
                return
            break

        actions = outcome.actions
        result = reorder_plan(self.executor.state, actions)
        if isinstance(result, NotCapable):
            self._reject_plan(
                "the plan cannot be ordered to satisfy preconditions "
                f"(blocked: {', '.join(result.blocked)})"
            )
            return
        plan = list(result.plan)
        try:
            self.executor.revalidate(plan)
        except StalePlanError as exc:
            self._reject_plan(str(exc))
            return
        self._append("system", plan_announcement([a.title for a in plan]))
        self.executor.start(plan)

    def _reject_plan(self, reason: str) -> None:
        """Not-capable path: tell the agent, then ask it once to explain."""
        self._event("plan_rejected", reason=reason)
        self._append("system", NOT_CAPABLE_MESSAGE)
        self._query_and_handle(allow_requery=False)

    # -- executor boundary notifications ------------------------------------

    def on_action_boundary(
        self, completed, started, plan_done: bool
    ) -> None:
        """Inject boundary system messages and fetch a dialogue cue."""
        if completed is not None:
            self._append("system", f"Finished action: {completed.title}")
        if plan_done:
            self._append("system", PLAN_COMPLETED_MESSAGE)
        if started is not None:
            self._append("system", f"Starting action: {started.title}")
        if completed is not None and started is None and not plan_done:
            self._append("system", AWAITING_CONTINUE_MESSAGE)
        self._query_and_handle()
