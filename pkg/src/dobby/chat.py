"""Conversation record types: messages, function calls, and the history buffer."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

ROLES = ("user", "assistant", "system")


@dataclass(frozen=True)
class FunctionCall:
    """A structured invocation emitted by the model; arguments stay raw JSON
    text until dispatch."""

    name: str
    arguments: str

    def parse_arguments(self) -> dict:
        parsed = json.loads(self.arguments)
        if not isinstance(parsed, dict):
            raise ValueError("function arguments must be a JSON object")
        return parsed


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str = ""
    function_call: FunctionCall | None = None
    timestamp_ms: int = 0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role: {self.role!r}")
        if self.function_call is not None and self.role != "assistant":
            raise ValueError("function_call is only valid on assistant messages")


@dataclass(frozen=True)
class FunctionDef:
    """A function advertised to the chat backend."""

    name: str
    description: str
    parameters: dict

    def to_wire(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": self.parameters,
        }


EXECUTE_PLAN = FunctionDef(
    name="ExecutePlan",
    description=(
        "Execute a sequence of robot actions in order. Each entry must name "
        "one of the actions listed in your instructions."
    ),
    parameters={
        "type": "object",
        "properties": {
            "action_sequence": {
                "type": "array",
                "items": {"type": "string"},
                "description": "Action titles to perform, in order.",
            }
        },
        "required": ["action_sequence"],
    },
)

CANCEL_PLAN = FunctionDef(
    name="CancelPlan",
    description="Halt the currently executing plan at the user's request.",
    parameters={"type": "object", "properties": {}},
)

CONTINUE_PLAN = FunctionDef(
    name="ContinuePlan",
    description=(
        "Start the next action of the current plan. Call this when the user "
        "is ready to move on."
    ),
    parameters={"type": "object", "properties": {}},
)


class HistoryBuffer:
    """Append-only conversation record; the full buffer is sent to the backend
    on every query. The first entry is the initializing system prompt."""

    def __init__(self, system_prompt: ChatMessage):
        if system_prompt.role != "system":
            raise ValueError("history must start with a system message")
        self._messages: list[ChatMessage] = [system_prompt]
        self._listeners: list[Callable[[ChatMessage], None]] = []

    def append(self, message: ChatMessage) -> None:
        self._messages.append(message)
        for listener in self._listeners:
            listener(message)

    def on_append(self, listener: Callable[[ChatMessage], None]) -> None:
        self._listeners.append(listener)

    def snapshot(self) -> list[ChatMessage]:
        return list(self._messages)

    def __len__(self) -> int:
        return len(self._messages)

    def __getitem__(self, index) -> ChatMessage:
        return self._messages[index]


def message_to_wire(message: ChatMessage) -> dict:
    wire: dict = {"role": message.role, "content": message.content}
    if message.function_call is not None:
        wire["function_call"] = {
            "name": message.function_call.name,
            "arguments": message.function_call.arguments,
        }
    return wire


def message_from_wire(wire: dict) -> ChatMessage:
    call = None
    if wire.get("function_call"):
        call = FunctionCall(
            name=wire["function_call"]["name"],
            arguments=wire["function_call"]["arguments"],
        )
    return ChatMessage(
        role=wire["role"], content=wire.get("content") or "", function_call=call
    )
