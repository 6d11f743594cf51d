"""Runtime event stream consumed by logs, the REPL, and the web console."""
from __future__ import annotations

from dataclasses import dataclass, field

KINDS = (
    "robot_dialogue",
    "system_note",
    "plan_started",
    "action_started",
    "action_completed",
    "plan_completed",
    "plan_cancelled",
    "plan_rejected",
    "awaiting_wake",
    "resumed",
)


@dataclass(frozen=True)
class AgentEvent:
    kind: str
    payload: dict = field(default_factory=dict)
    timestamp_ms: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind: {self.kind!r}")

    def to_wire(self) -> dict:
        return {"kind": self.kind, "payload": self.payload, "ts": self.timestamp_ms}
