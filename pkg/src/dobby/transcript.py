"""Speaker-prefixed transcript and structured JSONL sidecar.

The text transcript renders the conversation history (USER / DOBBY / SYSTEM /
FUNCTION CALL lines); the initializing system prompt is skipped. Both files
are flushed per line so a crash loses at most the line in flight.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from .chat import ChatMessage
from .events import AgentEvent

USER = "USER"
ROBOT = "DOBBY"
SYSTEM = "SYSTEM"
FUNCTION = "FUNCTION CALL"


def render_message(message: ChatMessage) -> list[str]:
    """Transcript lines for one history entry (an assistant turn can produce a
    dialogue line and a function-call line)."""
    lines = []
    if message.role == "user":
        lines.append(f"{USER}: {message.content}")
    elif message.role == "system":
        lines.append(f"{SYSTEM}: {message.content}")
    else:
        if message.content:
            lines.append(f"{ROBOT}: {message.content}")
        if message.function_call is not None:
            lines.append(
                f"{FUNCTION}: {message.function_call.name}({message.function_call.arguments})"
            )
    return lines


@dataclass
class TranscriptWriter:
    """Accumulates transcript lines; optionally teeing them to a file and the
    structured records to a JSONL sidecar.

    Attach ``on_message`` to a history buffer after construction: the
    initializing prompt predates the subscription, so transcripts start with
    the first user turn, like the session logs they imitate.
    """

    text_stream: IO[str] | None = None
    jsonl_stream: IO[str] | None = None
    lines: list[str] = field(default_factory=list)

    def session_start(self, info: dict) -> None:
        self._record({"type": "session_start", **info})

    def on_message(self, message: ChatMessage) -> None:
        for line in render_message(message):
            self.lines.append(line)
            if self.text_stream is not None:
                self.text_stream.write(line + "\n")
                self.text_stream.flush()
        record = {
            "type": "message",
            "role": message.role,
            "content": message.content,
            "ts": message.timestamp_ms,
        }
        if message.function_call is not None:
            record["function_call"] = {
                "name": message.function_call.name,
                "arguments": message.function_call.arguments,
            }
        self._record(record)

    def on_event(self, event: AgentEvent) -> None:
        self._record({"type": "event", **event.to_wire()})

    def _record(self, record: dict) -> None:
        if self.jsonl_stream is not None:
            self.jsonl_stream.write(json.dumps(record) + "\n")
            self.jsonl_stream.flush()

    @property
    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)


def open_transcript(path: str | Path) -> tuple[TranscriptWriter, IO[str], IO[str]]:
    """Open a transcript file plus its ``.jsonl`` sidecar for writing."""
    text_path = Path(path)
    text_path.parent.mkdir(parents=True, exist_ok=True)
    text_stream = text_path.open("w", encoding="utf-8")
    jsonl_stream = text_path.with_suffix(text_path.suffix + ".jsonl").open(
        "w", encoding="utf-8"
    )
    return (
        TranscriptWriter(text_stream=text_stream, jsonl_stream=jsonl_stream),
        text_stream,
        jsonl_stream,
    )
