"""Chat-completion and embedding backends.

``ScriptedBackend`` replays pre-authored responses for deterministic offline
sessions; the HTTP clients speak the OpenAI-compatible wire format for live
use. Credentials come from ``DOBBY_API_KEY``; the endpoint can be overridden
with ``DOBBY_API_BASE``.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx
import numpy as np

from .chat import ChatMessage, FunctionCall, FunctionDef, message_to_wire
from .errors import (
    AuthError,
    BackendError,
    BackendTimeoutError,
    InvalidInputError,
    MalformedResponseError,
    ProviderInconsistencyError,
    ScenarioExhaustedError,
    TriggerMismatchError,
)

DEFAULT_API_BASE = "https://api.openai.com/v1"
API_KEY_ENV = "DOBBY_API_KEY"
API_BASE_ENV = "DOBBY_API_BASE"

FALLBACK_CONTENT = "I have nothing scripted to say to that."


class ChatBackend(Protocol):
    def complete(
        self, history: list[ChatMessage], functions: list[FunctionDef]
    ) -> ChatMessage: ...


@dataclass(frozen=True)
class ScriptedStep:
    """One pre-authored response, gated by a trigger on the latest history
    entry (or on the query's ordinal)."""

    response_content: str = ""
    response_call: FunctionCall | None = None
    turn_index: int | None = None
    user_contains: str | None = None
    system_contains: str | None = None

    def fires(self, history: list[ChatMessage], turn: int) -> bool:
        latest = history[-1]
        if self.turn_index is not None:
            return turn == self.turn_index
        if self.user_contains is not None:
            return latest.role == "user" and self.user_contains.lower() in latest.content.lower()
        if self.system_contains is not None:
            return latest.role == "system" and self.system_contains.lower() in latest.content.lower()
        return True


def load_scenario(path: str | Path) -> tuple[list[ScriptedStep], list[dict]]:
    """Parse a scenario JSON file into steps plus optional replay inputs."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = [_parse_step(raw) for raw in data["steps"]]
    return steps, list(data.get("inputs", []))


def _parse_step(raw: dict) -> ScriptedStep:
    trigger = raw.get("trigger", {})
    response = raw.get("response", {})
    call = None
    if "function_call" in response:
        arguments = response["function_call"]["arguments"]
        if not isinstance(arguments, str):
            arguments = json.dumps(arguments)
        call = FunctionCall(name=response["function_call"]["name"], arguments=arguments)
    return ScriptedStep(
        response_content=response.get("content") or "",
        response_call=call,
        turn_index=trigger.get("turn_index"),
        user_contains=trigger.get("user_contains"),
        system_contains=trigger.get("system_contains"),
    )


class ScriptedBackend:
    """Deterministic backend: steps are consumed strictly in order.

    In strict mode (default) an exhausted scenario or a non-firing trigger
    fails loudly so tests script every turn. Lenient mode answers with a
    canned fallback instead, for interactive demos.
    """

    def __init__(self, steps: list[ScriptedStep], strict: bool = True):
        self._steps = list(steps)
        self._cursor = 0
        self._turn = 0
        self.strict = strict

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = True) -> "ScriptedBackend":
        steps, _ = load_scenario(path)
        return cls(steps, strict=strict)

    def complete(
        self, history: list[ChatMessage], functions: list[FunctionDef]
    ) -> ChatMessage:
        turn = self._turn
        self._turn += 1
        if self._cursor >= len(self._steps):
            if self.strict:
                raise ScenarioExhaustedError(
                    f"query {turn} arrived after the last scripted step"
                )
            return ChatMessage(role="assistant", content=FALLBACK_CONTENT)
        step = self._steps[self._cursor]
        if not step.fires(history, turn):
            if self.strict:
                raise TriggerMismatchError(
                    f"query {turn}: step {self._cursor} trigger did not fire; "
                    f"latest message was {history[-1].role}: {history[-1].content!r}"
                )
            return ChatMessage(role="assistant", content=FALLBACK_CONTENT)
        self._cursor += 1
        return ChatMessage(
            role="assistant",
            content=step.response_content,
            function_call=step.response_call,
        )


def _resolve_base(base_url: str | None) -> str:
    return (base_url or os.getenv(API_BASE_ENV) or DEFAULT_API_BASE).rstrip("/")


def _resolve_key(api_key: str | None) -> str:
    key = api_key or os.getenv(API_KEY_ENV, "")
    if not key:
        raise AuthError(f"no API key; set {API_KEY_ENV}")
    return key


class HttpChatBackend:
    """OpenAI-compatible chat-completions client with bounded retries.

    Transient failures (5xx, timeouts) are retried at most twice with 1 s and
    2 s backoff; auth failures are not retried.
    """

    def __init__(
        self,
        model: str = "gpt-4o-mini",
        api_key: str | None = None,
        base_url: str | None = None,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model = model
        self._api_key = _resolve_key(api_key)
        self._base = _resolve_base(base_url)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._sleep = sleep

    def complete(
        self, history: list[ChatMessage], functions: list[FunctionDef]
    ) -> ChatMessage:
        body = {
            "model": self.model,
            "messages": [message_to_wire(m) for m in history],
        }
        if functions:
            body["functions"] = [f.to_wire() for f in functions]
        data = _post_with_retries(
            self._client,
            f"{self._base}/chat/completions",
            self._api_key,
            body,
            self._sleep,
        )
        try:
            message = data["choices"][0]["message"]
            call = None
            if message.get("function_call"):
                call = FunctionCall(
                    name=message["function_call"]["name"],
                    arguments=message["function_call"].get("arguments", "{}"),
                )
            return ChatMessage(
                role="assistant",
                content=message.get("content") or "",
                function_call=call,
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected completion body: {exc}") from exc


class HttpEmbeddingProvider:
    """OpenAI-compatible embeddings client; responses are cached by exact
    input text so repeated embeds are deterministic within a session."""

    def __init__(
        self,
        model: str = "text-embedding-3-small",
        api_key: str | None = None,
        base_url: str | None = None,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model = model
        self._api_key = _resolve_key(api_key)
        self._base = _resolve_base(base_url)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._sleep = sleep
        self._cache: dict[str, np.ndarray] = {}
        self._dimension: int | None = None

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise InvalidInputError("cannot embed empty text")
        if text in self._cache:
            return self._cache[text]
        data = _post_with_retries(
            self._client,
            f"{self._base}/embeddings",
            self._api_key,
            {"model": self.model, "input": text},
            self._sleep,
        )
        try:
            vector = np.asarray(data["data"][0]["embedding"], dtype=float)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"unexpected embedding body: {exc}") from exc
        if vector.ndim != 1 or vector.size == 0 or not np.all(np.isfinite(vector)):
            raise MalformedResponseError("embedding is not a finite vector")
        if self._dimension is None:
            self._dimension = vector.size
        elif vector.size != self._dimension:
            raise ProviderInconsistencyError(
                f"dimension changed from {self._dimension} to {vector.size}"
            )
        self._cache[text] = vector
        return vector

    def dimension(self) -> int:
        if self._dimension is None:
            self._dimension = self.embed("dimension probe").size
        return self._dimension


_BACKOFF_SECONDS = (1.0, 2.0)


def _post_with_retries(
    client: httpx.Client,
    url: str,
    api_key: str,
    body: dict,
    sleep: Callable[[float], None],
) -> dict:
    headers = {"Authorization": f"Bearer {api_key}"}
    last_error: Exception | None = None
    for attempt in range(1 + len(_BACKOFF_SECONDS)):
        if attempt > 0:
            sleep(_BACKOFF_SECONDS[attempt - 1])
        try:
            response = client.post(url, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            last_error = BackendTimeoutError(f"request timed out: {exc}")
            continue
        except httpx.HTTPError as exc:
            last_error = BackendError(f"transport failure: {exc}")
            continue
        if response.status_code in (401, 403):
            raise AuthError(f"API rejected credential (HTTP {response.status_code})")
        if response.status_code >= 500:
            last_error = BackendError(f"server error (HTTP {response.status_code})")
            continue
        if response.status_code >= 400:
            raise BackendError(
                f"request rejected (HTTP {response.status_code}): {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"response body is not JSON: {exc}") from exc
    assert last_error is not None
    if isinstance(last_error, BackendTimeoutError):
        raise BackendTimeoutError(f"gave up after retries: {last_error}")
    raise last_error
