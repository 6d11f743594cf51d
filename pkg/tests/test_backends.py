"""Scripted and HTTP backends: triggers, retries, caching, wire round trips."""
import json

import httpx
import numpy as np
import pytest

from dobby.backends import (
    HttpChatBackend,
    HttpEmbeddingProvider,
    ScriptedBackend,
    load_scenario,
)
from dobby.chat import ChatMessage, FunctionCall, FunctionDef, message_from_wire, message_to_wire
from dobby.errors import (
    AuthError,
    BackendError,
    BackendTimeoutError,
    InvalidInputError,
    MalformedResponseError,
    ProviderInconsistencyError,
    ScenarioExhaustedError,
    TriggerMismatchError,
)

from helpers import step

SYS = ChatMessage(role="system", content="prompt")


def history(*messages: ChatMessage) -> list[ChatMessage]:
    return [SYS, *messages]


def test_user_contains_trigger_returns_function_call():
    backend = ScriptedBackend(
        [step(content="sure", call=("ExecutePlan", '{"action_sequence": ["Drive to Apple"]}'), user="apple")]
    )
    reply = backend.complete(history(ChatMessage(role="user", content="I'd like an apple.")), [])
    assert reply.role == "assistant"
    assert reply.content == "sure"
    assert reply.function_call == FunctionCall(
        name="ExecutePlan", arguments='{"action_sequence": ["Drive to Apple"]}'
    )


def test_content_only_step():
    backend = ScriptedBackend([step(content="hello there", turn=0)])
    reply = backend.complete(history(ChatMessage(role="user", content="hi")), [])
    assert reply.content == "hello there"
    assert reply.function_call is None


def test_exhausted_scenario_raises():
    backend = ScriptedBackend([step(content="once", user="hi")])
    backend.complete(history(ChatMessage(role="user", content="hi")), [])
    with pytest.raises(ScenarioExhaustedError):
        backend.complete(history(ChatMessage(role="user", content="hi again")), [])


def test_trigger_mismatch_is_loud_in_strict_mode():
    backend = ScriptedBackend([step(content="x", user="banana")])
    with pytest.raises(TriggerMismatchError):
        backend.complete(history(ChatMessage(role="user", content="apple")), [])


def test_lenient_mode_falls_back():
    backend = ScriptedBackend([step(content="x", user="banana")], strict=False)
    reply = backend.complete(history(ChatMessage(role="user", content="apple")), [])
    assert "nothing scripted" in reply.content


def test_system_contains_trigger():
    backend = ScriptedBackend([step(content="cue", system="Starting action")])
    reply = backend.complete(
        history(ChatMessage(role="system", content="Starting action: Drive to Apple")), []
    )
    assert reply.content == "cue"


def test_turn_index_trigger_counts_queries():
    backend = ScriptedBackend([step(content="first", turn=0), step(content="second", turn=1)])
    assert backend.complete(history(ChatMessage(role="user", content="a")), []).content == "first"
    assert backend.complete(history(ChatMessage(role="user", content="b")), []).content == "second"


def test_steps_consumed_in_order():
    backend = ScriptedBackend([step(content="one", user="x"), step(content="two", user="x")])
    assert backend.complete(history(ChatMessage(role="user", content="x")), []).content == "one"
    assert backend.complete(history(ChatMessage(role="user", content="x")), []).content == "two"


def test_load_scenario_serializes_object_arguments(fixtures_dir):
    steps, inputs = load_scenario(fixtures_dir / "fig4.json")
    assert len(steps) == 6
    call = steps[1].response_call
    assert call.name == "ExecutePlan"
    assert json.loads(call.arguments) == {
        "action_sequence": ["Drive to Apple", "Pickup Apple", "Return to user"]
    }
    assert inputs[0] == {"type": "user_utterance", "text": "I'm really hungry right now."}


def test_wire_round_trip_lossless():
    messages = [
        ChatMessage(role="system", content="prompt"),
        ChatMessage(role="user", content="hello"),
        ChatMessage(
            role="assistant",
            content="on it",
            function_call=FunctionCall(name="ExecutePlan", arguments='{"action_sequence": []}'),
        ),
        ChatMessage(role="assistant", content="plain reply"),
    ]
    for message in messages:
        round_tripped = message_from_wire(message_to_wire(message))
        assert round_tripped.role == message.role
        assert round_tripped.content == message.content
        assert round_tripped.function_call == message.function_call


def test_chat_message_validation():
    with pytest.raises(ValueError):
        ChatMessage(role="wizard", content="x")
    with pytest.raises(ValueError):
        ChatMessage(role="user", content="x", function_call=FunctionCall("F", "{}"))


COMPLETION_BODY = {
    "choices": [
        {
            "message": {
                "role": "assistant",
                "content": "hi",
                "function_call": {"name": "CancelPlan", "arguments": "{}"},
            }
        }
    ]
}


def make_chat_backend(handler) -> HttpChatBackend:
    return HttpChatBackend(
        api_key="test-key",
        base_url="http://api.test/v1",
        transport=httpx.MockTransport(handler),
        sleep=lambda seconds: None,
    )


def test_http_complete_maps_function_call():
    requests = []

    def handler(request):
        requests.append(json.loads(request.content))
        return httpx.Response(200, json=COMPLETION_BODY)

    backend = make_chat_backend(handler)
    reply = backend.complete(
        [SYS, ChatMessage(role="user", content="stop")],
        [FunctionDef(name="CancelPlan", description="d", parameters={"type": "object", "properties": {}})],
    )
    assert reply.function_call.name == "CancelPlan"
    assert reply.content == "hi"
    sent = requests[0]
    assert [m["role"] for m in sent["messages"]] == ["system", "user"]
    assert sent["functions"][0]["name"] == "CancelPlan"


def test_http_complete_retries_transient_500():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] == 1:
            return httpx.Response(500)
        return httpx.Response(200, json=COMPLETION_BODY)

    backend = make_chat_backend(handler)
    assert backend.complete([SYS], []).content == "hi"
    assert calls["n"] == 2


def test_http_complete_gives_up_after_two_retries():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(503)

    backend = make_chat_backend(handler)
    with pytest.raises(BackendError):
        backend.complete([SYS], [])
    assert calls["n"] == 3  # initial try plus two retries


def test_http_complete_auth_error_no_retry():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(401)

    backend = make_chat_backend(handler)
    with pytest.raises(AuthError):
        backend.complete([SYS], [])
    assert calls["n"] == 1


def test_http_complete_timeout_then_success():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] == 1:
            raise httpx.ReadTimeout("slow")
        return httpx.Response(200, json=COMPLETION_BODY)

    backend = make_chat_backend(handler)
    assert backend.complete([SYS], []).content == "hi"


def test_http_complete_timeout_exhausts_as_typed_error():
    def handler(request):
        raise httpx.ReadTimeout("slow")

    backend = make_chat_backend(handler)
    with pytest.raises(BackendTimeoutError):
        backend.complete([SYS], [])


def test_http_complete_malformed_body():
    def handler(request):
        return httpx.Response(200, json={"surprise": True})

    backend = make_chat_backend(handler)
    with pytest.raises(MalformedResponseError):
        backend.complete([SYS], [])


def test_missing_api_key_is_auth_error(monkeypatch):
    monkeypatch.delenv("DOBBY_API_KEY", raising=False)
    with pytest.raises(AuthError):
        HttpChatBackend()


def make_embed_provider(handler) -> HttpEmbeddingProvider:
    return HttpEmbeddingProvider(
        api_key="test-key",
        base_url="http://api.test/v1",
        transport=httpx.MockTransport(handler),
        sleep=lambda seconds: None,
    )


def test_http_embed_caches_by_text():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(200, json={"data": [{"embedding": [1.0, 2.0, 3.0]}]})

    provider = make_embed_provider(handler)
    first = provider.embed("hello")
    second = provider.embed("hello")
    assert np.array_equal(first, second)
    assert calls["n"] == 1


def test_http_embed_rejects_empty_before_network():
    def handler(request):  # pragma: no cover - must never be reached
        raise AssertionError("network touched")

    provider = make_embed_provider(handler)
    with pytest.raises(InvalidInputError):
        provider.embed("")


def test_http_embed_dimension_consistency():
    vectors = iter([[1.0, 2.0], [1.0, 2.0, 3.0]])

    def handler(request):
        return httpx.Response(200, json={"data": [{"embedding": next(vectors)}]})

    provider = make_embed_provider(handler)
    provider.embed("first")
    with pytest.raises(ProviderInconsistencyError):
        provider.embed("second")
