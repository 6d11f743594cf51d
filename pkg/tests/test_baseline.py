"""Baseline guide: two-template grammar, embedding lookup, zero chat calls."""
import pytest

from dobby.baseline import (
    HELP_TEXT,
    UNKNOWN_LANDMARK_TEXT,
    UNKNOWN_TOPIC_TEXT,
    parse_command,
)
from dobby.grounding import TrigramEmbeddingProvider
from dobby.session import BASELINE, Session, SessionConfig
from dobby.sim import load_destinations_file, load_topics_file


def test_parse_show_me_the():
    command = parse_command("Show me the drone cage.")
    assert command.kind == "show_landmark"
    assert command.target == "drone cage"


def test_parse_tell_me_about():
    command = parse_command("Tell me about social navigation")
    assert command.kind == "tell_topic"
    assert command.target == "social navigation"


def test_parse_is_case_insensitive_and_strips_punctuation():
    assert parse_command("show me the Apple!").target == "Apple"
    assert parse_command("TELL ME ABOUT robot learning?").target == "robot learning"


def test_parse_unrecognized():
    assert parse_command("What's your favorite robot?").kind == "unrecognized"
    assert parse_command("Show me around").kind == "unrecognized"
    assert parse_command("show me the").kind == "unrecognized"


@pytest.fixture
def baseline_session(fixtures_dir):
    config = SessionConfig(
        destinations=load_destinations_file(fixtures_dir / "lab_destinations.txt"),
        topics=load_topics_file(fixtures_dir / "lab_topics.txt"),
        mode=BASELINE,
    )
    return Session(config, backend=None, provider=TrigramEmbeddingProvider())


def dialogue_texts(events):
    return [e.payload["text"] for e in events if e.kind == "robot_dialogue"]


def test_show_landmark_drives_and_reads_description(baseline_session, fixtures_dir):
    events = baseline_session.submit({"type": "user_utterance", "text": "Show me the drone cage."})
    assert [e.kind for e in events] == ["plan_started", "action_started"]
    events = baseline_session.submit({"type": "run_until_idle"})
    texts = dialogue_texts(events)
    expected = next(
        d.description
        for d in baseline_session.config.destinations
        if d.id == "drone_cage"
    )
    assert texts == [expected]  # byte-identical to the config file text
    assert "robot_at:drone_cage" in baseline_session.executor.state.atoms()


def test_tell_topic_reads_body_verbatim(baseline_session):
    events = baseline_session.submit(
        {"type": "user_utterance", "text": "Tell me about social navigation."}
    )
    body = dict(baseline_session.config.topics)["Social Navigation"]
    assert dialogue_texts(events) == [body]
    assert not baseline_session.sim.busy  # no motion for topics


def test_unknown_landmark_fixed_reply_no_motion(baseline_session):
    events = baseline_session.submit(
        {"type": "user_utterance", "text": "Show me the kitchen sink."}
    )
    assert dialogue_texts(events) == [UNKNOWN_LANDMARK_TEXT]
    assert baseline_session.executor.phase == "idle"


def test_unknown_topic_fixed_reply(baseline_session):
    events = baseline_session.submit(
        {"type": "user_utterance", "text": "Tell me about quantum finance."}
    )
    assert dialogue_texts(events) == [UNKNOWN_TOPIC_TEXT]


def test_unrecognized_gets_help_sentence(baseline_session):
    events = baseline_session.submit(
        {"type": "user_utterance", "text": "What's the coolest robot here?"}
    )
    assert dialogue_texts(events) == [HELP_TEXT]
    assert baseline_session.executor.phase == "idle"


def test_zero_chat_backend_calls_across_session(fixtures_dir):
    """A ten-command baseline session never touches a chat backend."""

    class ExplodingBackend:
        def __init__(self):
            self.calls = 0

        def complete(self, history, functions):
            self.calls += 1
            raise AssertionError("baseline mode must not query the chat backend")

    backend = ExplodingBackend()
    config = SessionConfig(
        destinations=load_destinations_file(fixtures_dir / "lab_destinations.txt"),
        topics=load_topics_file(fixtures_dir / "lab_topics.txt"),
        mode=BASELINE,
    )
    session = Session(config, backend=backend, provider=TrigramEmbeddingProvider())
    commands = [
        "Show me the drone cage.",
        "Tell me about social navigation.",
        "Show me the vision lab.",
        "Tell me about robot learning.",
        "What is going on here?",
        "Show me the kitchen sink.",
        "Tell me about quantum finance.",
        "Show me the legged robot pen.",
        "Tell me about swarm robotics.",
        "Show me the charging dock.",
    ]
    for text in commands:
        session.submit({"type": "user_utterance", "text": text})
        session.submit({"type": "run_until_idle"})
    assert backend.calls == 0
    assert session.metrics().destinations_visited == 4


def test_console_cancel_stops_drive_and_description(baseline_session):
    baseline_session.submit({"type": "user_utterance", "text": "Show me the drone cage."})
    baseline_session.submit({"type": "tick", "ms": 500})
    events = baseline_session.submit({"type": "cancel"})
    assert any(e.kind == "plan_cancelled" for e in events)
    drained = baseline_session.submit({"type": "run_until_idle"})
    assert dialogue_texts(drained) == []  # cancelled drives stay silent
