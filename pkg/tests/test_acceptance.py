"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. All criteria run offline against the scripted backend and the
deterministic trigram provider.
"""
import itertools
import json
import random
import time
from pathlib import Path

import pytest
from starlette.testclient import TestClient

from dobby.backends import ScriptedBackend
from dobby.chat import ChatMessage
from dobby.cli import _build_backend, _build_provider, _load_config, build_parser, main
from dobby.correction import Corrected, NotCapable, reorder_plan
from dobby.engine import AWAITING_UTTERANCE, AWAITING_WAKE_WORD
from dobby.errors import StalePlanError
from dobby.executor import GATED, IDLE, RUNNING
from dobby.grounding import RegistryGrounder, TrigramEmbeddingProvider
from dobby.service import create_app
from dobby.session import Session
from dobby.sim import build_registry, load_destinations_file
from dobby.transcript import open_transcript
from dobby.world import check_plan

from helpers import RecordingBackend, execute_plan_args, random_domain, step
from test_correction import WITNESS_PATH, brute_force_valid_order
from test_executor import fetch_plan, make_executor, run_to_idle

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def report(criterion: int, name: str) -> None:
    print(f"ACCEPTANCE {criterion} ({name}): PASS")


def make_session(scenario: str, extra_args: list[str] = ()) -> tuple[Session, list[dict]]:
    args = build_parser().parse_args(
        [
            "--destinations", str(FIXTURES / "lab_destinations.txt"),
            "--topics", str(FIXTURES / "lab_topics.txt"),
            "--backend", f"scripted:{FIXTURES / scenario}",
            *extra_args,
        ]
    )
    config, inputs = _load_config(args)
    return Session(config, _build_backend(args), _build_provider(args)), inputs


def test_acceptance_1_fig4_replay(tmp_path, capsys):
    """Full replay reproduces the exact function-call and system lines, fast."""
    started = time.monotonic()
    code = main(
        [
            "--destinations", str(FIXTURES / "lab_destinations.txt"),
            "--topics", str(FIXTURES / "lab_topics.txt"),
            "--backend", f"scripted:{FIXTURES / 'fig4.json'}",
            "--replay",
            "--accel", "100",
            "--transcript", str(tmp_path / "fig4.txt"),
        ]
    )
    elapsed = time.monotonic() - started
    assert code == 0
    transcript = (tmp_path / "fig4.txt").read_text()
    required = [
        'FUNCTION CALL: ExecutePlan({"action_sequence": ["Drive to Apple", "Pickup Apple", "Return to user"]})',
        "SYSTEM: Executing plan: 1. Drive to Apple 2. Pickup Apple 3. Return to User",
        "SYSTEM: Starting action: Drive to Apple",
    ]
    positions = [transcript.index(line) for line in required]
    assert positions == sorted(positions)
    assert elapsed < 5.0
    metrics = json.loads((tmp_path / "fig4.metrics.json").read_text())
    assert metrics["destinations_visited"] == 1
    report(1, "fig4 replay")


def test_acceptance_2_reorder_soundness_fuzz():
    """10,000 random domains: corrected output always executes and is a
    multiset permutation of the input."""
    rng = random.Random(424242)
    corrected = 0
    for _ in range(10_000):
        state, actions = random_domain(rng)
        sequence = [rng.choice(actions) for _ in range(rng.randint(0, 6))] if actions else []
        result = reorder_plan(state, sequence)
        if isinstance(result, Corrected):
            corrected += 1
            assert check_plan(state, list(result.plan)).valid
            assert sorted(id(a) for a in result.plan) == sorted(id(a) for a in sequence)
        else:
            assert isinstance(result, NotCapable)
    assert corrected > 1000  # the generator produces plenty of solvable cases
    report(2, "reorder soundness fuzz, 10000 domains")


def test_acceptance_3_incompleteness_witness():
    """The fuzz finds a case where greedy rejects but brute force succeeds;
    the frozen regression fixture is such a case."""
    rng = random.Random(424242)
    found_live = False
    for _ in range(10_000):
        state, actions = random_domain(rng)
        sequence = [rng.choice(actions) for _ in range(rng.randint(0, 6))] if actions else []
        result = reorder_plan(state, sequence)
        if isinstance(result, NotCapable) and sequence:
            if brute_force_valid_order(state, sequence) is not None:
                found_live = True
                break
    assert found_live, "greedy was never distinguishable from exhaustive search"

    data = json.loads(WITNESS_PATH.read_text())
    from dobby.world import ActionSpec, Literal, Predicate, WorldState

    state = WorldState(frozenset(Predicate(a) for a in data["initial"]))
    actions = [
        ActionSpec(
            title=raw["title"],
            preconditions=frozenset(
                Literal(Predicate(atom), positive) for atom, positive in raw["pre"]
            ),
            adds=frozenset(Predicate(a) for a in raw["adds"]),
            deletes=frozenset(raw["deletes"]),
        )
        for raw in data["actions"]
    ]
    assert isinstance(reorder_plan(state, actions), NotCapable)
    assert brute_force_valid_order(state, actions) is not None
    report(3, "greedy incompleteness witness found and frozen")


def test_acceptance_4_grounding_properties(small_lab, small_items):
    provider = TrigramEmbeddingProvider()
    destinations = load_destinations_file(FIXTURES / "lab_destinations.txt")
    registry = build_registry(destinations, {"apple": "apple_table", "banana": "banana_table"}, "lobby")
    grounder = RegistryGrounder(registry, provider)

    # exact-title similarity is 1.0 for every one of the fixture titles
    assert len(registry) == 15
    for title in registry.titles:
        action, similarity = grounder.ground_action(title)
        assert action.title == title
        assert similarity == pytest.approx(1.0, abs=1e-9)

    # monotone threshold over 1,000 random (candidate, threshold) pairs
    rng = random.Random(99)
    words = ["drive", "to", "the", "apple", "banana", "drone", "cage", "lab",
             "pickup", "hand", "over", "user", "return", "moon", "sink", "vision"]
    for _ in range(1000):
        candidate = " ".join(rng.sample(words, k=rng.randint(1, 5)))
        t = rng.uniform(0.05, 1.0)
        outcome = grounder.ground_plan([candidate], t)
        from dobby.grounding import Grounded

        if isinstance(outcome, Grounded):
            for t_lower in (t * 0.75, t * 0.5, 0.05):
                assert grounder.ground_plan([candidate], t_lower) == outcome

    # the retry loop performs exactly min(failures+1, 3) grounding queries
    from test_engine import make_engine

    for failures in range(4):
        bad = step(
            call=("ExecutePlan", execute_plan_args(["Fly to Moon"])),
            system="No action matches",
        )
        steps = [step(call=("ExecutePlan", execute_plan_args(["Fly to Moon"])), user="go")]
        effective_failures = min(failures, 3)
        retries_served = min(effective_failures, 2)  # after the 3rd failure no retry is issued
        steps.extend([bad] * retries_served)
        if failures < 3:
            if failures > 0:
                steps[-1] = step(
                    call=("ExecutePlan", execute_plan_args(["Drive to Apple"])),
                    system="No action matches",
                )
            if failures == 0:
                steps = [step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go")]
            steps.append(step(content="cue", system="Starting action: Drive to Apple"))
        else:
            steps.append(step(content="cannot do", system="not capable"))
        engine, executor, backend = make_engine(small_lab, small_items, steps)
        engine.handle_user_utterance("go")
        grounding_queries = min(failures + 1, 3)
        trailing = 1  # cue when accepted, explanation when abandoned
        assert backend.query_count == grounding_queries + trailing, f"failures={failures}"
    report(4, "grounding: exact titles, monotone threshold, retry counts")


def test_acceptance_5_executor_semantics(small_lab, small_items):
    # cancel mid-action-1-of-3 leaves exactly one action's effects
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    while executor.cursor == 0 and executor.phase == RUNNING:
        executor.tick(100)
    executor.tick(100)
    executor.cancel()
    assert executor.state.atoms() == {"robot_at:apple_table", "gripper_empty"}

    # a 3-action tour plan needs exactly 2 ContinuePlan releases
    executor, registry, events = make_executor(small_lab, small_items, tour_mode=True)
    executor.start(fetch_plan(registry))
    run_to_idle(executor)
    releases = 0
    while executor.phase != IDLE:
        assert executor.phase == GATED
        assert executor.continue_gate()
        releases += 1
        run_to_idle(executor)
    assert releases == 2

    # override: cancelled then started, with no interleaved action activity
    executor, registry, events = make_executor(small_lab, small_items)
    executor.start(fetch_plan(registry))
    executor.tick(300)
    events.clear()
    executor.start([registry.get("Drive to Banana")])
    assert [e.kind for e in events] == ["plan_cancelled", "plan_started", "action_started"]

    # exhaustive interleavings were model-checked in test_executor; re-run a
    # fast slice here so this criterion stands alone
    from test_executor import COMMANDS, _apply_command, _check_invariants

    for tour_mode in (False, True):
        for length in range(1, 5):
            for sequence in itertools.product(COMMANDS, repeat=length):
                executor, registry, events = make_executor(small_lab, small_items, tour_mode)
                for command in sequence:
                    _apply_command(executor, registry, command)
                    _check_invariants(executor, events, tour_mode)
    report(5, "executor cancel/tour/override semantics and interleavings")


def test_acceptance_6_conversation_loop(small_lab, small_items):
    from test_engine import make_engine

    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(content="Hello!", user="hi"),
            step(content="Still here.", user="dobby"),
        ],
    )
    engine.handle_user_utterance("hi robot")
    executor.tick(6000)
    events = engine.maybe_silence_timeout()
    assert [e.kind for e in events] == ["awaiting_wake"]
    assert engine.conversational_state == AWAITING_WAKE_WORD

    before = len(engine.history)
    assert engine.handle_user_utterance("anyone home?") == []
    assert len(engine.history) == before
    assert all("anyone home" not in m.content for m in engine.history.snapshot())

    events = engine.handle_user_utterance("hey dobby!")
    assert [e.kind for e in events] == ["resumed", "robot_dialogue"]
    assert engine.conversational_state == AWAITING_UTTERANCE

    final = engine.history.snapshot()
    for payload in backend.payloads:
        assert payload == final[: len(payload)]
    report(6, "silence timeout, wake word, full-history payloads")


def test_acceptance_7_baseline_mode():
    class CountingChatBackend:
        def __init__(self):
            self.calls = 0

        def complete(self, history, functions):
            self.calls += 1
            return ChatMessage(role="assistant", content="should never happen")

    backend = CountingChatBackend()
    args = build_parser().parse_args(
        [
            "--destinations", str(FIXTURES / "lab_destinations.txt"),
            "--topics", str(FIXTURES / "lab_topics.txt"),
            "--backend", "scripted:" + str(FIXTURES / "baseline_demo.json"),
            "--mode", "baseline",
        ]
    )
    config, _ = _load_config(args)
    session = Session(config, backend, TrigramEmbeddingProvider())

    descriptions = {d.display_name: d.description for d in config.destinations}
    topics = dict(config.topics)
    spoken = []
    session.event_listeners.append(
        lambda e: spoken.append(e.payload["text"]) if e.kind == "robot_dialogue" else None
    )
    commands = [
        "Show me the drone cage.",
        "Tell me about social navigation.",
        "Show me the vision lab.",
        "Tell me about robot learning.",
        "Show me the apple.",
        "Tell me about swarm robotics.",
        "Show me the charging dock.",
        "Tell me about autonomous driving.",
        "Show me the legged robot pen.",
        "Tell me about human-robot interaction.",
    ]
    for text in commands:
        session.submit({"type": "user_utterance", "text": text})
        session.submit({"type": "run_until_idle"})
    assert backend.calls == 0
    # every emitted description is byte-identical to the config text
    expected = [
        descriptions["Drone Cage"],
        topics["Social Navigation"],
        descriptions["Vision Lab"],
        topics["Robot Learning"],
        descriptions["Apple"],
        topics["Swarm Robotics"],
        descriptions["Charging Dock"],
        topics["Autonomous Driving"],
        descriptions["Legged Robot Pen"],
        topics["Human-Robot Interaction"],
    ]
    assert spoken == expected
    report(7, "baseline: both templates, zero chat calls, verbatim text")


def test_acceptance_8_transport_equivalence(tmp_path):
    repl_session, inputs = make_session("fig4.json")
    writer, t1, j1 = open_transcript(tmp_path / "repl.txt")
    repl_session.message_listeners.append(writer.on_message)
    for entry in inputs:
        repl_session.submit(entry)
    t1.close(), j1.close()

    ws_session, inputs = make_session("fig4.json")
    writer2, t2, j2 = open_transcript(tmp_path / "service.txt")
    ws_session.message_listeners.append(writer2.on_message)
    client = TestClient(create_app(ws_session))
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        for entry in inputs:
            ws.send_json(entry)
            while ws.receive_json()["type"] != "state":
                pass
    t2.close(), j2.close()

    assert (tmp_path / "repl.txt").read_bytes() == (tmp_path / "service.txt").read_bytes()
    assert (tmp_path / "repl.txt").read_bytes()  # nonempty
    report(8, "REPL and service transcripts byte-identical")
