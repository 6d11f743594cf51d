"""Conversational engine: prompts, dispatch, retries, wake word, boundaries."""
import json

import pytest

from dobby.backends import ScriptedBackend
from dobby.chat import ChatMessage
from dobby.engine import (
    AWAITING_CONTINUE_MESSAGE,
    AWAITING_UTTERANCE,
    AWAITING_WAKE_WORD,
    APOLOGY_TEXT,
    AgentConfig,
    AgentEngine,
    NOT_CAPABLE_MESSAGE,
    compose_prompt,
)
from dobby.errors import BackendError
from dobby.executor import Executor, GATED, IDLE, RUNNING
from dobby.grounding import RegistryGrounder, TrigramEmbeddingProvider
from dobby.sim import SimWorld, build_registry, initial_world_state
from dobby.world import ActionRegistry, make_action

from helpers import RecordingBackend, execute_plan_args, step

FETCH_TITLES = ["Drive to Apple", "Pickup Apple", "Return to User"]


def make_engine(
    small_lab,
    small_items,
    steps,
    tour_mode=False,
    retries=3,
    backend=None,
):
    sim = SimWorld(destinations=small_lab, user_location="lobby", items=dict(small_items))
    registry = build_registry(small_lab, small_items, "lobby")
    executor = Executor(sim, initial_world_state("lobby"), tour_mode=tour_mode)
    if backend is None:
        backend = RecordingBackend(ScriptedBackend(steps))
    config = AgentConfig(
        persona_prompt="You are a test robot.",
        tour_mode=tour_mode,
        max_grounding_retries=retries,
    )
    engine = AgentEngine(
        config=config,
        registry=registry,
        grounder=RegistryGrounder(registry, TrigramEmbeddingProvider()),
        backend=backend,
        executor=executor,
        clock=lambda: sim.clock_ms,
        system_prompt=compose_prompt(
            config.persona_prompt, small_lab, [], registry, tour_mode=tour_mode
        ),
    )
    return engine, executor, backend


def tick_until_idle(executor):
    guard = 0
    while executor.phase == RUNNING:
        executor.tick(100)
        guard += 1
        assert guard < 2000


def system_messages(engine):
    return [m.content for m in engine.history.snapshot() if m.role == "system"]


def kinds(events):
    return [e.kind for e in events]


# -- prompt composition -------------------------------------------------


def test_prompt_minimal_sections():
    registry = ActionRegistry([make_action("Wave")])
    prompt = compose_prompt("Persona text.", [], [], registry)
    assert "Persona text." in prompt
    assert "- Wave" in prompt
    assert "Environment:" not in prompt
    assert "Topics:" not in prompt


def test_prompt_contains_everything_exactly_once(fixtures_dir):
    from dobby.sim import load_destinations, load_topics_file

    destinations = load_destinations((fixtures_dir / "lab_destinations.txt").read_text())
    topics = load_topics_file(fixtures_dir / "lab_topics.txt")
    registry = build_registry(destinations, {}, "lobby")
    prompt = compose_prompt("Persona.", destinations, topics, registry)
    assert len(destinations) == 10 and len(topics) == 5
    for destination in destinations:
        assert prompt.count(f"- {destination.display_name}: {destination.description}") == 1
    for name, body in topics:
        assert prompt.count(body) == 1


def test_prompt_lists_actions_in_registry_order():
    registry = ActionRegistry([make_action("Alpha Move"), make_action("Beta Move")])
    prompt = compose_prompt("P", [], [], registry)
    assert prompt.index("- Alpha Move") < prompt.index("- Beta Move")


def test_prompt_tour_mode_adds_continue_directive():
    registry = ActionRegistry([make_action("Wave")])
    assert "ContinuePlan" not in compose_prompt("P", [], [], registry)
    assert "ContinuePlan" in compose_prompt("P", [], [], registry, tour_mode=True)


# -- basic turns ---------------------------------------------------------


def test_dialogue_only_turn(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab, small_items, [step(content="Hello!", user="hi")]
    )
    events = engine.handle_user_utterance("hi there")
    assert kinds(events) == ["robot_dialogue"]
    assert executor.phase == IDLE
    assert events[0].payload["text"] == "Hello!"


def test_fetch_turn_events_and_history(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(
                content="On my way.",
                call=("ExecutePlan", execute_plan_args(["Drive to Apple", "Pickup Apple", "Return to user"])),
                user="apple",
            ),
            step(content="Driving now.", system="Starting action: Drive to Apple"),
        ],
    )
    events = engine.handle_user_utterance("I'd like an apple.")
    assert kinds(events) == ["robot_dialogue", "plan_started", "action_started", "robot_dialogue"]
    assert events[1].payload["titles"] == FETCH_TITLES
    tail = [m.content for m in engine.history.snapshot()[-3:]]
    assert tail == [
        "Executing plan: 1. Drive to Apple 2. Pickup Apple 3. Return to User",
        "Starting action: Drive to Apple",
        "Driving now.",
    ]
    assert executor.phase == RUNNING


def test_announcement_precedes_first_action_started(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go"),
            step(content="cue", system="Starting action"),
        ],
    )
    timeline = []
    engine.history.on_append(lambda m: timeline.append(("message", m.content)))
    engine.subscribers.append(lambda e: timeline.append(("event", e.kind)))
    engine.handle_user_utterance("go")
    announcement = timeline.index(("message", "Executing plan: 1. Drive to Apple"))
    started = timeline.index(("event", "action_started"))
    assert announcement < started


def test_cancel_plan_call_halts_executor(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go"),
            step(content="cue", system="Starting action"),
            step(content="Stopping.", call=("CancelPlan", "{}"), user="stop"),
        ],
    )
    engine.handle_user_utterance("go fetch")
    executor.tick(300)
    events = engine.handle_user_utterance("please stop")
    assert executor.phase == IDLE
    assert "plan_cancelled" in kinds(events)


def test_reordered_plan_announced_in_corrected_order(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [
            step(
                call=("ExecutePlan", execute_plan_args(["Pickup Apple", "Drive to Apple"])),
                user="apple",
            ),
            step(content="cue", system="Starting action: Drive to Apple"),
        ],
    )
    engine.handle_user_utterance("grab the apple")
    assert (
        "Executing plan: 1. Drive to Apple 2. Pickup Apple" in system_messages(engine)
    )
    assert [a.title for a in executor.plan] == ["Drive to Apple", "Pickup Apple"]


# -- function-call error paths -------------------------------------------


def test_unknown_function_requeries_once(small_lab, small_items):
    engine, _, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("FlyToMoon", "{}"), user="moon"),
            step(content="Sorry, no moon flights.", system="Unknown function"),
        ],
    )
    events = engine.handle_user_utterance("fly to the moon")
    assert backend.query_count == 2
    assert any('Unknown function "FlyToMoon"' in m for m in system_messages(engine))
    assert kinds(events)[-1] == "robot_dialogue"


def test_repeated_unknown_function_stops_after_one_requery(small_lab, small_items):
    engine, _, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("Nope", "{}"), user="x"),
            step(call=("StillNope", "{}"), system="Unknown function"),
        ],
    )
    engine.handle_user_utterance("x please")
    assert backend.query_count == 2  # no third query


def test_malformed_arguments_requery(small_lab, small_items):
    engine, _, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", "this is not json"), user="go"),
            step(content="Let me try again.", system="Malformed arguments"),
        ],
    )
    engine.handle_user_utterance("go")
    assert backend.query_count == 2
    assert any("Malformed arguments" in m for m in system_messages(engine))


def test_wrong_shape_arguments_requery(small_lab, small_items):
    engine, _, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", json.dumps({"action_sequence": "Drive to Apple"})), user="go"),
            step(content="Oops.", system="Malformed arguments"),
        ],
    )
    engine.handle_user_utterance("go")
    assert backend.query_count == 2


def test_continue_plan_unavailable_outside_tour_mode(small_lab, small_items):
    engine, _, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ContinuePlan", "{}"), user="next"),
            step(content="My mistake.", system="not available"),
        ],
        tour_mode=False,
    )
    engine.handle_user_utterance("next please")
    assert backend.query_count == 2
    assert any("ContinuePlan is not available" in m for m in system_messages(engine))


def test_function_defs_gated_by_tour_mode(small_lab, small_items):
    engine, _, _ = make_engine(small_lab, small_items, [])
    assert [f.name for f in engine.function_defs()] == ["ExecutePlan", "CancelPlan"]
    tour_engine, _, _ = make_engine(small_lab, small_items, [], tour_mode=True)
    assert [f.name for f in tour_engine.function_defs()] == [
        "ExecutePlan",
        "CancelPlan",
        "ContinuePlan",
    ]


# -- grounding retry loop --------------------------------------------------


def test_retry_then_success_has_single_error_message(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Fly to Moon"])), user="moon"),
            step(
                content="Right, driving instead.",
                call=("ExecutePlan", execute_plan_args(["Drive to Apple"])),
                system="No action matches",
            ),
            step(content="cue", system="Starting action: Drive to Apple"),
        ],
    )
    engine.handle_user_utterance("take me to the moon")
    errors = [m for m in system_messages(engine) if m.startswith("No action matches")]
    assert len(errors) == 1
    assert '"Fly to Moon"' in errors[0]
    assert "Drive to Apple" in errors[0]  # valid titles listed
    assert executor.phase == RUNNING
    assert backend.query_count == 3  # initial, retry, cue


def test_exhausted_retries_abandon_with_explanation(small_lab, small_items):
    bad = step(
        call=("ExecutePlan", execute_plan_args(["Fly to Moon"])),
        system="No action matches",
    )
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Fly to Moon"])), user="moon"),
            bad,
            bad,
            step(content="I can't fly to the moon, sadly.", system="not capable"),
        ],
    )
    events = engine.handle_user_utterance("fly me to the moon")
    assert backend.query_count == 4  # 3 grounding attempts + 1 explanation
    messages = system_messages(engine)
    assert sum(1 for m in messages if m.startswith("No action matches")) == 2
    assert messages[-1] == NOT_CAPABLE_MESSAGE
    last = engine.history.snapshot()[-1]
    assert last.role == "assistant" and "moon" in last.content
    assert "plan_rejected" in kinds(events)
    assert executor.phase == IDLE


def test_retry_bound_respected_for_adversarial_backend(small_lab, small_items):
    bad = step(
        call=("ExecutePlan", execute_plan_args(["Fly to Moon"])),
        system="No action matches",
    )

    class AdversarialBackend:
        """Always proposes the same ungroundable plan."""

        def __init__(self):
            self.grounding_attempt_queries = 0

        def complete(self, history, functions):
            if history[-1].role == "system" and "not capable" in history[-1].content.lower():
                return ChatMessage(role="assistant", content="Giving up gracefully.")
            self.grounding_attempt_queries += 1
            return ChatMessage(
                role="assistant",
                content="",
                function_call=bad.response_call,
            )

    backend = AdversarialBackend()
    engine, _, _ = make_engine(small_lab, small_items, [], backend=backend)
    engine.handle_user_utterance("moon now")
    # initial + 2 retries; the loop never queries a 4th grounding attempt
    assert backend.grounding_attempt_queries == 3


def test_dialogue_reply_ends_retry_episode(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Fly to Moon"])), user="moon"),
            step(content="Actually, I can't do that.", system="No action matches"),
        ],
    )
    events = engine.handle_user_utterance("moon please")
    assert backend.query_count == 2
    assert executor.phase == IDLE
    assert kinds(events)[-1] == "robot_dialogue"


def test_unorderable_plan_rejected_without_grounding_retries(small_lab, small_items):
    # both pickups ground fine but cannot be ordered: one gripper, no drives
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(
                call=("ExecutePlan", execute_plan_args(["Pickup Apple", "Pickup Banana"])),
                user="both",
            ),
            step(content="I only have one gripper.", system="not capable"),
        ],
    )
    events = engine.handle_user_utterance("grab both fruits")
    assert backend.query_count == 2  # no grounding retries, straight to explanation
    assert system_messages(engine)[-1] == NOT_CAPABLE_MESSAGE
    assert "plan_rejected" in kinds(events)
    assert executor.phase == IDLE


def test_duplicate_unsatisfiable_instances_rejected(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Pickup Apple", "Pickup Apple"])), user="go"),
            step(content="One of me can only do that once.", system="not capable"),
        ],
    )
    events = engine.handle_user_utterance("go")
    assert "plan_rejected" in kinds(events)
    assert executor.phase == IDLE


def test_stale_plan_routes_to_not_capable(small_lab, small_items, monkeypatch):
    # force the world to drift between reordering and execution
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go"),
            step(content="Someone moved me!", system="not capable"),
        ],
    )
    from dobby.errors import StalePlanError

    monkeypatch.setattr(
        executor, "revalidate", lambda plan: (_ for _ in ()).throw(StalePlanError("drifted"))
    )
    events = engine.handle_user_utterance("go to the apple table")
    assert "plan_rejected" in kinds(events)
    assert system_messages(engine)[-1] == NOT_CAPABLE_MESSAGE
    assert executor.phase == IDLE


# -- boundaries ------------------------------------------------------------


def test_middle_boundary_messages_and_cue(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple", "Pickup Apple"])), user="go"),
            step(content="cue start", system="Starting action: Drive to Apple"),
            step(content="cue middle", system="Starting action: Pickup Apple"),
            step(content="cue done", system="Plan completed."),
        ],
    )
    engine.handle_user_utterance("go get the apple")
    tick_until_idle(executor)
    messages = system_messages(engine)
    assert "Finished action: Drive to Apple" in messages
    assert "Starting action: Pickup Apple" in messages
    assert messages[-2:] == ["Finished action: Pickup Apple", "Plan completed."]
    assert backend.query_count == 4
    assert executor.phase == IDLE


def test_tour_mode_boundary_gating_and_continue(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple", "Pickup Apple"])), user="tour"),
            step(content="Setting off.", system="Starting action: Drive to Apple"),
            step(content="Here we are. Ready?", system=AWAITING_CONTINUE_MESSAGE[:20]),
            step(content="Moving on!", call=("ContinuePlan", "{}"), user="ready"),
            step(content="Grabbing it.", system="Starting action: Pickup Apple"),
            step(content="All done.", system="Plan completed."),
        ],
        tour_mode=True,
    )
    engine.handle_user_utterance("tour please")
    tick_until_idle(executor)
    assert executor.phase == GATED
    messages = system_messages(engine)
    assert messages[-2:] == ["Finished action: Drive to Apple", AWAITING_CONTINUE_MESSAGE]
    engine.handle_user_utterance("I'm ready")
    assert executor.phase == RUNNING
    tick_until_idle(executor)
    assert executor.phase == IDLE
    assert system_messages(engine)[-1] == "Plan completed."


# -- wake word and silence ----------------------------------------------


def test_silence_timeout_then_wake_word(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [
            step(content="Hi!", user="hello"),
            step(content="Back with you.", user="dobby"),
        ],
    )
    engine.handle_user_utterance("hello")
    executor.tick(5900)
    assert engine.maybe_silence_timeout() == []
    assert engine.conversational_state == AWAITING_UTTERANCE
    executor.tick(100)
    events = engine.maybe_silence_timeout()
    assert kinds(events) == ["awaiting_wake"]
    assert engine.conversational_state == AWAITING_WAKE_WORD

    length_before = len(engine.history)
    assert engine.handle_user_utterance("hello robot") == []
    assert len(engine.history) == length_before  # dropped, not in history

    events = engine.handle_user_utterance("hey Dobby, are you there?")
    assert kinds(events) == ["resumed", "robot_dialogue"]
    assert engine.conversational_state == AWAITING_UTTERANCE
    assert engine.history[-2].content == "hey Dobby, are you there?"


def test_wake_match_is_case_insensitive_substring(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab, small_items, [step(content="Yes?", user="DOBBY")]
    )
    engine.conversational_state = AWAITING_WAKE_WORD
    events = engine.handle_user_utterance("DOBBY!")
    assert kinds(events) == ["resumed", "robot_dialogue"]


def test_dialogue_resets_silence_timer(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [step(content="Chatty reply.", user="hi", turn=None)],
    )
    executor.tick(5000)
    engine.handle_user_utterance("hi")  # robot_dialogue at t=5000 resets the timer
    executor.tick(5000)
    assert engine.maybe_silence_timeout() == []
    executor.tick(1000)
    assert kinds(engine.maybe_silence_timeout()) == ["awaiting_wake"]


# -- history contract -----------------------------------------------------


def test_every_query_payload_is_full_history(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(content="First.", user="one"),
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="two"),
            step(content="cue", system="Starting action"),
        ],
    )
    engine.handle_user_utterance("one")
    engine.handle_user_utterance("two")
    final = engine.history.snapshot()
    assert backend.query_count == 3
    previous_length = 0
    for payload in backend.payloads:
        assert payload == final[: len(payload)]
        assert len(payload) > previous_length
        previous_length = len(payload)
    assert final[0].role == "system"  # initializing prompt stays first


def test_backend_failure_apologizes_and_records(small_lab, small_items):
    class DownBackend:
        def complete(self, history, functions):
            raise BackendError("socket exploded")

    engine, _, _ = make_engine(small_lab, small_items, [], backend=DownBackend())
    events = engine.handle_user_utterance("hello?")
    assert kinds(events) == ["system_note", "robot_dialogue"]
    assert events[1].payload["text"] == APOLOGY_TEXT
    tail = engine.history.snapshot()[-2:]
    assert tail[0].role == "system" and "unavailable" in tail[0].content
    assert tail[1].role == "assistant" and tail[1].content == APOLOGY_TEXT


def test_conversation_continues_while_driving(small_lab, small_items):
    engine, executor, backend = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go"),
            step(content="Driving!", system="Starting action"),
            step(content="Yes, still rolling.", user="still there"),
            step(content="Made it.", system="Plan completed"),
        ],
    )
    engine.handle_user_utterance("go to the apple")
    executor.tick(500)
    assert executor.phase == RUNNING
    events = engine.handle_user_utterance("you still there?")  # mid-drive turn
    assert kinds(events) == ["robot_dialogue"]
    assert executor.phase == RUNNING  # execution was not disturbed
    tick_until_idle(executor)
    assert executor.phase == IDLE


def test_idle_cancel_turn_still_yields_an_event(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [step(content="Stopping!", call=("CancelPlan", "{}"), user="stop")],
    )
    events = engine.handle_user_utterance("stop everything")
    assert kinds(events) == ["robot_dialogue", "system_note"]
    assert "no plan is executing" in events[1].payload["text"]


def test_console_cancel_notes_history(small_lab, small_items):
    engine, executor, _ = make_engine(
        small_lab,
        small_items,
        [
            step(call=("ExecutePlan", execute_plan_args(["Drive to Apple"])), user="go"),
            step(content="cue", system="Starting action"),
        ],
    )
    engine.handle_user_utterance("go")
    events = engine.handle_console_cancel()
    assert "plan_cancelled" in kinds(events)
    assert system_messages(engine)[-1] == "Plan execution was cancelled by the user."
    assert engine.handle_console_cancel() == []  # idle cancel is silent
