"""Record a console frame log from a scripted session.

Replays the apple-fetch scenario plus a second plan that gets cancelled
mid-drive, capturing every frame the service would broadcast. The first 50
frames are frozen as the console view-model test fixture.

Usage: python3 scripts/record_frames.py [output.json]
"""
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from dobby.backends import ScriptedBackend, ScriptedStep, load_scenario
from dobby.chat import FunctionCall
from dobby.grounding import TrigramEmbeddingProvider
from dobby.service import event_frame, message_frame, state_frame
from dobby.session import Session, SessionConfig
from dobby.sim import load_destinations_file, load_topics_file

FRAME_BUDGET = 50


def main() -> int:
    output = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        REPO / "frontend" / "test" / "fixtures" / "session_frames.json"
    )
    steps, inputs = load_scenario(REPO / "fixtures" / "fig4.json")
    steps = steps + [
        ScriptedStep(
            response_content="Sure, touring you to the drone cage.",
            response_call=FunctionCall(
                name="ExecutePlan",
                arguments=json.dumps({"action_sequence": ["Drive to Drone Cage"]}),
            ),
            user_contains="drone",
        ),
        ScriptedStep(
            response_content="Off to the drone cage we go.",
            system_contains="Starting action: Drive to Drone Cage",
        ),
    ]
    inputs = inputs + [
        {"type": "user_utterance", "text": "Now show me the drone cage."},
        {"type": "tick", "ms": 1000},
        {"type": "cancel"},
        {"type": "idle"},
        {"type": "tick", "ms": 500},
    ]

    config = SessionConfig(
        destinations=load_destinations_file(REPO / "fixtures" / "lab_destinations.txt"),
        topics=load_topics_file(REPO / "fixtures" / "lab_topics.txt"),
        items={"apple": "apple_table", "banana": "banana_table"},
    )
    session = Session(config, ScriptedBackend(steps), TrigramEmbeddingProvider())

    frames: list[dict] = []
    session.message_listeners.append(lambda m: frames.append(message_frame(m)))
    session.event_listeners.append(lambda e: frames.append(event_frame(e)))
    session.state_listeners.append(lambda s: frames.append(state_frame(s)))
    for entry in inputs:
        session.submit(entry)

    if len(frames) < FRAME_BUDGET:
        raise SystemExit(f"session produced only {len(frames)} frames")
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(json.dumps(frames[:FRAME_BUDGET], indent=2) + "\n", encoding="utf-8")
    print(f"wrote {FRAME_BUDGET} of {len(frames)} frames to {output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
