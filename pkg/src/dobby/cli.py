"""Command-line entry points: interactive REPL, scripted replay, and service mode."""
from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from pathlib import Path

from .backends import ChatBackend, HttpChatBackend, HttpEmbeddingProvider, ScriptedBackend, load_scenario
from .errors import DobbyError
from .grounding import TrigramEmbeddingProvider
from .session import BASELINE, CONVERSATIONAL, Session, SessionConfig, TICK_MS
from .sim import load_destinations_file, load_topics_file
from .transcript import TranscriptWriter, open_transcript, render_message

EXIT_CONFIG_ERROR = 2

DEFAULT_ITEMS = {"apple": "apple_table", "banana": "banana_table"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dobby", description="Conversational tour-guide robot simulator"
    )
    parser.add_argument("--mode", choices=[CONVERSATIONAL, BASELINE], default=CONVERSATIONAL)
    parser.add_argument(
        "--backend",
        default="scripted:fixtures/fig4.json",
        help="'scripted:<scenario.json>' or 'http'",
    )
    parser.add_argument("--destinations", required=True, help="destinations file path")
    parser.add_argument("--topics", default=None, help="topics file path")
    parser.add_argument("--tour-mode", action="store_true")
    parser.add_argument("--threshold", type=float, default=0.80)
    parser.add_argument("--retries", type=int, default=3)
    parser.add_argument("--transcript", default=None, help="write the transcript here")
    parser.add_argument("--serve", type=int, default=None, metavar="PORT")
    parser.add_argument("--replay", action="store_true", help="feed the scenario's scripted inputs")
    parser.add_argument("--accel", type=float, default=1.0, help="simulated-clock acceleration")
    parser.add_argument("--no-items", action="store_true", help="omit the demo pickup items")
    parser.add_argument("--lenient", action="store_true", help="scripted backend falls back instead of failing")
    return parser


def _load_config(args) -> tuple[SessionConfig, list[dict]]:
    destinations_path = Path(args.destinations)
    if not destinations_path.exists():
        raise FileNotFoundError(f"destinations file not found: {destinations_path}")
    destinations = load_destinations_file(destinations_path)
    topics = []
    if args.topics:
        topics_path = Path(args.topics)
        if not topics_path.exists():
            raise FileNotFoundError(f"topics file not found: {topics_path}")
        topics = load_topics_file(topics_path)
    known = {d.id for d in destinations}
    items = {} if args.no_items else {
        item: loc for item, loc in DEFAULT_ITEMS.items() if loc in known
    }
    config = SessionConfig(
        destinations=destinations,
        topics=topics,
        items=items,
        mode=args.mode,
        threshold=args.threshold,
        max_grounding_retries=args.retries,
        tour_mode=args.tour_mode,
    )
    inputs: list[dict] = []
    if args.backend.startswith("scripted:"):
        scenario_path = Path(args.backend.split(":", 1)[1])
        if not scenario_path.exists():
            raise FileNotFoundError(f"scenario file not found: {scenario_path}")
        _, inputs = load_scenario(scenario_path)
    return config, inputs


def _build_backend(args) -> ChatBackend | None:
    if args.mode == BASELINE:
        return None
    if args.backend == "http":
        return HttpChatBackend()
    if args.backend.startswith("scripted:"):
        path = Path(args.backend.split(":", 1)[1])
        if not path.exists():
            raise FileNotFoundError(f"scenario file not found: {path}")
        return ScriptedBackend.from_file(path, strict=not args.lenient)
    raise ValueError(f"unknown backend {args.backend!r}")


def _build_provider(args):
    if args.backend == "http":
        return HttpEmbeddingProvider()
    return TrigramEmbeddingProvider()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, scenario_inputs = _load_config(args)
        backend = _build_backend(args)
        provider = _build_provider(args)
        session = Session(config, backend, provider)
    except (FileNotFoundError, DobbyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.serve is not None:
        from .service import serve

        serve(session, port=args.serve, accel=args.accel)
        return 0
    return run_repl(session, args, scenario_inputs)


def run_repl(session: Session, args, scenario_inputs: list[dict]) -> int:
    """Interactive or replayed session on stdio; writes transcript and metrics
    on exit."""
    writer = TranscriptWriter()
    streams = []
    if args.transcript:
        writer, text_stream, jsonl_stream = open_transcript(args.transcript)
        streams = [text_stream, jsonl_stream]
        writer.session_start({"mode": args.mode, "backend": args.backend})
    replaying = args.replay and bool(scenario_inputs)

    def print_message(message):
        for line in render_message(message):
            if not replaying and line.startswith("USER:"):
                continue  # the user just typed it
            print(line)

    session.message_listeners.append(writer.on_message)
    session.message_listeners.append(print_message)
    session.event_listeners.append(writer.on_event)

    try:
        if replaying:
            for entry in scenario_inputs:
                _replay_entry(session, entry, args.accel)
        else:
            _interactive_loop(session, args)
    finally:
        metrics = session.metrics()
        if args.transcript:
            metrics_path = Path(args.transcript).with_suffix(".metrics.json")
            metrics_path.write_text(json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(
            f"session metrics: interaction_time={metrics.interaction_time_s:.1f}s "
            f"destinations_visited={metrics.destinations_visited}",
            file=sys.stderr,
        )
        for stream in streams:
            stream.close()
    return 0


def _replay_entry(session: Session, entry: dict, accel: float) -> None:
    """Replay one scripted input; simulated time runs ``accel`` times faster
    than the wall clock (0 means unthrottled)."""
    if entry.get("type") == "run_until_idle" and accel > 0:
        from .executor import RUNNING

        while session.executor.phase == RUNNING:
            session.submit({"type": "tick", "ms": TICK_MS})
            time.sleep(TICK_MS / 1000.0 / accel)
        return
    session.submit(entry)
    if accel > 0 and entry.get("type") == "tick":
        time.sleep(entry.get("ms", TICK_MS) / 1000.0 / accel)


HELP = "commands: /cancel /continue /idle /state /quit; anything else is spoken to the robot"


def _interactive_loop(session: Session, args) -> None:
    print(HELP, file=sys.stderr)
    stop = threading.Event()
    if args.accel > 0:
        ticker = threading.Thread(
            target=_tick_forever, args=(session, stop, args.accel), daemon=True
        )
        ticker.start()
    try:
        while True:
            try:
                line = input()
            except EOFError:
                break
            line = line.strip()
            if not line:
                continue
            if line == "/quit":
                break
            try:
                if line == "/cancel":
                    session.submit({"type": "cancel"})
                elif line == "/continue":
                    session.submit({"type": "continue"})
                elif line == "/idle":
                    session.submit({"type": "idle"})
                elif line == "/state":
                    print(json.dumps(session.state_snapshot(), indent=2), file=sys.stderr)
                else:
                    session.submit({"type": "user_utterance", "text": line})
            except DobbyError as exc:
                print(f"error: {exc}", file=sys.stderr)
    finally:
        stop.set()


def _tick_forever(session: Session, stop: threading.Event, accel: float) -> None:
    # fixed 10 Hz wall loop; acceleration scales the simulated step
    interval = TICK_MS / 1000.0
    sim_step = max(1, round(TICK_MS * accel))
    while not stop.wait(interval):
        session.submit({"type": "tick", "ms": sim_step})


if __name__ == "__main__":
    sys.exit(main())
