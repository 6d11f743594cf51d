"""CLI entry points and the console service bridge."""
import json
from pathlib import Path

import pytest
from starlette.testclient import TestClient

from dobby.cli import EXIT_CONFIG_ERROR, _build_backend, _build_provider, _load_config, build_parser, main
from dobby.service import create_app
from dobby.session import Session
from dobby.transcript import TranscriptWriter, open_transcript

REQUIRED_LINES = [
    'FUNCTION CALL: ExecutePlan({"action_sequence": ["Drive to Apple", "Pickup Apple", "Return to user"]})',
    "SYSTEM: Executing plan: 1. Drive to Apple 2. Pickup Apple 3. Return to User",
    "SYSTEM: Starting action: Drive to Apple",
]


def replay_args(fixtures_dir, tmp_path, scenario="fig4.json", extra=()):
    return [
        "--destinations", str(fixtures_dir / "lab_destinations.txt"),
        "--topics", str(fixtures_dir / "lab_topics.txt"),
        "--backend", f"scripted:{fixtures_dir / scenario}",
        "--replay",
        "--accel", "0",
        "--transcript", str(tmp_path / "session.txt"),
        *extra,
    ]


def test_replay_prints_required_lines_in_order(fixtures_dir, tmp_path, capsys):
    assert main(replay_args(fixtures_dir, tmp_path)) == 0
    out = capsys.readouterr().out
    positions = [out.index(line) for line in REQUIRED_LINES]
    assert positions == sorted(positions)


def test_replay_writes_transcript_and_metrics(fixtures_dir, tmp_path):
    main(replay_args(fixtures_dir, tmp_path))
    transcript = (tmp_path / "session.txt").read_text()
    for line in REQUIRED_LINES:
        assert line in transcript
    sidecar = (tmp_path / "session.txt.jsonl").read_text().splitlines()
    records = [json.loads(line) for line in sidecar]
    assert records[0]["type"] == "session_start"
    assert any(r["type"] == "event" and r["kind"] == "plan_completed" for r in records)
    metrics = json.loads((tmp_path / "session.metrics.json").read_text())
    assert metrics["destinations_visited"] == 1
    assert metrics["interaction_time_s"] == pytest.approx(7.5)


def test_missing_destinations_exits_2(fixtures_dir, tmp_path, capsys):
    code = main(
        [
            "--destinations", str(tmp_path / "nowhere.txt"),
            "--backend", f"scripted:{fixtures_dir / 'fig4.json'}",
        ]
    )
    assert code == EXIT_CONFIG_ERROR
    assert "nowhere.txt" in capsys.readouterr().err


def test_missing_scenario_exits_2(fixtures_dir, tmp_path, capsys):
    code = main(
        [
            "--destinations", str(fixtures_dir / "lab_destinations.txt"),
            "--backend", str(f"scripted:{tmp_path / 'ghost.json'}"),
        ]
    )
    assert code == EXIT_CONFIG_ERROR
    assert "ghost.json" in capsys.readouterr().err


def test_malformed_destinations_exits_2(fixtures_dir, tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("only|four|fields|here\n")
    code = main(["--destinations", str(bad), "--backend", f"scripted:{fixtures_dir / 'fig4.json'}"])
    assert code == EXIT_CONFIG_ERROR
    assert "line 1" in capsys.readouterr().err


def test_baseline_replay(fixtures_dir, tmp_path, capsys):
    code = main(
        replay_args(fixtures_dir, tmp_path, scenario="baseline_demo.json", extra=["--mode", "baseline"])
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "USER: Show me the drone cage." in out
    assert "DOBBY: A netted enclosure where quadrotors run autonomous flight tests." in out
    metrics = json.loads((tmp_path / "session.metrics.json").read_text())
    assert metrics["destinations_visited"] == 2


def make_session(fixtures_dir, scenario="fig4.json") -> tuple[Session, list[dict]]:
    args = build_parser().parse_args(
        [
            "--destinations", str(fixtures_dir / "lab_destinations.txt"),
            "--topics", str(fixtures_dir / "lab_topics.txt"),
            "--backend", f"scripted:{fixtures_dir / scenario}",
        ]
    )
    config, inputs = _load_config(args)
    session = Session(config, _build_backend(args), _build_provider(args))
    return session, inputs


def frames_until_state(ws) -> list[dict]:
    """Every accepted command ends with exactly one state frame."""
    frames = []
    while True:
        frame = ws.receive_json()
        frames.append(frame)
        if frame["type"] == "state":
            return frames


def test_service_matches_repl_event_sequence(fixtures_dir):
    session, inputs = make_session(fixtures_dir)
    client = TestClient(create_app(session))
    with client.websocket_connect("/ws") as ws:
        snapshot = ws.receive_json()
        assert snapshot["type"] == "snapshot"
        assert snapshot["state"]["phase"] == "idle"
        frames = []
        for entry in inputs:
            ws.send_json(entry)
            frames.extend(frames_until_state(ws))
    event_kinds = [f["kind"] for f in frames if f["type"] == "event"]
    assert event_kinds[:4] == ["robot_dialogue", "robot_dialogue", "plan_started", "action_started"]
    # the plan completes, then the agent delivers the closing cue
    assert event_kinds[-2:] == ["plan_completed", "robot_dialogue"]


def test_service_cancel_broadcasts_plan_cancelled(fixtures_dir):
    session, inputs = make_session(fixtures_dir)
    client = TestClient(create_app(session))
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        ws.send_json(inputs[0])
        frames_until_state(ws)
        ws.send_json(inputs[1])  # starts the plan
        frames_until_state(ws)
        ws.send_json({"type": "tick", "ms": 500})
        frames_until_state(ws)
        ws.send_json({"type": "cancel"})
        frames = frames_until_state(ws)
    assert any(f["type"] == "event" and f["kind"] == "plan_cancelled" for f in frames)
    assert session.executor.phase == "idle"


def test_service_rejects_malformed_frames(fixtures_dir):
    session, _ = make_session(fixtures_dir)
    client = TestClient(create_app(session))
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        ws.send_json({"type": "warp_drive"})
        error = ws.receive_json()
        assert error["type"] == "error"
        ws.send_json({"type": "user_utterance"})  # missing text
        error = ws.receive_json()
        assert error["type"] == "error"
        # session still works afterwards
        ws.send_json({"type": "tick", "ms": 100})
        frames = frames_until_state(ws)
        assert frames[-1]["state"]["clock_ms"] == 100


def test_two_clients_receive_identical_frames(fixtures_dir):
    session, inputs = make_session(fixtures_dir)
    client = TestClient(create_app(session))
    with client.websocket_connect("/ws") as ws1, client.websocket_connect("/ws") as ws2:
        snap1, snap2 = ws1.receive_json(), ws2.receive_json()
        assert snap1 == snap2
        ws1.send_json(inputs[0])
        frames1 = frames_until_state(ws1)
        frames2 = frames_until_state(ws2)
        assert frames1 == frames2


def test_status_endpoint(fixtures_dir):
    session, _ = make_session(fixtures_dir)
    client = TestClient(create_app(session))
    status = client.get("/status").json()
    assert status["mode"] == "conversational"
    assert status["phase"] == "idle"
    assert status["frame_version"] == 1


def test_transport_equivalence_byte_identical_transcripts(fixtures_dir, tmp_path):
    """The same scripted inputs through direct submission and through the
    websocket service yield byte-identical transcripts."""
    repl_session, inputs = make_session(fixtures_dir)
    repl_writer, t1, j1 = open_transcript(tmp_path / "repl.txt")
    repl_session.message_listeners.append(repl_writer.on_message)
    for entry in inputs:
        repl_session.submit(entry)
    t1.close(), j1.close()

    ws_session, inputs = make_session(fixtures_dir)
    ws_writer, t2, j2 = open_transcript(tmp_path / "service.txt")
    ws_session.message_listeners.append(ws_writer.on_message)
    client = TestClient(create_app(ws_session))
    with client.websocket_connect("/ws") as ws:
        ws.receive_json()
        for entry in inputs:
            ws.send_json(entry)
            frames_until_state(ws)
    t2.close(), j2.close()

    repl_bytes = (tmp_path / "repl.txt").read_bytes()
    service_bytes = (tmp_path / "service.txt").read_bytes()
    assert repl_bytes == service_bytes
    assert len(repl_bytes) > 0
    assert repl_session.metrics() == ws_session.metrics()


def test_interactive_repl_processes_commands(fixtures_dir, tmp_path, capsys, monkeypatch):
    lines = iter(["I'm really hungry right now.", "/state", "/quit"])
    monkeypatch.setattr("builtins.input", lambda: next(lines))
    code = main(
        [
            "--destinations", str(fixtures_dir / "lab_destinations.txt"),
            "--backend", f"scripted:{fixtures_dir / 'fig4.json'}",
            "--accel", "0",  # no ticker thread
            "--transcript", str(tmp_path / "interactive.txt"),
        ]
    )
    assert code == 0
    captured = capsys.readouterr()
    assert "DOBBY: A hunger emergency!" in captured.out
    assert "USER:" not in captured.out  # interactive mode does not echo the user
    assert '"phase": "idle"' in captured.err  # /state dump
    assert "USER: I'm really hungry right now." in (tmp_path / "interactive.txt").read_text()
