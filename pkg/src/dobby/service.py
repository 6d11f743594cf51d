"""HTTP/WebSocket bridge exposing a session to the web console.

One WebSocket channel per client carries JSON frames (schema v1) both ways:
outbound ``snapshot`` / ``message`` / ``event`` / ``state`` / ``error`` frames,
inbound ``user_utterance`` / ``cancel`` / ``continue`` / ``idle`` commands
(plus ``tick`` and ``run_until_idle`` for scripted drivers). Frames are fanned
out to every client in emission order.
"""
from __future__ import annotations

import asyncio
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Callable

import anyio
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .chat import ChatMessage, message_to_wire
from .errors import DobbyError
from .events import AgentEvent
from .session import Session, TICK_MS

FRAME_VERSION = 1
INBOUND_TYPES = {"user_utterance", "cancel", "continue", "idle", "tick", "run_until_idle"}


def message_frame(message: ChatMessage) -> dict:
    return {
        "v": FRAME_VERSION,
        "type": "message",
        "ts": message.timestamp_ms,
        **message_to_wire(message),
    }


def event_frame(event: AgentEvent) -> dict:
    return {"v": FRAME_VERSION, "type": "event", **event.to_wire()}


def state_frame(snapshot: dict) -> dict:
    return {"v": FRAME_VERSION, "type": "state", "state": snapshot}


def error_frame(message: str) -> dict:
    return {"v": FRAME_VERSION, "type": "error", "message": message}


def snapshot_frame(session: Session) -> dict:
    return {
        "v": FRAME_VERSION,
        "type": "snapshot",
        "messages": [message_frame(m) for m in session.message_log],
        "events": session.event_wire_log,
        "state": session.state_snapshot(),
    }


class FrameHub:
    """Orders frames globally and fans them out to per-client queues."""

    def __init__(self):
        self._clients: list[Callable[[dict], None]] = []
        self._lock = threading.Lock()

    def add(self, push: Callable[[dict], None]) -> None:
        with self._lock:
            self._clients.append(push)

    def remove(self, push: Callable[[dict], None]) -> None:
        with self._lock:
            if push in self._clients:
                self._clients.remove(push)

    def broadcast(self, frame: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for push in clients:
            push(frame)

    def count(self) -> int:
        with self._lock:
            return len(self._clients)


def create_app(
    session: Session,
    realtime: bool = False,
    accel: float = 1.0,
    static_dir: str | Path | None = None,
) -> FastAPI:
    ticker_stop = threading.Event()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if realtime and accel > 0:
            thread = threading.Thread(
                target=_tick_loop, args=(session, ticker_stop, accel), daemon=True
            )
            thread.start()
        yield
        ticker_stop.set()

    app = FastAPI(title="dobby console bridge", lifespan=lifespan)
    hub = FrameHub()
    session.message_listeners.append(lambda m: hub.broadcast(message_frame(m)))
    session.event_listeners.append(lambda e: hub.broadcast(event_frame(e)))
    session.state_listeners.append(lambda s: hub.broadcast(state_frame(s)))

    @app.get("/status")
    def status() -> dict:
        return {
            "mode": session.config.mode,
            "phase": session.executor.phase,
            "clock_ms": session.sim.clock_ms,
            "clients": hub.count(),
            "frame_version": FRAME_VERSION,
        }

    @app.websocket("/ws")
    async def websocket_channel(websocket: WebSocket):
        await websocket.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue = asyncio.Queue()

        def push(frame: dict) -> None:
            loop.call_soon_threadsafe(outbox.put_nowait, frame)

        def attach() -> dict:
            # snapshot and subscription must be atomic w.r.t. session commands
            with session.locked():
                frame = snapshot_frame(session)
                hub.add(push)
                return frame

        snapshot = await anyio.to_thread.run_sync(attach)
        await websocket.send_json(snapshot)

        async def sender():
            while True:
                frame = await outbox.get()
                await websocket.send_json(frame)

        sender_task = asyncio.create_task(sender())
        try:
            while True:
                try:
                    data = await websocket.receive_json()
                except WebSocketDisconnect:
                    raise
                except ValueError:
                    await websocket.send_json(error_frame("frame is not valid JSON"))
                    continue
                if not isinstance(data, dict) or data.get("type") not in INBOUND_TYPES:
                    await websocket.send_json(
                        error_frame(f"unknown frame type: {data.get('type') if isinstance(data, dict) else data!r}")
                    )
                    continue
                try:
                    await anyio.to_thread.run_sync(session.submit, data)
                except (DobbyError, ValueError) as exc:
                    await websocket.send_json(error_frame(str(exc)))
        except WebSocketDisconnect:
            pass
        finally:
            hub.remove(push)
            sender_task.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")
    return app


def _tick_loop(session: Session, stop: threading.Event, accel: float) -> None:
    # fixed 10 Hz wall loop; acceleration scales the simulated step, and the
    # session splits big steps back into 100 ms simulation ticks
    interval = TICK_MS / 1000.0
    sim_step = max(1, round(TICK_MS * accel))
    while not stop.wait(interval):
        session.submit({"type": "tick", "ms": sim_step})


def default_console_dir() -> Path | None:
    """The built console assets, when running from a source checkout."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "public"
    return candidate if candidate.is_dir() else None


def serve(session: Session, port: int, accel: float = 1.0) -> None:
    """Run the bridge under uvicorn; serves the console app if it is built."""
    import uvicorn

    app = create_app(session, realtime=True, accel=accel, static_dir=default_console_dir())
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
