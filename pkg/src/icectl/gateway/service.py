"""Live control service: a WebSocket wrapper around the control loop.

One asyncio task owns the loop and ticks it at a fixed rate, broadcasting a
state snapshot every tick and a heartbeat frame every second. Incoming
messages are applied on the same event loop, so actuation stays single-writer.
The first connection receives the actuation token; later connections are
read-only viewers (they may still send ``query_state``).
"""

from __future__ import annotations

import asyncio
import contextlib
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from icectl.gateway.control import PROTOCOL_VERSION, ControlLoop

_ACTUATION_KINDS = {"jog", "set_config", "save_view", "recover", "abort", "set_compensation"}


def create_app(
    loop: ControlLoop,
    tick_hz: float = 50.0,
    heartbeat_s: float = 1.0,
    session_log: str = None,
) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app):
        app.state.ticker = asyncio.create_task(_ticker())
        yield
        app.state.ticker.cancel()
        if session_log:
            loop.writer.write(session_log)

    app = FastAPI(title="icectl gateway", lifespan=lifespan)
    app.state.loop = loop
    app.state.connections = []
    app.state.controller = None
    heartbeat_every = max(1, int(round(tick_hz * heartbeat_s)))

    async def _broadcast(frame: dict):
        text = json.dumps(frame, sort_keys=True)
        dead = []
        for ws in app.state.connections:
            try:
                await ws.send_text(text)
            except Exception:
                dead.append(ws)
        for ws in dead:
            _drop(ws)

    def _drop(ws):
        if ws in app.state.connections:
            app.state.connections.remove(ws)
        if app.state.controller is ws:
            app.state.controller = None

    async def _ticker():
        period = 1.0 / tick_hz
        while True:
            snapshot = loop.tick()
            await _broadcast(snapshot)
            if loop.tick_count % heartbeat_every == 0:
                await _broadcast(
                    {
                        "v": PROTOCOL_VERSION,
                        "kind": "heartbeat",
                        "tick": loop.tick_count,
                        "uptime_s": loop.tick_count / tick_hz,
                    }
                )
            await asyncio.sleep(period)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        app.state.connections.append(ws)
        role = "viewer"
        if app.state.controller is None:
            app.state.controller = ws
            role = "controller"
        await ws.send_text(
            json.dumps(
                {
                    "v": PROTOCOL_VERSION,
                    "kind": "hello",
                    "role": role,
                    "session_id": loop.writer.session_id,
                },
                sort_keys=True,
            )
        )
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps(
                            {"v": PROTOCOL_VERSION, "kind": "error", "message": "malformed JSON"},
                            sort_keys=True,
                        )
                    )
                    continue
                if (
                    isinstance(msg, dict)
                    and msg.get("kind") in _ACTUATION_KINDS
                    and app.state.controller is not ws
                ):
                    await ws.send_text(
                        json.dumps(
                            {
                                "v": PROTOCOL_VERSION,
                                "kind": "error",
                                "message": "read-only connection: actuation token is held elsewhere",
                            },
                            sort_keys=True,
                        )
                    )
                    continue
                for reply in loop.handle_message(msg):
                    await ws.send_text(json.dumps(reply, sort_keys=True))
        except WebSocketDisconnect:
            _drop(ws)

    return app
