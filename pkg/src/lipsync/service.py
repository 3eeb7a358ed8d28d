"""HTTP + WebSocket service around SessionCore.

Per connection: one SessionCore (driven in a worker thread so the event
loop stays responsive), one bounded outgoing queue drained by a sender
task, and at most one PlaybackTask pacing baked Viseme frames against a
monotonic clock. Overflowing the outgoing queue means the client is not
draining: the session is closed with Error{slow_consumer} instead of
buffering without bound.

HTTP surface: GET /profiles, GET /audio/{session_id}, /schemas/*, and
the viewer (a directory given by settings, else a built-in page).
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, WebSocket
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .protocol import (
    OUT_QUEUE_LIMIT,
    ProfileStore,
    SeekPlayback,
    Send,
    SessionCore,
    StartPlayback,
)
from .track import VisemeTrack

_PACKAGE_DIR = Path(__file__).parent


@dataclass
class ServiceSettings:
    profile_dir: str | None = None
    viewer_dir: str | None = None
    max_sessions: int = 32
    out_queue_limit: int = OUT_QUEUE_LIMIT
    # test knob: artificial delay per outgoing message, to simulate a
    # client that cannot drain (exercises the slow_consumer path)
    sender_delay: float = 0.0

    @classmethod
    def from_env(cls) -> "ServiceSettings":
        return cls(
            profile_dir=os.environ.get("LIPSYNC_PROFILE_DIR"),
            viewer_dir=os.environ.get("LIPSYNC_VIEWER_DIR"),
            max_sessions=int(os.environ.get("LIPSYNC_MAX_SESSIONS", "32")),
        )


class PlaybackTask:
    """Paces one baked track: frame k goes out at origin + k*frame_interval."""

    def __init__(self, track: VisemeTrack, core: SessionCore, enqueue, abort):
        self._track = track
        self._core = core
        self._enqueue = enqueue  # callable(dict) -> bool, False on overflow
        self._abort = abort  # async callable, closes the session
        self._wake = asyncio.Event()
        self._seek_to: float | None = None
        self._next = 0
        self.task = asyncio.create_task(self._run())

    def seek(self, t: float) -> bool:
        """Request a forward jump; False if it would rewind past sent frames."""
        target = self._index_for(t)
        if target < self._next:
            return False
        self._seek_to = t
        self._wake.set()
        return True

    def _index_for(self, t: float) -> int:
        return math.ceil(t / self._track.frame_interval - 1e-9)

    async def _run(self):
        loop = asyncio.get_running_loop()
        frames = self._track.frames
        origin = loop.time()
        while self._next < len(frames):
            if self._seek_to is not None:
                t = self._seek_to
                self._seek_to = None
                self._wake.clear()
                self._next = self._index_for(t)
                origin = loop.time() - t
                continue
            delay = origin + frames[self._next].timestamp - loop.time()
            if delay > 0:
                with contextlib.suppress(asyncio.TimeoutError):
                    await asyncio.wait_for(self._wake.wait(), delay)
                continue  # re-check: the wait may have ended in a seek
            frame = frames[self._next]
            ok = self._enqueue({"type": "Viseme", "t": frame.timestamp,
                                "weights": frame.weights})
            if not ok:
                await self._abort()
                return
            self._next += 1
        for effect in self._core.finish_playback():
            if isinstance(effect, Send) and not self._enqueue(effect.message):
                await self._abort()
                return


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    app = FastAPI()
    app.state.settings = settings
    app.state.store = ProfileStore(settings.profile_dir)
    app.state.sessions = {}

    @app.get("/profiles")
    def list_profiles():
        return JSONResponse(app.state.store.ids())

    @app.get("/audio/{session_id}")
    def session_audio(session_id: str):
        session = app.state.sessions.get(session_id)
        if session is None or session.uploaded_wav is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        return Response(content=session.uploaded_wav, media_type="audio/wav")

    app.mount("/schemas", StaticFiles(directory=_PACKAGE_DIR / "schemas"), name="schemas")

    @app.websocket("/ws")
    async def ws_session(ws: WebSocket):
        await ws.accept()
        if len(app.state.sessions) >= settings.max_sessions:
            with contextlib.suppress(Exception):
                await ws.send_text(json.dumps({
                    "type": "Error", "code": "session_limit",
                    "message": f"at most {settings.max_sessions} concurrent sessions",
                }))
            await ws.close(code=1013)
            return

        core = SessionCore(app.state.store)
        app.state.sessions[core.session_id] = core
        queue: asyncio.Queue = asyncio.Queue(maxsize=settings.out_queue_limit)
        playback: PlaybackTask | None = None
        aborted = False

        def enqueue(message: dict) -> bool:
            try:
                queue.put_nowait(json.dumps(message))
                return True
            except asyncio.QueueFull:
                return False

        async def sender():
            # a vanished client makes send_text raise; just stop draining
            with contextlib.suppress(Exception):
                while True:
                    item = await queue.get()
                    if settings.sender_delay:
                        await asyncio.sleep(settings.sender_delay)
                    await ws.send_text(item)

        sender_task = asyncio.create_task(sender())

        async def abort_slow():
            nonlocal aborted
            if aborted:
                return
            aborted = True
            sender_task.cancel()
            with contextlib.suppress(Exception):
                await asyncio.wait_for(ws.send_text(json.dumps({
                    "type": "Error", "code": "slow_consumer",
                    "message": "outgoing queue overflowed; closing",
                })), 1.0)
            with contextlib.suppress(Exception):
                await ws.close(code=1013)

        async def apply(effects) -> bool:
            nonlocal playback
            for effect in effects:
                if isinstance(effect, Send):
                    if not enqueue(effect.message):
                        await abort_slow()
                        return False
                elif isinstance(effect, StartPlayback):
                    playback = PlaybackTask(effect.track, core, enqueue, abort_slow)
                elif isinstance(effect, SeekPlayback):
                    if playback is None or not playback.seek(effect.t):
                        if not enqueue({"type": "Error", "code": "bad_seek",
                                        "message": "cannot seek before frames already sent"}):
                            await abort_slow()
                            return False
            return True

        try:
            while not aborted:
                message = await ws.receive()
                if message["type"] == "websocket.disconnect":
                    break
                if message.get("text") is not None:
                    effects = await asyncio.to_thread(core.on_text, message["text"])
                else:
                    effects = await asyncio.to_thread(core.on_binary, message.get("bytes") or b"")
                if not await apply(effects):
                    break
        finally:
            if playback is not None:
                playback.task.cancel()
            sender_task.cancel()
            app.state.sessions.pop(core.session_id, None)

    index = Path(settings.viewer_dir) if settings.viewer_dir else None
    if index is not None and index.is_dir():
        app.mount("/", StaticFiles(directory=index, html=True), name="viewer")
    else:
        @app.get("/")
        def viewer_page():
            return FileResponse(_PACKAGE_DIR / "static" / "index.html",
                                media_type="text/html")

    return app
