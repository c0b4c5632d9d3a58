"""WebSocket transport for the JSON session protocol.

One :class:`~smootharap.session.SessionEngine` per connection; connections
are fully isolated.  Messages from a single client are processed strictly in
arrival order (the per-connection coroutine awaits each request's replies
before reading the next), which is what the protocol's monotonic request ids
and ordered Frame counters rely on.  Sends go through the websockets write
queue, so emitting a Frame never blocks the solver mid-iteration.
"""

from __future__ import annotations

import asyncio
import json
import logging
import signal

from websockets.asyncio.server import serve as ws_serve

from .session import SessionEngine

log = logging.getLogger(__name__)

__all__ = ["session_handler", "serve_forever", "run_server"]


async def session_handler(connection) -> None:
    """Drive one client connection until it closes or sends Shutdown."""
    engine = SessionEngine()
    remote = getattr(connection, "remote_address", None)
    log.info("session open: %s", remote)
    async for raw in connection:
        try:
            message = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            message = None  # the engine replies with a bad-envelope Error
        for reply in engine.handle(message):
            await connection.send(json.dumps(reply))
        if engine.closed:
            await connection.close()
            break
    log.info("session closed: %s (%d frames)", remote, engine.frame_counter)


async def serve_forever(host: str, port: int, *, ready: asyncio.Event | None = None) -> None:
    """Serve sessions until cancelled; sets ``ready`` once listening."""
    async with ws_serve(session_handler, host, port, max_size=256 * 1024 * 1024):
        log.info("listening on ws://%s:%d", host, port)
        if ready is not None:
            ready.set()
        await asyncio.Future()  # run until cancelled


def run_server(host: str = "127.0.0.1", port: int = 8765) -> None:
    """Blocking entry point used by the CLI; stops on SIGINT/SIGTERM."""

    async def main() -> None:
        loop = asyncio.get_running_loop()
        stop = asyncio.Event()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, stop.set)
            except NotImplementedError:  # non-unix platforms
                pass
        async with ws_serve(session_handler, host, port, max_size=256 * 1024 * 1024):
            log.info("listening on ws://%s:%d", host, port)
            await stop.wait()

    asyncio.run(main())
