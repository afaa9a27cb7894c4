"""Newline-delimited JSON wire protocol for the skill host.

Request frames::

    {"op": "open"}
    {"op": "say", "session": "s000001", "text": "open skill x"}
    {"op": "enable" | "disable", "session": ..., "skill_id": ...}
    {"op": "disable_all" | "close", "session": ...}

Every response is one line with ``ok``; failures carry ``error_code``
(``bad_request``, ``unknown_session``, ``unknown_skill``) and the connection
stays open.
"""

from __future__ import annotations

import asyncio
import json
import logging
import socket
import threading
from typing import Any

from .host import ProtocolError, SkillHost
from .model import HostResponse

logger = logging.getLogger(__name__)

MAX_FRAME = 1 << 20


class HostUnavailable(ConnectionError):
    pass


class RemoteError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


def dispatch(host: SkillHost, frame: Any) -> dict[str, Any]:
    """Apply one decoded request frame to ``host`` and build the reply frame."""
    if not isinstance(frame, dict) or not isinstance(frame.get("op"), str):
        return {"ok": False, "error_code": "bad_request", "text": "frame must be an object with 'op'"}
    op = frame["op"]
    session = frame.get("session")
    try:
        if op == "open":
            return {"ok": True, "session": host.open_session()}
        if not isinstance(session, str):
            raise ProtocolError("bad_request", "missing session")
        if op == "say":
            text = frame.get("text")
            if not isinstance(text, str) or not text.strip():
                raise ProtocolError("bad_request", "say needs non-empty text")
            return host.handle_request(session, text).to_frame()
        if op in ("enable", "disable"):
            skill_id = frame.get("skill_id")
            if not isinstance(skill_id, str):
                raise ProtocolError("bad_request", f"{op} needs skill_id")
            enabled = host.set_skill_enabled(session, skill_id, op == "enable")
            return {"ok": True, "enabled_skill_ids": list(enabled)}
        if op == "disable_all":
            return {"ok": True, "enabled_skill_ids": list(host.disable_all(session))}
        if op == "close":
            host.close_session(session)
            return {"ok": True}
        raise ProtocolError("bad_request", f"unknown op {op!r}")
    except ProtocolError as exc:
        return {"ok": False, "error_code": exc.code, "text": str(exc)}


def encode(frame: dict[str, Any]) -> bytes:
    return (json.dumps(frame, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


class HostServer:
    """Serves a :class:`SkillHost` on a TCP socket from a background event loop."""

    def __init__(self, host: SkillHost, address: tuple[str, int] = ("127.0.0.1", 0)):
        self.host = host
        self._requested = address
        self.address: tuple[str, int] | None = None
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, name="skillhost", daemon=True)
        self._server: asyncio.AbstractServer | None = None
        self._conns: set[asyncio.Task] = set()
        self._busy: set[asyncio.Task] = set()

    def start(self) -> "HostServer":
        self._thread.start()
        fut = asyncio.run_coroutine_threadsafe(self._start(), self._loop)
        try:
            fut.result()
        except Exception:
            self._loop.call_soon_threadsafe(self._loop.stop)
            self._thread.join()
            raise
        return self

    async def _start(self) -> None:
        self._server = await asyncio.start_server(
            self._on_connect, *self._requested, limit=MAX_FRAME)
        self.address = self._server.sockets[0].getsockname()[:2]
        logger.info("skill host listening on %s:%d", *self.address)

    async def _on_connect(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        task = asyncio.current_task()
        self._conns.add(task)
        try:
            while True:
                try:
                    line = await reader.readline()
                except (asyncio.LimitOverrunError, ValueError):
                    writer.write(encode({"ok": False, "error_code": "bad_request", "text": "frame too long"}))
                    break
                if not line:
                    break
                self._busy.add(task)
                try:
                    try:
                        frame = json.loads(line.decode("utf-8"))
                    except (UnicodeDecodeError, json.JSONDecodeError):
                        reply = {"ok": False, "error_code": "bad_request", "text": "malformed frame"}
                    else:
                        reply = dispatch(self.host, frame)
                    writer.write(encode(reply))
                    await writer.drain()
                finally:
                    self._busy.discard(task)
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._conns.discard(task)
            writer.close()

    async def _shutdown(self, grace: float) -> None:
        self._server.close()
        await self._server.wait_closed()
        deadline = asyncio.get_running_loop().time() + grace
        while self._busy and asyncio.get_running_loop().time() < deadline:
            await asyncio.sleep(0.005)
        for task in list(self._conns):
            task.cancel()
        if self._conns:
            await asyncio.gather(*self._conns, return_exceptions=True)

    def shutdown(self, grace: float = 2.0) -> None:
        """Stop accepting, let in-flight requests finish, then drop connections."""
        if not self._thread.is_alive():
            return
        asyncio.run_coroutine_threadsafe(self._shutdown(grace), self._loop).result()
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join()
        self._loop.close()

    def __enter__(self) -> "HostServer":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def serve(host: SkillHost, address: tuple[str, int] = ("127.0.0.1", 0)) -> HostServer:
    """Start serving ``host``; bind failures raise ``OSError``."""
    return HostServer(host, address).start()


class HostClient:
    """Blocking client for one connection. Not thread-safe."""

    def __init__(self, address: tuple[str, int], timeout: float = 30.0):
        self.address = tuple(address)
        try:
            self._sock = socket.create_connection(self.address, timeout=timeout)
        except OSError as exc:
            raise HostUnavailable(f"cannot reach skill host at {self.address}: {exc}") from exc
        self._file = self._sock.makefile("rwb")

    def request(self, frame: dict[str, Any]) -> dict[str, Any]:
        try:
            self._file.write(encode(frame))
            self._file.flush()
            line = self._file.readline()
        except OSError as exc:
            raise HostUnavailable(str(exc)) from exc
        if not line:
            raise HostUnavailable("connection closed by skill host")
        return json.loads(line.decode("utf-8"))

    def call(self, frame: dict[str, Any]) -> dict[str, Any]:
        reply = self.request(frame)
        if not reply.get("ok"):
            raise RemoteError(reply.get("error_code", "unknown"), reply.get("text", ""))
        return reply

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


class RemoteSession:
    def __init__(self, client: HostClient):
        self.client = client
        self.session_id = client.call({"op": "open"})["session"]

    def say(self, text: str) -> HostResponse:
        return HostResponse.from_frame(
            self.client.call({"op": "say", "session": self.session_id, "text": text}))

    def enable(self, skill_id: str) -> tuple[str, ...]:
        reply = self.client.call({"op": "enable", "session": self.session_id, "skill_id": skill_id})
        return tuple(reply["enabled_skill_ids"])

    def disable(self, skill_id: str) -> tuple[str, ...]:
        reply = self.client.call({"op": "disable", "session": self.session_id, "skill_id": skill_id})
        return tuple(reply["enabled_skill_ids"])

    def disable_all(self) -> tuple[str, ...]:
        reply = self.client.call({"op": "disable_all", "session": self.session_id})
        return tuple(reply["enabled_skill_ids"])

    def close(self) -> None:
        self.client.call({"op": "close", "session": self.session_id})

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class RemoteLink:
    """Opens sessions on a networked host, one connection per calling thread."""

    def __init__(self, address: tuple[str, int]):
        self.address = tuple(address)
        self._local = threading.local()
        self._clients: list[HostClient] = []
        self._lock = threading.Lock()

    def _client(self) -> HostClient:
        client = getattr(self._local, "client", None)
        if client is None:
            client = HostClient(self.address)
            self._local.client = client
            with self._lock:
                self._clients.append(client)
        return client

    def open(self) -> RemoteSession:
        return RemoteSession(self._client())

    def close(self) -> None:
        with self._lock:
            for c in self._clients:
                c.close()
            self._clients.clear()


def parse_address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)
