"""Local ingestion sink: accepts MQTT-subset sessions and journals beacons."""

from __future__ import annotations

import base64
import json
import logging
import os
import socketserver
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from ..modem import BeaconEncodingError, decode_beacon
from .codec import (
    ConnAck,
    Connect,
    DecodeError,
    Disconnect,
    FrameDecoder,
    PingReq,
    PingResp,
    Publish,
    device_from_topic,
    encode_frame,
)
from .transport import TcpTransport, Transport, TransportError

log = logging.getLogger(__name__)

JOURNAL_NAME = "beacons.jsonl"
CONNACK_SERVER_UNAVAILABLE = 3


class JournalError(OSError):
    pass


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class BeaconRecord:
    received_at: float
    topic: str
    payload: bytes
    device_id: str

    def to_json(self) -> dict[str, Any]:
        return {
            "received_at": self.received_at,
            "topic": self.topic,
            "payload": base64.b64encode(self.payload).decode("ascii"),
            "device_id": self.device_id,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> BeaconRecord:
        return cls(
            received_at=float(obj["received_at"]),
            topic=str(obj["topic"]),
            payload=base64.b64decode(obj["payload"], validate=True),
            device_id=str(obj["device_id"]),
        )


def beacon_record(topic: str, payload: bytes, received_at: float) -> BeaconRecord:
    """Build a record, checking the payload's device id against the topic."""
    topic_id = device_from_topic(topic)
    if topic_id is None:
        raise ProtocolError(f"topic {topic!r} is not leak/<device_id>/beacon")
    try:
        device_id, _ = decode_beacon(payload)
    except BeaconEncodingError as exc:
        raise ProtocolError(f"bad beacon payload: {exc}") from None
    if device_id != topic_id:
        raise ProtocolError(f"payload device {device_id!r} does not match topic {topic!r}")
    return BeaconRecord(received_at, topic, payload, device_id)


class Journal:
    """Append-only JSON-lines file; appends from all sessions go through one lock."""

    def __init__(self, data_dir: str | Path, fsync: bool = False):
        self.path = Path(data_dir) / JOURNAL_NAME
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lock = threading.Lock()
        self._fsync = fsync
        self.failed = False
        self.count = 0

    def append(self, record: BeaconRecord) -> None:
        line = json.dumps(record.to_json(), separators=(",", ":")) + "\n"
        with self._lock:
            if self.failed:
                raise JournalError("journal is in a failed state")
            try:
                self._fh.write(line)
                self._fh.flush()
                if self._fsync:
                    os.fsync(self._fh.fileno())
            except (OSError, ValueError) as exc:
                self.failed = True
                raise JournalError(f"journal write failed: {exc}") from exc
            self.count += 1

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                self._fh.close()


@dataclass
class SessionResult:
    client_id: str | None = None
    accepted: int = 0
    rejected: int = 0
    error: str | None = None


def handle_session(
    transport: Transport,
    journal: Journal,
    clock: Callable[[], float] = time.time,
) -> SessionResult:
    """Serve one client connection until DISCONNECT, EOF or a protocol error."""
    result = SessionResult()
    decoder = FrameDecoder()
    connected = False
    try:
        while True:
            data = transport.recv()
            if not data:
                return result
            for frame in decoder.feed(data):
                if not connected:
                    if not isinstance(frame, Connect):
                        raise ProtocolError(f"first frame was {type(frame).__name__}, not CONNECT")
                    if journal.failed:
                        transport.send(encode_frame(ConnAck(CONNACK_SERVER_UNAVAILABLE)))
                        raise ProtocolError("journal unavailable; refusing session")
                    result.client_id = frame.client_id
                    transport.send(encode_frame(ConnAck(0)))
                    connected = True
                elif isinstance(frame, Publish):
                    try:
                        record = beacon_record(frame.topic, frame.payload, clock())
                    except ProtocolError as exc:
                        result.rejected += 1
                        log.warning("rejected publish from %s: %s", result.client_id, exc)
                        continue
                    journal.append(record)
                    result.accepted += 1
                elif isinstance(frame, PingReq):
                    transport.send(encode_frame(PingResp()))
                elif isinstance(frame, Disconnect):
                    return result
                else:
                    raise ProtocolError(f"unexpected {type(frame).__name__} from client")
    except (DecodeError, ProtocolError, JournalError, TransportError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("closing session %s: %s", result.client_id, result.error)
        return result
    finally:
        transport.close()


class _Handler(socketserver.BaseRequestHandler):
    server: IngestServer

    def handle(self) -> None:
        self.request.settimeout(self.server.session_timeout)
        result = handle_session(TcpTransport(self.request), self.server.journal, self.server.clock)
        self.server.record_session(result)


class IngestServer(socketserver.ThreadingTCPServer):
    """Threaded TCP ingestion service.

    >>> srv = IngestServer(("127.0.0.1", 0), "/tmp/journal")  # doctest: +SKIP
    >>> srv.start(); srv.address  # doctest: +SKIP
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        data_dir: str | Path,
        clock: Callable[[], float] = time.time,
        session_timeout: float | None = 300.0,
    ):
        self.journal = Journal(data_dir)
        self.clock = clock
        self.session_timeout = session_timeout
        self.sessions: list[SessionResult] = []
        self._sessions_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        try:
            super().__init__(address, _Handler)
        except OSError:
            self.journal.close()
            raise

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return host, port

    def record_session(self, result: SessionResult) -> None:
        with self._sessions_lock:
            self.sessions.append(result)

    def start(self) -> IngestServer:
        self._thread = threading.Thread(target=self.serve_forever, name="leaktwin-ingest", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()
        self.journal.close()

    def __enter__(self) -> IngestServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
