"""Byte-stream transports shared by the client and the ingestion service."""

from __future__ import annotations

import socket
import threading
from collections import deque
from typing import Protocol


class TransportError(ConnectionError):
    pass


class Transport(Protocol):
    def send(self, data: bytes) -> None: ...

    def recv(self, max_bytes: int = 4096) -> bytes:
        """Block for data; ``b""`` means the peer closed."""
        ...

    def close(self) -> None: ...


class TcpTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    @classmethod
    def connect(cls, address: tuple[str, int], timeout: float | None = 10.0) -> TcpTransport:
        try:
            sock = socket.create_connection(address, timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {address[0]}:{address[1]}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return cls(sock)

    def send(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def recv(self, max_bytes: int = 4096) -> bytes:
        try:
            return self.sock.recv(max_bytes)
        except OSError as exc:
            raise TransportError(f"recv failed: {exc}") from exc

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class _Channel:
    """One direction of an in-memory pipe."""

    def __init__(self) -> None:
        self.chunks: deque[bytes] = deque()
        self.closed = False
        self.cond = threading.Condition()

    def put(self, data: bytes) -> None:
        with self.cond:
            if self.closed:
                raise TransportError("pipe closed")
            self.chunks.append(bytes(data))
            self.cond.notify_all()

    def get(self, max_bytes: int, timeout: float | None) -> bytes:
        with self.cond:
            if not self.cond.wait_for(lambda: self.chunks or self.closed, timeout):
                raise TransportError("pipe read timed out")
            if not self.chunks:
                return b""
            chunk = self.chunks.popleft()
            if len(chunk) > max_bytes:
                self.chunks.appendleft(chunk[max_bytes:])
                chunk = chunk[:max_bytes]
            return chunk

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify_all()


class PipeTransport:
    """In-process duplex pipe end; create connected ends with :func:`pipe_pair`."""

    def __init__(self, rx: _Channel, tx: _Channel, timeout: float | None = 10.0):
        self._rx = rx
        self._tx = tx
        self.timeout = timeout

    def send(self, data: bytes) -> None:
        self._tx.put(data)

    def recv(self, max_bytes: int = 4096) -> bytes:
        return self._rx.get(max_bytes, self.timeout)

    def close(self) -> None:
        self._tx.close()
        self._rx.close()


def pipe_pair(timeout: float | None = 10.0) -> tuple[PipeTransport, PipeTransport]:
    a_to_b, b_to_a = _Channel(), _Channel()
    return PipeTransport(b_to_a, a_to_b, timeout), PipeTransport(a_to_b, b_to_a, timeout)


def parse_address(text: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    """``"host:port"`` or ``":port"`` to a socket address tuple."""
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected host:port, got {text!r}")
    return host.strip("[]") or default_host, int(port)
