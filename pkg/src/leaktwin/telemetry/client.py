"""Blocking single-connection publisher for beacon payloads."""

from __future__ import annotations

from ..modem import validate_device_id
from .codec import (
    ConnAck,
    Connect,
    Disconnect,
    FrameDecoder,
    PingReq,
    PingResp,
    Publish,
    beacon_topic,
    encode_frame,
)
from .transport import TcpTransport, Transport, TransportError, parse_address


class ConnectionRefused(ConnectionError):
    def __init__(self, return_code: int):
        super().__init__(f"broker refused connection (return code {return_code})")
        self.return_code = return_code


class MqttClient:
    def __init__(self, transport: Transport, client_id: str, keep_alive: int = 60):
        self.transport = transport
        self.client_id = client_id
        self.keep_alive = keep_alive
        self.connected = False
        self._decoder = FrameDecoder()
        self._pending: list = []

    @classmethod
    def tcp(cls, address: str | tuple[str, int], client_id: str, **kw) -> MqttClient:
        if isinstance(address, str):
            address = parse_address(address)
        return cls(TcpTransport.connect(address), client_id, **kw)

    def _next_frame(self):
        while not self._pending:
            data = self.transport.recv()
            if not data:
                raise TransportError("connection closed by peer")
            self._pending.extend(self._decoder.feed(data))
        return self._pending.pop(0)

    def connect(self) -> None:
        self.transport.send(encode_frame(Connect(self.client_id, self.keep_alive)))
        frame = self._next_frame()
        if not isinstance(frame, ConnAck):
            raise TransportError(f"expected CONNACK, got {type(frame).__name__}")
        if frame.return_code != 0:
            self.transport.close()
            raise ConnectionRefused(frame.return_code)
        self.connected = True

    def publish(self, topic: str, payload: bytes) -> None:
        if not self.connected:
            raise TransportError("not connected")
        self.transport.send(encode_frame(Publish(topic, payload)))

    def publish_beacon(self, device_id: str, payload: bytes) -> None:
        """Fire-and-forget QoS 0 publish on ``leak/<device_id>/beacon``."""
        validate_device_id(device_id)
        self.publish(beacon_topic(device_id), payload)

    def ping(self) -> None:
        self.transport.send(encode_frame(PingReq()))
        frame = self._next_frame()
        if not isinstance(frame, PingResp):
            raise TransportError(f"expected PINGRESP, got {type(frame).__name__}")

    def disconnect(self) -> None:
        if self.connected:
            try:
                self.transport.send(encode_frame(Disconnect()))
            finally:
                self.connected = False
                self.transport.close()

    def __enter__(self) -> MqttClient:
        if not self.connected:
            self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.disconnect()
