"""MQTT 3.1.1 subset: CONNECT, CONNACK, PUBLISH (QoS 0), PINGREQ/RESP, DISCONNECT."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Union

MAX_VARINT = 268_435_455
PROTOCOL_NAME = b"MQTT"
PROTOCOL_LEVEL = 4
CLEAN_SESSION = 0x02

CONNECT = 1
CONNACK = 2
PUBLISH = 3
PINGREQ = 12
PINGRESP = 13
DISCONNECT = 14

_U16 = struct.Struct("!H")


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class Truncated(DecodeError):
    """Not enough bytes yet; more input may complete the frame."""


class MalformedFrame(DecodeError):
    pass


class OverlongVarint(MalformedFrame):
    pass


class UnknownPacketType(MalformedFrame):
    pass


class NonzeroQos(MalformedFrame):
    pass


class BadFlags(MalformedFrame):
    pass


class LengthMismatch(MalformedFrame):
    pass


class BadPayload(MalformedFrame):
    pass


@dataclass(frozen=True)
class Connect:
    client_id: str
    keep_alive: int = 60


@dataclass(frozen=True)
class ConnAck:
    return_code: int = 0


@dataclass(frozen=True)
class Publish:
    topic: str
    payload: bytes


@dataclass(frozen=True)
class PingReq:
    pass


@dataclass(frozen=True)
class PingResp:
    pass


@dataclass(frozen=True)
class Disconnect:
    pass


Frame = Union[Connect, ConnAck, Publish, PingReq, PingResp, Disconnect]


def encode_varint(value: int) -> bytes:
    if not 0 <= value <= MAX_VARINT:
        raise EncodeError(f"varint out of range: {value}")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_varint(buf: bytes, offset: int = 0) -> tuple[int, int]:
    """Return ``(value, consumed)`` for the varint at ``buf[offset:]``."""
    value = 0
    for i in range(4):
        if offset + i >= len(buf):
            raise Truncated("varint needs a continuation byte")
        byte = buf[offset + i]
        value |= (byte & 0x7F) << (7 * i)
        if not byte & 0x80:
            return value, i + 1
    raise OverlongVarint("varint longer than 4 bytes")


def _encode_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise EncodeError("string longer than 65535 bytes")
    return _U16.pack(len(raw)) + raw


def _decode_str(body: bytes, pos: int) -> tuple[str, int]:
    if pos + 2 > len(body):
        raise LengthMismatch("string length prefix past end of packet")
    (n,) = _U16.unpack_from(body, pos)
    end = pos + 2 + n
    if end > len(body):
        raise LengthMismatch("string runs past end of packet")
    try:
        return body[pos + 2 : end].decode("utf-8"), end
    except UnicodeDecodeError:
        raise BadPayload("string is not valid UTF-8") from None


def validate_topic(topic: str) -> None:
    if not topic:
        raise EncodeError("topic must not be empty")
    if "+" in topic or "#" in topic or "\x00" in topic:
        raise EncodeError(f"topic contains wildcard or NUL: {topic!r}")


def _packet(ptype: int, body: bytes, flags: int = 0) -> bytes:
    return bytes([(ptype << 4) | flags]) + encode_varint(len(body)) + body


def encode_frame(frame: Frame) -> bytes:
    if isinstance(frame, Connect):
        if not 0 <= frame.keep_alive <= 0xFFFF:
            raise EncodeError("keep_alive must fit in 16 bits")
        body = (
            _encode_str(PROTOCOL_NAME.decode())
            + bytes([PROTOCOL_LEVEL, CLEAN_SESSION])
            + _U16.pack(frame.keep_alive)
            + _encode_str(frame.client_id)
        )
        return _packet(CONNECT, body)
    if isinstance(frame, ConnAck):
        if not 0 <= frame.return_code <= 0xFF:
            raise EncodeError("return_code must fit in a byte")
        return _packet(CONNACK, bytes([0, frame.return_code]))
    if isinstance(frame, Publish):
        validate_topic(frame.topic)
        return _packet(PUBLISH, _encode_str(frame.topic) + bytes(frame.payload))
    if isinstance(frame, PingReq):
        return _packet(PINGREQ, b"")
    if isinstance(frame, PingResp):
        return _packet(PINGRESP, b"")
    if isinstance(frame, Disconnect):
        return _packet(DISCONNECT, b"")
    raise EncodeError(f"not an MQTT frame: {frame!r}")


def decode_frame(buf: bytes) -> tuple[Frame, int]:
    """Decode one frame from the front of ``buf``; return ``(frame, consumed)``.

    Raises :class:`Truncated` when ``buf`` holds only part of a frame and a
    :class:`MalformedFrame` subclass when the bytes can never form one.
    """
    if not buf:
        raise Truncated("empty buffer")
    first = buf[0]
    ptype, flags = first >> 4, first & 0x0F
    if ptype not in (CONNECT, CONNACK, PUBLISH, PINGREQ, PINGRESP, DISCONNECT):
        raise UnknownPacketType(f"packet type {ptype} is outside the supported subset")
    if ptype == PUBLISH and flags & 0x06:
        raise NonzeroQos(f"PUBLISH with QoS {(flags >> 1) & 0x03}; only QoS 0 is supported")
    if flags:
        raise BadFlags(f"fixed-header flags 0x{flags:X} not allowed for packet type {ptype}")
    length, n = decode_varint(buf, 1)
    start = 1 + n
    end = start + length
    if end > len(buf):
        raise Truncated(f"need {end} bytes, have {len(buf)}")
    return _decode_body(ptype, bytes(buf[start:end])), end


def _decode_body(ptype: int, body: bytes) -> Frame:
    if ptype == CONNECT:
        name, pos = _decode_str(body, 0)
        if name != PROTOCOL_NAME.decode():
            raise BadPayload(f"protocol name {name!r}")
        if pos + 4 > len(body):
            raise LengthMismatch("CONNECT variable header truncated")
        level, cflags = body[pos], body[pos + 1]
        if level != PROTOCOL_LEVEL:
            raise BadPayload(f"protocol level {level}")
        if cflags != CLEAN_SESSION:
            raise BadFlags(f"connect flags 0x{cflags:02X}; only clean session is supported")
        (keep_alive,) = _U16.unpack_from(body, pos + 2)
        client_id, pos = _decode_str(body, pos + 4)
        if pos != len(body):
            raise LengthMismatch("trailing bytes after CONNECT payload")
        return Connect(client_id, keep_alive)
    if ptype == CONNACK:
        if len(body) != 2:
            raise LengthMismatch(f"CONNACK body is {len(body)} bytes, expected 2")
        if body[0] & 0xFE:
            raise BadFlags("reserved CONNACK acknowledge flags set")
        return ConnAck(body[1])
    if ptype == PUBLISH:
        topic, pos = _decode_str(body, 0)
        try:
            validate_topic(topic)
        except EncodeError as exc:
            raise BadPayload(str(exc)) from None
        return Publish(topic, body[pos:])
    if body:
        raise LengthMismatch(f"packet type {ptype} must have an empty body")
    return {PINGREQ: PingReq, PINGRESP: PingResp, DISCONNECT: Disconnect}[ptype]()


class FrameDecoder:
    """Incremental decoder for a byte stream arriving in arbitrary chunks."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        frames = []
        while self._buf:
            try:
                frame, used = decode_frame(self._buf)
            except Truncated:
                break
            del self._buf[:used]
            frames.append(frame)
        return frames

    @property
    def pending(self) -> int:
        return len(self._buf)


def beacon_topic(device_id: str) -> str:
    return f"leak/{device_id}/beacon"


def device_from_topic(topic: str) -> str | None:
    parts = topic.split("/")
    if len(parts) == 3 and parts[0] == "leak" and parts[2] == "beacon" and parts[1]:
        return parts[1]
    return None
