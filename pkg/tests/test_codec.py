import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from _corpus import chop, connect_bytes, corpus
from leaktwin.modem import encode_beacon
from leaktwin.telemetry.codec import (
    BadFlags,
    BadPayload,
    ConnAck,
    Connect,
    DecodeError,
    Disconnect,
    EncodeError,
    FrameDecoder,
    LengthMismatch,
    MalformedFrame,
    NonzeroQos,
    OverlongVarint,
    PingReq,
    PingResp,
    Publish,
    Truncated,
    UnknownPacketType,
    beacon_topic,
    decode_frame,
    decode_varint,
    device_from_topic,
    encode_frame,
    encode_varint,
)

GOLDEN_CONNECT = bytes.fromhex("10 14 00 04 4D 51 54 54 04 02 00 3C 00 08 77 6C 6B 2D 30 30 30 31")

# boundary table from the MQTT 3.1.1 remaining-length definition
VARINTS = [
    (0, "00"),
    (127, "7F"),
    (128, "8001"),
    (16_383, "FF7F"),
    (16_384, "808001"),
    (2_097_151, "FFFF7F"),
    (2_097_152, "80808001"),
    (268_435_455, "FFFFFF7F"),
]


class TestVarint:
    @pytest.mark.parametrize("value, hexed", VARINTS)
    def test_table(self, value, hexed):
        assert encode_varint(value) == bytes.fromhex(hexed)
        assert decode_varint(bytes.fromhex(hexed)) == (value, len(hexed) // 2)

    @pytest.mark.parametrize("value", [-1, 268_435_456])
    def test_out_of_range(self, value):
        with pytest.raises(EncodeError):
            encode_varint(value)

    def test_truncated(self):
        with pytest.raises(Truncated):
            decode_varint(b"\x80")

    def test_overlong(self):
        with pytest.raises(OverlongVarint):
            decode_varint(b"\x80\x80\x80\x80\x01")

    @given(st.integers(0, 268_435_455))
    def test_round_trip(self, value):
        assert decode_varint(encode_varint(value)) == (value, len(encode_varint(value)))


class TestGolden:
    def test_connect(self):
        assert encode_frame(Connect("wlk-0001", 60)) == GOLDEN_CONNECT

    def test_connect_independent_builder(self):
        assert connect_bytes("wlk-0001", 60) == GOLDEN_CONNECT
        for cid, ka in [("a", 0), ("device-42", 65535), ("", 10)]:
            assert encode_frame(Connect(cid, ka)) == connect_bytes(cid, ka)

    def test_fixed_headers(self):
        assert encode_frame(PingReq()) == b"\xc0\x00"
        assert encode_frame(PingResp()) == b"\xd0\x00"
        assert encode_frame(Disconnect()) == b"\xe0\x00"
        assert encode_frame(ConnAck(0)) == b"\x20\x02\x00\x00"

    def test_beacon_publish_length(self):
        payload = encode_beacon("wlk-0001", 1735689600)
        data = encode_frame(Publish(beacon_topic("wlk-0001"), payload))
        assert data[0] == 0x30
        topic = b"leak/wlk-0001/beacon"
        assert len(topic) == 20
        assert data[1] == 2 + len(topic) + len(payload) == 69
        assert data.endswith(payload)


class TestMalformed:
    def test_qos_bits(self):
        for flags in (0x02, 0x04, 0x06):
            with pytest.raises(NonzeroQos):
                decode_frame(bytes([0x30 | flags, 0x03, 0x00, 0x01, 0x61]))

    def test_unknown_type(self):
        with pytest.raises(UnknownPacketType):
            decode_frame(b"\x80\x00")  # SUBSCRIBE is outside the subset

    def test_bad_flags(self):
        with pytest.raises(BadFlags):
            decode_frame(b"\xc1\x00")

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            decode_frame(b"\x20\x03\x00\x00\x00")
        with pytest.raises(LengthMismatch):
            decode_frame(b"\x30\x02\x00\x05")

    def test_bad_protocol_name(self):
        bad = GOLDEN_CONNECT.replace(b"MQTT", b"MQTX")
        with pytest.raises(BadPayload):
            decode_frame(bad)

    def test_errors_are_distinct(self):
        kinds = {UnknownPacketType, NonzeroQos, LengthMismatch, BadFlags, BadPayload}
        assert len(kinds) == 5
        assert all(issubclass(k, MalformedFrame) for k in kinds)
        assert issubclass(Truncated, DecodeError) and not issubclass(Truncated, MalformedFrame)

    def test_partial_is_truncated(self):
        for i in range(len(GOLDEN_CONNECT)):
            with pytest.raises(Truncated):
                decode_frame(GOLDEN_CONNECT[:i])

    @pytest.mark.parametrize("topic", ["", "leak/+/beacon", "leak/#"])
    def test_publish_topic_rules(self, topic):
        with pytest.raises(EncodeError):
            encode_frame(Publish(topic, b"x"))


def test_round_trip_10k():
    for frame in corpus(seed=1, n=10_000):
        data = encode_frame(frame)
        assert decode_frame(data) == (frame, len(data))


def test_fragmented_stream_equals_whole():
    frames = corpus(seed=2, n=2_000)
    stream = b"".join(encode_frame(f) for f in frames)
    whole, pos = [], 0
    while pos < len(stream):
        f, used = decode_frame(stream[pos:])
        whole.append(f)
        pos += used
    dec = FrameDecoder()
    streamed = []
    for piece in chop(stream, random.Random(3)):
        streamed.extend(dec.feed(piece))
    assert streamed == whole == frames
    assert dec.pending == 0


def test_decoder_raises_on_garbage():
    dec = FrameDecoder()
    assert dec.feed(b"\xc0") == []
    with pytest.raises(MalformedFrame):
        dec.feed(b"\x00\x80\x00")


class TestTopics:
    def test_round_trip(self):
        assert device_from_topic(beacon_topic("wlk-0001")) == "wlk-0001"

    @pytest.mark.parametrize("topic", ["leak//beacon", "leak/a/b/beacon", "other/a/beacon", "leak/a"])
    def test_foreign(self, topic):
        assert device_from_topic(topic) is None
