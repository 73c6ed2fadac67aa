"""MQTT-subset codec, beacon publisher and local ingestion service."""

from .client import ConnectionRefused, MqttClient
from .codec import (
    ConnAck,
    Connect,
    DecodeError,
    Disconnect,
    EncodeError,
    FrameDecoder,
    MalformedFrame,
    PingReq,
    PingResp,
    Publish,
    Truncated,
    beacon_topic,
    decode_frame,
    decode_varint,
    encode_frame,
    encode_varint,
)
from .server import BeaconRecord, IngestServer, Journal, handle_session
from .stats import JournalStats, stats
from .transport import PipeTransport, TcpTransport, TransportError, pipe_pair
