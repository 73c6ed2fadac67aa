"""LTE-M module firmware: attach, beacon, idle, repeat while powered."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, replace
from typing import NamedTuple, Protocol

from .events import EventKind, EventRecord

MAX_PAYLOAD_BYTES = 64
_DEVICE_ID_RE = re.compile(r"[A-Za-z0-9_.:-]{1,16}")


class BeaconEncodingError(ValueError):
    pass


class ModemPhase(str, enum.Enum):
    UNPOWERED = "Unpowered"
    SEARCHING = "Searching"
    IDLE = "Idle"
    TRANSMITTING = "Transmitting"


@dataclass(frozen=True)
class ModemParams:
    attach_min: float = 10.0
    attach_max: float = 20.0
    i_attach: float = 0.04
    i_tx: float = 0.25
    t_tx: float = 0.8
    i_idle: float = 0.001
    idle_interval: float = 120.0
    v_min_operate: float = 3.2

    def __post_init__(self) -> None:
        if not (0 < self.attach_min <= self.attach_max):
            raise ValueError("need 0 < attach_min <= attach_max")
        if min(self.i_attach, self.i_tx, self.i_idle) < 0:
            raise ValueError("currents must be non-negative")
        if not (self.i_tx >= self.i_attach >= self.i_idle):
            raise ValueError("need i_tx >= i_attach >= i_idle")
        if not (self.t_tx > 0 and self.idle_interval > 0):
            raise ValueError("t_tx and idle_interval must be positive")
        if not self.v_min_operate >= 0:
            raise ValueError("v_min_operate must be non-negative")


@dataclass(frozen=True)
class ModemState:
    phase: ModemPhase = ModemPhase.UNPOWERED
    until: float = 0.0  # deadline of the current Searching/Transmitting/Idle phase
    seq: int = 0  # sequence number of the beacon being transmitted
    beacons_sent: int = 0
    cycle_base: int = 0  # beacons_sent at the last power-on


class TickResult(NamedTuple):
    state: ModemState
    i_load: float
    events: list[EventRecord]


class UniformSource(Protocol):
    def random(self) -> float: ...


def attach_duration(params: ModemParams, rng: UniformSource) -> float:
    """Draw one attach time, uniform on [attach_min, attach_max].

    Consumes exactly one ``rng.random()`` call.
    """
    return params.attach_min + (params.attach_max - params.attach_min) * rng.random()


def power_on(params: ModemParams, state: ModemState, t: float, rng: UniformSource) -> ModemState:
    if state.phase is not ModemPhase.UNPOWERED:
        raise ValueError(f"power_on from {state.phase.value}")
    return replace(
        state,
        phase=ModemPhase.SEARCHING,
        until=t + attach_duration(params, rng),
        cycle_base=state.beacons_sent,
    )


def power_off(state: ModemState, t: float) -> tuple[ModemState, list[EventRecord]]:
    if state.phase is ModemPhase.UNPOWERED:
        return state, []
    event = EventRecord(
        t, EventKind.DISCONNECTED, beacons_in_cycle=state.beacons_sent - state.cycle_base
    )
    return replace(state, phase=ModemPhase.UNPOWERED), [event]


def beacon_timestamp(epoch: int, t: float) -> int:
    # t comes from step * dt; nudge so 1380.0 - 1ulp still reads as 1380
    return epoch + math.floor(t + 1e-6)


def tick(
    params: ModemParams,
    state: ModemState,
    t: float,
    dt: float,
    v_supply: float,
    device_id: str = "wlk-0001",
    epoch: int = 0,
) -> TickResult:
    """Advance the firmware by one step and return the load for the next one.

    Deadlines count as reached within a millionth of a step, so schedules
    whose durations are whole multiples of ``dt`` land on exact steps.
    """
    phase = state.phase
    if phase is ModemPhase.UNPOWERED:
        return TickResult(state, 0.0, [])
    if v_supply < params.v_min_operate:
        return TickResult(
            replace(state, phase=ModemPhase.UNPOWERED),
            0.0,
            [EventRecord(t, EventKind.BROWNOUT)],
        )
    due = t >= state.until - 1e-6 * dt
    if phase is ModemPhase.SEARCHING:
        if not due:
            return TickResult(state, params.i_attach, [])
        seq = state.beacons_sent + 1
        nxt = replace(state, phase=ModemPhase.TRANSMITTING, until=t + params.t_tx, seq=seq)
        return TickResult(nxt, params.i_tx, [EventRecord(t, EventKind.ATTACHED)])
    if phase is ModemPhase.TRANSMITTING:
        if not due:
            return TickResult(state, params.i_tx, [])
        payload = encode_beacon(device_id, beacon_timestamp(epoch, t))
        nxt = replace(
            state,
            phase=ModemPhase.IDLE,
            until=t + params.idle_interval,
            beacons_sent=state.beacons_sent + 1,
        )
        event = EventRecord(t, EventKind.BEACON_SENT, seq=state.seq, payload=payload)
        return TickResult(nxt, params.i_idle, [event])
    # Idle
    if not due:
        return TickResult(state, params.i_idle, [])
    nxt = replace(
        state,
        phase=ModemPhase.TRANSMITTING,
        until=t + params.t_tx,
        seq=state.beacons_sent + 1,
    )
    return TickResult(nxt, params.i_tx, [])


def validate_device_id(device_id: str) -> None:
    if not isinstance(device_id, str) or not _DEVICE_ID_RE.fullmatch(device_id):
        raise BeaconEncodingError(
            f"device_id must be 1-16 characters from [A-Za-z0-9_.:-], got {device_id!r}"
        )


def encode_beacon(device_id: str, timestamp: int) -> bytes:
    """Canonical beacon payload: ``{"device_id":"...","timestamp":N}``, no spaces."""
    validate_device_id(device_id)
    if isinstance(timestamp, bool) or not isinstance(timestamp, int) or timestamp < 0:
        raise BeaconEncodingError(f"timestamp must be a non-negative int, got {timestamp!r}")
    data = f'{{"device_id":"{device_id}","timestamp":{timestamp}}}'.encode("ascii")
    if len(data) > MAX_PAYLOAD_BYTES:
        raise BeaconEncodingError(f"payload is {len(data)} bytes, limit {MAX_PAYLOAD_BYTES}")
    return data


def decode_beacon(data: bytes) -> tuple[str, int]:
    """Parse a beacon payload back into ``(device_id, timestamp)``."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BeaconEncodingError(f"not a JSON beacon: {exc}") from None
    if not isinstance(obj, dict) or set(obj) != {"device_id", "timestamp"}:
        raise BeaconEncodingError("beacon must have exactly device_id and timestamp")
    device_id, timestamp = obj["device_id"], obj["timestamp"]
    validate_device_id(device_id)
    if isinstance(timestamp, bool) or not isinstance(timestamp, int):
        raise BeaconEncodingError("timestamp must be an integer")
    return device_id, timestamp
