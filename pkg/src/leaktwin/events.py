"""Discrete events emitted by the modem and the simulation kernel."""

from __future__ import annotations

import base64
import enum
from dataclasses import dataclass
from typing import Any


class EventKind(str, enum.Enum):
    LEAK_START = "LeakStart"
    SWITCH_CLOSED = "SwitchClosed"
    ATTACHED = "Attached"
    BEACON_SENT = "BeaconSent"
    BROWNOUT = "Brownout"
    SWITCH_OPENED = "SwitchOpened"
    DISCONNECTED = "Disconnected"
    DRY_OUT = "DryOut"


@dataclass(frozen=True)
class EventRecord:
    t: float
    kind: EventKind
    seq: int | None = None
    beacons_in_cycle: int | None = None
    payload: bytes | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"t_s": self.t, "kind": self.kind.value}
        if self.seq is not None:
            out["seq"] = self.seq
        if self.beacons_in_cycle is not None:
            out["beacons_in_cycle"] = self.beacons_in_cycle
        if self.payload is not None:
            out["payload_b64"] = base64.b64encode(self.payload).decode("ascii")
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> EventRecord:
        payload = obj.get("payload_b64")
        return cls(
            t=float(obj["t_s"]),
            kind=EventKind(obj["kind"]),
            seq=obj.get("seq"),
            beacons_in_cycle=obj.get("beacons_in_cycle"),
            payload=base64.b64decode(payload) if payload is not None else None,
        )
