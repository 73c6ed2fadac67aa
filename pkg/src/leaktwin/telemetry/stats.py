"""Summaries over the ingestion journal."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from ..modem import BeaconEncodingError, decode_beacon
from .server import JOURNAL_NAME, BeaconRecord


@dataclass
class JournalStats:
    count: int = 0
    per_device: dict[str, int] = field(default_factory=dict)
    intervals_by_device: dict[str, list[float]] = field(default_factory=dict)
    corrupt_lines: int = 0

    @property
    def inter_beacon_intervals(self) -> list[float]:
        return [g for dev in sorted(self.intervals_by_device) for g in self.intervals_by_device[dev]]

    @property
    def median_interval(self) -> float | None:
        gaps = self.inter_beacon_intervals
        return statistics.median(gaps) if gaps else None

    def to_json(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "per_device": dict(sorted(self.per_device.items())),
            "inter_beacon_intervals": self.inter_beacon_intervals,
            "median_interval": self.median_interval,
            "corrupt_lines": self.corrupt_lines,
        }


def read_journal(data_dir: str | Path) -> tuple[list[BeaconRecord], int]:
    """Return ``(records, corrupt_line_count)``; a missing journal reads as empty."""
    path = Path(data_dir) / JOURNAL_NAME
    records: list[BeaconRecord] = []
    corrupt = 0
    if not path.exists():
        return records, corrupt
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                records.append(BeaconRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError):
                corrupt += 1
    return records, corrupt


def stats(
    data_dir: str | Path,
    device_id: str | None = None,
    since: float | None = None,
    clock: Literal["device", "server"] = "device",
) -> JournalStats:
    """Counts and consecutive-arrival gaps per device.

    Records are taken in journal (arrival) order. With ``clock="device"`` the
    gap between consecutive arrivals is measured with the timestamps carried
    in the payloads, which reflect when the beacon was sent; ``"server"``
    uses ``received_at`` instead. ``since`` filters on ``received_at``.
    """
    records, corrupt = read_journal(data_dir)
    out = JournalStats(corrupt_lines=corrupt)
    last: dict[str, float] = {}
    for rec in records:
        if device_id is not None and rec.device_id != device_id:
            continue
        if since is not None and rec.received_at < since:
            continue
        if clock == "device":
            try:
                _, ts = decode_beacon(rec.payload)
            except BeaconEncodingError:
                out.corrupt_lines += 1
                continue
            stamp = float(ts)
        else:
            stamp = rec.received_at
        out.count += 1
        out.per_device[rec.device_id] = out.per_device.get(rec.device_id, 0) + 1
        gaps = out.intervals_by_device.setdefault(rec.device_id, [])
        if rec.device_id in last:
            gaps.append(stamp - last[rec.device_id])
        last[rec.device_id] = stamp
    return out
