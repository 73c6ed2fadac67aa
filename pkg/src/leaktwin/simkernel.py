"""Deterministic fixed-step composition of harvester, power train and modem."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _backend, _pykernel
from .events import EventKind, EventRecord
from .harvester import HarvesterParams
from .modem import ModemParams, ModemPhase, beacon_timestamp, encode_beacon, validate_device_id
from .power_train import V_FLOOR, ComparatorSwitch, ConverterModel, Supercap

DEFAULT_EPOCH = 1735689600  # 2025-01-01T00:00:00Z


@dataclass(frozen=True)
class SimParams:
    harvester: HarvesterParams = field(default_factory=HarvesterParams)
    converter: ConverterModel = field(default_factory=ConverterModel)
    supercap: Supercap = field(default_factory=Supercap)
    comparator: ComparatorSwitch = field(default_factory=ComparatorSwitch)
    modem: ModemParams = field(default_factory=ModemParams)

    def with_overrides(self, overrides: Mapping[str, Any]) -> SimParams:
        if not overrides:
            return self
        by_section: dict[str, dict[str, Any]] = {}
        for key, value in overrides.items():
            section = OVERRIDE_KEYS.get(key)
            if section is None:
                raise KeyError(f"unknown parameter {key!r}; valid keys: {', '.join(sorted(OVERRIDE_KEYS))}")
            by_section.setdefault(section, {})[key] = value
        changes = {
            name: dataclasses.replace(getattr(self, name), **fields)
            for name, fields in by_section.items()
        }
        return dataclasses.replace(self, **changes)

    def flat(self) -> dict[str, Any]:
        """All tunables as one ``{key: value}`` map (the override namespace)."""
        out: dict[str, Any] = {}
        for section in SECTIONS:
            for f in dataclasses.fields(getattr(self, section)):
                if f.name in OVERRIDE_KEYS:
                    value = getattr(getattr(self, section), f.name)
                    if f.name == "efficiency_table":
                        value = [list(p) for p in value]
                    out[f.name] = value
        return out


SECTIONS = ("harvester", "converter", "supercap", "comparator", "modem")
_SECTION_TYPES = {
    "harvester": HarvesterParams,
    "converter": ConverterModel,
    "supercap": Supercap,
    "comparator": ComparatorSwitch,
    "modem": ModemParams,
}
# "closed" is runtime state, not a tunable
OVERRIDE_KEYS: dict[str, str] = {
    f.name: section
    for section, cls in _SECTION_TYPES.items()
    for f in dataclasses.fields(cls)
    if f.name != "closed"
}


@dataclass(frozen=True)
class Scenario:
    seed: int = 0
    dt: float = 0.01
    duration: float = 7200.0
    leak_start: float | None = 0.0
    dry_out_at: float | None = None
    rewet_at: float | None = None
    device_id: str = "wlk-0001"
    epoch: int = DEFAULT_EPOCH
    trace_every: float = 1.0
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.leak_start is not None:
            if not (self.duration > self.leak_start >= 0):
                raise ValueError("need duration > leak_start >= 0")
        if self.dry_out_at is not None:
            if self.leak_start is None or not self.dry_out_at > self.leak_start:
                raise ValueError("dry_out_at must come after leak_start")
        if self.rewet_at is not None:
            if self.dry_out_at is None or not self.rewet_at > self.dry_out_at:
                raise ValueError("rewet_at must come after dry_out_at")
        if not self.trace_every >= self.dt:
            raise ValueError("trace_every must be at least dt")
        validate_device_id(self.device_id)
        for key in self.overrides:
            if key not in OVERRIDE_KEYS:
                raise KeyError(f"unknown override {key!r}; valid keys: {', '.join(sorted(OVERRIDE_KEYS))}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def step_of(self, t: float | None) -> int:
        """First step whose time reaches ``t``; -1 if never within the run."""
        if t is None:
            return -1
        n = steps_for(t, self.dt)
        return n if n < self.n_steps else -1

    def replace(self, **changes: Any) -> Scenario:
        return dataclasses.replace(self, **changes)


def steps_for(duration: float, dt: float) -> int:
    return math.ceil(duration / dt - 1e-6)


class TraceSample(NamedTuple):
    t: float
    v_cap: float
    i_harvest_node: float
    i_load: float
    switch_closed: bool
    modem_phase: ModemPhase


PHASE_BY_CODE = (ModemPhase.UNPOWERED, ModemPhase.SEARCHING, ModemPhase.IDLE, ModemPhase.TRANSMITTING)
TRACE_COLUMNS = ("t_s", "v_cap_V", "i_harvest_A", "i_load_A", "switch", "modem_phase")


@dataclass
class Trace:
    t: np.ndarray
    v_cap: np.ndarray
    i_harvest: np.ndarray
    i_load: np.ndarray
    switch: np.ndarray
    phase: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def samples(self) -> list[TraceSample]:
        return [
            TraceSample(float(t), float(v), float(ih), float(il), bool(sw), PHASE_BY_CODE[ph])
            for t, v, ih, il, sw, ph in zip(
                self.t, self.v_cap, self.i_harvest, self.i_load, self.switch, self.phase
            )
        ]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for s in self.samples():
                w.writerow(
                    (
                        f"{s.t:.6g}",
                        f"{s.v_cap:.6g}",
                        f"{s.i_harvest_node:.6g}",
                        f"{s.i_load:.6g}",
                        int(s.switch_closed),
                        s.modem_phase.value,
                    )
                )


def read_trace_csv(path: str | Path) -> list[TraceSample]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {reader.fieldnames}")
        return [
            TraceSample(
                float(row["t_s"]),
                float(row["v_cap_V"]),
                float(row["i_harvest_A"]),
                float(row["i_load_A"]),
                row["switch"] == "1",
                ModemPhase(row["modem_phase"]),
            )
            for row in reader
        ]


@dataclass(frozen=True)
class RunSummary:
    t_first_threshold: float | None
    t_first_beacon: float | None
    beacons_per_cycle: list[int]
    total_beacons: int
    brownouts: int
    mean_attach: float | None

    def to_json(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EnergyAudit:
    """Cumulative energy bookkeeping of one run, in joules.

    ``converted`` is the efficiency-weighted input power integrated over the
    run; ``delivered`` is what actually reached the capacitor node, which is
    lower while the converter is current-clamped, floor-limited or at its
    regulation ceiling. ``residual`` is pure integration error.
    """

    converted: float
    delivered: float
    load: float
    delta_cap: float

    @property
    def residual(self) -> float:
        return self.delivered - self.load - self.delta_cap

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / self.converted if self.converted > 0 else 0.0

    @property
    def regulation_loss(self) -> float:
        return self.converted - self.delivered


@dataclass
class RunResult:
    trace: Trace
    events: list[EventRecord]
    summary: RunSummary
    audit: EnergyAudit
    backend: str

    def beacon_payloads(self) -> list[bytes]:
        return [e.payload for e in self.events if e.kind is EventKind.BEACON_SENT]


class KernelInputs(NamedTuple):
    v_peak: float
    v_plateau: float
    tau_v: float
    i_peak: float
    i_plateau: float
    tau_i: float
    k_derate: float
    dry_residual: float
    cells_in_series: float
    eff_x: tuple[float, ...]
    eff_y: tuple[float, ...]
    v_start: float
    v_min_run: float
    v_out_target: float
    i_out_max: float
    v_floor: float
    capacitance: float
    v_initial: float
    v_on: float
    v_off: float
    attach_min: float
    attach_max: float
    i_attach: float
    i_tx: float
    i_idle: float
    v_min_operate: float
    tx_steps: int
    idle_steps: int
    n_steps: int
    dt: float
    leak_step: int
    dry_step: int
    rewet_step: int
    trace_every: int


def kernel_inputs(scenario: Scenario, params: SimParams) -> KernelInputs:
    h, c, s, sw, m = params.harvester, params.converter, params.supercap, params.comparator, params.modem
    dt = scenario.dt
    return KernelInputs(
        h.v_peak, h.v_plateau, h.tau_v, h.i_peak, h.i_plateau, h.tau_i,
        h.k_derate, h.dry_residual, h.cells_in_series,
        tuple(x for x, _ in c.efficiency_table), tuple(y for _, y in c.efficiency_table),
        c.v_start, c.v_min_run, c.v_out_target, c.i_out_max, V_FLOOR,
        s.capacitance, s.voltage, sw.v_on, sw.v_off,
        m.attach_min, m.attach_max, m.i_attach, m.i_tx, m.i_idle, m.v_min_operate,
        max(1, steps_for(m.t_tx, dt)), max(1, steps_for(m.idle_interval, dt)),
        scenario.n_steps, dt,
        scenario.step_of(scenario.leak_start),
        scenario.step_of(scenario.dry_out_at),
        scenario.step_of(scenario.rewet_at),
        max(1, int(round(scenario.trace_every / dt))),
    )


_KIND_BY_CODE = {
    _pykernel.EV_LEAK: EventKind.LEAK_START,
    _pykernel.EV_CLOSE: EventKind.SWITCH_CLOSED,
    _pykernel.EV_ATTACH: EventKind.ATTACHED,
    _pykernel.EV_BEACON: EventKind.BEACON_SENT,
    _pykernel.EV_BROWNOUT: EventKind.BROWNOUT,
    _pykernel.EV_OPEN: EventKind.SWITCH_OPENED,
    _pykernel.EV_DRY: EventKind.DRY_OUT,
}


def event_time(step: int, dt: float) -> float:
    return round(step * dt, 9)


def _decode_events(raw: Iterable[tuple[int, int, int]], scenario: Scenario) -> list[EventRecord]:
    out = []
    for step, code, arg in raw:
        kind = _KIND_BY_CODE[code]
        t = event_time(step, scenario.dt)
        if kind is EventKind.BEACON_SENT:
            payload = encode_beacon(scenario.device_id, beacon_timestamp(scenario.epoch, t))
            out.append(EventRecord(t, kind, seq=arg, payload=payload))
        elif kind is EventKind.SWITCH_OPENED:
            out.append(EventRecord(t, kind, beacons_in_cycle=arg))
        else:
            out.append(EventRecord(t, kind))
    return out


def run(
    scenario: Scenario,
    params: SimParams | None = None,
    backend: str | None = None,
) -> RunResult:
    """Simulate one scenario.

    Identical inputs give bit-identical traces and events on either backend.
    """
    params = (params or SimParams()).with_overrides(scenario.overrides)
    kin = kernel_inputs(scenario, params)
    name = backend or _backend.DEFAULT_BACKEND
    kernel = _backend.get_kernel(name)
    raw_trace, raw_events, (e_conv, e_deliv, e_load, v_final) = kernel(kin, random.Random(scenario.seed))
    trace = Trace(*raw_trace)
    trace.switch = trace.switch.astype(bool)
    events = _decode_events(raw_events, scenario)
    cap = params.supercap.capacitance
    audit = EnergyAudit(
        converted=e_conv,
        delivered=e_deliv,
        load=e_load,
        delta_cap=0.5 * cap * (v_final * v_final - kin.v_initial * kin.v_initial),
    )
    return RunResult(trace, events, summary_stats(events), audit, name)


def summary_stats(events: Sequence[EventRecord]) -> RunSummary:
    """Derive a RunSummary from the event log alone.

    The threshold time is measured from the first LeakStart (or from 0 when
    the log has none); the first-beacon time is absolute.
    """
    leak_t = next((e.t for e in events if e.kind is EventKind.LEAK_START), 0.0)
    t_close = next((e.t for e in events if e.kind is EventKind.SWITCH_CLOSED), None)
    t_beacon = next((e.t for e in events if e.kind is EventKind.BEACON_SENT), None)
    cycles: list[int] = []
    attach_times: list[float] = []
    count: int | None = None
    closed_at = 0.0
    awaiting_attach = False
    brownouts = 0
    for e in events:
        if e.kind is EventKind.SWITCH_CLOSED:
            if count is not None:
                cycles.append(count)
            count, closed_at, awaiting_attach = 0, e.t, True
        elif e.kind is EventKind.ATTACHED and awaiting_attach:
            attach_times.append(e.t - closed_at)
            awaiting_attach = False
        elif e.kind is EventKind.BEACON_SENT:
            count = (count or 0) + 1
        elif e.kind is EventKind.SWITCH_OPENED and count is not None:
            cycles.append(count)
            count = None
            awaiting_attach = False
        elif e.kind is EventKind.BROWNOUT:
            brownouts += 1
    if count is not None:
        cycles.append(count)
    return RunSummary(
        t_first_threshold=None if t_close is None else round(t_close - leak_t, 9),
        t_first_beacon=t_beacon,
        beacons_per_cycle=cycles,
        total_beacons=sum(cycles),
        brownouts=brownouts,
        mean_attach=statistics.fmean(attach_times) if attach_times else None,
    )


def sweep(
    base: Scenario,
    param: str,
    values: Sequence[Any],
    params: SimParams | None = None,
    backend: str | None = None,
) -> list[RunSummary]:
    """One run per value of ``param``; seed and everything else held fixed."""
    if param not in OVERRIDE_KEYS:
        raise KeyError(f"unknown parameter {param!r}; valid keys: {', '.join(sorted(OVERRIDE_KEYS))}")
    out = []
    for value in values:
        scenario = base.replace(overrides={**base.overrides, param: value})
        out.append(run(scenario, params, backend).summary)
    return out


def write_events(events: Iterable[EventRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(e.to_json(), separators=(",", ":")) + "\n")


def read_events(path: str | Path) -> list[EventRecord]:
    with open(path) as fh:
        return [EventRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def write_summary(summary: RunSummary, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(summary.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
