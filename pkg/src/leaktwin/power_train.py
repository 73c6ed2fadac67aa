"""Boost converter, storage supercapacitor and hysteresis load switch."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

# Input voltage used in the constant-power division when the cap is nearly empty.
V_FLOOR = 0.1

DEFAULT_EFFICIENCY_TABLE: tuple[tuple[float, float], ...] = (
    (0.01, 0.82),
    (0.05, 0.80),
    (0.10, 0.78),
    (0.25, 0.73),
)


@dataclass(frozen=True)
class ConverterModel:
    efficiency_table: tuple[tuple[float, float], ...] = DEFAULT_EFFICIENCY_TABLE
    v_start: float = 0.9
    v_min_run: float = 0.5
    v_out_target: float = 5.0
    i_out_max: float = 0.5

    def __post_init__(self) -> None:
        table = tuple((float(i), float(e)) for i, e in self.efficiency_table)
        object.__setattr__(self, "efficiency_table", table)
        if len(table) < 2:
            raise ValueError("efficiency_table needs at least 2 points")
        for (i0, _), (i1, _) in zip(table, table[1:]):
            if not i1 > i0:
                raise ValueError("efficiency_table must be sorted strictly by current")
        if any(not (0 < e <= 1) for _, e in table):
            raise ValueError("efficiencies must lie in (0, 1]")
        if not (0 < self.v_min_run <= self.v_start):
            raise ValueError("need 0 < v_min_run <= v_start")
        if not (self.v_out_target > 0 and self.i_out_max > 0):
            raise ValueError("v_out_target and i_out_max must be positive")


@dataclass(frozen=True)
class Supercap:
    capacitance: float = 1.5
    voltage: float = 0.0

    def __post_init__(self) -> None:
        if not self.capacitance > 0:
            raise ValueError("capacitance must be positive")
        if self.voltage < 0:
            raise ValueError("voltage must be non-negative")

    @property
    def energy(self) -> float:
        return 0.5 * self.capacitance * self.voltage * self.voltage


@dataclass(frozen=True)
class ComparatorSwitch:
    v_on: float = 4.87
    v_off: float = 3.67
    closed: bool = False

    def __post_init__(self) -> None:
        if not self.v_off < self.v_on:
            raise ValueError("need v_off < v_on")


class ConverterOutput(NamedTuple):
    i_into_node: float
    running: bool


def efficiency_at(model: ConverterModel, i_out: float) -> float:
    """Piecewise-linear efficiency lookup, clamped to the end knots."""
    table = model.efficiency_table
    if i_out <= table[0][0]:
        return table[0][1]
    if i_out >= table[-1][0]:
        return table[-1][1]
    for (x0, y0), (x1, y1) in zip(table, table[1:]):
        if i_out <= x1:
            return y0 + (y1 - y0) * (i_out - x0) / (x1 - x0)
    return table[-1][1]  # unreachable


def converter_step(
    model: ConverterModel,
    v_oc: float,
    p_available: float,
    cap: Supercap,
    i_load: float,
    i_out_prev: float,
    was_running: bool = False,
) -> ConverterOutput:
    """One step of the lossy constant-power boost stage.

    Efficiency is looked up at the previous step's output current, which
    avoids solving the operating point implicitly.
    """
    running = (was_running and v_oc >= model.v_min_run) or v_oc >= model.v_start
    if not running:
        return ConverterOutput(0.0, False)
    p_out = efficiency_at(model, i_out_prev) * p_available
    i = min(p_out / max(cap.voltage, V_FLOOR), model.i_out_max)
    if cap.voltage >= model.v_out_target:
        i = min(i, i_load)
    return ConverterOutput(i, True)


def cap_step(cap: Supercap, i_net: float, dt: float) -> Supercap:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return replace(cap, voltage=max(0.0, cap.voltage + i_net * dt / cap.capacitance))


def comparator_step(sw: ComparatorSwitch, v: float) -> ComparatorSwitch:
    if not sw.closed and v >= sw.v_on:
        return replace(sw, closed=True)
    if sw.closed and v <= sw.v_off:
        return replace(sw, closed=False)
    return sw


def usable_energy(v_on: float, v_off: float, capacitance: float) -> float:
    """Energy released while the cap falls from ``v_on`` to ``v_off``."""
    if not v_on >= v_off >= 0:
        raise ValueError("need v_on >= v_off >= 0")
    return 0.5 * capacitance * (v_on * v_on - v_off * v_off)
