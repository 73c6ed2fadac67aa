"""Water-activated electrochemical harvester as a time-varying Thevenin source."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Phase(str, enum.Enum):
    DORMANT = "Dormant"
    WET = "Wet"
    DRY = "Dry"


@dataclass(frozen=True)
class HarvesterParams:
    """Source curves of the dual-compartment cell.

    Open-circuit voltage and short-circuit current both decay exponentially
    from a peak right after wetting toward a plateau. ``k_derate`` is the
    fraction of the maximum-power-point power the boost stage really pulls
    out; ``dry_residual`` scales every output after each re-wetting.
    """

    v_peak: float = 2.7
    v_plateau: float = 1.6
    tau_v: float = 480.0
    i_peak: float = 0.45
    i_plateau: float = 0.15
    tau_i: float = 480.0
    k_derate: float = 0.1238
    dry_residual: float = 0.1
    cells_in_series: float = 1.0

    def __post_init__(self) -> None:
        if not (self.v_peak >= self.v_plateau > 0):
            raise ValueError("need v_peak >= v_plateau > 0")
        if not (self.i_peak >= self.i_plateau > 0):
            raise ValueError("need i_peak >= i_plateau > 0")
        if not (self.tau_v > 0 and self.tau_i > 0):
            raise ValueError("time constants must be positive")
        if not (0 < self.k_derate <= 1):
            raise ValueError("k_derate must be in (0, 1]")
        if not (0 <= self.dry_residual < 1):
            raise ValueError("dry_residual must be in [0, 1)")
        if not self.cells_in_series > 0:
            raise ValueError("cells_in_series must be positive")


@dataclass(frozen=True)
class HarvesterState:
    phase: Phase = Phase.DORMANT
    since: float = 0.0  # activation time when Wet, dry-out time when Dry
    rewet_count: int = 0


def output_scale(params: HarvesterParams, state: HarvesterState) -> float:
    """Output multiplier after ``rewet_count`` re-wettings."""
    return params.dry_residual**state.rewet_count


def activate(state: HarvesterState, t: float) -> HarvesterState:
    if state.phase is Phase.WET:
        return state
    if state.phase is Phase.DRY:
        return HarvesterState(Phase.WET, t, state.rewet_count + 1)
    return HarvesterState(Phase.WET, t, state.rewet_count)


def dry_out(state: HarvesterState, t: float) -> HarvesterState:
    if state.phase is not Phase.WET:
        return state
    return replace(state, phase=Phase.DRY, since=t)


def _decay(peak: float, plateau: float, tau: float, elapsed: float) -> float:
    return plateau + (peak - plateau) * math.exp(-elapsed / tau)


def ocv_at(params: HarvesterParams, state: HarvesterState, t: float) -> float:
    if state.phase is not Phase.WET:
        return 0.0
    scale = output_scale(params, state)
    return scale * params.cells_in_series * _decay(
        params.v_peak, params.v_plateau, params.tau_v, t - state.since
    )


def scc_at(params: HarvesterParams, state: HarvesterState, t: float) -> float:
    if state.phase is not Phase.WET:
        return 0.0
    scale = output_scale(params, state)
    return scale * _decay(params.i_peak, params.i_plateau, params.tau_i, t - state.since)


def available_power(params: HarvesterParams, state: HarvesterState, t: float) -> float:
    """Derated maximum-power-point power, ``k * Voc * Isc / 4``."""
    if state.phase is not Phase.WET:
        return 0.0
    return params.k_derate * ocv_at(params, state, t) * scc_at(params, state, t) / 4.0


def source_resistance(
    params: HarvesterParams, state: HarvesterState, t: float
) -> float | None:
    """Thevenin internal resistance, or ``None`` for an inactive source."""
    if state.phase is not Phase.WET:
        return None
    i_sc = scc_at(params, state, t)
    if i_sc <= 0.0:
        return None
    return ocv_at(params, state, t) / i_sc
