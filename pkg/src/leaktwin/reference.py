"""Step-by-step composition of the public model operations.

Orders of magnitude slower than the kernels and meant only to cross-check
them: it goes through the same functions a user would call one at a time.
"""

from __future__ import annotations

import random

from . import harvester as hv
from . import modem as mdm
from . import power_train as pt
from .events import EventKind, EventRecord
from .simkernel import Scenario, SimParams, TraceSample, event_time


def run_reference(scenario: Scenario, params: SimParams | None = None):
    """Return ``(samples, events)`` for ``scenario``."""
    params = (params or SimParams()).with_overrides(scenario.overrides)
    hp, conv, sw, mp = params.harvester, params.converter, params.comparator, params.modem
    dt = scenario.dt
    rng = random.Random(scenario.seed)
    leak, dry, rewet = (
        scenario.step_of(scenario.leak_start),
        scenario.step_of(scenario.dry_out_at),
        scenario.step_of(scenario.rewet_at),
    )
    every = max(1, int(round(scenario.trace_every / dt)))

    h = hv.HarvesterState()
    cap = params.supercap
    modem = mdm.ModemState()
    running = False
    i_out_prev = 0.0
    i_load = 0.0
    samples: list[TraceSample] = []
    events: list[EventRecord] = []

    def emit(kind, n, **kw):
        events.append(EventRecord(event_time(n, dt), kind, **kw))

    for n in range(scenario.n_steps):
        t = n * dt
        if n in (leak, rewet):
            nxt = hv.activate(h, t)
            if nxt is not h:
                emit(EventKind.LEAK_START, n)
            h = nxt
        if n == dry and h.phase is hv.Phase.WET:
            h = hv.dry_out(h, t)
            emit(EventKind.DRY_OUT, n)

        v_oc = hv.ocv_at(hp, h, t)
        p_av = hv.available_power(hp, h, t)
        i_node, running = pt.converter_step(conv, v_oc, p_av, cap, i_load, i_out_prev, running)
        cap = pt.cap_step(cap, i_node - i_load, dt)
        new_sw = pt.comparator_step(sw, cap.voltage)
        if new_sw.closed and not sw.closed:
            emit(EventKind.SWITCH_CLOSED, n)
            modem = mdm.power_on(mp, modem, t, rng)
        elif sw.closed and not new_sw.closed:
            emit(
                EventKind.SWITCH_OPENED,
                n,
                beacons_in_cycle=modem.beacons_sent - modem.cycle_base,
            )
            modem, _ = mdm.power_off(modem, t)
        sw = new_sw

        res = mdm.tick(mp, modem, t, dt, cap.voltage, scenario.device_id, scenario.epoch)
        for e in res.events:
            if e.kind is EventKind.BEACON_SENT:
                # re-encode from the rounded event time, as the kernels do
                payload = mdm.encode_beacon(
                    scenario.device_id,
                    mdm.beacon_timestamp(scenario.epoch, event_time(n, dt)),
                )
                emit(e.kind, n, seq=e.seq, payload=payload)
            else:
                emit(e.kind, n)

        if n % every == 0:
            samples.append(
                TraceSample(t, cap.voltage, i_node, i_load, sw.closed, res.state.phase)
            )
        modem = res.state
        i_out_prev = i_node
        i_load = res.i_load
    return samples, events
