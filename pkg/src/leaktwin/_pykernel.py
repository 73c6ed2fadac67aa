"""Pure-Python fixed-step kernel.

Mirrors ``_ckernel.pyx`` operation for operation; the two must produce
bit-identical traces, so any arithmetic change goes into both files.
"""

from __future__ import annotations

import math

import numpy as np

# event codes shared with the compiled kernel
EV_LEAK, EV_CLOSE, EV_ATTACH, EV_BEACON, EV_BROWNOUT, EV_OPEN, EV_DRY = range(7)
# modem phase codes
PH_OFF, PH_SEARCH, PH_IDLE, PH_TX = range(4)
# harvester phase codes
H_DORMANT, H_WET, H_DRY = range(3)


def run_kernel(k, rng):
    """Run the loop described by the flat parameter record ``k``.

    Returns ``(trace, events, audit)`` where ``trace`` is a tuple of numpy
    arrays, ``events`` a list of ``(step, code, arg)`` and ``audit`` a tuple
    ``(e_converted, e_delivered, e_load, v_final)`` of energies in joules.
    """
    exp = math.exp
    v_peak = k.v_peak
    v_plateau = k.v_plateau
    tau_v = k.tau_v
    i_peak = k.i_peak
    i_plateau = k.i_plateau
    tau_i = k.tau_i
    k_derate = k.k_derate
    dry_residual = k.dry_residual
    cells = k.cells_in_series
    eff_x = list(k.eff_x)
    eff_y = list(k.eff_y)
    n_knots = len(eff_x)
    v_start = k.v_start
    v_min_run = k.v_min_run
    v_target = k.v_out_target
    i_max = k.i_out_max
    v_floor = k.v_floor
    cap = k.capacitance
    v_on = k.v_on
    v_off = k.v_off
    attach_min = k.attach_min
    attach_span = k.attach_max - k.attach_min
    i_attach = k.i_attach
    i_tx = k.i_tx
    i_idle = k.i_idle
    v_min_op = k.v_min_operate
    tx_steps = k.tx_steps
    idle_steps = k.idle_steps
    n_steps = k.n_steps
    dt = k.dt
    leak_step = k.leak_step
    dry_step = k.dry_step
    rewet_step = k.rewet_step
    every = k.trace_every

    n_samples = (n_steps - 1) // every + 1 if n_steps > 0 else 0
    tr_t = np.empty(n_samples)
    tr_v = np.empty(n_samples)
    tr_ih = np.empty(n_samples)
    tr_il = np.empty(n_samples)
    tr_sw = np.empty(n_samples, dtype=np.int8)
    tr_ph = np.empty(n_samples, dtype=np.int8)
    events = []

    v = k.v_initial
    h_phase = H_DORMANT
    t_act = 0.0
    rewets = 0
    scale = 1.0
    running = False
    i_out_prev = 0.0
    i_load = 0.0
    closed = False
    m_phase = PH_OFF
    deadline = 0
    seq = 0
    sent = 0
    cycle_base = 0
    e_conv = 0.0
    e_deliv = 0.0
    e_load = 0.0
    sample = 0

    for n in range(n_steps):
        t = n * dt

        if n == leak_step or n == rewet_step:
            if h_phase != H_WET:
                if h_phase == H_DRY:
                    rewets += 1
                h_phase = H_WET
                t_act = t
                scale = dry_residual**rewets
                events.append((n, EV_LEAK, 0))
        if n == dry_step and h_phase == H_WET:
            h_phase = H_DRY
            events.append((n, EV_DRY, 0))

        # (1) source
        if h_phase == H_WET:
            elapsed = t - t_act
            v_oc = scale * cells * (v_plateau + (v_peak - v_plateau) * exp(-elapsed / tau_v))
            i_sc = scale * (i_plateau + (i_peak - i_plateau) * exp(-elapsed / tau_i))
            p_av = k_derate * v_oc * i_sc / 4.0
        else:
            v_oc = 0.0
            p_av = 0.0

        # (2) converter
        running = (running and v_oc >= v_min_run) or v_oc >= v_start
        if running:
            if i_out_prev <= eff_x[0]:
                eff = eff_y[0]
            elif i_out_prev >= eff_x[n_knots - 1]:
                eff = eff_y[n_knots - 1]
            else:
                j = 1
                while i_out_prev > eff_x[j]:
                    j += 1
                x0 = eff_x[j - 1]
                y0 = eff_y[j - 1]
                eff = y0 + (eff_y[j] - y0) * (i_out_prev - x0) / (eff_x[j] - x0)
            p_out = eff * p_av
            i_node = p_out / (v if v > v_floor else v_floor)
            if i_node > i_max:
                i_node = i_max
            if v >= v_target and i_node > i_load:
                i_node = i_load
            e_conv += p_out * dt
        else:
            i_node = 0.0

        e_deliv += v * i_node * dt
        e_load += v * i_load * dt

        # (3)-(4) capacitor
        v_new = v + (i_node - i_load) * dt / cap
        if v_new < 0.0:
            v_new = 0.0
        if not math.isfinite(v_new):
            raise FloatingPointError(
                f"non-finite capacitor voltage at step {n} (t={t:.6g} s): "
                f"v={v!r}, i_node={i_node!r}, i_load={i_load!r}"
            )

        # (5)-(6) comparator and modem power
        if not closed and v_new >= v_on:
            closed = True
            events.append((n, EV_CLOSE, 0))
            d = attach_min + attach_span * rng.random()
            m_phase = PH_SEARCH
            deadline = n + math.ceil(d / dt - 1e-6)
            cycle_base = sent
        elif closed and v_new <= v_off:
            closed = False
            events.append((n, EV_OPEN, sent - cycle_base))
            m_phase = PH_OFF

        # (7) firmware tick
        if m_phase == PH_OFF:
            i_next = 0.0
        elif v_new < v_min_op:
            events.append((n, EV_BROWNOUT, 0))
            m_phase = PH_OFF
            i_next = 0.0
        elif m_phase == PH_SEARCH:
            if n >= deadline:
                events.append((n, EV_ATTACH, 0))
                seq = sent + 1
                m_phase = PH_TX
                deadline = n + tx_steps
                i_next = i_tx
            else:
                i_next = i_attach
        elif m_phase == PH_TX:
            if n >= deadline:
                events.append((n, EV_BEACON, seq))
                sent += 1
                m_phase = PH_IDLE
                deadline = n + idle_steps
                i_next = i_idle
            else:
                i_next = i_tx
        else:
            if n >= deadline:
                seq = sent + 1
                m_phase = PH_TX
                deadline = n + tx_steps
                i_next = i_tx
            else:
                i_next = i_idle

        if n % every == 0:
            tr_t[sample] = t
            tr_v[sample] = v_new
            tr_ih[sample] = i_node
            tr_il[sample] = i_load
            tr_sw[sample] = closed
            tr_ph[sample] = m_phase
            sample += 1

        i_out_prev = i_node
        i_load = i_next
        v = v_new

    trace = (tr_t, tr_v, tr_ih, tr_il, tr_sw, tr_ph)
    return trace, events, (e_conv, e_deliv, e_load, v)
