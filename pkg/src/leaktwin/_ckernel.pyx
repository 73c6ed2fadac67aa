# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step kernel; operation-for-operation copy of ``_pykernel``."""

from libc.math cimport exp, ceil, pow, isfinite

import numpy as np

cdef enum:
    EV_LEAK = 0
    EV_CLOSE = 1
    EV_ATTACH = 2
    EV_BEACON = 3
    EV_BROWNOUT = 4
    EV_OPEN = 5
    EV_DRY = 6

cdef enum:
    PH_OFF = 0
    PH_SEARCH = 1
    PH_IDLE = 2
    PH_TX = 3

cdef enum:
    H_DORMANT = 0
    H_WET = 1
    H_DRY = 2


def run_kernel(k, rng):
    cdef double v_peak = k.v_peak
    cdef double v_plateau = k.v_plateau
    cdef double tau_v = k.tau_v
    cdef double i_peak = k.i_peak
    cdef double i_plateau = k.i_plateau
    cdef double tau_i = k.tau_i
    cdef double k_derate = k.k_derate
    cdef double dry_residual = k.dry_residual
    cdef double cells = k.cells_in_series
    cdef double[::1] eff_x = np.ascontiguousarray(k.eff_x, dtype=np.float64)
    cdef double[::1] eff_y = np.ascontiguousarray(k.eff_y, dtype=np.float64)
    cdef Py_ssize_t n_knots = eff_x.shape[0]
    cdef double v_start = k.v_start
    cdef double v_min_run = k.v_min_run
    cdef double v_target = k.v_out_target
    cdef double i_max = k.i_out_max
    cdef double v_floor = k.v_floor
    cdef double cap = k.capacitance
    cdef double v_on = k.v_on
    cdef double v_off = k.v_off
    cdef double attach_min = k.attach_min
    cdef double attach_span = k.attach_max - k.attach_min
    cdef double i_attach = k.i_attach
    cdef double i_tx = k.i_tx
    cdef double i_idle = k.i_idle
    cdef double v_min_op = k.v_min_operate
    cdef long long tx_steps = k.tx_steps
    cdef long long idle_steps = k.idle_steps
    cdef long long n_steps = k.n_steps
    cdef double dt = k.dt
    cdef long long leak_step = k.leak_step
    cdef long long dry_step = k.dry_step
    cdef long long rewet_step = k.rewet_step
    cdef long long every = k.trace_every

    cdef Py_ssize_t n_samples = (n_steps - 1) // every + 1 if n_steps > 0 else 0
    tr_t_a = np.empty(n_samples)
    tr_v_a = np.empty(n_samples)
    tr_ih_a = np.empty(n_samples)
    tr_il_a = np.empty(n_samples)
    tr_sw_a = np.empty(n_samples, dtype=np.int8)
    tr_ph_a = np.empty(n_samples, dtype=np.int8)
    cdef double[::1] tr_t = tr_t_a
    cdef double[::1] tr_v = tr_v_a
    cdef double[::1] tr_ih = tr_ih_a
    cdef double[::1] tr_il = tr_il_a
    cdef signed char[::1] tr_sw = tr_sw_a
    cdef signed char[::1] tr_ph = tr_ph_a
    events = []

    cdef double v = k.v_initial
    cdef int h_phase = H_DORMANT
    cdef double t_act = 0.0
    cdef int rewets = 0
    cdef double scale = 1.0
    cdef bint running = False
    cdef double i_out_prev = 0.0
    cdef double i_load = 0.0
    cdef bint closed = False
    cdef int m_phase = PH_OFF
    cdef long long deadline = 0
    cdef long long seq = 0
    cdef long long sent = 0
    cdef long long cycle_base = 0
    cdef double e_conv = 0.0
    cdef double e_deliv = 0.0
    cdef double e_load = 0.0
    cdef Py_ssize_t sample = 0

    cdef long long n
    cdef Py_ssize_t j
    cdef double t, elapsed, v_oc, i_sc, p_av, eff, x0, y0, p_out, i_node, v_new, d, i_next

    for n in range(n_steps):
        t = n * dt

        if n == leak_step or n == rewet_step:
            if h_phase != H_WET:
                if h_phase == H_DRY:
                    rewets += 1
                h_phase = H_WET
                t_act = t
                scale = pow(dry_residual, rewets)
                events.append((n, EV_LEAK, 0))
        if n == dry_step and h_phase == H_WET:
            h_phase = H_DRY
            events.append((n, EV_DRY, 0))

        if h_phase == H_WET:
            elapsed = t - t_act
            v_oc = scale * cells * (v_plateau + (v_peak - v_plateau) * exp(-elapsed / tau_v))
            i_sc = scale * (i_plateau + (i_peak - i_plateau) * exp(-elapsed / tau_i))
            p_av = k_derate * v_oc * i_sc / 4.0
        else:
            v_oc = 0.0
            p_av = 0.0

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

        v_new = v + (i_node - i_load) * dt / cap
        if v_new < 0.0:
            v_new = 0.0
        if not isfinite(v_new):
            raise FloatingPointError(
                f"non-finite capacitor voltage at step {n} (t={t:.6g} s): "
                f"v={v!r}, i_node={i_node!r}, i_load={i_load!r}"
            )

        if not closed and v_new >= v_on:
            closed = True
            events.append((n, EV_CLOSE, 0))
            d = attach_min + attach_span * <double>rng.random()
            m_phase = PH_SEARCH
            deadline = n + <long long>ceil(d / dt - 1e-6)
            cycle_base = sent
        elif closed and v_new <= v_off:
            closed = False
            events.append((n, EV_OPEN, sent - cycle_base))
            m_phase = PH_OFF

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

    trace = (tr_t_a, tr_v_a, tr_ih_a, tr_il_a, tr_sw_a, tr_ph_a)
    return trace, events, (e_conv, e_deliv, e_load, v)
