import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leaktwin.power_train import (
    ComparatorSwitch,
    ConverterModel,
    Supercap,
    cap_step,
    comparator_step,
    converter_step,
    efficiency_at,
    usable_energy,
)

MODEL = ConverterModel()


class TestEfficiency:
    def test_peak_load_anchor(self):
        assert efficiency_at(MODEL, 0.25) == pytest.approx(0.73, abs=0.005)

    def test_light_load_anchor(self):
        assert efficiency_at(MODEL, 0.01) >= 0.80

    @pytest.mark.parametrize("i, eff", MODEL.efficiency_table)
    def test_knots_are_exact(self, i, eff):
        assert efficiency_at(MODEL, i) == eff

    def test_clamped_outside_table(self):
        assert efficiency_at(MODEL, 0.0) == 0.82
        assert efficiency_at(MODEL, 2.0) == 0.73

    @given(st.floats(0.0, 0.4))
    def test_matches_independent_interpolation(self, i):
        xs, ys = zip(*MODEL.efficiency_table)
        assert efficiency_at(MODEL, i) == pytest.approx(float(np.interp(i, xs, ys)), abs=1e-12)

    @given(st.floats(0.01, 0.25), st.floats(0.01, 0.25))
    def test_monotone_for_decreasing_table(self, a, b):
        lo, hi = sorted((a, b))
        assert efficiency_at(MODEL, hi) <= efficiency_at(MODEL, lo) + 1e-15

    def test_continuous_at_knots(self):
        for x, y in MODEL.efficiency_table[1:-1]:
            assert efficiency_at(MODEL, x - 1e-12) == pytest.approx(y, abs=1e-9)
            assert efficiency_at(MODEL, x + 1e-12) == pytest.approx(y, abs=1e-9)

    @pytest.mark.parametrize(
        "table",
        [((0.1, 0.8),), ((0.1, 0.8), (0.05, 0.7)), ((0.1, 0.8), (0.2, 1.2)), ((0.1, 0.0), (0.2, 0.5))],
    )
    def test_bad_tables_rejected(self, table):
        with pytest.raises(ValueError):
            ConverterModel(efficiency_table=table)


class TestConverterStep:
    def test_constant_power_transfer(self):
        # 0.05 A is the 0.80 knot: 0.8 * 0.06 W / 4.0 V
        out = converter_step(MODEL, 1.6, 0.06, Supercap(1.5, 4.0), 0.0, 0.05)
        assert out.running
        assert out.i_into_node == pytest.approx(0.012)

    def test_below_run_voltage(self):
        out = converter_step(MODEL, 0.4, 0.06, Supercap(1.5, 4.0), 0.0, 0.0, was_running=True)
        assert out == (0.0, False)

    def test_start_and_run_thresholds(self):
        cap = Supercap(1.5, 2.0)
        assert not converter_step(MODEL, 0.7, 0.01, cap, 0.0, 0.0).running
        assert converter_step(MODEL, 0.7, 0.01, cap, 0.0, 0.0, was_running=True).running
        assert converter_step(MODEL, 0.9, 0.01, cap, 0.0, 0.0).running

    def test_regulation_ceiling(self):
        out = converter_step(MODEL, 1.6, 0.06, Supercap(1.5, 5.0), 0.0, 0.0)
        assert out.i_into_node == 0.0
        out = converter_step(MODEL, 1.6, 0.06, Supercap(1.5, 5.0), 0.001, 0.0)
        assert out.i_into_node == 0.001

    def test_floor_and_clamp(self):
        out = converter_step(MODEL, 2.7, 0.03, Supercap(1.5, 0.0), 0.0, 0.0)
        assert out.i_into_node == pytest.approx(0.82 * 0.03 / 0.1)
        out = converter_step(MODEL, 2.7, 1.0, Supercap(1.5, 0.0), 0.0, 0.0)
        assert out.i_into_node == MODEL.i_out_max


class TestCap:
    def test_linear_charge(self):
        assert cap_step(Supercap(1.5, 0.0), 0.015, 100.0).voltage == pytest.approx(1.0)

    def test_discharge(self):
        assert cap_step(Supercap(1.5, 4.87), -0.25, 1.0).voltage == pytest.approx(4.87 - 0.25 / 1.5)
        assert cap_step(Supercap(1.5, 4.87), -0.25, 1.0).voltage == pytest.approx(4.703, abs=5e-4)

    def test_zero_current(self):
        assert cap_step(Supercap(1.5, 3.3), 0.0, 5.0).voltage == 3.3

    def test_never_negative(self):
        assert cap_step(Supercap(1.5, 0.01), -1.0, 1.0).voltage == 0.0

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            cap_step(Supercap(), 0.1, 0.0)


class TestComparator:
    def test_closes_at_v_on(self):
        assert comparator_step(ComparatorSwitch(), 4.87).closed

    def test_holds_in_band(self):
        assert comparator_step(ComparatorSwitch(closed=True), 4.0).closed
        assert not comparator_step(ComparatorSwitch(closed=False), 4.0).closed

    def test_opens_at_v_off(self):
        assert not comparator_step(ComparatorSwitch(closed=True), 3.67).closed

    def test_thresholds_must_be_ordered(self):
        with pytest.raises(ValueError):
            ComparatorSwitch(v_on=3.0, v_off=3.5)


class TestUsableEnergy:
    def test_band(self):
        assert usable_energy(4.87, 3.67, 1.5) == pytest.approx(0.75 * (4.87**2 - 3.67**2))
        assert usable_energy(4.87, 3.67, 1.5) == pytest.approx(7.686, abs=1e-3)

    def test_full_discharge(self):
        assert usable_energy(4.87, 0.0, 1.5) == pytest.approx(17.79, abs=5e-3)

    def test_degenerate(self):
        assert usable_energy(4.0, 4.0, 1.5) == 0.0


def _random_walk(rng, n, lo=2.5, hi=6.0):
    v = rng.uniform(lo, hi)
    out = []
    for _ in range(n):
        v = min(hi, max(lo, v + rng.gauss(0, 0.15)))
        out.append(v)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_hysteresis_random_trajectories(seed):
    rng = random.Random(seed)
    sw = ComparatorSwitch()
    touched_on = touched_off = False
    for v in _random_walk(rng, 10_000):
        nxt = comparator_step(sw, v)
        if nxt.closed and not sw.closed:
            assert v >= sw.v_on
        if sw.closed and not nxt.closed:
            assert v <= sw.v_off
        if sw.v_off < v < sw.v_on:
            assert nxt.closed == sw.closed
        touched_on |= v >= sw.v_on
        touched_off |= v <= sw.v_off
        sw = nxt
    assert touched_on and touched_off


@given(st.lists(st.floats(0.0, 6.0), min_size=1, max_size=200))
def test_switch_state_is_band_respecting(trajectory):
    sw = ComparatorSwitch()
    last_flip_v = None
    for v in trajectory:
        nxt = comparator_step(sw, v)
        if nxt.closed != sw.closed:
            last_flip_v = v
        sw = nxt
        if sw.closed:
            assert last_flip_v is not None and last_flip_v >= sw.v_on
        elif last_flip_v is not None:
            assert last_flip_v <= sw.v_off
