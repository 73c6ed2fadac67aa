import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from leaktwin.harvester import (
    HarvesterParams,
    HarvesterState,
    Phase,
    activate,
    available_power,
    dry_out,
    ocv_at,
    scc_at,
    source_resistance,
)

P = HarvesterParams()
FRESH = HarvesterState(Phase.WET, 0.0, 0)


class TestLifecycle:
    def test_first_activation(self):
        s = activate(HarvesterState(), 0.0)
        assert (s.phase, s.since, s.rewet_count) == (Phase.WET, 0.0, 0)

    def test_rewet_after_dry(self):
        s = activate(HarvesterState(Phase.DRY, 3600.0, 0), 4000.0)
        assert (s.phase, s.since, s.rewet_count) == (Phase.WET, 4000.0, 1)
        assert ocv_at(P, s, 4000.0) == pytest.approx(P.dry_residual * 2.7)

    def test_activate_is_idempotent(self):
        s = HarvesterState(Phase.WET, 100.0, 0)
        assert activate(s, 200.0) is s

    def test_dry_out(self):
        s = dry_out(FRESH, 7200.0)
        assert (s.phase, s.since) == (Phase.DRY, 7200.0)
        assert ocv_at(P, s, 7300.0) == 0.0
        assert scc_at(P, s, 7300.0) == 0.0

    def test_dry_non_wet_is_noop(self):
        s = HarvesterState()
        assert dry_out(s, 5.0) is s

    def test_never_back_to_dormant(self):
        s = HarvesterState()
        for step, t in enumerate([0.0, 10.0, 20.0, 30.0, 40.0]):
            s = activate(s, t) if step % 2 == 0 else dry_out(s, t)
            assert s.phase is not Phase.DORMANT

    def test_dry_activate_composition(self):
        s = activate(dry_out(FRESH, 7200.0), 8000.0)
        assert ocv_at(P, s, 8000.0) == pytest.approx(0.1 * 2.7)


class TestCurves:
    def test_endpoints(self):
        assert ocv_at(P, FRESH, 0.0) == pytest.approx(2.7)
        assert scc_at(P, FRESH, 0.0) == pytest.approx(0.45)
        assert ocv_at(P, FRESH, 1e6) == pytest.approx(1.6)
        assert scc_at(P, FRESH, 1e6) == pytest.approx(0.15)

    def test_dormant_outputs_zero(self):
        s = HarvesterState()
        assert ocv_at(P, s, 10.0) == 0.0
        assert scc_at(P, s, 10.0) == 0.0
        assert available_power(P, s, 10.0) == 0.0
        assert source_resistance(P, s, 10.0) is None

    def test_settled_after_five_time_constants(self):
        v = ocv_at(P, FRESH, 5 * P.tau_v)
        assert abs(v - P.v_plateau) / P.v_plateau < 0.01

    def test_mpp_power_values(self):
        # V*I/4 by hand from the curve endpoints
        unit = HarvesterParams(k_derate=1.0)
        assert available_power(unit, FRESH, 0.0) == pytest.approx(0.30375)
        assert available_power(unit, FRESH, 1e7) == pytest.approx(0.06)

    def test_source_resistance(self):
        assert source_resistance(P, FRESH, 0.0) == pytest.approx(6.0)
        assert source_resistance(P, FRESH, 1e7) == pytest.approx(10.6667, abs=1e-4)

    def test_cells_in_series_scales_voltage_only(self):
        two = HarvesterParams(cells_in_series=2.0)
        assert ocv_at(two, FRESH, 50.0) == pytest.approx(2 * ocv_at(P, FRESH, 50.0))
        assert scc_at(two, FRESH, 50.0) == scc_at(P, FRESH, 50.0)

    @pytest.mark.parametrize(
        "kw",
        [
            {"v_peak": 1.0},
            {"i_plateau": 0.0},
            {"tau_v": 0.0},
            {"k_derate": 0.0},
            {"k_derate": 1.5},
            {"dry_residual": 1.0},
        ],
    )
    def test_invalid_params(self, kw):
        with pytest.raises(ValueError):
            HarvesterParams(**kw)


elapsed = st.floats(0.0, 1e5, allow_nan=False)
rewets = st.integers(0, 4)


@given(elapsed, elapsed, rewets)
def test_outputs_non_increasing(a, b, n):
    s = HarvesterState(Phase.WET, 0.0, n)
    lo, hi = sorted((a, b))
    assert ocv_at(P, s, hi) <= ocv_at(P, s, lo)
    assert scc_at(P, s, hi) <= scc_at(P, s, lo)


@given(elapsed, rewets)
def test_outputs_within_scaled_band(t, n):
    s = HarvesterState(Phase.WET, 0.0, n)
    scale = P.dry_residual**n
    eps = 1e-12
    assert P.v_plateau * scale - eps <= ocv_at(P, s, t) <= P.v_peak * scale + eps
    assert P.i_plateau * scale - eps <= scc_at(P, s, t) <= P.i_peak * scale + eps


@given(elapsed, rewets, st.floats(0.01, 1.0))
def test_power_matches_recomputation(t, n, k):
    params = HarvesterParams(k_derate=k)
    s = HarvesterState(Phase.WET, 0.0, n)
    scale = params.dry_residual**n
    v = scale * (1.6 + 1.1 * math.exp(-t / 480.0))
    i = scale * (0.15 + 0.30 * math.exp(-t / 480.0))
    assert available_power(params, s, t) == pytest.approx(k * v * i / 4, rel=1e-12)


@given(elapsed, rewets)
def test_rewet_scaling_exact(t, n):
    fresh = HarvesterState(Phase.WET, 0.0, 0)
    wet_n = HarvesterState(Phase.WET, 0.0, n)
    assert ocv_at(P, wet_n, t) == pytest.approx(P.dry_residual**n * ocv_at(P, fresh, t), rel=1e-12)
    assert scc_at(P, wet_n, t) == pytest.approx(P.dry_residual**n * scc_at(P, fresh, t), rel=1e-12)
