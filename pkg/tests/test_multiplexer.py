from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import coupler_tree_power
from pnrarray import ConfigError
from pnrarray.multiplexer import (
    DETECTOR_MAX_RATE_HZ,
    MEASURED_LOSS_DB,
    CouplerSpec,
    CouplingRangeError,
    MultiplexerSpec,
    OverlappingBinsError,
    bin_ports,
    bin_schedule,
    bin_weights,
    default_routing,
    effective_array_size,
    loss_budget,
    max_count_rate_hz,
    overall_efficiency,
)

REF = MultiplexerSpec()


class TestSpec:
    def test_default_shape(self):
        assert REF.n_bins == 16 and len(REF.routing) == 16

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(stages=0),
            dict(loop_delays_ns=(150, 300)),
            dict(loop_delays_ns=(300, 150, 600)),
            dict(input_port=2),
            dict(fiber_loss_db_per_km=-1),
            dict(routing=((1, 1, 1, 1),) * 16),
            dict(routing=((1, 1, 1, 2),) + default_routing()[1:]),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            MultiplexerSpec(**kwargs)

    def test_coupler_from_mapping(self):
        spec = MultiplexerSpec(coupler={"slope_a": 0.01, "excess_loss_db": 0.2})
        assert spec.coupler == CouplerSpec(0.01, 0.2)


class TestRouting:
    def test_eight_bins_per_fiber(self):
        fibers = Counter(f for f, _ in bin_ports(REF))
        assert fibers == {1: 8, 2: 8}

    def test_delays_cover_every_150ns_slot(self):
        for fiber in (1, 2):
            delays = sorted(d for f, d in bin_ports(REF) if f == fiber)
            assert delays == [150.0 * k for k in range(8)]

    def test_paths_are_distinct(self):
        assert len(set(bin_ports(REF))) == 16

    @pytest.mark.parametrize("ad", [0.0, 0.01, -0.05, 0.2])
    def test_weights_match_tree_walk(self, ad):
        spec = MultiplexerSpec(coupler=CouplerSpec(slope_a=ad if ad else 0.005))
        dl = 1.0 if ad else 0.0
        oracle = coupler_tree_power(4, REF.loop_delays_ns, ad, input_port=1)
        got = dict(zip(bin_ports(spec), bin_weights(spec, dl).fractions))
        assert got.keys() == oracle.keys()
        for key, p in oracle.items():
            assert got[key] == pytest.approx(p, abs=1e-15)


class TestWeights:
    def test_uniform_on_design_wavelength(self):
        np.testing.assert_allclose(bin_weights(REF, 0.0).fractions, 1 / 16, atol=1e-15)

    def test_linear_coefficient_multiset(self):
        coeffs = bin_weights(REF).linear_coeffs
        fibers = [f for f, _ in bin_ports(REF)]
        one = sorted(c for c, f in zip(coeffs, fibers) if f == 1)
        two = sorted(c for c, f in zip(coeffs, fibers) if f == 2)
        assert one == [-0.25] * 4 + [0.25] * 4
        assert two == [-0.5] + [0.0] * 6 + [0.5]

    @settings(max_examples=100, deadline=None)
    @given(ad=st.floats(-0.39, 0.39))
    def test_normalised(self, ad):
        spec = MultiplexerSpec(coupler=CouplerSpec(slope_a=ad if ad else 0.005))
        w = bin_weights(spec, 1.0 if ad else 0.0).fractions
        assert abs(w.sum() - 1) <= 1e-12 and np.all(w >= 0)

    @pytest.mark.parametrize("dl", [-10.0, -2.0, 0.5, 3.0, 10.0])
    def test_quadratic_remainder(self, dl):
        ad = REF.coupler.slope_a * dl
        w = bin_weights(REF, dl)
        remainder = w.fractions - (1 / 16 + w.linear_coeffs * ad)
        # degree >= 2 terms of a product of four factors 1/2 +- ad
        assert np.all(np.abs(remainder) <= 2 * ad**2)

    def test_coupling_out_of_range(self):
        with pytest.raises(CouplingRangeError):
            bin_weights(REF, 100.0)
        with pytest.raises(ConfigError):
            bin_weights(REF, -100.0)


class TestEffectiveSize:
    def test_on_design(self):
        assert effective_array_size(REF, 0.0) == 16

    @pytest.mark.parametrize("dl", [-10.0, -0.1, 0.1, 10.0])
    def test_detuned(self, dl):
        assert effective_array_size(REF, dl) == 11

    def test_negative_slope_mirrors(self):
        flipped = MultiplexerSpec(coupler=CouplerSpec(slope_a=-0.005))
        assert effective_array_size(flipped, 5.0) == effective_array_size(REF, -5.0) == 11


class TestLoss:
    def test_budget(self):
        db, t = loss_budget(REF)
        assert db == pytest.approx(0.6625, abs=1e-12)
        assert t == pytest.approx(0.8585, abs=1e-4)

    def test_close_to_measured(self):
        assert abs(loss_budget(REF)[0] - MEASURED_LOSS_DB) < 0.05

    def test_zero_length_ideal(self):
        spec = MultiplexerSpec(avg_path_m=0.0, coupler=CouplerSpec(excess_loss_db=0.0))
        assert loss_budget(spec) == (0.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(a=st.floats(0, 1000), b=st.floats(0, 1000))
    def test_monotone_in_path(self, a, b):
        la = loss_budget(MultiplexerSpec(avg_path_m=a))[0]
        lb = loss_budget(MultiplexerSpec(avg_path_m=b))[0]
        assert (la <= lb) == (a <= b) or la == lb

    def test_overall_efficiency(self):
        assert overall_efficiency(REF, [0.49, 0.65]) == pytest.approx(0.4894, abs=1e-4)
        assert overall_efficiency(1.0, [0.5]) == 0.5
        assert overall_efficiency(0.86, [0.50, 0.64]) == pytest.approx(0.49, abs=5e-4)

    @pytest.mark.parametrize("args", [(1.2, [0.5]), (0.9, []), (0.9, [1.5])])
    def test_overall_efficiency_rejects(self, args):
        with pytest.raises(ConfigError):
            overall_efficiency(*args)


class TestSchedule:
    def test_spacing(self):
        for fiber in (1, 2):
            offsets = sorted(s.arrival_offset_ns for s in bin_schedule(REF) if s.fiber == fiber)
            assert np.allclose(np.diff(offsets), 150.0)

    def test_rate_below_detector_limit(self):
        rate = max_count_rate_hz(REF)
        assert rate == pytest.approx(1e9 / 150)
        assert rate <= DETECTOR_MAX_RATE_HZ

    def test_two_stage_tree(self):
        spec = MultiplexerSpec(stages=2, loop_delays_ns=(150.0,))
        assert sorted(bin_ports(spec)) == [(1, 0.0), (1, 150.0), (2, 0.0), (2, 150.0)]
        assert effective_array_size(spec, 1.0) == 3

    def test_coinciding_bins(self):
        with pytest.raises(OverlappingBinsError):
            bin_schedule(MultiplexerSpec(loop_delays_ns=(150, 300, 450)))

    def test_window_wider_than_spacing(self):
        with pytest.raises(OverlappingBinsError):
            bin_schedule(REF, window_ns=160.0)
