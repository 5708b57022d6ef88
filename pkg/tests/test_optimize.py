"""Delay-for-rate composition optimizer: single loop, regime sweep, and the
diverse-vs-uniform layered allocation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import looplimits as L
from looplimits import (
    Encoding,
    compare_dess,
    dess_tradeoff_curve,
    grid_search_single_loop,
    layered_bound,
    layered_params_from_design,
    optimize_single_loop,
    signaling_rate,
    single_loop_objective,
    sweep_regimes,
)

LAMBDA = 0.1


class TestSingleLoop:
    def test_interior_optimum_reference_values(self):
        res = optimize_single_loop(LAMBDA, internal_delay=2.0)
        assert res.t_signal == pytest.approx(3.7873973608249116, abs=1e-6)
        assert res.objective == pytest.approx(9.118448183246256, abs=1e-9)
        assert not res.at_kink

    def test_rate_is_bought_by_signal_time(self):
        res = optimize_single_loop(LAMBDA, internal_delay=2.0)
        assert abs(res.rate - LAMBDA * res.t_signal) <= 1e-15

    def test_kink_pins_signal_time_to_warning(self):
        res = optimize_single_loop(LAMBDA, warning=4.0)
        assert res.t_signal == pytest.approx(4.0, abs=1e-9)
        assert res.at_kink

    def test_zero_net_delay_reference(self):
        res = optimize_single_loop(LAMBDA)
        assert res.t_signal == pytest.approx(3.78739730453408, abs=1e-6)
        assert res.objective == pytest.approx(7.118448183246256, abs=1e-9)

    def test_objective_matches_error_decomposition(self):
        for kw in ({"internal_delay": 2.0}, {"warning": 4.0}, {"stochastic": True}):
            res = optimize_single_loop(LAMBDA, **kw)
            assert res.objective == pytest.approx(res.error.total, rel=1e-12)

    def test_result_is_a_minimum_of_the_objective(self):
        res = optimize_single_loop(LAMBDA, internal_delay=2.0)
        here = single_loop_objective(res.t_signal, LAMBDA, internal_delay=2.0)
        assert res.objective == pytest.approx(here, rel=1e-12)
        for dt in (-0.05, 0.05):
            assert here <= single_loop_objective(
                res.t_signal + dt, LAMBDA, internal_delay=2.0
            ) + 1e-12

    def test_agrees_with_grid_search(self):
        t_grid, v_grid = grid_search_single_loop(
            LAMBDA, internal_delay=2.0, coarse=0.05, fine=1e-4
        )
        res = optimize_single_loop(LAMBDA, internal_delay=2.0)
        assert abs(res.t_signal - t_grid) <= 1e-3
        assert res.objective <= v_grid + 1e-9

    def test_rate_based_encoding_halves_the_purchase(self):
        res = optimize_single_loop(LAMBDA, encoding=Encoding.RATE_BASED)
        assert res.rate == pytest.approx(
            signaling_rate(res.t_signal, LAMBDA, Encoding.RATE_BASED), rel=1e-12
        )


class TestRegimeSweep:
    def test_signal_time_constant_once_unpinned(self):
        pts = sweep_regimes(LAMBDA, [-4.0, -2.0, 0.0, 2.0])
        assert [p.at_kink for p in pts] == [True, False, False, False]
        assert pts[0].t_signal == pytest.approx(4.0, abs=1e-9)
        interior = [p.t_signal for p in pts[1:]]
        assert max(interior) - min(interior) <= 1e-4

    def test_net_delay_recorded_and_rate_consistent(self):
        pts = sweep_regimes(LAMBDA, [-3.0, 1.0])
        assert [p.net_delay for p in pts] == [-3.0, 1.0]
        for p in pts:
            assert abs(p.rate - LAMBDA * p.t_signal) <= 1e-12


class TestDess:
    def test_reference_comparison_no_internal_delay(self):
        cmp = compare_dess(LAMBDA, 0.0, 100.0, 1.0)
        assert cmp.diverse.total == pytest.approx(7.119495933650176, abs=1e-9)
        assert cmp.uniform.total == pytest.approx(9.804901706139503, abs=1e-9)
        assert cmp.improvement == pytest.approx(0.27388400750696107, abs=1e-9)
        assert cmp.diverse_wins

    def test_reference_comparison_shared_internal_delay(self):
        cmp = compare_dess(LAMBDA, 10.0, 100.0, 1.0)
        assert cmp.diverse.total == pytest.approx(17.12054588191873, abs=1e-9)
        assert cmp.improvement == pytest.approx(0.13553997207613636, abs=1e-9)
        assert cmp.diverse.t_high == pytest.approx(89.0, abs=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(
        lam=st.floats(0.05, 0.5, allow_nan=False),
        ti=st.floats(0.0, 15.0, allow_nan=False),
    )
    def test_diverse_never_loses_to_uniform(self, lam, ti):
        cmp = compare_dess(lam, ti, 100.0, 1.0)
        assert cmp.diverse.total <= cmp.uniform.total + 1e-12

    def test_tradeoff_curve_dominates_pointwise(self):
        for cmp in dess_tradeoff_curve(LAMBDA, 100.0, np.linspace(0.0, 20.0, 9), 1.0):
            assert cmp.diverse.total <= cmp.uniform.total + 1e-12

    def test_design_converts_to_simulable_parameters(self):
        cmp = compare_dess(LAMBDA, 10.0, 100.0, 1.0)
        lp = layered_params_from_design(cmp.diverse, 10.0, 100.0, 1.0)
        lb = layered_bound(lp)
        # tick rounding moves the bound, but not far from the design value
        assert lb.total == pytest.approx(cmp.diverse.total, rel=0.05)
