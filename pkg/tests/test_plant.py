"""Integrator plant, disturbance sources, and the closed-loop runner."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from looplimits import (
    ArraySource,
    ControlCommand,
    DisturbanceSample,
    NullController,
    PlantState,
    SimConfig,
    SimulationError,
    ZeroSource,
    run_closed_loop,
    step_plant,
)

finite = st.floats(-1e9, 1e9, allow_nan=False)


class TestStepPlant:
    @given(x=finite, w=finite, u=finite)
    def test_integrator_recurrence(self, x, w, u):
        nxt = step_plant(PlantState(x=x, t=3), w, u)
        assert nxt.x == x + w + u
        assert nxt.t == 4

    def test_non_finite_update_raises(self):
        with pytest.raises(SimulationError):
            step_plant(PlantState(x=1e308), 1e308, 1e308)


class TestSamplesAndCommands:
    @given(b=finite, r=finite)
    def test_disturbance_sums_channels(self, b, r):
        assert DisturbanceSample(b=b, r=r).w == b + r

    @given(lo=finite, hi=finite)
    def test_command_sums_layers(self, lo, hi):
        assert ControlCommand(u_low=lo, u_high=hi).u == lo + hi


class TestSources:
    def test_zero_source(self):
        s = ZeroSource()
        assert s.at(0).w == 0.0 and s.at(10**6).w == 0.0

    def test_array_source_pads_with_zeros(self):
        s = ArraySource(b=np.array([1.0, -2.0]), r=np.array([0.5]))
        assert s.at(0).b == 1.0 and s.at(0).r == 0.5
        assert s.at(1).b == -2.0 and s.at(1).r == 0.0
        assert s.at(2).w == 0.0
        assert s.at(-1).w == 0.0

    def test_array_source_is_committed(self):
        s = ArraySource(b=np.array([3.0]))
        assert s.at(0) == s.at(0)


class TestRunClosedLoop:
    def test_open_loop_integrates_disturbance(self):
        b = np.array([1.0, 1.0, -0.5])
        traj = run_closed_loop(SimConfig(horizon=6), ArraySource(b=b), NullController())
        assert list(traj.x) == [0.0, 1.0, 2.0, 1.5, 1.5, 1.5]
        assert traj.final_x == 1.5
        assert len(traj) == 6
        for arr in (traj.t, traj.w, traj.b, traj.r, traj.u, traj.u_low, traj.u_high):
            assert len(arr) == 6

    @given(
        b=st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=20),
        warmup=st.integers(0, 5),
    )
    def test_recurrence_holds_everywhere(self, b, warmup):
        horizon = len(b) + 3
        if warmup >= horizon:
            warmup = horizon - 1
        traj = run_closed_loop(
            SimConfig(horizon=horizon, warmup_ticks=warmup),
            ArraySource(b=np.array(b)),
            NullController(),
        )
        xs = list(traj.x) + [traj.final_x]
        for t in range(horizon):
            assert xs[t + 1] == xs[t] + traj.w[t] + traj.u[t]

    def test_sup_x_can_exclude_warmup(self):
        # error peaks during warmup then is flat afterwards
        b = np.array([5.0, -5.0])
        cfg = SimConfig(horizon=8, warmup_ticks=2)
        traj = run_closed_loop(cfg, ArraySource(b=b), NullController())
        assert traj.sup_x(include_warmup=True) == 5.0
        assert traj.sup_x() == 0.0

    def test_records_exposes_all_columns(self):
        traj = run_closed_loop(SimConfig(horizon=3), ZeroSource(), NullController())
        rows = list(traj.records())
        assert len(rows) == 3
        assert set(rows[0]) == {"tick", "x", "w", "b", "r", "u", "u_low", "u_high"}

    def test_diverging_controller_raises(self):
        class Bad:
            def step(self, t, x, preview):
                return ControlCommand(u_low=math.inf)

        with pytest.raises(SimulationError):
            run_closed_loop(SimConfig(horizon=4), ZeroSource(), Bad())


class TestSimConfigValidation:
    @pytest.mark.parametrize(
        "kw",
        [
            {"horizon": 0},
            {"horizon": -3},
            {"horizon": 5, "tick_seconds": 0.0},
            {"horizon": 5, "warmup_ticks": 5},
            {"horizon": 5, "warmup_ticks": -1},
        ],
    )
    def test_rejects_bad_configs(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)
