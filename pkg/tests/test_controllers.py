"""Quantized feedforward controllers, the layered composition, and the
stochastic pilot model."""

import numpy as np
import pytest

import looplimits as L
from looplimits import (
    BumpSpec,
    LayeredParams,
    LoopParams,
    PilotModel,
    SimConfig,
    TrailSpec,
    TrialConfig,
)


def _layered_reference() -> LayeredParams:
    return LayeredParams(
        epsilon=1.0,
        reflex=LoopParams(signal_delay=1, internal_delay=2, rate=1),
        planning=LoopParams(signal_delay=1, internal_delay=2, warning=20, rate=3),
    )


class TestOptimalController:
    def test_constant_disturbance_settles_to_rate_floor(self):
        p = LoopParams.from_total(0.0, 4.0)
        ctrl = L.make_optimal_controller(p)
        traj = L.run_closed_loop(
            SimConfig(horizon=60, warmup_ticks=10),
            L.ArraySource(b=np.full(60, 0.3)),
            ctrl,
        )
        assert traj.sup_x() <= L.worst_case_bound(p).total + 1e-9

    def test_delayed_loop_still_within_worst_case_floor(self):
        p = LoopParams.from_total(2.0, 3.0)
        traj = L.run_closed_loop(
            SimConfig(horizon=60, warmup_ticks=10),
            L.ArraySource(b=np.full(60, 0.3)),
            L.make_optimal_controller(p),
        )
        assert traj.sup_x() <= L.worst_case_bound(p).total + 1e-9

    def test_requires_integer_tick_delays(self):
        with pytest.raises(ValueError):
            L.make_optimal_controller(LoopParams(signal_delay=1.5, rate=1.0))


class TestLayeredController:
    def test_state_restore_replays_identically(self):
        src = L.ArraySource(
            b=np.random.default_rng(0).normal(size=50) * 0.2,
            r=np.random.default_rng(1).normal(size=50) * 0.2,
        )
        ctrl = L.make_layered_controller(_layered_reference())
        for t in range(30):
            ctrl.step(t, 0.1 * t, src.at(t))
        snap = ctrl.state()
        later = [
            (c.u_low, c.u_high)
            for c in (ctrl.step(t, 0.1 * t, src.at(t)) for t in range(30, 40))
        ]
        ctrl.restore(snap)
        again = [
            (c.u_low, c.u_high)
            for c in (ctrl.step(t, 0.1 * t, src.at(t)) for t in range(30, 40))
        ]
        assert later == again

    def test_fresh_returns_independent_controller(self):
        ctrl = L.make_layered_controller(_layered_reference())
        src = L.ArraySource(b=np.full(10, 0.5))
        for t in range(10):
            ctrl.step(t, 0.0, src.at(t))
        twin = ctrl.fresh()
        assert twin is not ctrl
        assert twin.state() != ctrl.state()

    def test_superposition_of_channel_errors(self):
        """Running both disturbance channels at once never costs more than
        2% beyond the sum of the per-channel worst errors (fixed seeds)."""
        lp = LayeredParams(
            epsilon=1.0,
            reflex=LoopParams(signal_delay=1, internal_delay=10, rate=1),
            planning=LoopParams(signal_delay=1, internal_delay=10, warning=100, rate=5),
        )
        horizon = 400
        cfg = SimConfig(horizon=horizon)

        def sup(b, r):
            ctrl = L.make_layered_controller(lp)
            return L.run_closed_loop(cfg, L.ArraySource(b=b, r=r), ctrl).sup_x()

        for seed in range(6):
            trail = L.generate_trail(TrailSpec(), horizon, seed=seed)
            bumps = L.generate_bumps(BumpSpec(), horizon, seed=seed + 100)
            err_b = sup(bumps.b, None)
            err_t = sup(None, trail.r)
            err_both = sup(bumps.b, trail.r)
            assert err_both <= 1.02 * (err_b + err_t)


class TestPilot:
    def test_same_seed_reproduces_run(self):
        cfg = TrialConfig(
            condition="both", segment_seconds=5.0, discard_ticks=20, window_ticks=20, seed=9
        )
        a, b = L.run_trial(cfg), L.run_trial(cfg)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.u_raw, b.u_raw)

    def test_different_seed_changes_run(self):
        base = dict(
            condition="both", segment_seconds=5.0, discard_ticks=20, window_ticks=20
        )
        a = L.run_trial(TrialConfig(seed=9, **base))
        b = L.run_trial(TrialConfig(seed=10, **base))
        assert not np.array_equal(a.x, b.x)

    def test_commands_respect_authority_limit(self):
        pm = PilotModel()
        rec = L.run_trial(
            TrialConfig(
                condition="both",
                segment_seconds=5.0,
                discard_ticks=20,
                window_ticks=20,
                seed=9,
            )
        )
        assert np.max(np.abs(rec.u_raw)) <= pm.authority + 1e-12

    def test_make_pilot_seeds_are_isolated(self):
        pm = PilotModel()
        p1 = L.make_pilot(pm, seed=1)
        p2 = L.make_pilot(pm, seed=1)
        p3 = L.make_pilot(pm, seed=2)
        sample = L.DisturbanceSample(b=0.0, r=0.1)
        u1 = [p1.step(t, 0.2, sample).u for t in range(20)]
        u2 = [p2.step(t, 0.2, sample).u for t in range(20)]
        u3 = [p3.step(t, 0.2, sample).u for t in range(20)]
        assert u1 == u2
        assert u1 != u3


class TestNullController:
    def test_emits_zero_and_round_trips_state(self):
        ctrl = L.NullController()
        cmd = ctrl.step(0, 1.0, L.DisturbanceSample())
        assert cmd.u == 0.0
        snap = ctrl.state()
        ctrl.restore(snap)
        assert ctrl.fresh() is not ctrl
