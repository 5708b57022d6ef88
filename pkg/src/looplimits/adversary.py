"""Worst-case disturbance search and independent verification oracles.

The searches drive the closed loop with disturbances chosen from a small
per-tick candidate set and report the largest |x| reached. Disturbances
live on two channels (bumps ``b``, trail drift ``r``); a channel with a
zero bound is pinned to 0. When the controller takes advanced warning
(``warning_ticks`` = W > 0) the trail values chosen at plant tick t land
at tick t + W, and the first W trail ticks are fixed at zero so the
controller's preview history and the plant agree — the session starts
with the upcoming trail already on display.

``exhaustive_worst_case`` tries every candidate sequence (guarded by a
node budget). ``greedy_adversary`` commits one tick at a time, scoring
each candidate by rolling the loop forward ``lookahead`` ticks under
constant corner continuations; the default lookahead is the controller's
total delay, which is exactly the alignment window a delayed loop needs
before a committed disturbance shows up in the error. A lookahead of 0
is the plain one-step greedy.

Replays are bit-exact: both searches advance the plant with the same
``step_plant`` arithmetic as ``run_closed_loop``, so feeding the witness
back through an ``ArraySource`` reproduces the reported supremum to the
last bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import stochastic_bound
from .channels import LoopParams
from .plant import (
    ArraySource,
    DisturbanceSample,
    PlantState,
    SimConfig,
    run_closed_loop,
    step_plant,
)

MAX_EXHAUSTIVE_NODES = 10_000_000


class Corners:
    """Extreme values only: {-bound, +bound}."""

    def candidates(self, bound: float, controller=None) -> tuple[float, ...]:
        return (-bound, bound)


@dataclass(frozen=True)
class Grid:
    """``n`` evenly spaced values spanning [-bound, +bound]."""

    n: int = 3

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"Grid needs n >= 2, got {self.n}")

    def candidates(self, bound: float, controller=None) -> tuple[float, ...]:
        return tuple(float(v) for v in np.linspace(-bound, bound, self.n))


@dataclass(frozen=True)
class CellEdges:
    """Corners plus values that park the quantizer input just inside a
    cell boundary (at distance ``delta``), clipped to the bound.

    The placement reads the controller's current residual, so it is exact
    for zero-latency loops where the chosen value reaches the quantizer
    on the same tick, and a heuristic enrichment otherwise.
    """

    delta: float = 1e-6

    def candidates(self, bound: float, controller=None) -> tuple[float, ...]:
        vals = {-bound, bound}
        quant = getattr(controller, "quantizer", None)
        g = getattr(controller, "_g", None)
        if quant is not None and g is not None:
            for edge in quant.cell_edges():
                for v in (edge - self.delta - g, edge + self.delta - g):
                    vals.add(max(-bound, min(bound, v)))
        return tuple(sorted(vals))


@dataclass(frozen=True)
class AdversaryConfig:
    """Search configuration.

    ``b_bound``/``r_bound`` set the per-channel disturbance magnitude (0
    pins the channel). ``lookahead=None`` defaults the greedy rollout to
    the controller's total delay.
    """

    horizon: int
    b_bound: float = 1.0
    r_bound: float = 0.0
    policy: object = field(default_factory=Grid)
    lookahead: int | None = None

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.b_bound < 0 or self.r_bound < 0:
            raise ValueError("channel bounds must be >= 0")
        if self.b_bound == 0 and self.r_bound == 0:
            raise ValueError("at least one channel bound must be positive")


@dataclass(frozen=True)
class AdversaryResult:
    """Search outcome. The witness arrays are plant-indexed and, when the
    controller previews ``W`` ticks ahead, run ``W`` ticks past the
    horizon so a replay presents the controller with exactly the samples
    the search did (the first ``W`` ticks are zero for the same reason:
    decisions commit at preview time)."""

    sup_x: float
    horizon: int
    witness_b: tuple[float, ...]
    witness_r: tuple[float, ...]
    nodes: int
    method: str

    def replay(self, controller_factory) -> float:
        """Re-run the witness through the standard loop driver; returns
        the sup there (bit-identical to ``sup_x``)."""
        controller = controller_factory()
        source = ArraySource(b=np.array(self.witness_b), r=np.array(self.witness_r))
        traj = run_closed_loop(SimConfig(horizon=self.horizon), source, controller)
        return traj.sup_x()


def _candidate_samples(cfg: AdversaryConfig, controller) -> list[DisturbanceSample]:
    b_vals = (
        cfg.policy.candidates(cfg.b_bound, controller) if cfg.b_bound > 0 else (0.0,)
    )
    r_vals = (
        cfg.policy.candidates(cfg.r_bound, controller) if cfg.r_bound > 0 else (0.0,)
    )
    return [DisturbanceSample(b=b, r=r) for b, r in itertools.product(b_vals, r_vals)]


def _corner_samples(cfg: AdversaryConfig) -> list[DisturbanceSample]:
    b_vals = (-cfg.b_bound, cfg.b_bound) if cfg.b_bound > 0 else (0.0,)
    r_vals = (-cfg.r_bound, cfg.r_bound) if cfg.r_bound > 0 else (0.0,)
    return [DisturbanceSample(b=b, r=r) for b, r in itertools.product(b_vals, r_vals)]


class _LoopCursor:
    """Mutable (plant, controller, committed-disturbance) state the
    searches advance tick by tick. Uses the same plant arithmetic as the
    standard driver so witnesses replay bit-exactly.

    Decisions are committed at preview time: the choice made at plant
    tick t is the sample the controller previews (t + warning on the
    timeline) and lands at the plant ``warning`` ticks later. The first
    ``warning`` plant ticks therefore carry zero disturbance — the
    session starts with its preview horizon already fixed.
    """

    def __init__(self, controller, cfg: AdversaryConfig) -> None:
        self.controller = controller
        self.cfg = cfg
        self.warning = int(getattr(controller, "warning_ticks", 0))
        self.state = PlantState(x=0.0, t=0)
        self.b: list[float] = [0.0] * self.warning
        self.r: list[float] = [0.0] * self.warning

    def snapshot(self) -> tuple:
        return (self.state, len(self.b), self.controller.state())

    def restore(self, snap: tuple) -> None:
        self.state, n, ctrl_state = snap
        del self.b[n:]
        del self.r[n:]
        self.controller.restore(ctrl_state)

    def advance(self, choice: DisturbanceSample) -> float:
        """Commit one tick; returns |x| after the step."""
        t = self.state.t
        self.b.append(choice.b)
        self.r.append(choice.r)
        landing = DisturbanceSample(b=self.b[t], r=self.r[t])
        cmd = self.controller.step(t=t, x=self.state.x, preview=choice)
        self.state = step_plant(self.state, landing.w, cmd.u)
        return abs(self.state.x)


def exhaustive_worst_case(controller_factory, cfg: AdversaryConfig) -> AdversaryResult:
    """Depth-first search over every candidate sequence of length
    ``horizon``; returns the sequence maximizing the trajectory peak |x|.

    Candidate sets are evaluated once at the root (state-dependent
    policies would otherwise change the tree shape mid-search). Raises
    ValueError when the tree exceeds MAX_EXHAUSTIVE_NODES.
    """
    controller = controller_factory()
    samples = _candidate_samples(cfg, controller)
    leaves = len(samples) ** cfg.horizon
    if leaves > MAX_EXHAUSTIVE_NODES:
        raise ValueError(
            f"exhaustive search needs {leaves:,} leaves "
            f"({len(samples)} candidates ^ {cfg.horizon} ticks); "
            f"budget is {MAX_EXHAUSTIVE_NODES:,}"
        )
    cursor = _LoopCursor(controller, cfg)
    best_sup = -1.0
    best_path: tuple[DisturbanceSample, ...] = ()
    path: list[DisturbanceSample] = []
    nodes = 0

    def dfs(depth: int, peak: float) -> None:
        nonlocal best_sup, best_path, nodes
        if depth == cfg.horizon:
            if peak > best_sup:
                best_sup = peak
                best_path = tuple(path)
            return
        snap = cursor.snapshot()
        for s in samples:
            nodes += 1
            mag = cursor.advance(s)
            path.append(s)
            dfs(depth + 1, max(peak, mag))
            path.pop()
            cursor.restore(snap)

    dfs(0, 0.0)
    b, r = _witness_arrays(best_path, cursor.warning)
    return AdversaryResult(sup_x=best_sup, horizon=cfg.horizon, witness_b=b,
                           witness_r=r, nodes=nodes, method="exhaustive")


def greedy_adversary(controller_factory, cfg: AdversaryConfig) -> AdversaryResult:
    """Tick-by-tick commitment with bounded rollout scoring.

    Each candidate is scored by the peak |x| over this tick plus
    ``lookahead`` further ticks in which both channels hold a corner
    value constant (all corner combinations are tried); the candidate
    with the best score is committed. Ties keep the earliest candidate
    in policy order, so runs are deterministic.
    """
    controller = controller_factory()
    cursor = _LoopCursor(controller, cfg)
    lookahead = cfg.lookahead
    if lookahead is None:
        lookahead = max(0, int(getattr(controller, "total_delay", 0)))
    corners = _corner_samples(cfg)
    chosen: list[DisturbanceSample] = []
    nodes = 0
    peak = 0.0
    for _ in range(cfg.horizon):
        samples = _candidate_samples(cfg, controller)
        best_score = -1.0
        best_sample = samples[0]
        snap = cursor.snapshot()
        for s in samples:
            nodes += 1
            score = cursor.advance(s)
            if lookahead > 0:
                mid = cursor.snapshot()
                for corner in corners:
                    for _ in range(lookahead):
                        nodes += 1
                        score = max(score, cursor.advance(corner))
                    cursor.restore(mid)
            if score > best_score:
                best_score = score
                best_sample = s
            cursor.restore(snap)
        peak = max(peak, cursor.advance(best_sample))
        chosen.append(best_sample)
    b, r = _witness_arrays(tuple(chosen), cursor.warning)
    return AdversaryResult(sup_x=peak, horizon=cfg.horizon, witness_b=b,
                           witness_r=r, nodes=nodes, method="greedy")


def _witness_arrays(
    path: tuple[DisturbanceSample, ...], warning: int
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Plant-indexed witness: the choice at plant tick t sits at index
    t + warning (it was committed at preview time), behind a zero
    prefix. The arrays keep the trailing previewed-but-never-landing
    ticks so replays present identical previews."""
    b = tuple([0.0] * warning + [s.b for s in path])
    r = tuple([0.0] * warning + [s.r for s in path])
    return b, r


@dataclass(frozen=True)
class FixedPointResult:
    half_width: float
    residual: float
    iterations: int
    converged: bool


def interval_fixed_point_oracle(
    rate: float, w_bound: float = 1.0, tol: float = 1e-12, max_iter: int = 10_000
) -> FixedPointResult:
    """Iterates the quantizer-range recursion M <- M / 2^R + w_bound from
    M = w_bound until it moves less than ``tol``. The limit is the
    smallest self-consistent range: a residual of at most M/2^R plus a
    fresh disturbance stays inside M. Residual = M*/2^R is the rate term
    of the worst-case bound, w_bound/(2^R - 1).
    """
    if rate <= 0 or not math.isfinite(rate):
        raise ValueError(f"rate must be finite and > 0, got {rate}")
    if w_bound <= 0:
        raise ValueError(f"w_bound must be > 0, got {w_bound}")
    shrink = 2.0 ** rate
    m = w_bound
    for i in range(1, max_iter + 1):
        m_next = m / shrink + w_bound
        if abs(m_next - m) <= tol:
            return FixedPointResult(
                half_width=m_next, residual=m_next / shrink, iterations=i, converged=True
            )
        m = m_next
    return FixedPointResult(half_width=m, residual=m / shrink, iterations=max_iter,
                            converged=False)


@dataclass(frozen=True)
class McCheckResult:
    normalized_mse: float
    bound: float
    sigma_mc: float
    n_seeds: int
    n_ticks: int
    violated: bool
    stationary: bool


def stochastic_mc_check(
    params: LoopParams,
    w_bound: float = 1.0,
    controller_factory=None,
    n_ticks: int = 20_000,
    n_seeds: int = 10,
    seed0: int = 0,
    warmup: int | None = None,
) -> McCheckResult:
    """Monte-Carlo check of the stochastic performance floor.

    Drives the loop with iid disturbances uniform on [-w_bound, w_bound]
    and estimates E[x^2] normalized by the disturbance variance
    (w_bound^2 / 3). ``violated`` flags an estimate more than three
    seed-level standard errors below the bound — which a correct
    implementation can never trip. ``stationary`` is False when the
    second half of the runs is consistently noisier than the first
    (e.g. under the null controller the error random-walks).
    """
    from .controllers import make_optimal_controller

    if controller_factory is None:
        controller_factory = lambda: make_optimal_controller(params, w_bound=w_bound)
    probe = controller_factory()
    if warmup is None:
        warmup = max(64, 4 * (int(getattr(probe, "total_delay", 0)) + 8))
    if n_ticks <= 2 * warmup:
        raise ValueError(f"n_ticks={n_ticks} too short for warmup={warmup}")
    var_w = w_bound * w_bound / 3.0
    mses = np.empty(n_seeds)
    half_ratio = np.empty(n_seeds)
    for i in range(n_seeds):
        rng = np.random.default_rng(seed0 + i)
        b = rng.uniform(-w_bound, w_bound, size=n_ticks)
        source = ArraySource(b=b)
        traj = run_closed_loop(
            SimConfig(horizon=n_ticks, warmup_ticks=warmup), source, controller_factory()
        )
        xs = traj.x[warmup:]
        sq = xs * xs
        mses[i] = sq.mean() / var_w
        mid = len(sq) // 2
        first = sq[:mid].mean()
        second = sq[mid:].mean()
        half_ratio[i] = second / first if first > 0 else np.inf
    estimate = float(mses.mean())
    sigma = float(mses.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
    bound = stochastic_bound(params).total
    return McCheckResult(
        normalized_mse=estimate,
        bound=bound,
        sigma_mc=sigma,
        n_seeds=n_seeds,
        n_ticks=n_ticks,
        violated=estimate < bound - 3.0 * sigma,
        stationary=bool(np.median(half_ratio) < 1.25),
    )
