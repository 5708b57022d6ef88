"""Scalar error dynamics and the closed-loop simulation driver.

The plant is the one-dimensional integrator

    x(t+1) = x(t) + w(t) + u(t)

where ``x`` is the tracking error, ``w`` the per-tick disturbance, and
``u`` the control. Disturbances split into a rough component ``b`` (bumps)
and a reference component ``r`` (trail drift), ``w = b + r``; controls
split into ``u = u_low + u_high`` so layered controllers can be analyzed
channel by channel. All state is float64, time is an integer tick count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Wall-clock length of one tick in seconds (20 Hz).
TICK_SECONDS = 0.05


class SimulationError(RuntimeError):
    """Raised when a closed-loop run cannot continue (non-finite values)."""


@dataclass(frozen=True)
class PlantState:
    x: float = 0.0
    t: int = 0


@dataclass(frozen=True)
class DisturbanceSample:
    """One tick of disturbance, split into bump and trail channels."""

    b: float = 0.0
    r: float = 0.0

    @property
    def w(self) -> float:
        return self.b + self.r


@dataclass(frozen=True)
class ControlCommand:
    """One tick of control, split into low (reflex) and high (planning)
    layer contributions. Single-loop controllers emit everything on
    ``u_low`` by convention.
    """

    u_low: float = 0.0
    u_high: float = 0.0

    @property
    def u(self) -> float:
        return self.u_low + self.u_high


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    tick_seconds: float = TICK_SECONDS
    warmup_ticks: int = 0
    seed: int | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.horizon, int) and self.horizon > 0):
            raise ValueError(f"horizon must be an integer > 0, got {self.horizon!r}")
        if not (self.tick_seconds > 0 and math.isfinite(self.tick_seconds)):
            raise ValueError(f"tick_seconds must be finite and > 0, got {self.tick_seconds}")
        if not (isinstance(self.warmup_ticks, int) and 0 <= self.warmup_ticks < self.horizon):
            raise ValueError(
                f"warmup_ticks must be an integer in [0, horizon), got {self.warmup_ticks!r}"
            )


def step_plant(state: PlantState, w: float, u: float) -> PlantState:
    """Advance the integrator one tick."""
    nxt = state.x + w + u
    if not math.isfinite(nxt):
        raise SimulationError(
            f"non-finite plant update at tick {state.t}: x={state.x} w={w} u={u}"
        )
    return PlantState(x=nxt, t=state.t + 1)


class DisturbanceSource:
    """Committed disturbance schedule, addressable at any tick.

    ``at(t)`` must return the same sample every time it is asked for the
    same tick, including ticks ahead of the simulation clock; that is what
    makes advanced warning (preview) well defined. Ticks outside the
    schedule are zero.
    """

    def at(self, t: int) -> DisturbanceSample:  # pragma: no cover - interface
        raise NotImplementedError


class ZeroSource(DisturbanceSource):
    def at(self, t: int) -> DisturbanceSample:
        return DisturbanceSample()


class ArraySource(DisturbanceSource):
    """Schedule backed by per-tick arrays for the two channels."""

    def __init__(self, b=None, r=None) -> None:
        self.b = np.asarray(b, dtype=float) if b is not None else None
        self.r = np.asarray(r, dtype=float) if r is not None else None

    def _get(self, arr, t: int) -> float:
        if arr is None or t < 0 or t >= len(arr):
            return 0.0
        return float(arr[t])

    def at(self, t: int) -> DisturbanceSample:
        return DisturbanceSample(b=self._get(self.b, t), r=self._get(self.r, t))


@dataclass
class Trajectory:
    """Closed-loop run record: one entry per tick ``t = 0 .. horizon-1``
    holding the pre-step state ``x(t)`` and the signals applied during the
    tick, plus the terminal state ``final_x = x(horizon)``.
    """

    t: np.ndarray
    x: np.ndarray
    w: np.ndarray
    b: np.ndarray
    r: np.ndarray
    u: np.ndarray
    u_low: np.ndarray
    u_high: np.ndarray
    final_x: float
    warmup_ticks: int = 0

    def __len__(self) -> int:
        return len(self.t)

    def sup_x(self, include_warmup: bool = False) -> float:
        """Largest |x| over the run (post-warmup by default), including
        the terminal state."""
        xs = np.append(self.x, self.final_x)
        if not include_warmup:
            xs = xs[self.warmup_ticks:]
        return float(np.max(np.abs(xs)))

    def records(self):
        for i in range(len(self.t)):
            yield {
                "tick": int(self.t[i]),
                "x": float(self.x[i]),
                "w": float(self.w[i]),
                "b": float(self.b[i]),
                "r": float(self.r[i]),
                "u": float(self.u[i]),
                "u_low": float(self.u_low[i]),
                "u_high": float(self.u_high[i]),
            }


def run_closed_loop(cfg: SimConfig, source: DisturbanceSource, controller) -> Trajectory:
    """Run the plant against a controller for ``cfg.horizon`` ticks.

    The driver enforces the information pattern: at tick ``t`` the
    controller is handed the current state ``x(t)`` and the disturbance
    sample ``warning_ticks`` ahead of the clock; any further delaying
    happens inside the controller's own signal path. Controllers advertise
    their preview need through a ``warning_ticks`` attribute (0 if absent).
    """
    warning = int(getattr(controller, "warning_ticks", 0) or 0)
    if warning < 0:
        raise ValueError(f"warning_ticks must be >= 0, got {warning}")

    n = cfg.horizon
    t_arr = np.arange(n, dtype=int)
    x_arr = np.empty(n)
    w_arr = np.empty(n)
    b_arr = np.empty(n)
    r_arr = np.empty(n)
    u_arr = np.empty(n)
    ul_arr = np.empty(n)
    uh_arr = np.empty(n)

    state = PlantState()
    for t in range(n):
        sample = source.at(t)
        preview = source.at(t + warning) if warning else sample
        cmd = controller.step(t=t, x=state.x, preview=preview)
        if not isinstance(cmd, ControlCommand):
            cmd = ControlCommand(u_low=float(cmd))
        if not math.isfinite(cmd.u):
            raise SimulationError(
                f"controller emitted non-finite u at tick {t}: "
                f"u_low={cmd.u_low} u_high={cmd.u_high} x={state.x}"
            )
        x_arr[t] = state.x
        w_arr[t] = sample.w
        b_arr[t] = sample.b
        r_arr[t] = sample.r
        u_arr[t] = cmd.u
        ul_arr[t] = cmd.u_low
        uh_arr[t] = cmd.u_high
        state = step_plant(state, sample.w, cmd.u)

    return Trajectory(
        t=t_arr, x=x_arr, w=w_arr, b=b_arr, r=r_arr,
        u=u_arr, u_low=ul_arr, u_high=uh_arr,
        final_x=state.x, warmup_ticks=cfg.warmup_ticks,
    )
