"""Controller constructions.

The central object is :class:`QuantizedController`, the feedforward
interval construction that meets the worst-case bound with equality. It
dead-reckons the part of the error it can know, ``g``, and spends its
entire per-tick information budget describing ``-g``:

    g  <-  g + (newly learned disturbance)
    u  =  -quantize(g)
    g  <-  g + u

With the quantizer range at the fixed point M = w_bound * 2^R / (2^R - 1)
of M -> M/2^R + w_bound, the residual ``g`` never leaves [-M/2^R, M/2^R],
the quantizer never saturates, and the error obeys

    |x(t)|  <=  max(0, T) * w_bound  +  w_bound / (2^R - 1)

where T is the loop's total delay: the last max(0, T) disturbance ticks
are unknowable (the delay term), everything older is cancelled up to
quantization (the rate term). Advanced warning beyond the latency is
buffered, not acted on early, which is why T <= 0 collapses to the T = 0
behavior.

The feedback variant senses the delayed state instead of the disturbance,
reconstructs disturbances one tick later than the feedforward pattern
would, and is therefore checked empirically against (never below) the
bound rather than proven tight.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .bounds import LayeredParams, layered_bound, rate_error_term
from .channels import DelayLine, LoopParams, UniformQuantizer
from .plant import ControlCommand, DisturbanceSample


def _int_ticks(value: float, name: str) -> int:
    iv = round(value)
    if abs(value - iv) > 1e-9:
        raise ValueError(f"{name} must be a whole number of ticks to simulate, got {value}")
    return int(iv)


class NullController:
    """Emits u = 0 forever."""

    warning_ticks = 0
    total_delay = 0

    def step(self, t: int, x: float, preview: DisturbanceSample) -> ControlCommand:
        return ControlCommand()

    def state(self) -> tuple:
        return ()

    def restore(self, state: tuple) -> None:
        pass

    def fresh(self) -> "NullController":
        return NullController()


class QuantizedController:
    """Rate-limited dead-reckoning controller for one disturbance channel.

    mode "feedforward": observes the disturbance stream through the loop's
    signaling path (warning tap ahead, internal delay line behind).
    mode "feedback": observes the delayed state x(t - T_s - T_i) and
    reconstructs disturbances from state differences and its own command
    history.
    """

    def __init__(
        self,
        params: LoopParams,
        w_bound: float = 1.0,
        mode: str = "feedforward",
        channel: str = "w",
    ) -> None:
        if not (w_bound > 0 and math.isfinite(w_bound)):
            raise ValueError(f"w_bound must be finite and > 0, got {w_bound}")
        if mode not in ("feedforward", "feedback"):
            raise ValueError(f"mode must be feedforward or feedback, got {mode!r}")
        if channel not in ("w", "b", "r"):
            raise ValueError(f"channel must be one of w/b/r, got {channel!r}")

        self.params = params
        self.w_bound = float(w_bound)
        self.mode = mode
        self.channel = channel

        latency = _int_ticks(params.signal_delay + params.internal_delay, "latency")
        warning = _int_ticks(params.warning, "warning")
        if mode == "feedback":
            if warning != 0:
                raise ValueError("feedback mode cannot preview the state")
            self.warning_ticks = 0
            self._line = DelayLine(latency)
            # One extra tick: the freshest reconstructable disturbance from
            # x(t - latency) is w(t - latency - 1).
            self.total_delay = latency + 1
            self._u_hist: deque = deque([0.0] * (latency + 1))
            self._y_prev = 0.0
        else:
            self.warning_ticks = warning
            total = latency - warning
            # Warning beyond the latency is buffered so knowledge is used
            # exactly when the disturbance enters the plant, never earlier.
            self._line = DelayLine(latency + max(0, -total))
            self.total_delay = max(0, total)

        m = self.w_bound * (1.0 + rate_error_term(params.rate))
        self.quantizer = UniformQuantizer(bits_per_tick=params.rate, half_width=m)
        self._g = 0.0

    @property
    def saturation_count(self) -> int:
        return self.quantizer.saturation_count

    def _advance(self, learned: float) -> float:
        g = self._g + learned
        q = self.quantizer.quantize(g)
        self._g = g - q
        return -q

    def step(self, t: int, x: float, preview: DisturbanceSample) -> ControlCommand:
        if self.mode == "feedforward":
            v = getattr(preview, self.channel)
            u = self._advance(self._line.push(v))
        else:
            y = self._line.push(x)
            learned = y - self._y_prev - self._u_hist.popleft()
            self._y_prev = y
            u = self._advance(learned)
            self._u_hist.append(u)
        return ControlCommand(u_low=u)

    # Cheap snapshot/restore so adversarial search can probe candidate
    # disturbances on a single live instance.
    def state(self) -> tuple:
        if self.mode == "feedback":
            return (self._g, self._line.state(), self.quantizer.state(),
                    self._y_prev, tuple(self._u_hist))
        return (self._g, self._line.state(), self.quantizer.state())

    def restore(self, state: tuple) -> None:
        self._g = state[0]
        self._line.restore(state[1])
        self.quantizer.restore(state[2])
        if self.mode == "feedback":
            self._y_prev = state[3]
            self._u_hist = deque(state[4])

    def fresh(self) -> "QuantizedController":
        return QuantizedController(self.params, self.w_bound, self.mode, self.channel)


def make_optimal_controller(
    params: LoopParams,
    w_bound: float = 1.0,
    mode: str = "feedforward",
    channel: str = "w",
) -> QuantizedController:
    """Bound-achieving controller for a single loop."""
    return QuantizedController(params, w_bound=w_bound, mode=mode, channel=channel)


class LayeredController:
    """Two isolated loops sharing one plant: a reflex loop that sees only
    bumps and a planning loop that sees only the (previewed) trail.

    The driver hands every controller a single preview tap, taken
    ``warning_ticks`` ahead; the planning loop consumes it directly while
    the reflex path first delays the bump channel back to the present so
    trail warning never leaks into bump handling.
    """

    def __init__(self, reflex, planning) -> None:
        self.reflex = reflex
        self.planning = planning
        self.warning_ticks = int(getattr(planning, "warning_ticks", 0))
        self._bump_align = DelayLine(self.warning_ticks)
        self.total_delay = max(
            getattr(reflex, "total_delay", 0), getattr(planning, "total_delay", 0)
        )

    def step(self, t: int, x: float, preview: DisturbanceSample) -> ControlCommand:
        b_now = self._bump_align.push(preview.b)
        low = self.reflex.step(t, x, DisturbanceSample(b=b_now, r=0.0))
        high = self.planning.step(t, x, DisturbanceSample(b=0.0, r=preview.r))
        return ControlCommand(u_low=low.u, u_high=high.u)

    def state(self) -> tuple:
        return (self._bump_align.state(), self.reflex.state(), self.planning.state())

    def restore(self, state: tuple) -> None:
        self._bump_align.restore(state[0])
        self.reflex.restore(state[1])
        self.planning.restore(state[2])

    def fresh(self) -> "LayeredController":
        return LayeredController(self.reflex.fresh(), self.planning.fresh())


def make_layered_controller(lp: LayeredParams, r_bound: float = 1.0) -> LayeredController:
    """Layered controller at the given two-layer parameters.

    Raises RegimeViolation unless the planning warning strictly exceeds
    the planning latency. A zero bump amplitude (epsilon = 0) degenerates
    the reflex layer to the null controller.
    """
    layered_bound(lp)  # regime check
    b_bound = lp.epsilon * r_bound
    if b_bound > 0:
        reflex = QuantizedController(lp.reflex, w_bound=b_bound, channel="b")
    else:
        reflex = NullController()
    planning = QuantizedController(lp.planning, w_bound=r_bound, channel="r")
    return LayeredController(reflex, planning)


@dataclass(frozen=True)
class PilotModel:
    """Synthetic human stand-in for experiment campaigns.

    All values are artifact plumbing, exposed as configuration:
    ``reaction_delay`` is the visual-motor lag in ticks, ``effective_rate``
    the resolution of the intended correction in bits (None = unlimited),
    ``motor_noise_std`` the per-tick Gaussian command noise and
    ``noise_scaling`` its signal-dependent part (noise grows with command
    magnitude, as human motor noise does), ``gain`` the fraction of the
    perceived error corrected per tick.
    ``efference_gain`` weights the efference copy: at 1 the pilot fully
    discounts its own in-flight commands (critically damped), below 1 it
    re-corrects errors it has already addressed and overshoots, the
    underdamped ringing characteristic of human tracking.
    ``est_half_width`` bounds the internal estimate scale and
    ``authority`` clamps the command. ``slew_limit`` caps how far the
    command can move per tick (how fast the hand can turn the wheel);
    None leaves it uncapped. ``view_half_width`` is the visible extent of
    the display: once the error exceeds it the pilot only knows the
    cursor is off-screen in some direction (its perceived error saturates
    at the edge), so large excursions recover at a capped pace; None
    models an unbounded display.
    ``attention_std`` and ``attention_tau_ticks`` model vigilance
    fluctuations: a slowly varying lognormal attention level multiplies
    the corrective gain (clipped so full attention never exceeds it).
    Lapses on a seconds timescale dominate trial-to-trial variability in
    human tracking, and each run of a trial draws its own lapse history.
    ``attention_std`` is the stationary log-level spread (0 disables) and
    ``attention_tau_ticks`` the correlation time.
    ``workload_gain`` models dual-task interference: resisting a felt
    kick competes with visual tracking, so attention sags in proportion
    to recently felt torque (an exponential average of |felt b| with
    time constant ``workload_tau_ticks``). Tracking degrades while a
    kick is being handled — beyond what kick and trail would cost
    separately — as in human dual-task data. 0 disables.
    ``reflex_gain`` and ``reflex_delay_ticks`` model the proprioceptive
    pathway: pulse disturbances are felt as torque in the hand and
    resisted long before the visual loop can see their effect. The
    pathway counters ``reflex_gain`` of the felt disturbance
    ``reflex_delay_ticks`` after it lands; 0 ticks means within-tick
    passive resistance (grip impedance — co-contraction stiffness acts
    with no neural latency at a 50 ms tick), 1+ a spinal-loop latency.
    The visual loop cleans up the remainder. ``reflex_gain = 0``
    disables the pathway (a purely visual pilot).
    """

    reaction_delay: int = 4
    effective_rate: float | None = 4.0
    motor_noise_std: float = 0.05
    noise_scaling: float = 0.0
    gain: float = 0.8
    efference_gain: float = 1.0
    est_half_width: float = 8.0
    authority: float = 2.5
    slew_limit: float | None = None
    view_half_width: float | None = None
    attention_std: float = 0.9
    attention_tau_ticks: int = 12
    workload_gain: float = 2.4
    workload_tau_ticks: int = 12
    reflex_gain: float = 1.0
    reflex_delay_ticks: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.reaction_delay, int) and self.reaction_delay >= 0):
            raise ValueError(f"reaction_delay must be an integer >= 0, got {self.reaction_delay!r}")
        if self.effective_rate is not None and not (self.effective_rate > 0):
            raise ValueError(f"effective_rate must be > 0 or None, got {self.effective_rate}")
        if not (self.motor_noise_std >= 0):
            raise ValueError(f"motor_noise_std must be >= 0, got {self.motor_noise_std}")
        if not (self.noise_scaling >= 0):
            raise ValueError(f"noise_scaling must be >= 0, got {self.noise_scaling}")
        if not (0 < self.gain <= 1):
            raise ValueError(f"gain must be in (0, 1], got {self.gain}")
        if not (0 <= self.efference_gain <= 1):
            raise ValueError(f"efference_gain must be in [0, 1], got {self.efference_gain}")
        if not (self.est_half_width > 0 and self.authority > 0):
            raise ValueError("est_half_width and authority must be > 0")
        if self.slew_limit is not None and not (self.slew_limit > 0):
            raise ValueError(f"slew_limit must be > 0 or None, got {self.slew_limit}")
        if self.view_half_width is not None and not (self.view_half_width > 0):
            raise ValueError(
                f"view_half_width must be > 0 or None, got {self.view_half_width}"
            )
        if not (self.attention_std >= 0):
            raise ValueError(f"attention_std must be >= 0, got {self.attention_std}")
        if not (isinstance(self.attention_tau_ticks, int) and self.attention_tau_ticks >= 1):
            raise ValueError(
                f"attention_tau_ticks must be an integer >= 1, got {self.attention_tau_ticks!r}"
            )
        if not (self.workload_gain >= 0):
            raise ValueError(f"workload_gain must be >= 0, got {self.workload_gain}")
        if not (isinstance(self.workload_tau_ticks, int) and self.workload_tau_ticks >= 1):
            raise ValueError(
                f"workload_tau_ticks must be an integer >= 1, got {self.workload_tau_ticks!r}"
            )
        if not (0 <= self.reflex_gain <= 1):
            raise ValueError(f"reflex_gain must be in [0, 1], got {self.reflex_gain}")
        if not (isinstance(self.reflex_delay_ticks, int) and self.reflex_delay_ticks >= 0):
            raise ValueError(
                f"reflex_delay_ticks must be an integer >= 0, got {self.reflex_delay_ticks!r}"
            )


class PilotController:
    """Dead-reckoning proportional pilot.

    Each tick it forms an estimate of the error its committed commands
    have not yet corrected, from the reaction-delayed view of the cursor,
    an efference copy of commands still in flight, and the part of the
    trail the display has already shown it:

        est = x(t - rho) + (commands committed since then)
                         + (displayed trail drift since then)

    and commands ``u = clamp(-gain * Q(est) + noise)``. ``Q`` is a
    zero-preserving rounding at ``effective_rate`` bits so a quiet pilot
    holds still. ``actuation_lag`` models a trained-in actuation delay
    (the pilot widens its efference window to match); ``display_shift``
    models the display running ahead of the dynamics (advanced warning).
    """

    def __init__(
        self,
        pm: PilotModel,
        seed: int | None = 0,
        actuation_lag: int = 0,
        display_shift: int = 0,
    ) -> None:
        if actuation_lag < 0 or display_shift < 0:
            raise ValueError("actuation_lag and display_shift must be >= 0")
        self.pm = pm
        self.seed = seed
        self.actuation_lag = int(actuation_lag)
        self.display_shift = int(display_shift)
        self.warning_ticks = self.display_shift
        rho = pm.reaction_delay
        self.total_delay = rho + self.actuation_lag
        self._rng = np.random.default_rng(seed)
        self._x_buf: deque = deque([0.0] * (rho + 1), maxlen=rho + 1)
        self._r_buf: deque = deque(
            [0.0] * (rho + self.display_shift + 1), maxlen=rho + self.display_shift + 1
        )
        shift1 = self.display_shift + 1
        self._b_buf: deque = deque([0.0] * shift1, maxlen=shift1)
        landed = max(rho, pm.reflex_delay_ticks) + 1
        self._landed_b: deque = deque([0.0] * landed, maxlen=landed)
        window = rho + self.actuation_lag
        self._u_pend: deque = deque([0.0] * window, maxlen=window)
        self._u_prev = 0.0
        if pm.effective_rate is None:
            self._qfloor = 0.0
            self._qlstep = 0.0
        else:
            # Companded (Weber-law) quantizer: 2^rate magnitude levels
            # spaced geometrically over rate+2 octaves below the range
            # top, so precision is relative — fine near zero, coarse at
            # the edge of the range — with a perceptual dead zone below
            # the bottom level, as human magnitude estimation is.
            octaves = pm.effective_rate + 2.0
            self._qfloor = pm.est_half_width / 2.0**octaves
            self._qlstep = octaves * math.log(2.0) / (2.0**pm.effective_rate - 1.0)
        if pm.attention_std > 0:
            self._att_phi = float(np.exp(-1.0 / pm.attention_tau_ticks))
            self._att_drive = pm.attention_std * float(np.sqrt(1.0 - self._att_phi**2))
            self._att_log = pm.attention_std * float(self._rng.standard_normal())
        else:
            self._att_phi = 0.0
            self._att_drive = 0.0
            self._att_log = 0.0
        self._effort = 0.0

    def _quantize(self, v: float) -> float:
        if self._qlstep == 0.0:
            return v
        mag = abs(v)
        if mag < self._qfloor:
            return 0.0
        k = round(math.log(mag / self._qfloor) / self._qlstep)
        q = self._qfloor * math.exp(k * self._qlstep)
        q = min(q, self.pm.est_half_width)
        return math.copysign(q, v)

    def step(self, t: int, x: float, preview: DisturbanceSample) -> ControlCommand:
        self._x_buf.append(x)
        self._r_buf.append(preview.r)
        self._b_buf.append(preview.b)
        self._landed_b.append(self._b_buf[0])
        x_obs = self._x_buf[0]
        view = self.pm.view_half_width
        if view is not None:
            x_obs = max(-view, min(view, x_obs))
        shown_drift = 0.0
        for i in range(self.display_shift):
            shown_drift += self._r_buf[i]
        felt_drift = 0.0
        if self.pm.reflex_gain > 0:
            # Torque felt since the observation being acted on: the kicks
            # that landed in the last reaction_delay ticks moved the
            # cursor after x_obs was registered.
            for k in range(2, self.pm.reaction_delay + 2):
                felt_drift += self._landed_b[-k]
        est = x_obs + self.pm.efference_gain * sum(self._u_pend) + shown_drift + felt_drift
        gain = self.pm.gain
        if self.pm.attention_std > 0 or self.pm.workload_gain > 0:
            # Attention is bounded: even deep lapses leave over a fifth
            # of tracking intact (keeping the loop stable against the
            # steepest trail), and full attention never exceeds the
            # nominal gain.
            level = self._att_log - self.pm.workload_gain * self._effort
            gain *= float(np.exp(min(0.0, max(-1.5, level))))
        if self.pm.attention_std > 0:
            self._att_log = self._att_phi * self._att_log + self._att_drive * float(
                self._rng.standard_normal()
            )
        u = -gain * self._quantize(est)
        if self.pm.reflex_gain > 0:
            u -= self.pm.reflex_gain * self._landed_b[-(self.pm.reflex_delay_ticks + 1)]
        sigma = self.pm.motor_noise_std + self.pm.noise_scaling * abs(u)
        if sigma > 0:
            u += sigma * self._rng.standard_normal()
        if self.pm.slew_limit is not None:
            s = self.pm.slew_limit
            u = max(self._u_prev - s, min(self._u_prev + s, u))
        a = self.pm.authority
        u = max(-a, min(a, u))
        self._u_prev = u
        self._u_pend.append(u)
        self._effort += (abs(self._landed_b[-1]) - self._effort) / self.pm.workload_tau_ticks
        return ControlCommand(u_low=u)

    def fresh(self) -> "PilotController":
        return PilotController(self.pm, self.seed, self.actuation_lag, self.display_shift)


def make_pilot(
    pm: PilotModel,
    seed: int | None = 0,
    actuation_lag: int = 0,
    display_shift: int = 0,
) -> PilotController:
    return PilotController(pm, seed=seed, actuation_lag=actuation_lag, display_shift=display_shift)
