"""Signal-path building blocks: delay lines, rate-limited quantizers, and
the component-level speed-accuracy laws that tie a channel's delay to its
information rate.

Everything here is deterministic and tick-based. A tick is the simulation
quantum (0.05 s at the default 20 Hz); delays are integer tick counts,
rates are bits per tick and may be fractional (realized by time
multiplexing, see :class:`UniformQuantizer`).
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field


class Encoding(enum.Enum):
    """How a component converts transmission time into resolution."""

    SPIKE_BASED = "spike-based"
    RATE_BASED = "rate-based"


@dataclass(frozen=True)
class ComponentBudget:
    """Resource budget of one signaling component.

    ``lambda_cost`` is the proportionality constant between time spent
    signaling and information delivered, in bits per tick per tick.
    """

    lambda_cost: float
    encoding: Encoding = Encoding.SPIKE_BASED

    def __post_init__(self) -> None:
        if not (self.lambda_cost > 0 and math.isfinite(self.lambda_cost)):
            raise ValueError(f"lambda_cost must be finite and > 0, got {self.lambda_cost}")
        if not isinstance(self.encoding, Encoding):
            raise TypeError(f"encoding must be an Encoding, got {self.encoding!r}")


def sat_rate_spike(budget: ComponentBudget, signal_delay: float) -> float:
    """Rate bought by spending ``signal_delay`` ticks in a spike-based component.

    Spike timing carries information in parallel across the delay, so the
    rate grows linearly: R = lambda * T_s.
    """
    if budget.encoding is not Encoding.SPIKE_BASED:
        raise ValueError("sat_rate_spike requires a SPIKE_BASED budget")
    if not (signal_delay > 0 and math.isfinite(signal_delay)):
        raise ValueError(f"signal_delay must be finite and > 0, got {signal_delay}")
    return budget.lambda_cost * signal_delay


def sat_rate_based(budget: ComponentBudget, total_time: float) -> float:
    """Rate bought by spending ``total_time`` ticks in a rate-based component.

    Sequential (firing-rate) encoding splits the time between buildup and
    readout, so only half of it buys resolution: R = lambda * T / 2.
    """
    if budget.encoding is not Encoding.RATE_BASED:
        raise ValueError("sat_rate_based requires a RATE_BASED budget")
    if not (total_time > 0 and math.isfinite(total_time)):
        raise ValueError(f"total_time must be finite and > 0, got {total_time}")
    return budget.lambda_cost * total_time / 2.0


@dataclass(frozen=True)
class LoopParams:
    """Delays, warning, and rate of one control loop.

    ``signal_delay`` (T_s) and ``internal_delay`` (T_i) add latency between
    sensing and acting; ``warning`` (T_a) is how far ahead the disturbance
    is visible. The delay that matters for performance is the difference::

        total_delay = signal_delay + internal_delay - warning

    Negative total delay means the loop sees disturbances before they hit
    (a preview, never a non-causal channel). Fields are floats so that the
    composition optimizer can move continuously; simulating controllers
    require integer tick counts and validate at construction.
    """

    signal_delay: float = 0.0
    internal_delay: float = 0.0
    warning: float = 0.0
    rate: float = 1.0

    def __post_init__(self) -> None:
        for name in ("signal_delay", "internal_delay", "warning"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and > 0, got {self.rate}")

    @property
    def total_delay(self) -> float:
        return self.signal_delay + self.internal_delay - self.warning

    @classmethod
    def from_total(cls, total_delay: float, rate: float) -> "LoopParams":
        """Minimal parameter set realizing a given total delay.

        Nonnegative totals go into ``signal_delay``; negative totals are
        expressed as pure advanced warning.
        """
        if total_delay >= 0:
            return cls(signal_delay=total_delay, rate=rate)
        return cls(warning=-total_delay, rate=rate)


class DelayLine:
    """Fixed-length FIFO delay: push a sample, get back the one from
    ``length`` ticks ago. The first ``length`` pushes emit ``fill``.
    """

    def __init__(self, length: int, fill: float = 0.0) -> None:
        if not (isinstance(length, (int,)) and length >= 0):
            raise ValueError(f"length must be an integer >= 0, got {length!r}")
        self.length = length
        self.fill = fill
        self._buf: deque = deque([fill] * length)

    def push(self, sample: float):
        self._buf.append(sample)
        return self._buf.popleft()

    def peek_oldest(self):
        """Next value that push() would emit, without advancing."""
        return self._buf[0] if self._buf else None

    def state(self) -> tuple:
        return tuple(self._buf)

    def restore(self, state: tuple) -> None:
        self._buf = deque(state)

    def __len__(self) -> int:
        return self.length


# Super-frame length over which fractional bit budgets are multiplexed.
MULTIPLEX_FRAME = 8


def _bit_schedule(bits_per_tick: float, frame: int = MULTIPLEX_FRAME) -> tuple:
    """Integer bits per tick over one multiplex super-frame.

    Bresenham-style allotment: tick i carries floor((i+1)*R) - floor(i*R)
    bits, so each frame carries floor(frame*R) bits total and the long-run
    average rate is R (exactly R when frame*R is integral).
    """
    sched = []
    prev = 0
    for i in range(1, frame + 1):
        cur = math.floor(i * bits_per_tick + 1e-12)
        sched.append(cur - prev)
        prev = cur
    return tuple(sched)


@dataclass
class UniformQuantizer:
    """Midpoint uniform quantizer over ``[-M, M]``.

    The range is split into ``N = 2**bits`` equal half-open cells
    ``[a, a + 2M/N)`` (the last cell closed at ``M``); the output is the
    midpoint of the cell containing the input, so ``|v - q(v)| <= M/N``
    within range. Out-of-range inputs clamp to the end cells and are
    counted in ``saturation_count`` rather than raising.

    Fractional ``bits_per_tick`` is realized by time multiplexing: calls
    cycle through an 8-tick schedule of integer bit counts whose average
    is the requested rate. A 0-bit tick has a single cell and emits 0.
    """

    bits_per_tick: float
    half_width: float
    saturation_count: int = 0
    _phase: int = 0
    _schedule: tuple = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not (self.bits_per_tick > 0 and math.isfinite(self.bits_per_tick)):
            raise ValueError(f"bits_per_tick must be finite and > 0, got {self.bits_per_tick}")
        if self.bits_per_tick > 40:
            raise ValueError(f"bits_per_tick above 40 is not representable, got {self.bits_per_tick}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be finite and > 0, got {self.half_width}")
        if self._schedule is None:
            self._schedule = _bit_schedule(self.bits_per_tick)

    @property
    def cells(self) -> int:
        """Cell count of the current tick's quantization."""
        return 1 << self._schedule[self._phase]

    def quantize(self, v: float) -> float:
        """Quantize one sample and advance the multiplex phase."""
        if not math.isfinite(v):
            raise ValueError(f"quantizer input must be finite, got {v}")
        n = self.cells
        self._phase = (self._phase + 1) % len(self._schedule)
        m = self.half_width
        if v < -m:
            self.saturation_count += 1
            v = -m
        elif v > m:
            self.saturation_count += 1
            v = m
        if n == 1:
            return 0.0
        width = 2.0 * m / n
        idx = int((v + m) // width)
        if idx >= n:
            idx = n - 1
        midpoint = -m + (idx + 0.5) * width
        return midpoint

    def state(self) -> tuple:
        return (self._phase, self.saturation_count)

    def restore(self, state: tuple) -> None:
        self._phase, self.saturation_count = state

    def cell_edges(self) -> list:
        """Interior cell boundaries of the current tick's quantization."""
        n = self.cells
        m = self.half_width
        width = 2.0 * m / n
        return [-m + i * width for i in range(1, n)]
