"""Closed-form lower bounds on tracking error for delay- and rate-limited
loops, with the exact delay/rate decomposition used everywhere else.

For a loop with total delay T (ticks) and rate R (bits per tick), against
disturbances bounded by 1 per tick:

    worst case:   sup |x|  >=  max(0, T) + 1 / (2**R - 1)
    stochastic:   E[x^2]   >=  max(0, T) + 1 / (2**(2R) - 1)

(stochastic side normalized by disturbance variance). The two terms are
reported separately because they trade off against each other through the
component speed-accuracy laws: spending more time signaling raises T but
buys rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import LoopParams


class RegimeViolation(ValueError):
    """Layered formula asked for outside its validity regime."""


@dataclass(frozen=True)
class ErrorDecomposition:
    """Delay and rate error terms; ``total`` is their exact sum."""

    delay_error: float
    rate_error: float

    def __post_init__(self) -> None:
        if self.delay_error < 0:
            raise ValueError(f"delay_error must be >= 0, got {self.delay_error}")
        if not (self.rate_error >= 0 and math.isfinite(self.rate_error)):
            raise ValueError(f"rate_error must be finite and >= 0, got {self.rate_error}")

    @property
    def total(self) -> float:
        return self.delay_error + self.rate_error


def _pow2m1(r: float) -> float:
    """2**r - 1, accurately for small r and without overflow for huge r."""
    z = r * math.log(2.0)
    if z > 700.0:
        return math.inf
    return math.expm1(z)


def rate_error_term(rate: float, squared: bool = False) -> float:
    """1/(2**R - 1), or 1/(2**(2R) - 1) for the mean-square version."""
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError(f"rate must be finite and > 0, got {rate}")
    d = _pow2m1(2.0 * rate if squared else rate)
    return 0.0 if math.isinf(d) else 1.0 / d


def worst_case_bound(p: LoopParams) -> ErrorDecomposition:
    """Worst-case error floor of any causal controller at these loop
    parameters, per unit of disturbance bound."""
    return ErrorDecomposition(
        delay_error=max(0.0, p.total_delay),
        rate_error=rate_error_term(p.rate),
    )


def stochastic_bound(p: LoopParams) -> ErrorDecomposition:
    """Mean-square error floor (normalized by disturbance variance)."""
    return ErrorDecomposition(
        delay_error=max(0.0, p.total_delay),
        rate_error=rate_error_term(p.rate, squared=True),
    )


@dataclass(frozen=True)
class LayeredParams:
    """Two-layer loop description.

    ``reflex`` reacts to bumps: signal_delay is its signaling delay,
    internal_delay the shared internal latency, no warning. ``planning``
    handles the previewed trail: signal_delay is its signaling delay and
    ``warning`` how far ahead the trail is visible. ``epsilon`` is the
    bump-to-trail amplitude ratio.
    """

    epsilon: float
    reflex: LoopParams
    planning: LoopParams

    def __post_init__(self) -> None:
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.reflex.warning != 0:
            raise ValueError("reflex layer cannot have advanced warning of bumps")


@dataclass(frozen=True)
class LayeredBound:
    reflex_part: float
    planning_part: float

    @property
    def total(self) -> float:
        return self.reflex_part + self.planning_part


def layered_bound(lp: LayeredParams) -> LayeredBound:
    """Worst-case error decomposition of the layered architecture.

    Valid only when the planning layer's warning strictly exceeds its
    latency (the previewed channel carries no delay error); otherwise a
    :class:`RegimeViolation` is raised. The reflex part scales with
    ``epsilon`` because bumps are that much smaller than trail drift.
    """
    planning_latency = lp.planning.signal_delay + lp.planning.internal_delay
    if not (lp.planning.warning > planning_latency):
        raise RegimeViolation(
            f"planning warning {lp.planning.warning} must exceed planning "
            f"latency {planning_latency}"
        )
    reflex_part = (
        lp.reflex.signal_delay + lp.reflex.internal_delay + rate_error_term(lp.reflex.rate)
    ) * lp.epsilon
    planning_part = rate_error_term(lp.planning.rate)
    return LayeredBound(reflex_part=reflex_part, planning_part=planning_part)
