"""Loop-design optimization under component speed-accuracy tradeoffs.

A signaling component can spend more time to send more bits: signaling
for T_s ticks at cost rate lambda yields R = lambda * T_s bits per tick
(spike-based encoding; rate-based encoding yields half that). Spending
longer therefore shrinks the rate term of the error floor while growing
the delay term, and the best loop balances the two:

    f(T_s) = max(0, T_s + T_i - T_a) + 1 / (2^(lambda T_s) - 1)

The delay term switches on at the kink T_s = T_a - T_i; the optimum is
either the smooth stationary point of the right piece or that kink,
whichever is larger. ``optimize_single_loop`` does the kink-aware search,
``grid_search_single_loop`` is the independent dense-grid oracle used to
verify it.

For two-layer designs, ``optimize_layered`` sizes a fast reflex layer
(cancels bumps of relative size epsilon) and a slow planning layer
(cancels the previewed trail) either with independently chosen
components ("diverse") or one shared component design for both layers
("uniform"). Planning always saturates its warning budget: its rate term
falls monotonically with T_h, so T_h sits one tick inside the regime
limit T_h + T_i < T_a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .bounds import ErrorDecomposition, LayeredParams, layered_bound, rate_error_term
from .channels import Encoding, LoopParams

_T_EPS = 1e-3


def signaling_rate(t_signal: float, lambda_cost: float, encoding: Encoding) -> float:
    """Bits per tick bought by signaling for ``t_signal`` ticks."""
    if encoding is Encoding.SPIKE_BASED:
        return lambda_cost * t_signal
    return 0.5 * lambda_cost * t_signal


def single_loop_objective(
    t_signal: float,
    lambda_cost: float,
    internal_delay: float = 0.0,
    warning: float = 0.0,
    encoding: Encoding = Encoding.SPIKE_BASED,
    stochastic: bool = False,
) -> float:
    """Error floor of a single loop whose signal delay buys its rate."""
    if t_signal <= 0:
        return math.inf
    rate = signaling_rate(t_signal, lambda_cost, encoding)
    delay_term = max(0.0, t_signal + internal_delay - warning)
    return delay_term + rate_error_term(rate, squared=stochastic)


@dataclass(frozen=True)
class OptimizeResult:
    t_signal: float
    rate: float
    objective: float
    error: ErrorDecomposition
    kink: float
    at_kink: bool


def optimize_single_loop(
    lambda_cost: float,
    internal_delay: float = 0.0,
    warning: float = 0.0,
    encoding: Encoding = Encoding.SPIKE_BASED,
    stochastic: bool = False,
    t_max: float = 1e4,
    xatol: float = 1e-9,
) -> OptimizeResult:
    """Minimize the single-loop error floor over the signaling time.

    The objective is piecewise smooth with one kink where the delay term
    activates; each piece is searched with a bounded scalar minimizer and
    the kink itself is always evaluated as a candidate.
    """
    if lambda_cost <= 0 or not math.isfinite(lambda_cost):
        raise ValueError(f"lambda_cost must be finite and > 0, got {lambda_cost}")

    def f(t: float) -> float:
        return single_loop_objective(
            t, lambda_cost, internal_delay, warning, encoding, stochastic
        )

    kink = warning - internal_delay
    candidates: list[float] = []
    pieces: list[tuple[float, float]] = []
    if kink > _T_EPS:
        pieces.append((_T_EPS, min(kink, t_max)))
        candidates.append(min(kink, t_max))
        if kink < t_max:
            pieces.append((kink, t_max))
    else:
        pieces.append((_T_EPS, t_max))
    for lo, hi in pieces:
        if hi - lo <= 2 * xatol:
            continue
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": xatol})
        candidates.append(float(res.x))
    best_t = min(candidates, key=f)
    rate = signaling_rate(best_t, lambda_cost, encoding)
    err = ErrorDecomposition(
        delay_error=max(0.0, best_t + internal_delay - warning),
        rate_error=rate_error_term(rate, squared=stochastic),
    )
    return OptimizeResult(
        t_signal=best_t,
        rate=rate,
        objective=f(best_t),
        error=err,
        kink=kink,
        at_kink=abs(best_t - kink) <= max(10 * xatol, 1e-6),
    )


def grid_search_single_loop(
    lambda_cost: float,
    internal_delay: float = 0.0,
    warning: float = 0.0,
    encoding: Encoding = Encoding.SPIKE_BASED,
    stochastic: bool = False,
    t_max: float = 200.0,
    coarse: float = 0.1,
    fine: float = 1e-4,
) -> tuple[float, float]:
    """Independent dense-grid minimizer: coarse pass over (0, t_max],
    then a fine pass in a window around the coarse argmin. Returns
    (t_signal, objective)."""

    mult = 1.0 if encoding is Encoding.SPIKE_BASED else 0.5

    def f_vec(ts: np.ndarray) -> np.ndarray:
        rate = mult * lambda_cost * ts
        with np.errstate(over="ignore"):
            power = np.power(2.0, (2.0 if stochastic else 1.0) * rate)
            rate_term = np.where(np.isinf(power), 0.0, 1.0 / (power - 1.0))
        return np.maximum(0.0, ts + internal_delay - warning) + rate_term

    ts = np.arange(coarse, t_max + coarse / 2, coarse)
    vals = f_vec(ts)
    t0 = ts[int(np.argmin(vals))]
    lo = max(fine, t0 - 1.5 * coarse)
    hi = t0 + 1.5 * coarse
    ts2 = np.arange(lo, hi, fine)
    vals2 = f_vec(ts2)
    i = int(np.argmin(vals2))
    return float(ts2[i]), float(vals2[i])


@dataclass(frozen=True)
class RegimePoint:
    net_delay: float
    t_signal: float
    rate: float
    objective: float
    at_kink: bool


def sweep_regimes(
    lambda_cost: float,
    net_delays,
    encoding: Encoding = Encoding.SPIKE_BASED,
    stochastic: bool = False,
) -> list[RegimePoint]:
    """Optimal design as the loop's fixed (internal - warning) net delay
    varies: negative net delay means spare warning, and once it exceeds
    the unconstrained optimum the design pins to the kink."""
    points = []
    for d in net_delays:
        d = float(d)
        internal, warn = (d, 0.0) if d >= 0 else (0.0, -d)
        r = optimize_single_loop(
            lambda_cost, internal_delay=internal, warning=warn,
            encoding=encoding, stochastic=stochastic,
        )
        points.append(
            RegimePoint(net_delay=d, t_signal=r.t_signal, rate=r.rate,
                        objective=r.objective, at_kink=r.at_kink)
        )
    return points


@dataclass(frozen=True)
class LayeredDesign:
    t_low: float
    t_high: float
    rate_low: float
    rate_high: float
    reflex_part: float
    planning_part: float
    total: float
    feasible: bool
    mode: str


def optimize_layered(
    lambda_low: float,
    lambda_high: float,
    internal_delay: float,
    warning: float,
    epsilon: float,
    mode: str = "diverse",
    encoding: Encoding = Encoding.SPIKE_BASED,
    regime_margin: float = 1.0,
    t_max: float = 1e4,
) -> LayeredDesign:
    """Best two-layer design for bumps of relative size ``epsilon`` under
    trail warning ``warning``.

    "diverse": reflex (T_l, R_l) and planning (T_h, R_h) chosen
    independently; the planning signal time saturates at
    warning - internal_delay - regime_margin since more signaling there
    is free of delay cost. "uniform" forces one component design, used by
    both layers, which requires equal cost rates.
    """
    if mode not in ("diverse", "uniform"):
        raise ValueError(f"mode must be diverse or uniform, got {mode!r}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    t_high_max = warning - internal_delay - regime_margin
    if t_high_max <= 0:
        return LayeredDesign(
            t_low=math.nan, t_high=math.nan, rate_low=math.nan, rate_high=math.nan,
            reflex_part=math.inf, planning_part=math.inf, total=math.inf,
            feasible=False, mode=mode,
        )

    def reflex_obj(t: float) -> float:
        return epsilon * single_loop_objective(
            t, lambda_low, internal_delay=internal_delay, encoding=encoding
        )

    if mode == "diverse":
        t_high = t_high_max
        r_high = signaling_rate(t_high, lambda_high, encoding)
        planning_part = rate_error_term(r_high)
        if epsilon == 0:
            t_low, r_low, reflex_part = math.nan, math.nan, 0.0
        else:
            res = optimize_single_loop(
                lambda_low, internal_delay=internal_delay, encoding=encoding,
                t_max=t_max,
            )
            t_low, r_low = res.t_signal, res.rate
            reflex_part = epsilon * res.objective
        return LayeredDesign(
            t_low=t_low, t_high=t_high, rate_low=r_low, rate_high=r_high,
            reflex_part=reflex_part, planning_part=planning_part,
            total=reflex_part + planning_part, feasible=True, mode=mode,
        )

    if lambda_low != lambda_high:
        raise ValueError("uniform mode shares one component: cost rates must match")

    def uniform_obj(t: float) -> float:
        rate = signaling_rate(t, lambda_low, encoding)
        return reflex_obj(t) + rate_error_term(rate)

    hi = min(t_high_max, t_max)
    res = minimize_scalar(uniform_obj, bounds=(_T_EPS, hi), method="bounded",
                          options={"xatol": 1e-9})
    t_star = min([float(res.x), hi], key=uniform_obj)
    rate = signaling_rate(t_star, lambda_low, encoding)
    return LayeredDesign(
        t_low=t_star, t_high=t_star, rate_low=rate, rate_high=rate,
        reflex_part=reflex_obj(t_star), planning_part=rate_error_term(rate),
        total=uniform_obj(t_star), feasible=True, mode=mode,
    )


@dataclass(frozen=True)
class DessComparison:
    """Diverse vs uniform component sizing for one layered scenario."""

    diverse: LayeredDesign
    uniform: LayeredDesign
    improvement: float  # (uniform - diverse) / uniform

    @property
    def diverse_wins(self) -> bool:
        return self.diverse.total < self.uniform.total


def compare_dess(
    lambda_cost: float,
    internal_delay: float,
    warning: float,
    epsilon: float,
    encoding: Encoding = Encoding.SPIKE_BASED,
) -> DessComparison:
    diverse = optimize_layered(
        lambda_cost, lambda_cost, internal_delay, warning, epsilon,
        mode="diverse", encoding=encoding,
    )
    uniform = optimize_layered(
        lambda_cost, lambda_cost, internal_delay, warning, epsilon,
        mode="uniform", encoding=encoding,
    )
    if math.isinf(uniform.total):
        improvement = math.nan
    else:
        improvement = (uniform.total - diverse.total) / uniform.total
    return DessComparison(diverse=diverse, uniform=uniform, improvement=improvement)


def dess_tradeoff_curve(
    lambda_cost: float,
    warning: float,
    internal_delays,
    epsilon: float,
    encoding: Encoding = Encoding.SPIKE_BASED,
) -> list[DessComparison]:
    """Diverse-vs-uniform comparison swept over the internal delay."""
    return [
        compare_dess(lambda_cost, float(ti), warning, epsilon, encoding)
        for ti in internal_delays
    ]


def layered_params_from_design(
    design: LayeredDesign, internal_delay: float, warning: float, epsilon: float
) -> LayeredParams:
    """Tick-rounded loop parameters realizing an optimized design, for
    simulation (rates and delays round to the nearest tick-compatible
    values; the bound should be recomputed from the rounded params)."""
    reflex = LoopParams(
        signal_delay=round(design.t_low), internal_delay=round(internal_delay),
        warning=0.0, rate=design.rate_low,
    )
    planning = LoopParams(
        signal_delay=round(design.t_high), internal_delay=round(internal_delay),
        warning=round(warning), rate=design.rate_high,
    )
    lp = LayeredParams(epsilon=epsilon, reflex=reflex, planning=planning)
    layered_bound(lp)
    return lp
