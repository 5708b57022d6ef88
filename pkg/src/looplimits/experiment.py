"""Trial harness: tracking tasks, manipulations, and campaign analysis.

A trial is a fixed-length tracking segment. The player (synthetic pilot
or a human over the websocket service) keeps a cursor on a drifting
trail while unseen bumps shove it. Two manipulations recreate component
speed-accuracy tradeoffs inside the loop:

* ``added_delay_ticks``: positive values insert an actuation delay line
  (commands land late); negative values advance the display (the trail
  is shown that many ticks ahead of the dynamics).
* ``added_rate_bits``: a midpoint quantizer on the control-effect path,
  so at 1 bit the cursor has exactly two distinct per-tick responses.

Both channels of one seed share their schedules across conditions, so
bump-only / trail-only / both trials are paired sample-for-sample.

Error is scored by worst case per window: the trial discards its warmup,
splits the rest into non-overlapping windows, and records max |x| in
each. ``additivity_analysis`` compares summed single-condition window
errors against the combined condition (Pearson correlation and a paired
t-test across windows).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .channels import DelayLine, UniformQuantizer
from .controllers import PilotModel, make_pilot
from .plant import TICK_SECONDS, DisturbanceSample, PlantState, step_plant


@dataclass(frozen=True)
class TrailSpec:
    """Piecewise-constant drift whose slope is drawn from a ladder of
    angles and whose direction strictly alternates. Slopes are
    normalized so the steepest angle drifts 1 per tick."""

    angles_deg: tuple = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    mean_switch_seconds: float = 2.0
    tick_seconds: float = TICK_SECONDS

    def __post_init__(self) -> None:
        if not self.angles_deg or any(not (0 < a < 90) for a in self.angles_deg):
            raise ValueError("angles must lie strictly between 0 and 90 degrees")
        if self.mean_switch_seconds <= 0 or self.tick_seconds <= 0:
            raise ValueError("mean_switch_seconds and tick_seconds must be > 0")

    @property
    def slopes(self) -> tuple:
        top = math.tan(math.radians(max(self.angles_deg)))
        return tuple(math.tan(math.radians(a)) / top for a in self.angles_deg)


@dataclass(frozen=True)
class BumpSpec:
    """Unsignaled pushes: rectangular pulses of fixed duration, random
    sign, with exponential gaps between them."""

    amplitude: float = 1.0
    duration_ticks: int = 10
    mean_gap_seconds: float = 3.0
    tick_seconds: float = TICK_SECONDS

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.duration_ticks < 1:
            raise ValueError(f"duration_ticks must be >= 1, got {self.duration_ticks}")
        if self.mean_gap_seconds <= 0 or self.tick_seconds <= 0:
            raise ValueError("mean_gap_seconds and tick_seconds must be > 0")


@dataclass(frozen=True)
class TrailSchedule:
    r: np.ndarray  # per-tick drift, length = horizon
    c: np.ndarray  # trail position, length = horizon + 1, c[0] = 0
    switch_ticks: tuple


@dataclass(frozen=True)
class BumpSchedule:
    b: np.ndarray  # per-tick push, length = horizon
    pulse_starts: tuple


def generate_trail(spec: TrailSpec, horizon: int, seed) -> TrailSchedule:
    """Committed drift schedule for one trial. ``seed`` may be an int or
    a numpy SeedSequence/Generator."""
    rng = np.random.default_rng(seed)
    slopes = spec.slopes
    r = np.zeros(horizon)
    switches = []
    t = 0
    direction = 1.0 if rng.integers(0, 2) == 1 else -1.0
    while t < horizon:
        switches.append(t)
        slope = slopes[int(rng.integers(0, len(slopes)))]
        dur = max(1, int(round(rng.exponential(spec.mean_switch_seconds) / spec.tick_seconds)))
        r[t : t + dur] = direction * slope
        direction = -direction
        t += dur
    c = np.concatenate(([0.0], -np.cumsum(r)))
    return TrailSchedule(r=r, c=c, switch_ticks=tuple(switches))


def generate_bumps(spec: BumpSpec, horizon: int, seed) -> BumpSchedule:
    rng = np.random.default_rng(seed)
    b = np.zeros(horizon)
    starts = []
    t = max(1, int(round(rng.exponential(spec.mean_gap_seconds) / spec.tick_seconds)))
    while t < horizon:
        starts.append(t)
        sign = 1.0 if rng.integers(0, 2) == 1 else -1.0
        b[t : t + spec.duration_ticks] = sign * spec.amplitude
        t += spec.duration_ticks
        t += max(1, int(round(rng.exponential(spec.mean_gap_seconds) / spec.tick_seconds)))
    return BumpSchedule(b=b, pulse_starts=tuple(starts))


CONDITIONS = ("bump_only", "trail_only", "both")


@dataclass(frozen=True)
class TrialConfig:
    condition: str = "both"
    added_delay_ticks: int = 0
    added_rate_bits: float | None = None
    segment_seconds: float = 30.0
    discard_ticks: int = 200
    window_ticks: int = 40
    preview_ticks: int = 40
    trail: TrailSpec = field(default_factory=TrailSpec)
    bumps: BumpSpec = field(default_factory=BumpSpec)
    pilot: PilotModel = field(default_factory=PilotModel)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.added_rate_bits is not None and self.added_rate_bits <= 0:
            raise ValueError(f"added_rate_bits must be > 0 or None, got {self.added_rate_bits}")
        if self.segment_seconds <= 0:
            raise ValueError(f"segment_seconds must be > 0, got {self.segment_seconds}")
        if self.window_ticks < 1 or self.preview_ticks < 0:
            raise ValueError("window_ticks must be >= 1 and preview_ticks >= 0")
        if not 0 <= self.discard_ticks < self.horizon_ticks:
            raise ValueError(
                f"discard_ticks must lie in [0, horizon), got {self.discard_ticks} "
                f"with horizon {self.horizon_ticks}"
            )

    @property
    def horizon_ticks(self) -> int:
        return int(round(self.segment_seconds / TICK_SECONDS))

    @property
    def display_shift(self) -> int:
        """Ticks the display runs ahead of the dynamics (negative added
        delay renders the trail early)."""
        return max(0, -self.added_delay_ticks)

    @property
    def actuation_lag(self) -> int:
        return max(0, self.added_delay_ticks)


@dataclass(frozen=True)
class TrialRecord:
    config: TrialConfig
    x: np.ndarray      # error, length horizon + 1 (x[0] = 0)
    u_raw: np.ndarray  # commanded control
    u_eff: np.ndarray  # control after manipulations, as applied
    b: np.ndarray
    r: np.ndarray
    c: np.ndarray      # trail position, length horizon + 1
    window_errors: np.ndarray

    @property
    def mean_windowed_error(self) -> float:
        return float(self.window_errors.mean())

    @property
    def sup_error(self) -> float:
        return float(np.abs(self.x[self.config.discard_ticks :]).max())


def compute_windowed_worst_case(x, discard_ticks: int, window_ticks: int) -> np.ndarray:
    """Max |x| in each full non-overlapping window after the discard;
    a trailing partial window is dropped."""
    x = np.asarray(x, dtype=float)
    if discard_ticks < 0 or window_ticks < 1:
        raise ValueError("discard_ticks must be >= 0 and window_ticks >= 1")
    tail = np.abs(x[discard_ticks:])
    n = len(tail) // window_ticks
    if n == 0:
        return np.empty(0)
    return tail[: n * window_ticks].reshape(n, window_ticks).max(axis=1)


class TrialEngine:
    """Tick stepper shared by the synthetic-pilot harness and the
    websocket service.

    Call ``frame()`` for the current display state, then ``step()``
    with either None (internal pilot) or an external command. Schedules
    are committed up front from the config seed; the same seed yields
    identical schedules in every condition (conditions only mask which
    channel reaches the plant), so paired analyses line up tick-for-tick.
    """

    def __init__(self, cfg: TrialConfig, controller=None) -> None:
        self.cfg = cfg
        horizon = cfg.horizon_ticks
        trail_seed, bump_seed, pilot_root = np.random.SeedSequence(cfg.seed).spawn(3)
        # Disturbance schedules are shared across conditions at one seed
        # (paired design); the pilot's noise stream is not — the same
        # subject plays each condition as a separate trial.
        pilot_seed = pilot_root.spawn(len(CONDITIONS))[CONDITIONS.index(cfg.condition)]
        trail = generate_trail(cfg.trail, horizon, trail_seed)
        bumps = generate_bumps(cfg.bumps, horizon, bump_seed)
        self.trail_schedule = trail
        self.bump_schedule = bumps
        self.r = trail.r if cfg.condition in ("trail_only", "both") else np.zeros(horizon)
        self.b = bumps.b if cfg.condition in ("bump_only", "both") else np.zeros(horizon)
        self.c = (
            trail.c
            if cfg.condition in ("trail_only", "both")
            else np.zeros(horizon + 1)
        )
        if controller is None:
            controller = make_pilot(
                cfg.pilot,
                seed=pilot_seed,
                actuation_lag=cfg.actuation_lag,
                display_shift=cfg.display_shift,
            )
        self.controller = controller
        self._act_line = DelayLine(cfg.actuation_lag)
        self._rate_q = (
            UniformQuantizer(bits_per_tick=cfg.added_rate_bits,
                             half_width=cfg.pilot.authority)
            if cfg.added_rate_bits is not None
            else None
        )
        self.state = PlantState(x=0.0, t=0)
        self.x_log = [0.0]
        self.u_raw_log: list[float] = []
        self.u_eff_log: list[float] = []

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def done(self) -> bool:
        return self.state.t >= self.cfg.horizon_ticks

    def _trail_at(self, t: int) -> float:
        return float(self.c[min(max(t, 0), len(self.c) - 1)])

    def preview_sample(self) -> DisturbanceSample:
        """The disturbance sample the internal pilot previews this tick:
        the displayed drift, ``display_shift`` ticks ahead, and the bump
        component at the same index (felt as torque, never displayed;
        the pilot re-aligns it to the landing tick before reacting)."""
        idx = self.state.t + self.cfg.display_shift
        r = float(self.r[idx]) if idx < len(self.r) else 0.0
        b = float(self.b[idx]) if idx < len(self.b) else 0.0
        return DisturbanceSample(b=b, r=r)

    def frame(self) -> dict:
        """Display state before this tick's command: the cursor, the
        trail as shown (shifted by the display manipulation), and the
        preview window the screen reveals."""
        t = self.state.t
        shift = self.cfg.display_shift
        cursor = self._trail_at(t) + self.state.x
        preview = [self._trail_at(t + shift + k) for k in range(1, self.cfg.preview_ticks + 1)]
        return {
            "t": t,
            "x": self.state.x,
            "cursor": cursor,
            "trail_now": self._trail_at(t + shift),
            "trail_preview": preview,
        }

    def step(self, external_u: float | None = None) -> None:
        if self.done:
            raise RuntimeError("trial already finished")
        t = self.state.t
        if external_u is None:
            cmd = self.controller.step(t=t, x=self.state.x, preview=self.preview_sample())
            u_raw = cmd.u
        else:
            u_raw = float(external_u)
            if not math.isfinite(u_raw):
                raise ValueError(f"external command at tick {t} is not finite: {u_raw}")
        u_eff = u_raw
        if self._rate_q is not None:
            u_eff = self._rate_q.quantize(u_eff)
        u_eff = self._act_line.push(u_eff)
        w = float(self.b[t] + self.r[t])
        self.state = step_plant(self.state, w, u_eff)
        self.x_log.append(self.state.x)
        self.u_raw_log.append(u_raw)
        self.u_eff_log.append(u_eff)

    def record(self) -> TrialRecord:
        if not self.done:
            raise RuntimeError("trial still running")
        x = np.array(self.x_log)
        return TrialRecord(
            config=self.cfg,
            x=x,
            u_raw=np.array(self.u_raw_log),
            u_eff=np.array(self.u_eff_log),
            b=self.b.copy(),
            r=self.r.copy(),
            c=self.c.copy(),
            window_errors=compute_windowed_worst_case(
                x[: self.cfg.horizon_ticks], self.cfg.discard_ticks, self.cfg.window_ticks
            ),
        )


def run_trial(cfg: TrialConfig, controller=None) -> TrialRecord:
    engine = TrialEngine(cfg, controller=controller)
    while not engine.done:
        engine.step()
    return engine.record()


@dataclass(frozen=True)
class AdditivityResult:
    """Do single-condition errors add up to the combined condition?"""

    pearson_r: float
    t_stat: float
    p_value: float
    n_windows: int
    mean_sum: float
    mean_both: float
    window_sums: np.ndarray
    window_both: np.ndarray

    @property
    def additive(self) -> bool:
        return self.pearson_r > 0.3 and self.p_value > 0.05


def additivity_analysis(
    rec_bump: TrialRecord, rec_trail: TrialRecord, rec_both: TrialRecord
) -> AdditivityResult:
    e_b = rec_bump.window_errors
    e_t = rec_trail.window_errors
    e_2 = rec_both.window_errors
    if not (len(e_b) == len(e_t) == len(e_2)):
        raise ValueError("records have different window counts; pair configs")
    sums = e_b + e_t
    pearson = stats.pearsonr(sums, e_2)
    tt = stats.ttest_rel(sums, e_2)
    return AdditivityResult(
        pearson_r=float(pearson.statistic),
        t_stat=float(tt.statistic),
        p_value=float(tt.pvalue),
        n_windows=len(e_2),
        mean_sum=float(sums.mean()),
        mean_both=float(e_2.mean()),
        window_sums=sums,
        window_both=e_2,
    )


def run_additivity_campaign(base: TrialConfig, seed: int | None = None) -> AdditivityResult:
    """One paired campaign: bump-only, trail-only, and both trials at a
    shared seed, analyzed window-by-window."""
    cfg = base if seed is None else replace(base, seed=seed)
    recs = {
        cond: run_trial(replace(cfg, condition=cond)) for cond in CONDITIONS
    }
    return additivity_analysis(recs["bump_only"], recs["trail_only"], recs["both"])


@dataclass(frozen=True)
class SweepPoint:
    value: float
    mean_error: float
    sem: float
    n_trials: int


def _campaign_mean(cfg: TrialConfig, seeds) -> tuple[float, float]:
    errs = np.array([run_trial(replace(cfg, seed=int(s))).mean_windowed_error for s in seeds])
    sem = float(errs.std(ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else 0.0
    return float(errs.mean()), sem


def sweep_added_delay(
    base: TrialConfig,
    delays=(-16, -12, -8, -4, 0, 4, 8),
    seeds=range(10),
) -> list[SweepPoint]:
    """Mean windowed error as the added delay varies (ticks; negative =
    advanced display)."""
    out = []
    for d in delays:
        mean, sem = _campaign_mean(replace(base, added_delay_ticks=int(d)), seeds)
        out.append(SweepPoint(value=float(d), mean_error=mean, sem=sem, n_trials=len(list(seeds))))
    return out


def sweep_added_rate(
    base: TrialConfig,
    rates=(1, 2, 3, 4, 5, 6, 7),
    seeds=range(10),
) -> list[SweepPoint]:
    """Mean windowed error as the added-rate quantizer coarseness varies."""
    out = []
    for rbits in rates:
        mean, sem = _campaign_mean(replace(base, added_rate_bits=float(rbits)), seeds)
        out.append(SweepPoint(value=float(rbits), mean_error=mean, sem=sem,
                              n_trials=len(list(seeds))))
    return out


def sweep_coupled_sat(
    base: TrialConfig,
    rates=(1, 2, 3, 4, 5, 6, 7),
    seeds=range(10),
) -> list[SweepPoint]:
    """Coupled speed-accuracy sweep: choosing R bits costs R - 5 ticks of
    delay (slower components say more), so rate and delay move together
    exactly as a signaling component's budget dictates."""
    out = []
    for rbits in rates:
        cfg = replace(base, added_rate_bits=float(rbits), added_delay_ticks=int(rbits) - 5)
        mean, sem = _campaign_mean(cfg, seeds)
        out.append(SweepPoint(value=float(rbits), mean_error=mean, sem=sem,
                              n_trials=len(list(seeds))))
    return out

# --- Trial-config file format -------------------------------------------
#
# The canonical on-disk schema is one JSON document:
#
#   {"trials": [ { <TrialConfig fields> }, ... ]}
#
# where every field of TrialConfig appears under its Python name, nested
# specs ("trail", "bumps", "pilot") are JSON objects with their dataclass
# fields, omitted fields take the dataclass defaults, and
# ``added_rate_bits: null`` means no quantizer. A single trial object
# (no "trials" wrapper) is also accepted.


def trial_config_to_dict(cfg: TrialConfig) -> dict:
    """Plain-JSON-types view of a TrialConfig (tuples become lists)."""
    return dataclasses.asdict(cfg)


def trial_config_from_dict(doc: dict) -> TrialConfig:
    """Inverse of :func:`trial_config_to_dict`; missing keys default."""
    doc = dict(doc)
    unknown = set(doc) - {f.name for f in dataclasses.fields(TrialConfig)}
    if unknown:
        raise ValueError(f"unknown trial-config fields: {sorted(unknown)}")
    if "trail" in doc:
        trail = dict(doc["trail"])
        if "angles_deg" in trail:
            trail["angles_deg"] = tuple(trail["angles_deg"])
        doc["trail"] = TrailSpec(**trail)
    if "bumps" in doc:
        doc["bumps"] = BumpSpec(**doc["bumps"])
    if "pilot" in doc:
        doc["pilot"] = PilotModel(**doc["pilot"])
    return TrialConfig(**doc)


def load_trial_configs(path) -> list[TrialConfig]:
    """Read the canonical trial-config JSON document (see module note)."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict) and "trials" in doc:
        items = doc["trials"]
    elif isinstance(doc, list):
        items = doc
    else:
        items = [doc]
    return [trial_config_from_dict(item) for item in items]


def save_trial_configs(path, configs) -> None:
    Path(path).write_text(
        json.dumps({"trials": [trial_config_to_dict(c) for c in configs]}, indent=2)
        + "\n"
    )
