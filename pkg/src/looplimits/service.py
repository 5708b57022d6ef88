"""Real-time session service for the trail-following task.

One websocket connection is one session: a queue of trials streamed to a
client at 20 Hz. Each tick the server pushes a ``Frame`` (cursor, shown
trail, preview window, bump indicator), ingests the latest wheel
position, maps it to a command, applies the trial's delay/quantization
manipulations server-side, and advances the plant. The logged trajectory
is therefore ground truth no matter how laggy the client renders.

Wire protocol (JSON object per websocket text message, ``kind`` selects
the payload):

    Hello      {client_version, subject_label?, session_id?}
    HelloAck   {session_id, tick_seconds, preview_ticks}
    TrialStart {trial_id, condition, added_delay_ticks, added_rate_bits,
                segment_ticks}
    Frame      {tick, cursor_x, trail_now, trail_preview, bump_active}
    Input      {client_tick, wheel}                      (client -> server)
    TrialEnd   {trial_id, summary: {sup_error, mean_windowed}}
    Metrics    {trial_id, windowed_errors}
    Error      {code, message}

Passing a known ``session_id`` in Hello resumes that session from its
first unfinished trial (a disconnect mid-trial flags the trial
incomplete; completed trials are never replayed).

Sessions persist as append-only JSONL files, one line per wire message
plus one line per plant tick (the core trajectory record: tick, x, w, b,
r, u_raw, u_eff, u_low, u_high). ``replay_session_log`` re-runs the
logged commands through a fresh engine and checks bit-exact agreement;
``export_session_log`` emits the campaign CSV schema.

Pacing: ``realtime`` pushes frames on the wall clock (late ticks beyond
25 ms are flagged in the log, never skipped); ``lockstep`` advances only
when the client's Input for the frame arrives, which runs as fast as the
wire allows and keeps automated sessions deterministic.
"""

from __future__ import annotations

import asyncio
import csv
import hashlib
import json
import math
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from websockets.asyncio.client import connect
from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .controllers import PilotModel, make_pilot
from .experiment import (
    TrialConfig,
    TrialEngine,
    compute_windowed_worst_case,
    trial_config_from_dict,
    trial_config_to_dict,
)
from .plant import TICK_SECONDS, DisturbanceSample

PROTOCOL_VERSION = "1"
LATE_TICK_SECONDS = 0.025

# Python 3.10 still keeps asyncio.TimeoutError distinct from the builtin
_TIMEOUTS = (TimeoutError, asyncio.TimeoutError)

WIRE_KINDS = (
    "Hello", "HelloAck", "TrialStart", "Frame", "Input", "TrialEnd",
    "Metrics", "Error",
)


class ProtocolError(ValueError):
    """Malformed or out-of-contract wire message."""


def encode_msg(kind: str, **payload) -> str:
    if kind not in WIRE_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    return json.dumps({"kind": kind, **payload}, separators=(",", ":"))


def decode_msg(raw) -> dict:
    try:
        msg = json.loads(raw)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"unparseable message: {exc}") from exc
    if not isinstance(msg, dict) or msg.get("kind") not in WIRE_KINDS:
        raise ProtocolError(f"message must carry a known kind, got {msg!r}")
    return msg


@dataclass(frozen=True)
class ServiceConfig:
    """Service-level settings (everything trial-specific lives in the
    TrialConfig queue).

    ``reseed_per_session`` replaces each queued trial's seed with one
    derived from (session_id, trial index), so concurrent or repeated
    sessions are statistically independent while a resumed session keeps
    its own seeds. Turn it off to serve the queue's seeds verbatim
    (automated equivalence runs do).

    Wheel mapping: ``velocity`` mode commands u = wheel_gain * (wheel(t)
    - wheel(t-1)) — steering phenomenology, a still wheel commands
    nothing; ``position`` mode commands u = wheel_gain * wheel(t).
    """

    store_path: str | Path
    trials: tuple = ()
    host: str = "127.0.0.1"
    port: int = 0
    pace: str = "realtime"
    wheel_mode: str = "velocity"
    wheel_gain: float = 2.5
    reseed_per_session: bool = True
    lockstep_timeout_seconds: float = 60.0

    def __post_init__(self) -> None:
        if self.pace not in ("realtime", "lockstep"):
            raise ValueError(f"pace must be realtime or lockstep, got {self.pace!r}")
        if self.wheel_mode not in ("velocity", "position"):
            raise ValueError(
                f"wheel_mode must be velocity or position, got {self.wheel_mode!r}"
            )
        if not (self.wheel_gain > 0):
            raise ValueError(f"wheel_gain must be > 0, got {self.wheel_gain}")
        if not self.trials:
            raise ValueError("trial queue must not be empty")
        previews = {cfg.preview_ticks for cfg in self.trials}
        if len(previews) != 1:
            raise ValueError(
                "all queued trials must share preview_ticks (the client sizes "
                f"its display once per session); got {sorted(previews)}"
            )

    @property
    def preview_ticks(self) -> int:
        return self.trials[0].preview_ticks


def _derive_seed(session_id: str, trial_index: int) -> int:
    digest = hashlib.blake2b(
        f"{session_id}:{trial_index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") >> 1  # non-negative 63-bit


class SessionLogWriter:
    """Append-only JSONL stream: every line carries a monotonic server
    timestamp, a direction tag (send/recv/tick/note), and the payload."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self._fh = open(path, "a", encoding="utf-8", buffering=1)

    def write(self, direction: str, payload: dict) -> None:
        line = {"ts": time.monotonic(), "dir": direction, **payload}
        self._fh.write(json.dumps(line, separators=(",", ":")) + "\n")

    def close(self) -> None:
        self._fh.close()


def _completed_trials(log_path: Path) -> set[int]:
    done = set()
    if not log_path.exists():
        return done
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            entry = json.loads(line)
            msg = entry.get("msg", {})
            if entry.get("dir") == "send" and msg.get("kind") == "TrialEnd":
                done.add(int(msg["trial_id"]))
    return done


class _Session:
    def __init__(self, service: "SessionService", session_id: str,
                 subject_label: str, resumed: bool) -> None:
        self.service = service
        self.session_id = session_id
        self.subject_label = subject_label
        self.state = "idle"
        log_path = Path(service.config.store_path) / f"{session_id}.jsonl"
        already_done = _completed_trials(log_path) if resumed else set()
        self.log = SessionLogWriter(log_path)
        self.pending = [
            (i, cfg) for i, cfg in enumerate(service.config.trials)
            if i not in already_done
        ]
        if not resumed:
            self.log.write("note", {
                "kind": "SessionStart",
                "session_id": session_id,
                "subject_label": subject_label,
                "protocol": PROTOCOL_VERSION,
                "pace": service.config.pace,
                "wheel_mode": service.config.wheel_mode,
                "wheel_gain": service.config.wheel_gain,
                "n_trials": len(service.config.trials),
            })
        else:
            self.log.write("note", {
                "kind": "SessionResume",
                "session_id": session_id,
                "completed": sorted(already_done),
            })


class SessionService:
    """Accepts websocket connections, one independent session each."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        Path(config.store_path).mkdir(parents=True, exist_ok=True)
        self._server = None

    async def start(self) -> None:
        self._server = await serve(self._handle, self.config.host, self.config.port)

    @property
    def port(self) -> int:
        if self._server is None:
            raise RuntimeError("service not started")
        return self._server.sockets[0].getsockname()[1]

    @property
    def url(self) -> str:
        return f"ws://{self.config.host}:{self.port}"

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Future()
        finally:
            await self.stop()

    # -- per-connection flow ------------------------------------------

    async def _handle(self, ws) -> None:
        try:
            hello = decode_msg(await ws.recv())
        except (ProtocolError, ConnectionClosed):
            return
        if hello["kind"] != "Hello":
            await ws.send(encode_msg(
                "Error", code="bad-handshake",
                message=f"expected Hello, got {hello['kind']}",
            ))
            return
        requested = hello.get("session_id")
        store = Path(self.config.store_path)
        resumed = bool(requested) and (store / f"{requested}.jsonl").exists()
        session_id = requested if resumed else uuid.uuid4().hex[:16]
        session = _Session(
            self, session_id, str(hello.get("subject_label", "")), resumed
        )
        session.log.write("recv", {"msg": hello})
        ack = encode_msg(
            "HelloAck",
            session_id=session_id,
            tick_seconds=TICK_SECONDS,
            preview_ticks=self.config.preview_ticks,
        )
        session.log.write("send", {"msg": decode_msg(ack)})
        await ws.send(ack)

        inputs: asyncio.Queue = asyncio.Queue()
        closed = asyncio.Event()
        pump = asyncio.create_task(self._pump(ws, session, inputs, closed))
        try:
            for trial_id, cfg in session.pending:
                if self.config.reseed_per_session:
                    cfg = replace(cfg, seed=_derive_seed(session_id, trial_id))
                done = await self._run_trial(ws, session, trial_id, cfg,
                                             inputs, closed)
                if not done:
                    return
                session.state = "between_trials"
            session.state = "done"
            session.log.write("note", {"kind": "SessionDone"})
        except ConnectionClosed:
            session.log.write("note", {"kind": "SessionDropped"})
        finally:
            pump.cancel()
            session.log.close()

    async def _pump(self, ws, session: _Session, inputs: asyncio.Queue,
                    closed: asyncio.Event) -> None:
        """Read everything the client sends; queue Input for the tick
        loop, answer or log the rest."""
        try:
            async for raw in ws:
                try:
                    msg = decode_msg(raw)
                except ProtocolError as exc:
                    session.log.write("note", {"kind": "BadMessage", "error": str(exc)})
                    await ws.send(encode_msg("Error", code="bad-message",
                                             message=str(exc)))
                    continue
                session.log.write("recv", {"msg": msg})
                if msg["kind"] != "Input":
                    await ws.send(encode_msg(
                        "Error", code="bad-kind",
                        message=f"client may only send Hello/Input, got {msg['kind']}",
                    ))
                    continue
                if session.state != "running":
                    session.log.write("note", {
                        "kind": "InputIgnored", "state": session.state,
                    })
                    continue
                inputs.put_nowait(msg)
        except ConnectionClosed:
            pass
        finally:
            closed.set()

    async def _run_trial(self, ws, session: _Session, trial_id: int,
                         cfg: TrialConfig, inputs: asyncio.Queue,
                         closed: asyncio.Event) -> bool:
        """Push one trial over the wire; returns False on disconnect."""
        engine = TrialEngine(cfg, controller=NullExternal())
        session.log.write("note", {
            "kind": "TrialConfig", "trial_id": trial_id,
            "config": trial_config_to_dict(cfg),
        })
        start_msg = encode_msg(
            "TrialStart",
            trial_id=trial_id,
            condition=cfg.condition,
            added_delay_ticks=cfg.added_delay_ticks,
            added_rate_bits=cfg.added_rate_bits,
            segment_ticks=cfg.horizon_ticks,
        )
        session.log.write("send", {"msg": decode_msg(start_msg)})
        session.state = "running"
        await ws.send(start_msg)

        loop = asyncio.get_running_loop()
        tick0 = loop.time()
        wheel = 0.0
        wheel_prev = 0.0
        lockstep = self.config.pace == "lockstep"
        for t in range(cfg.horizon_ticks):
            frame = engine.frame()
            frame_msg = encode_msg(
                "Frame",
                tick=t,
                cursor_x=frame["cursor"],
                trail_now=frame["trail_now"],
                trail_preview=frame["trail_preview"],
                bump_active=bool(engine.b[t] != 0.0),
            )
            try:
                await ws.send(frame_msg)
                got = await self._gather_input(
                    inputs, closed, deadline=tick0 + (t + 1) * TICK_SECONDS,
                    lockstep=lockstep,
                )
            except ConnectionClosed:
                got = None
            except _TIMEOUTS:
                got = None
                if not closed.is_set():
                    try:
                        await ws.send(encode_msg(
                            "Error", code="timeout",
                            message=f"no Input within "
                            f"{self.config.lockstep_timeout_seconds}s at tick {t}",
                        ))
                    except ConnectionClosed:
                        pass
            if got is None and (closed.is_set() or lockstep):
                session.state = "idle"
                session.log.write("note", {
                    "kind": "TrialIncomplete", "trial_id": trial_id, "tick": t,
                })
                return False
            if got is not None:
                wheel = _clamp_wheel(got, session)
            if self.config.wheel_mode == "velocity":
                u = self.config.wheel_gain * (wheel - wheel_prev)
            else:
                u = self.config.wheel_gain * wheel
            wheel_prev = wheel
            lateness = loop.time() - (tick0 + (t + 1) * TICK_SECONDS)
            engine.step(external_u=u)
            session.log.write("tick", {
                "trial_id": trial_id,
                "tick": t,
                "x": engine.state.x,
                "w": engine.b[t] + engine.r[t],
                "b": engine.b[t],
                "r": engine.r[t],
                "u_raw": u,
                "u_eff": engine.u_eff_log[-1],
                "u_low": u,
                "u_high": 0.0,
                "late": bool(not lockstep and lateness > LATE_TICK_SECONDS),
            })

        record = engine.record()
        end_msg = encode_msg(
            "TrialEnd",
            trial_id=trial_id,
            summary={
                "sup_error": record.sup_error,
                "mean_windowed": record.mean_windowed_error,
            },
        )
        metrics_msg = encode_msg(
            "Metrics",
            trial_id=trial_id,
            windowed_errors=[float(v) for v in record.window_errors],
        )
        session.log.write("send", {"msg": decode_msg(end_msg)})
        session.log.write("send", {"msg": decode_msg(metrics_msg)})
        try:
            await ws.send(end_msg)
            await ws.send(metrics_msg)
        except ConnectionClosed:
            return False
        return True

    async def _gather_input(self, inputs: asyncio.Queue, closed: asyncio.Event,
                            deadline: float, lockstep: bool):
        """Latest Input for this tick: lockstep blocks for one, realtime
        drains until the tick deadline. Returns the last message or None."""
        loop = asyncio.get_running_loop()
        last = None
        if lockstep:
            # Exactly one Input per Frame, in order, so a pipelining
            # client stays tick-aligned. Poll in short slices so a dead
            # connection aborts promptly instead of burning the timeout.
            give_up = loop.time() + self.config.lockstep_timeout_seconds
            while True:
                if closed.is_set() and inputs.empty():
                    return None
                budget = give_up - loop.time()
                if budget <= 0:
                    raise TimeoutError
                try:
                    return await asyncio.wait_for(inputs.get(), min(0.25, budget))
                except _TIMEOUTS:
                    continue
        while True:
            remaining = deadline - loop.time()
            if remaining <= 0:
                break
            try:
                last = await asyncio.wait_for(inputs.get(), remaining)
            except _TIMEOUTS:
                break
            while not inputs.empty():
                last = inputs.get_nowait()
        return last


class NullExternal:
    """Engine placeholder making it explicit that commands only arrive
    through step(external_u=...); stepping without one is a bug."""

    def step(self, t, x, preview):
        raise RuntimeError("service trials are driven by wire input only")


def _clamp_wheel(msg: dict, session: _Session) -> float:
    try:
        wheel = float(msg.get("wheel"))
    except (TypeError, ValueError):
        session.log.write("note", {"kind": "BadInput", "msg": msg})
        return 0.0
    if not math.isfinite(wheel):
        session.log.write("note", {"kind": "BadInput", "msg": msg})
        return 0.0
    if wheel < -1.0 or wheel > 1.0:
        session.log.write("note", {"kind": "InputClamped", "wheel": wheel})
        wheel = max(-1.0, min(1.0, wheel))
    return wheel


# --- Replay and export ----------------------------------------------------


@dataclass(frozen=True)
class ReplayedTrial:
    trial_id: int
    config: TrialConfig
    complete: bool
    bit_exact: bool
    metrics_match: bool
    x: np.ndarray
    windowed_errors: np.ndarray


def load_session_log(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


def _trials_from_log(entries: list[dict]) -> dict[int, dict]:
    trials: dict[int, dict] = {}
    for entry in entries:
        if entry["dir"] == "note" and entry.get("kind") == "TrialConfig":
            trials[entry["trial_id"]] = {
                "config": entry["config"], "ticks": [], "metrics": None,
                "summary": None,
            }
        elif entry["dir"] == "tick":
            trials[entry["trial_id"]]["ticks"].append(entry)
        elif entry["dir"] == "send":
            msg = entry["msg"]
            if msg.get("kind") == "Metrics":
                trials[msg["trial_id"]]["metrics"] = msg["windowed_errors"]
            elif msg.get("kind") == "TrialEnd":
                trials[msg["trial_id"]]["summary"] = msg["summary"]
    return trials


def replay_session_log(path) -> list[ReplayedTrial]:
    """Re-run every logged trial from its config seed and command stream;
    a correct log replays bit-exactly (identical x at every tick and
    identical windowed metrics)."""
    out = []
    for trial_id, data in sorted(_trials_from_log(load_session_log(path)).items()):
        cfg = trial_config_from_dict(data["config"])
        engine = TrialEngine(cfg, controller=NullExternal())
        exact = True
        for tick_entry in data["ticks"]:
            engine.step(external_u=tick_entry["u_raw"])
            if engine.state.x != tick_entry["x"] or \
               engine.u_eff_log[-1] != tick_entry["u_eff"]:
                exact = False
        complete = len(data["ticks"]) == cfg.horizon_ticks
        if complete:
            record = engine.record()
            x = record.x
            windows = record.window_errors
            metrics_match = data["metrics"] is not None and \
                len(data["metrics"]) == len(windows) and \
                all(a == b for a, b in zip(data["metrics"], windows))
        else:
            x = np.array(engine.x_log)
            windows = compute_windowed_worst_case(
                np.array(engine.x_log), cfg.discard_ticks, cfg.window_ticks
            )
            metrics_match = False
        out.append(ReplayedTrial(
            trial_id=trial_id, config=cfg, complete=complete, bit_exact=exact,
            metrics_match=metrics_match, x=x, windowed_errors=windows,
        ))
    return out


def export_session_log(path, fmt: str = "campaign-csv", out_dir=None) -> list[Path]:
    """``raw-log``: lossless copy. ``campaign-csv``: the experiment
    harness's CSV schema — one windows file (one row per completed-trial
    window) plus one summary file (one row per completed trial)."""
    path = Path(path)
    out_dir = Path(out_dir) if out_dir is not None else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    if fmt == "raw-log":
        target = out_dir / f"{stem}.export.jsonl"
        target.write_bytes(path.read_bytes())
        return [target]
    if fmt != "campaign-csv":
        raise ValueError(f"format must be raw-log or campaign-csv, got {fmt!r}")
    trials = replay_session_log(path)
    win_path = out_dir / f"{stem}_windows.csv"
    sum_path = out_dir / f"{stem}_summary.csv"
    with open(win_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "trial_id", "condition", "added_delay_ticks", "added_rate",
            "window_index", "window_worst_case",
        ])
        for trial in trials:
            if not trial.complete:
                continue
            rate = "" if trial.config.added_rate_bits is None \
                else trial.config.added_rate_bits
            for i, v in enumerate(trial.windowed_errors):
                writer.writerow([
                    trial.trial_id, trial.config.condition,
                    trial.config.added_delay_ticks, rate, i, repr(float(v)),
                ])
    with open(sum_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "trial_id", "condition", "added_delay_ticks", "added_rate",
            "sup_error", "mean_windowed", "complete",
        ])
        for trial in trials:
            rate = "" if trial.config.added_rate_bits is None \
                else trial.config.added_rate_bits
            sup = float(np.abs(trial.x[trial.config.discard_ticks:]).max()) \
                if len(trial.x) > trial.config.discard_ticks else float("nan")
            mean = float(trial.windowed_errors.mean()) \
                if len(trial.windowed_errors) else float("nan")
            writer.writerow([
                trial.trial_id, trial.config.condition,
                trial.config.added_delay_ticks, rate,
                repr(sup), repr(mean), int(trial.complete),
            ])
    return [win_path, sum_path]


# --- Loopback pilot client -------------------------------------------------


@dataclass
class LoopbackTrialResult:
    trial_id: int
    condition: str
    summary: dict
    windowed_errors: list[float] = field(default_factory=list)


async def loopback_pilot_session(
    url: str,
    pilot_model=None,
    client_seed: int = 0,
    subject_label: str = "loopback-pilot",
    session_id: str | None = None,
) -> tuple[str, list[LoopbackTrialResult]]:
    """Drive a whole session through the wire with the synthetic pilot.

    The client reconstructs the pilot's inputs from Frames alone: the
    true error from the cursor against the trail it saw ``shift`` frames
    ago (the display runs ``shift`` ticks ahead under negative added
    delay), and the previewed drift from consecutive centerline values.
    Bumps have no wire representation beyond the display flag, so the
    wire pilot plays trail trials; its commands ride the position-mode
    wheel map. Returns (session_id, per-trial results).
    """
    hello: dict = {"kind": "Hello", "client_version": PROTOCOL_VERSION,
                   "subject_label": subject_label}
    if session_id is not None:
        hello["session_id"] = session_id
    results: list[LoopbackTrialResult] = []
    async with connect(url, max_size=None) as ws:
        await ws.send(json.dumps(hello))
        ack = decode_msg(await ws.recv())
        if ack["kind"] != "HelloAck":
            raise ProtocolError(f"expected HelloAck, got {ack}")
        sid = ack["session_id"]
        pilot = None
        shift = 0
        wheel_gain = None
        trail_hist: list[float] = []
        current: LoopbackTrialResult | None = None
        trial_index = 0
        async for raw in ws:
            msg = decode_msg(raw)
            kind = msg["kind"]
            if kind == "TrialStart":
                d = int(msg["added_delay_ticks"])
                shift = max(0, -d)
                pilot = make_pilot(
                    pilot_model if pilot_model is not None else _DEFAULT_PILOT,
                    seed=client_seed + 7919 * trial_index,
                    actuation_lag=max(0, d),
                    display_shift=shift,
                )
                trial_index += 1
                trail_hist = []
                current = LoopbackTrialResult(
                    trial_id=int(msg["trial_id"]),
                    condition=msg["condition"], summary={},
                )
            elif kind == "Frame":
                t = int(msg["tick"])
                trail_now = float(msg["trail_now"])
                trail_hist.append(trail_now)
                base = trail_hist[t - shift] if t >= shift else trail_hist[0]
                x = float(msg["cursor_x"]) - base
                preview = msg["trail_preview"]
                r_next = trail_now - float(preview[0]) if preview else 0.0
                cmd = pilot.step(t, x, DisturbanceSample(b=0.0, r=r_next))
                if wheel_gain is None:
                    wheel_gain = pilot.pm.authority
                await ws.send(json.dumps({
                    "kind": "Input", "client_tick": t,
                    "wheel": max(-1.0, min(1.0, cmd.u / wheel_gain)),
                }))
            elif kind == "TrialEnd":
                current.summary = msg["summary"]
            elif kind == "Metrics":
                current.windowed_errors = [float(v) for v in msg["windowed_errors"]]
                results.append(current)
                current = None
            elif kind == "Error":
                raise ProtocolError(f"server error: {msg}")
    return sid, results


_DEFAULT_PILOT = PilotModel()
