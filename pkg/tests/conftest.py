"""Shared fixtures: small trial configs and a completed wire session.

The session fixture runs one real websocket session (lockstep pace, scripted
client, deterministic wheel pattern) and exposes the store directory so the
service and CLI tests can exercise replay/export against genuine logs.
"""

from __future__ import annotations

import asyncio

import pytest
from websockets.asyncio.client import connect

import looplimits as L
from looplimits.service import decode_msg, encode_msg


def tiny_trial(seed: int = 0, condition: str = "trail_only", **kw) -> L.TrialConfig:
    """A 32-tick trial that keeps service tests fast."""
    defaults = dict(
        condition=condition,
        segment_seconds=1.6,
        discard_ticks=8,
        window_ticks=8,
        preview_ticks=5,
        seed=seed,
    )
    defaults.update(kw)
    return L.TrialConfig(**defaults)


async def scripted_session(
    url: str,
    wheel_fn=None,
    session_id: str | None = None,
    stop_after_trials: int | None = None,
    subject_label: str = "scripted",
):
    """Drive a session like a headless client: one Input per Frame.

    Returns (session_id, outcome) where outcome carries the HelloAck, every
    completed trial's start/frames/end/metrics messages, and any Error
    messages received.
    """
    out = {"trials": [], "errors": []}
    hello = {"client_version": "1", "subject_label": subject_label}
    if session_id is not None:
        hello["session_id"] = session_id
    async with connect(url) as ws:
        await ws.send(encode_msg("Hello", **hello))
        out["ack"] = decode_msg(await ws.recv())
        sid = out["ack"]["session_id"]
        cur = None
        while True:
            if stop_after_trials is not None and len(out["trials"]) >= stop_after_trials:
                break
            try:
                raw = await ws.recv()
            except Exception:
                break
            msg = decode_msg(raw)
            kind = msg["kind"]
            if kind == "TrialStart":
                cur = {"start": msg, "frames": []}
            elif kind == "Frame":
                cur["frames"].append(msg)
                wheel = 0.0 if wheel_fn is None else wheel_fn(len(out["trials"]), msg)
                await ws.send(encode_msg("Input", client_tick=msg["tick"], wheel=wheel))
            elif kind == "TrialEnd":
                cur["end"] = msg
            elif kind == "Metrics":
                cur["metrics"] = msg
                out["trials"].append(cur)
                cur = None
            elif kind == "Error":
                out["errors"].append(msg)
    return sid, out


def run_session(store, trials, wheel_fn=None, **cfg_kw):
    """Boot a service, run one scripted session against it, shut it down."""
    defaults = dict(
        store_path=str(store),
        trials=tuple(trials),
        pace="lockstep",
        wheel_mode="position",
        reseed_per_session=False,
    )
    defaults.update(cfg_kw)
    cfg = L.ServiceConfig(**defaults)

    async def main():
        svc = L.SessionService(cfg)
        await svc.start()
        try:
            return await scripted_session(svc.url, wheel_fn=wheel_fn)
        finally:
            await svc.stop()

    return asyncio.run(main())


def steady_wheel(trial_index: int, frame: dict) -> float:
    """Deterministic wheel pattern cycling through -0.5, 0, 0.5."""
    return ((frame["tick"] % 3) - 1) * 0.5


@pytest.fixture(scope="session")
def completed_store(tmp_path_factory):
    """A store holding one finished two-trial session driven over the wire."""
    store = tmp_path_factory.mktemp("session-store")
    trials = (
        tiny_trial(0),
        tiny_trial(1, condition="both", added_delay_ticks=2),
    )
    sid, out = run_session(store, trials, wheel_fn=steady_wheel)
    return {"store": store, "sid": sid, "out": out, "trials": trials}
