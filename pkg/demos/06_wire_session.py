"""A complete wire session: serve trials, play them, replay them bit-exactly.

The session service speaks a small JSON-over-websocket protocol: the client
says Hello, receives the session geometry, then for each trial receives one
Frame per tick and answers with at most one Input (a wheel position in
[-1, 1]). Every message and every tick's full state goes into an
append-only JSONL log, which makes three things possible after the fact:

  * replay - rebuild the trial from the logged config, re-apply the logged
    raw inputs, and verify the recomputed states match the log bit for bit;
  * export - flatten the log into windowed-error and summary CSV tables
    that round-trip exactly through the package's own readers;
  * resume - a client that reconnects with its session id continues from
    the first unfinished trial.

Here the client is the built-in synthetic pilot looped back over a real
socket, so the whole exchange is self-contained.

Run:  python3 demos/06_wire_session.py
"""

import asyncio
import tempfile
from pathlib import Path

from looplimits import (
    ServiceConfig,
    SessionService,
    TrialConfig,
    export_session_log,
    loopback_pilot_session,
    replay_session_log,
)


def make_trials() -> tuple:
    base = dict(segment_seconds=10.0, discard_ticks=40, window_ticks=40, seed=1)
    return (
        TrialConfig(condition="trail_only", **base),
        TrialConfig(condition="both", added_delay_ticks=4, **base),
        TrialConfig(condition="both", added_rate_bits=2.0, **base),
    )


async def run(store: Path):
    cfg = ServiceConfig(
        store_path=store,
        trials=make_trials(),
        pace="lockstep",          # as fast as the client answers
        wheel_mode="position",    # wheel in [-1,1] maps to control directly
        reseed_per_session=False, # keep the configured trial seeds
    )
    svc = SessionService(cfg)
    await svc.start()
    print(f"service listening on {svc.url}")
    try:
        sid, results = await loopback_pilot_session(svc.url, client_seed=7)
    finally:
        await svc.stop()
    return sid, results


def main() -> None:
    store = Path(tempfile.mkdtemp(prefix="wire-session-"))
    sid, results = asyncio.run(run(store))

    print(f"session {sid}: {len(results)} trials played by the loopback pilot")
    for res in results:
        print(
            f"  {res.trial_id} ({res.condition}): sup {res.summary['sup_error']:.3f},"
            f" mean windowed {res.summary['mean_windowed']:.3f}"
        )

    log = store / f"{sid}.jsonl"
    print()
    print(f"replaying {log.name} against the logged inputs:")
    for rep in replay_session_log(log):
        print(
            f"  {rep.trial_id}: complete={rep.complete}"
            f" bit_exact={rep.bit_exact} metrics_match={rep.metrics_match}"
        )

    print()
    files = export_session_log(log, fmt="campaign-csv", out_dir=store)
    for f in files:
        print(f"exported {f}")
    print()
    print("The same flows are available from the command line:")
    print("  looplimits serve --trials trials.json --store sessions/")
    print(f"  looplimits replay {log}")
    print(f"  looplimits export {log} --kind campaign-csv")


if __name__ == "__main__":
    main()
