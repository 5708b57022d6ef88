"""Wire protocol, session service, replay, export, and the loopback client."""

import asyncio
import json
import time

import numpy as np
import pytest

import looplimits as L
from looplimits.cli import read_table
from looplimits.service import (
    ProtocolError,
    _derive_seed,
    decode_msg,
    encode_msg,
    export_session_log,
    load_session_log,
    replay_session_log,
)

from conftest import run_session, scripted_session, steady_wheel, tiny_trial


class TestProtocol:
    @pytest.mark.parametrize(
        "kind,payload",
        [
            ("Hello", {"client_version": "1", "subject_label": "s"}),
            ("HelloAck", {"session_id": "abc", "tick_seconds": 0.05, "preview_ticks": 5}),
            ("Frame", {"tick": 3, "cursor_x": 0.5, "trail_now": -0.25,
                       "trail_preview": [0.0, 0.1], "bump_active": False}),
            ("Input", {"client_tick": 3, "wheel": -0.5}),
            ("TrialEnd", {"trial_id": "t", "summary": {"sup_error": 1.0, "mean_windowed": 0.5}}),
            ("Metrics", {"trial_id": "t", "windowed_errors": [1.0, 2.0]}),
            ("Error", {"code": "bad-kind", "message": "nope"}),
        ],
    )
    def test_encode_decode_round_trip(self, kind, payload):
        msg = decode_msg(encode_msg(kind, **payload))
        assert msg.pop("kind") == kind
        assert msg == payload

    def test_decode_rejects_bad_json(self):
        with pytest.raises(ProtocolError):
            decode_msg("{not json")

    def test_decode_rejects_unknown_kind(self):
        with pytest.raises(ProtocolError):
            decode_msg(json.dumps({"kind": "Bogus"}))

    def test_decode_rejects_non_object(self):
        with pytest.raises(ProtocolError):
            decode_msg(json.dumps([1, 2, 3]))


class TestServiceConfig:
    def test_rejects_unknown_pace_and_wheel_mode(self):
        with pytest.raises(ValueError):
            L.ServiceConfig(store_path="x", trials=(tiny_trial(),), pace="warp")
        with pytest.raises(ValueError):
            L.ServiceConfig(store_path="x", trials=(tiny_trial(),), wheel_mode="torque")

    def test_rejects_empty_trial_queue(self):
        with pytest.raises(ValueError):
            L.ServiceConfig(store_path="x", trials=())

    def test_rejects_mixed_preview_lengths(self):
        with pytest.raises(ValueError):
            L.ServiceConfig(
                store_path="x",
                trials=(tiny_trial(0), tiny_trial(1, preview_ticks=9)),
            )

    def test_preview_ticks_reflects_queue(self):
        cfg = L.ServiceConfig(store_path="x", trials=(tiny_trial(),))
        assert cfg.preview_ticks == 5

    def test_derived_seeds_are_stable_and_distinct(self):
        a = _derive_seed("session", 0)
        assert a == _derive_seed("session", 0)
        assert a != _derive_seed("session", 1)
        assert a != _derive_seed("noisses", 0)


class TestScriptedSession:
    def test_hello_ack_announces_session_geometry(self, completed_store):
        ack = completed_store["out"]["ack"]
        assert ack["kind"] == "HelloAck"
        assert ack["tick_seconds"] == 0.05
        assert ack["preview_ticks"] == 5
        assert ack["session_id"] == completed_store["sid"]

    def test_all_trials_run_with_one_frame_per_tick(self, completed_store):
        out = completed_store["out"]
        trials = completed_store["trials"]
        assert len(out["trials"]) == len(trials)
        assert out["errors"] == []
        for cfg, played in zip(trials, out["trials"]):
            start = played["start"]
            assert start["condition"] == cfg.condition
            assert start["added_delay_ticks"] == cfg.added_delay_ticks
            assert start["segment_ticks"] == cfg.horizon_ticks
            assert len(played["frames"]) == cfg.horizon_ticks
            assert [f["tick"] for f in played["frames"]] == list(range(cfg.horizon_ticks))
            for f in played["frames"]:
                assert len(f["trail_preview"]) == cfg.preview_ticks

    def test_trial_end_summary_consistent_with_metrics(self, completed_store):
        for played in completed_store["out"]["trials"]:
            summary = played["end"]["summary"]
            windows = played["metrics"]["windowed_errors"]
            assert played["end"]["trial_id"] == played["metrics"]["trial_id"]
            assert len(windows) == 3
            assert summary["mean_windowed"] == pytest.approx(
                sum(windows) / len(windows), rel=1e-12
            )
            assert summary["sup_error"] >= max(windows) - 1e-12


class TestReplayAndExport:
    def log_path(self, completed_store):
        return completed_store["store"] / f"{completed_store['sid']}.jsonl"

    def test_replay_is_bit_exact(self, completed_store):
        replays = replay_session_log(self.log_path(completed_store))
        assert len(replays) == 2
        for rep in replays:
            assert rep.complete and rep.bit_exact and rep.metrics_match

    def test_replay_reproduces_served_metrics(self, completed_store):
        replays = replay_session_log(self.log_path(completed_store))
        for rep, played in zip(replays, completed_store["out"]["trials"]):
            assert list(rep.windowed_errors) == played["metrics"]["windowed_errors"]

    def test_csv_export_round_trips_through_reader(self, completed_store, tmp_path):
        files = export_session_log(
            self.log_path(completed_store), fmt="campaign-csv", out_dir=tmp_path
        )
        by_name = {p.name.split("_")[-1]: p for p in files}
        header, rows = read_table(by_name["windows.csv"])
        assert header == [
            "trial_id", "condition", "added_delay_ticks", "added_rate",
            "window_index", "window_worst_case",
        ]
        assert len(rows) == 6  # 2 trials x 3 windows
        served = [
            w
            for played in completed_store["out"]["trials"]
            for w in played["metrics"]["windowed_errors"]
        ]
        assert [row[5] for row in rows] == served

        sheader, srows = read_table(by_name["summary.csv"])
        assert len(srows) == 2
        for row, played in zip(srows, completed_store["out"]["trials"]):
            assert row[sheader.index("sup_error")] == played["end"]["summary"]["sup_error"]
            assert row[sheader.index("complete")] == 1

    def test_raw_export_is_lossless(self, completed_store, tmp_path):
        (out,) = export_session_log(
            self.log_path(completed_store), fmt="raw-log", out_dir=tmp_path
        )
        assert out.read_bytes() == self.log_path(completed_store).read_bytes()

    def test_session_log_parses_as_jsonl(self, completed_store):
        entries = load_session_log(self.log_path(completed_store))
        dirs = {e["dir"] for e in entries}
        assert {"send", "recv", "tick", "note"} <= dirs


class TestResumeAndErrors:
    def test_disconnect_then_resume_plays_remaining_trials(self, tmp_path):
        trials = (tiny_trial(0), tiny_trial(1))
        cfg = L.ServiceConfig(
            store_path=str(tmp_path), trials=trials, pace="lockstep",
            wheel_mode="position", reseed_per_session=False,
        )

        async def main():
            svc = L.SessionService(cfg)
            await svc.start()
            try:
                sid, first = await scripted_session(
                    svc.url, wheel_fn=steady_wheel, stop_after_trials=1
                )
                sid2, second = await scripted_session(
                    svc.url, wheel_fn=steady_wheel, session_id=sid
                )
            finally:
                await svc.stop()
            return sid, first, sid2, second

        sid, first, sid2, second = asyncio.run(main())
        assert sid2 == sid
        assert len(first["trials"]) == 1 and len(second["trials"]) == 1
        done_ids = {first["trials"][0]["start"]["trial_id"],
                    second["trials"][0]["start"]["trial_id"]}
        assert len(done_ids) == 2
        replays = replay_session_log(tmp_path / f"{sid}.jsonl")
        assert len(replays) == 2
        assert all(r.complete and r.bit_exact and r.metrics_match for r in replays)

    def test_non_input_message_mid_trial_gets_error_reply(self, tmp_path):
        cfg = L.ServiceConfig(
            store_path=str(tmp_path), trials=(tiny_trial(),), pace="lockstep",
            wheel_mode="position", reseed_per_session=False,
        )

        def wheel_with_noise(i, frame):
            return 0.0

        async def main():
            svc = L.SessionService(cfg)
            await svc.start()
            try:
                from websockets.asyncio.client import connect

                async with connect(svc.url) as ws:
                    await ws.send(encode_msg("Hello", client_version="1"))
                    decode_msg(await ws.recv())  # ack
                    saw_error = False
                    while True:
                        try:
                            msg = decode_msg(await ws.recv())
                        except Exception:
                            break
                        if msg["kind"] == "Frame":
                            if msg["tick"] == 2 and not saw_error:
                                await ws.send(encode_msg("Hello", client_version="1"))
                            await ws.send(
                                encode_msg("Input", client_tick=msg["tick"], wheel=0.0)
                            )
                        elif msg["kind"] == "Error":
                            saw_error = True
                            assert msg["code"] == "bad-kind"
                        elif msg["kind"] == "Metrics":
                            break
                    return saw_error
            finally:
                await svc.stop()

        assert asyncio.run(main())

    def test_out_of_range_wheel_is_clamped_and_noted(self, tmp_path):
        sid, out = run_session(tmp_path, (tiny_trial(),), wheel_fn=lambda i, f: 1.7)
        assert len(out["trials"]) == 1
        entries = load_session_log(tmp_path / f"{sid}.jsonl")
        notes = [e for e in entries if e.get("dir") == "note"]
        assert any(e.get("kind") == "InputClamped" for e in notes)
        replays = replay_session_log(tmp_path / f"{sid}.jsonl")
        assert replays[0].bit_exact
        ticks = [e for e in entries if e.get("dir") == "tick"]
        assert all(e["u_raw"] <= 2.5 + 1e-12 for e in ticks)  # 2.5 = gain * clamped 1.0


class TestPacingAndLoopback:
    def test_realtime_pace_takes_wall_time(self, tmp_path):
        trial = tiny_trial(0, segment_seconds=0.4, discard_ticks=0, window_ticks=4)
        t0 = time.monotonic()
        sid, out = run_session(tmp_path, (trial,), pace="realtime")
        elapsed = time.monotonic() - t0
        assert len(out["trials"]) == 1
        assert len(out["trials"][0]["frames"]) == 8
        assert elapsed >= 8 * 0.05 * 0.8

    def test_loopback_pilot_session_completes_and_replays(self, tmp_path):
        trials = (tiny_trial(0), tiny_trial(1, condition="both"))
        cfg = L.ServiceConfig(
            store_path=str(tmp_path), trials=trials, pace="lockstep",
            wheel_mode="position", reseed_per_session=False,
        )

        async def main():
            svc = L.SessionService(cfg)
            await svc.start()
            try:
                return await L.loopback_pilot_session(svc.url, client_seed=3)
            finally:
                await svc.stop()

        sid, results = asyncio.run(main())
        assert [r.condition for r in results] == ["trail_only", "both"]
        for r in results:
            assert np.isfinite(r.summary["sup_error"])
            assert len(r.windowed_errors) == 3
        replays = replay_session_log(tmp_path / f"{sid}.jsonl")
        assert all(rep.complete and rep.bit_exact and rep.metrics_match for rep in replays)
