/**
 * Protocol conformance against the real session service: the client plays
 * a scripted 3-trial session over a live websocket, then the session log
 * is exported with the service's own CLI and the numbers the client
 * displayed are checked against the CSV, and the rendered preview sample
 * count against the handshake's preview_ticks.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import { WebSocket as WsWebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GameClient, type SocketLike } from "../src/game.js";
import { centerlinePoints, defaultGeometry, drawScene, formatSummary } from "../src/render.js";
import { readCsv, runCli, startService, type RunningService } from "./helpers.js";

const TRIAL = {
  segment_seconds: 1.6,
  discard_ticks: 8,
  window_ticks: 8,
  preview_ticks: 5,
};

const TRIALS = {
  trials: [
    { ...TRIAL, condition: "trail_only", seed: 11 },
    { ...TRIAL, condition: "both", added_delay_ticks: 2, seed: 12 },
    { ...TRIAL, condition: "both", added_rate_bits: 2.0, seed: 13 },
  ],
};

const SEGMENT_TICKS = 32; // 1.6 s at 0.05 s/tick

const wsFactory = (url: string): SocketLike =>
  new WsWebSocket(url) as unknown as SocketLike;

function scriptedWheel(tick: number): number {
  return Math.max(-1, Math.min(1, 0.8 * Math.sin(0.37 * tick)));
}

async function playSession(
  url: string, sessionId: string | null = null,
): Promise<GameClient> {
  const client = new GameClient({
    url,
    subjectLabel: "conformance",
    sessionId,
    socketFactory: wsFactory,
    wheelSource: scriptedWheel,
  });
  client.connect();
  const finish = await client.awaitPhase("done", "dropped");
  expect(finish).toBe("done");
  return client;
}

describe("scripted session against the live service", () => {
  let svc: RunningService;
  let client: GameClient;

  beforeAll(async () => {
    svc = await startService({ trials: TRIALS, pace: "lockstep", wheelMode: "position" });
    client = await playSession(svc.url);
  });

  afterAll(async () => {
    await svc?.stop();
  });

  it("completes all three trials", () => {
    expect(client.completed).toHaveLength(3);
    expect(client.completed.map((t) => t.trialId)).toEqual([0, 1, 2]);
    expect(client.completed.map((t) => t.condition))
      .toEqual(["trail_only", "both", "both"]);
    expect(client.completed.map((t) => t.addedDelayTicks)).toEqual([0, 2, 0]);
    expect(client.completed.map((t) => t.addedRateBits)).toEqual([null, null, 2.0]);
    for (const trial of client.completed) {
      expect(trial.segmentTicks).toBe(SEGMENT_TICKS);
      expect(trial.framesSeen).toBe(SEGMENT_TICKS);
      expect(trial.windowedErrors).toHaveLength(3); // (32 - 8 discarded) / 8-tick windows
      expect(trial.summary.sup_error).toBeGreaterThanOrEqual(
        Math.max(...trial.windowedErrors.map(Math.abs)) - 1e-12,
      );
    }
  });

  it("renders exactly preview_ticks preview samples per frame", () => {
    expect(client.ack?.preview_ticks).toBe(5);
    for (const trial of client.completed) {
      const frame = trial.lastFrame!;
      expect(frame.trail_preview).toHaveLength(5);
      const values = [frame.trail_now, ...frame.trail_preview];
      const pts = centerlinePoints(values, defaultGeometry(600, 800, 5));
      expect(pts.length - 1).toBe(client.ack!.preview_ticks);
    }
  });

  it("displayed TrialEnd summaries equal the exported CSV values", () => {
    const sid = client.sessionId!;
    const log = join(svc.store, `${sid}.jsonl`);
    expect(existsSync(log)).toBe(true);

    runCli(["export", log, "--kind", "campaign-csv", "--out", svc.store]);
    const summaryRows = readCsv(join(svc.store, `${sid}_summary.csv`))
      .filter((row) => row.complete === "1");
    expect(summaryRows).toHaveLength(3);

    for (const trial of client.completed) {
      const row = summaryRows.find((r) => Number(r.trial_id) === trial.trialId)!;
      expect(row).toBeDefined();
      const shown = formatSummary(trial.summary);
      expect(Object.is(Number(shown.supError), Number(row.sup_error))).toBe(true);
      expect(Object.is(Number(shown.meanWindowed), Number(row.mean_windowed))).toBe(true);
      expect(row.condition).toBe(trial.condition);
    }
  });

  it("served per-window metrics equal the exported windows CSV exactly", () => {
    const sid = client.sessionId!;
    const windowRows = readCsv(join(svc.store, `${sid}_windows.csv`));
    for (const trial of client.completed) {
      const rows = windowRows.filter((r) => Number(r.trial_id) === trial.trialId);
      expect(rows).toHaveLength(trial.windowedErrors.length);
      rows.forEach((row, i) => {
        expect(Number(row.window_index)).toBe(i);
        expect(Object.is(Number(row.window_worst_case), trial.windowedErrors[i]))
          .toBe(true);
      });
    }
  });

  it("the final scene draws without touching the payload numbers", () => {
    // smoke the real draw path over the completed session's view
    const calls: string[] = [];
    const record = (op: string) => (..._args: unknown[]) => { calls.push(op); };
    const ctx = {
      fillStyle: "", strokeStyle: "", lineWidth: 0, font: "", textAlign: "left" as CanvasTextAlign,
      clearRect: record("clearRect"), fillRect: record("fillRect"),
      beginPath: record("beginPath"), moveTo: record("moveTo"),
      lineTo: record("lineTo"), stroke: record("stroke"),
      arc: record("arc"), fill: record("fill"), fillText: record("fillText"),
    };
    drawScene(ctx, client.view(), defaultGeometry(600, 800, 5));
    expect(calls).toContain("fillText");
  });
});

describe("mid-trial disconnect and resume against the live service", () => {
  let svc: RunningService;

  beforeAll(async () => {
    svc = await startService({ trials: TRIALS, pace: "lockstep", wheelMode: "position" });
  });

  afterAll(async () => {
    await svc?.stop();
  });

  it("a dropped client resumes its session and finishes the remaining trials", async () => {
    let dropped = false;
    const client = new GameClient({
      url: svc.url,
      subjectLabel: "resume-test",
      socketFactory: wsFactory,
      wheelSource: scriptedWheel,
      onUpdate: (c) => {
        if (!dropped && c.completed.length === 1 && c.phase === "in_trial"
            && (c.view().trial?.tick ?? -1) >= 5) {
          dropped = true;
          c.disconnect();
        }
      },
    });
    client.connect();
    await client.awaitPhase("dropped");
    expect(client.completed).toHaveLength(1);
    const sid = client.sessionId!;

    client.reconnect();
    const finish = await client.awaitPhase("done", "dropped");
    expect(finish).toBe("done");
    expect(client.sessionId).toBe(sid); // same session, resumed server-side
    expect(client.completed.map((t) => t.trialId)).toEqual([0, 1, 2]);
    expect(client.completed.map((t) => t.framesSeen))
      .toEqual([SEGMENT_TICKS, SEGMENT_TICKS, SEGMENT_TICKS]);

    // the aborted attempt shows up incomplete in the export; the finished
    // trials replay as complete
    runCli(["export", join(svc.store, `${sid}.jsonl`),
            "--kind", "campaign-csv", "--out", svc.store]);
    const rows = readCsv(join(svc.store, `${sid}_summary.csv`));
    const complete = rows.filter((r) => r.complete === "1");
    expect(complete.map((r) => r.trial_id).sort()).toEqual(["0", "1", "2"]);
    for (const trial of client.completed) {
      const row = complete.find((r) => Number(r.trial_id) === trial.trialId)!;
      const shown = formatSummary(trial.summary);
      expect(Object.is(Number(shown.supError), Number(row.sup_error))).toBe(true);
      expect(Object.is(Number(shown.meanWindowed), Number(row.mean_windowed))).toBe(true);
    }
  });
});
