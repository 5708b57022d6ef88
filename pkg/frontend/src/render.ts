/**
 * Canvas renderer. The trail centerline is drawn from the Frame payload
 * through a fixed affine map only — no smoothing, resampling, or
 * interpolation — so the polyline has exactly one vertex per served sample:
 * the "now" value on the cursor row plus preview_ticks preview values
 * scrolling in from the top.
 */

import type { TrialSummary } from "./protocol.js";
import type { ClientView, CompletedTrial } from "./game.js";

export interface Geometry {
  width: number;
  height: number;
  /** pixel x of trail value 0 */
  centerX: number;
  /** horizontal pixels per normalized unit */
  pixelsPerUnit: number;
  /** pixel y of the "now" row (cursor row) */
  cursorY: number;
  /** vertical pixels per preview tick (preview extends upward) */
  rowHeight: number;
}

export function defaultGeometry(
  width: number, height: number, previewTicks: number,
): Geometry {
  const cursorY = height * 0.85;
  const top = height * 0.06;
  return {
    width,
    height,
    centerX: width / 2,
    pixelsPerUnit: width / 12,
    cursorY,
    rowHeight: previewTicks > 0 ? (cursorY - top) / previewTicks : 0,
  };
}

export interface Point {
  x: number;
  y: number;
}

/** One point per centerline value: index 0 is the "now" row, index k the
 *  k-th preview tick above it. Pure affine map of the served values. */
export function centerlinePoints(values: number[], geom: Geometry): Point[] {
  return values.map((v, i) => ({
    x: geom.centerX + v * geom.pixelsPerUnit,
    y: geom.cursorY - i * geom.rowHeight,
  }));
}

export interface DisplayedSummary {
  supError: string;
  meanWindowed: string;
}

/** The between-trial numbers exactly as shown: the summary payload values
 *  rendered with the shortest round-tripping decimal form, so parsing the
 *  displayed string recovers the served double bit for bit. */
export function formatSummary(summary: TrialSummary): DisplayedSummary {
  return {
    supError: String(summary.sup_error),
    meanWindowed: String(summary.mean_windowed),
  };
}

export interface RenderOptions {
  /** live |cursor - trail| sparkline; off by default */
  sparkline?: boolean;
}

/** The 2D-context surface drawScene uses (a recording fake works in tests). */
export interface Ctx2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

const TRAIL_COLOR = "#58a6ff";
const CURSOR_COLOR = "#f0f6fc";
const BG_COLOR = "#0d1117";
const HUD_COLOR = "#c9d1d9";
const BUMP_COLOR = "#f85149";
const SPARK_COLOR = "#3fb950";

function polyline(ctx: Ctx2DLike, pts: Point[]): void {
  if (pts.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(pts[0].x, pts[0].y);
  for (let i = 1; i < pts.length; i += 1) ctx.lineTo(pts[i].x, pts[i].y);
  ctx.stroke();
}

function hudLine(ctx: Ctx2DLike, text: string, line: number): void {
  ctx.fillStyle = HUD_COLOR;
  ctx.textAlign = "left";
  ctx.fillText(text, 12, 22 + 20 * line);
}

function summaryLines(trial: CompletedTrial): string[] {
  const shown = formatSummary(trial.summary);
  return [
    `trial ${trial.trialId} (${trial.condition}) finished`,
    `sup error ${shown.supError}`,
    `mean windowed ${shown.meanWindowed}`,
    `windows: ${trial.windowedErrors.map((v) => String(v)).join(", ")}`,
  ];
}

export function drawScene(
  ctx: Ctx2DLike, view: ClientView, geom: Geometry, opts: RenderOptions = {},
): void {
  ctx.clearRect(0, 0, geom.width, geom.height);
  ctx.fillStyle = BG_COLOR;
  ctx.fillRect(0, 0, geom.width, geom.height);

  if (view.trial) {
    const t = view.trial;
    ctx.strokeStyle = TRAIL_COLOR;
    ctx.lineWidth = 3;
    polyline(ctx, centerlinePoints(t.centerline, geom));

    ctx.fillStyle = CURSOR_COLOR;
    ctx.beginPath();
    ctx.arc(geom.centerX + t.cursorX * geom.pixelsPerUnit, geom.cursorY,
            6, 0, 2 * Math.PI);
    ctx.fill();

    hudLine(ctx, `trial ${t.trialId} (${t.condition})`, 0);
    hudLine(ctx, `${t.countdownSeconds.toFixed(1)} s left`, 1);
    if (t.bumpActive) {
      ctx.fillStyle = BUMP_COLOR;
      ctx.textAlign = "left";
      ctx.fillText("BUMP", geom.width - 70, 22);
    }
    if (opts.sparkline && view.errorHistory.length > 1) {
      const h = view.errorHistory;
      const base = geom.height - 8;
      const scale = 18 / Math.max(1e-9, ...h);
      ctx.strokeStyle = SPARK_COLOR;
      ctx.lineWidth = 1;
      polyline(ctx, h.map((v, i) => ({
        x: 12 + (i * (geom.width - 24)) / Math.max(1, h.length - 1),
        y: base - v * scale,
      })));
    }
  } else {
    const last = view.completed[view.completed.length - 1];
    let line = 0;
    if (view.phase === "connecting" || view.phase === "idle") {
      hudLine(ctx, "connecting…", line);
      line += 1;
    }
    if (last) {
      for (const text of summaryLines(last)) {
        hudLine(ctx, text, line);
        line += 1;
      }
    }
    if (view.phase === "between_trials" && view.sessionId) {
      hudLine(ctx, last ? "next trial starting…" : "waiting for the first trial…", line);
      line += 1;
    }
    if (view.phase === "done") {
      hudLine(ctx, `session ${view.sessionId} complete: ${view.completed.length} trials`, line);
      line += 1;
    }
    if (view.phase === "dropped") {
      ctx.fillStyle = BUMP_COLOR;
      ctx.textAlign = "left";
      ctx.fillText("connection lost — click or press R to reconnect", 12, 22 + 20 * line);
      line += 1;
    }
  }

  if (view.lastError) {
    ctx.fillStyle = BUMP_COLOR;
    ctx.textAlign = "left";
    ctx.fillText(`server: ${view.lastError.code}: ${view.lastError.message}`,
                 12, geom.height - 12);
  }
}
