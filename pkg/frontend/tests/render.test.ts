import { describe, expect, it } from "vitest";

import type { ClientView } from "../src/game.js";
import {
  centerlinePoints, defaultGeometry, drawScene, formatSummary,
  type Ctx2DLike, type Geometry,
} from "../src/render.js";

class FakeCtx implements Ctx2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  font = "";
  textAlign: CanvasTextAlign = "left";
  ops: Array<{ op: string; args: unknown[] }> = [];

  private log(op: string, ...args: unknown[]): void {
    this.ops.push({ op, args });
  }

  clearRect(...args: number[]): void { this.log("clearRect", ...args); }
  fillRect(...args: number[]): void { this.log("fillRect", ...args); }
  beginPath(): void { this.log("beginPath"); }
  moveTo(...args: number[]): void { this.log("moveTo", ...args); }
  lineTo(...args: number[]): void { this.log("lineTo", ...args); }
  stroke(): void { this.log("stroke"); }
  arc(...args: number[]): void { this.log("arc", ...args); }
  fill(): void { this.log("fill"); }
  fillText(text: string, x: number, y: number): void { this.log("fillText", text, x, y); }

  texts(): string[] {
    return this.ops.filter((o) => o.op === "fillText").map((o) => String(o.args[0]));
  }

  polylines(): number[][][] {
    // groups of moveTo+lineTo... between beginPath/stroke pairs
    const out: number[][][] = [];
    let current: number[][] | null = null;
    for (const { op, args } of this.ops) {
      if (op === "beginPath") current = [];
      else if (op === "moveTo" || op === "lineTo") current?.push(args as number[]);
      else if (op === "stroke" && current && current.length > 0) {
        out.push(current);
        current = null;
      } else if (op === "fill") current = null; // arc path, not a polyline
    }
    return out;
  }
}

const GEOM: Geometry = {
  width: 600, height: 800, centerX: 300, pixelsPerUnit: 50,
  cursorY: 680, rowHeight: 16,
};

function trialView(over: Partial<NonNullable<ClientView["trial"]>> = {}): ClientView {
  return {
    phase: "in_trial",
    sessionId: "feedc0de",
    subjectLabel: "t",
    previewTicks: 5,
    tickSeconds: 0.05,
    trial: {
      trialId: 1,
      condition: "both",
      segmentTicks: 32,
      tick: 3,
      cursorX: 0.25,
      centerline: [0.1, 0.2, -0.30000000000000004, 1 / 3, 0.4, 0.5],
      bumpActive: false,
      countdownSeconds: 1.4,
      ...over,
    },
    completed: [],
    lastError: null,
    errorHistory: [0.1, 0.2, 0.15],
  };
}

describe("centerline geometry", () => {
  it("maps served values through a pure affine transform", () => {
    const values = [0.1, 0.2, -0.30000000000000004, 1 / 3];
    const pts = centerlinePoints(values, GEOM);
    expect(pts).toHaveLength(4);
    values.forEach((v, i) => {
      expect(Object.is(pts[i].x, GEOM.centerX + v * GEOM.pixelsPerUnit)).toBe(true);
      expect(pts[i].y).toBe(GEOM.cursorY - i * GEOM.rowHeight);
    });
  });

  it("renders a straight trail as a vertical line", () => {
    const pts = centerlinePoints(Array(8).fill(0.42), GEOM);
    const xs = new Set(pts.map((p) => p.x));
    expect(xs.size).toBe(1);
    expect([...xs][0]).toBeCloseTo(GEOM.centerX + 0.42 * GEOM.pixelsPerUnit, 12);
    // and it still spans the preview rows vertically
    expect(pts[0].y - pts[7].y).toBeCloseTo(7 * GEOM.rowHeight, 12);
  });

  it("keeps one vertex per served sample (no resampling)", () => {
    for (const n of [1, 2, 5, 40]) {
      const values = Array.from({ length: n + 1 }, (_, i) => Math.sin(i * 0.7));
      expect(centerlinePoints(values, GEOM)).toHaveLength(n + 1);
    }
  });

  it("defaultGeometry spreads the preview over the play area", () => {
    const geom = defaultGeometry(600, 800, 40);
    expect(geom.cursorY).toBeCloseTo(680, 9);
    expect(geom.rowHeight).toBeGreaterThan(0);
    expect(geom.cursorY - 40 * geom.rowHeight).toBeCloseTo(48, 9);
    expect(defaultGeometry(600, 800, 0).rowHeight).toBe(0);
  });
});

describe("drawScene", () => {
  it("draws the trail polyline exactly from the view centerline", () => {
    const view = trialView();
    const ctx = new FakeCtx();
    drawScene(ctx, view, GEOM);
    const lines = ctx.polylines();
    expect(lines).toHaveLength(1); // the trail; sparkline is off by default
    const expected = centerlinePoints(view.trial!.centerline, GEOM)
      .map((p) => [p.x, p.y]);
    expect(lines[0]).toEqual(expected);
  });

  it("puts the cursor marker at the last Frame's cursor_x", () => {
    const ctx = new FakeCtx();
    drawScene(ctx, trialView({ cursorX: -0.5 }), GEOM);
    const arc = ctx.ops.find((o) => o.op === "arc");
    expect(arc).toBeDefined();
    expect(arc!.args[0]).toBe(GEOM.centerX + -0.5 * GEOM.pixelsPerUnit);
    expect(arc!.args[1]).toBe(GEOM.cursorY);
  });

  it("shows the bump indicator only while a bump is active", () => {
    const quiet = new FakeCtx();
    drawScene(quiet, trialView({ bumpActive: false }), GEOM);
    expect(quiet.texts().some((t) => /bump/i.test(t))).toBe(false);
    const bumped = new FakeCtx();
    drawScene(bumped, trialView({ bumpActive: true }), GEOM);
    expect(bumped.texts().some((t) => /bump/i.test(t))).toBe(true);
  });

  it("HUD shows trial id and countdown", () => {
    const ctx = new FakeCtx();
    drawScene(ctx, trialView(), GEOM);
    expect(ctx.texts()).toContain("trial 1 (both)");
    expect(ctx.texts()).toContain("1.4 s left");
  });

  it("sparkline appears only when enabled", () => {
    const on = new FakeCtx();
    drawScene(on, trialView(), GEOM, { sparkline: true });
    expect(on.polylines()).toHaveLength(2);
    const off = new FakeCtx();
    drawScene(off, trialView(), GEOM, {});
    expect(off.polylines()).toHaveLength(1);
  });

  it("between trials, the summary numbers shown parse back to the payload exactly", () => {
    const summary = { sup_error: 12.88442186450329, mean_windowed: 1 / 3 };
    const view: ClientView = {
      ...trialView(),
      phase: "between_trials",
      trial: null,
      completed: [{
        trialId: 2, condition: "both", addedDelayTicks: 4, addedRateBits: null,
        segmentTicks: 32, framesSeen: 32, summary,
        windowedErrors: [0.5, 0.25], lastFrame: null,
      }],
    };
    const ctx = new FakeCtx();
    drawScene(ctx, view, GEOM);
    const texts = ctx.texts();
    const shown = formatSummary(summary);
    expect(texts).toContain(`sup error ${shown.supError}`);
    expect(texts).toContain(`mean windowed ${shown.meanWindowed}`);
    expect(Object.is(Number(shown.supError), summary.sup_error)).toBe(true);
    expect(Object.is(Number(shown.meanWindowed), summary.mean_windowed)).toBe(true);
  });

  it("announces the reconnect prompt when the connection drops", () => {
    const view: ClientView = { ...trialView(), phase: "dropped", trial: null };
    const ctx = new FakeCtx();
    drawScene(ctx, view, GEOM);
    expect(ctx.texts().some((t) => /reconnect/i.test(t))).toBe(true);
  });

  it("surfaces server errors", () => {
    const view: ClientView = {
      ...trialView(),
      lastError: { kind: "Error", code: "timeout", message: "no Input within 30s at tick 4" },
    };
    const ctx = new FakeCtx();
    drawScene(ctx, view, GEOM);
    expect(ctx.texts().some((t) => t.includes("timeout"))).toBe(true);
  });
});

describe("formatSummary", () => {
  it("round-trips awkward doubles", () => {
    for (const v of [0, 1 / 3, 0.1 + 0.2, 12.884421, 1e-9, 123456.789012345]) {
      const shown = formatSummary({ sup_error: v, mean_windowed: v });
      expect(Object.is(Number(shown.supError), v)).toBe(true);
      expect(Object.is(Number(shown.meanWindowed), v)).toBe(true);
    }
  });
});
