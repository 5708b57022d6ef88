/**
 * Client session state machine. All game dynamics are server-authoritative:
 * the client renders exactly what each Frame carries (the cursor shown is
 * the last Frame's cursor_x — never interpolated, predicted, or
 * delay-compensated) and answers every Frame with at most one Input
 * carrying the latest control value.
 *
 * Network callbacks mutate this state on the single JS thread; the render
 * loop consumes immutable snapshots via view().
 */

import {
  decodeMsg, encodeMsg, PROTOCOL_VERSION, ProtocolError,
  type ErrorMsg, type Frame, type Hello, type HelloAck, type Metrics,
  type TrialEnd, type TrialStart, type TrialSummary,
} from "./protocol.js";

/** The subset of the browser WebSocket surface the client uses; the `ws`
 *  npm package satisfies it too, which lets tests run headless. */
export interface SocketLike {
  send(data: string): void;
  close(code?: number, reason?: string): void;
  // listener takes `any` so both the DOM WebSocket and the `ws` package
  // satisfy this interface without casts at every call site
  addEventListener(type: string, listener: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type Phase =
  | "idle"            // before connect()
  | "connecting"      // socket opening / Hello in flight
  | "between_trials"  // handshake done or a trial just finished
  | "in_trial"        // Frames streaming
  | "done"            // server closed after the last trial completed
  | "dropped";        // connection lost mid-session: offer reconnect

export interface CompletedTrial {
  trialId: number;
  condition: string;
  addedDelayTicks: number;
  addedRateBits: number | null;
  segmentTicks: number;
  framesSeen: number;
  summary: TrialSummary;
  windowedErrors: number[];
  lastFrame: Frame | null;
}

interface CurrentTrial {
  start: TrialStart;
  lastFrame: Frame | null;
  framesSeen: number;
  end: TrialEnd | null;
}

/** Immutable render snapshot. */
export interface ClientView {
  phase: Phase;
  sessionId: string | null;
  subjectLabel: string;
  previewTicks: number | null;
  tickSeconds: number | null;
  trial: {
    trialId: number;
    condition: string;
    segmentTicks: number;
    tick: number;
    /** verbatim cursor_x of the last Frame */
    cursorX: number;
    /** verbatim [trail_now, ...trail_preview] of the last Frame */
    centerline: number[];
    bumpActive: boolean;
    countdownSeconds: number;
  } | null;
  completed: CompletedTrial[];
  lastError: ErrorMsg | null;
  /** |cursor_x - trail_now| per frame of the current trial (sparkline feed) */
  errorHistory: number[];
}

export interface GameClientOptions {
  url: string;
  socketFactory: SocketFactory;
  subjectLabel?: string;
  /** resume a previous session */
  sessionId?: string | null;
  /** scripted control source; when absent the latest setWheel() value is used */
  wheelSource?: (tick: number, view: ClientView) => number;
  /** notified after every state change (render scheduling, tests) */
  onUpdate?: (client: GameClient) => void;
}

function clampWheel(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.max(-1, Math.min(1, v));
}

const ERROR_HISTORY_CAP = 400;

export class GameClient {
  phase: Phase = "idle";
  sessionId: string | null;
  ack: HelloAck | null = null;
  lastError: ErrorMsg | null = null;
  readonly completed: CompletedTrial[] = [];

  private readonly opts: GameClientOptions;
  private sock: SocketLike | null = null;
  private latestWheel = 0;
  private lastInputTick = -1;
  private current: CurrentTrial | null = null;
  private errorHistory: number[] = [];
  private waiters: Array<{ phases: Phase[]; resolve: (p: Phase) => void }> = [];

  constructor(opts: GameClientOptions) {
    this.opts = opts;
    this.sessionId = opts.sessionId ?? null;
  }

  /** Latest control value from whatever input device moved last. */
  setWheel(v: number): void {
    this.latestWheel = clampWheel(v);
  }

  get wheel(): number {
    return this.latestWheel;
  }

  connect(): void {
    this.setPhase("connecting");
    const sock = this.opts.socketFactory(this.opts.url);
    this.sock = sock;
    sock.addEventListener("open", () => {
      const hello: Hello = {
        kind: "Hello",
        client_version: PROTOCOL_VERSION,
        subject_label: this.opts.subjectLabel ?? "anonymous",
      };
      if (this.sessionId) hello.session_id = this.sessionId;
      sock.send(encodeMsg(hello));
    });
    sock.addEventListener("message", (ev: { data: unknown }) => {
      this.onMessage(ev.data);
    });
    sock.addEventListener("close", () => this.onClose(sock));
    sock.addEventListener("error", () => {
      /* the close event that follows carries the state change */
    });
  }

  /** Reconnect after a drop; the server resumes the session at the first
   *  unfinished trial when the stored session id is presented. */
  reconnect(): void {
    if (this.sock) {
      try { this.sock.close(); } catch { /* already closed */ }
      this.sock = null;
    }
    this.current = null;
    this.connect();
  }

  /** Client-initiated leave (or test-forced drop). */
  disconnect(): void {
    this.sock?.close();
  }

  view(): ClientView {
    const cur = this.current;
    const f = cur?.lastFrame ?? null;
    const tickSeconds = this.ack?.tick_seconds ?? null;
    return {
      phase: this.phase,
      sessionId: this.sessionId,
      subjectLabel: this.opts.subjectLabel ?? "anonymous",
      previewTicks: this.ack?.preview_ticks ?? null,
      tickSeconds,
      trial: cur && f
        ? {
            trialId: cur.start.trial_id,
            condition: cur.start.condition,
            segmentTicks: cur.start.segment_ticks,
            tick: f.tick,
            cursorX: f.cursor_x,
            centerline: [f.trail_now, ...f.trail_preview],
            bumpActive: f.bump_active,
            countdownSeconds:
              (cur.start.segment_ticks - f.tick - 1) * (tickSeconds ?? 0),
          }
        : null,
      completed: this.completed.slice(),
      lastError: this.lastError,
      errorHistory: this.errorHistory.slice(),
    };
  }

  /** Resolves when the phase becomes one of the given values. */
  awaitPhase(...phases: Phase[]): Promise<Phase> {
    if (phases.includes(this.phase)) return Promise.resolve(this.phase);
    return new Promise((resolve) => this.waiters.push({ phases, resolve }));
  }

  // -- internals ----------------------------------------------------------

  private setPhase(phase: Phase): void {
    this.phase = phase;
    const ready = this.waiters.filter((w) => w.phases.includes(phase));
    this.waiters = this.waiters.filter((w) => !w.phases.includes(phase));
    for (const w of ready) w.resolve(phase);
    this.notify();
  }

  private notify(): void {
    this.opts.onUpdate?.(this);
  }

  private onMessage(data: unknown): void {
    let msg;
    try {
      msg = decodeMsg(data);
    } catch (exc) {
      if (exc instanceof ProtocolError) {
        this.lastError = { kind: "Error", code: "bad-message", message: exc.message };
        this.notify();
        return;
      }
      throw exc;
    }
    switch (msg.kind) {
      case "HelloAck":
        this.ack = msg;
        this.sessionId = msg.session_id;
        this.setPhase("between_trials");
        break;
      case "TrialStart":
        this.current = { start: msg, lastFrame: null, framesSeen: 0, end: null };
        this.lastInputTick = -1;
        this.errorHistory = [];
        this.setPhase("in_trial");
        break;
      case "Frame":
        this.onFrame(msg);
        break;
      case "TrialEnd":
        if (this.current) this.current.end = msg;
        this.notify();
        break;
      case "Metrics":
        this.onMetrics(msg);
        break;
      case "Error":
        this.lastError = msg;
        this.notify();
        break;
      default:
        // client-bound kinds only; a server echoing Hello/Input is noise
        break;
    }
  }

  private onFrame(frame: Frame): void {
    const cur = this.current;
    if (!cur) return;
    cur.lastFrame = frame;
    cur.framesSeen += 1;
    this.errorHistory.push(Math.abs(frame.cursor_x - frame.trail_now));
    if (this.errorHistory.length > ERROR_HISTORY_CAP) this.errorHistory.shift();
    if (this.opts.wheelSource) {
      this.latestWheel = clampWheel(this.opts.wheelSource(frame.tick, this.view()));
    }
    // at most one Input per server tick, carrying the latest value
    if (frame.tick !== this.lastInputTick) {
      this.lastInputTick = frame.tick;
      this.sock?.send(encodeMsg({
        kind: "Input", client_tick: frame.tick, wheel: this.latestWheel,
      }));
    }
    this.notify();
  }

  private onMetrics(metrics: Metrics): void {
    const cur = this.current;
    if (!cur || !cur.end) return;
    this.completed.push({
      trialId: cur.start.trial_id,
      condition: cur.start.condition,
      addedDelayTicks: cur.start.added_delay_ticks,
      addedRateBits: cur.start.added_rate_bits,
      segmentTicks: cur.start.segment_ticks,
      framesSeen: cur.framesSeen,
      summary: cur.end.summary,
      windowedErrors: metrics.windowed_errors.slice(),
      lastFrame: cur.lastFrame,
    });
    this.current = null;
    this.setPhase("between_trials");
  }

  private onClose(sock: SocketLike): void {
    if (sock !== this.sock) return; // stale socket from before a reconnect
    this.sock = null;
    if (this.phase === "done" || this.phase === "dropped") return;
    if (this.phase === "between_trials" && this.completed.length > 0) {
      // the server runs trials back to back and only closes once every
      // trial has been played, so a close between trials means the
      // session is complete
      this.setPhase("done");
    } else {
      this.setPhase("dropped");
    }
  }
}
