/**
 * Wire protocol spoken with the session service: one JSON object per
 * websocket text message, tagged by `kind`.
 *
 *   client -> Hello      {client_version, subject_label?, session_id?}
 *   server -> HelloAck   {session_id, tick_seconds, preview_ticks}
 *   server -> TrialStart {trial_id, condition, added_delay_ticks,
 *                         added_rate_bits, segment_ticks}
 *   server -> Frame      {tick, cursor_x, trail_now, trail_preview,
 *                         bump_active}
 *   client -> Input      {client_tick, wheel}
 *   server -> TrialEnd   {trial_id, summary: {sup_error, mean_windowed}}
 *   server -> Metrics    {trial_id, windowed_errors}
 *   server -> Error      {code, message}
 */

export const PROTOCOL_VERSION = "1";

export interface Hello {
  kind: "Hello";
  client_version: string;
  subject_label?: string;
  session_id?: string;
}

export interface HelloAck {
  kind: "HelloAck";
  session_id: string;
  tick_seconds: number;
  preview_ticks: number;
}

export interface TrialStart {
  kind: "TrialStart";
  trial_id: number;
  condition: string;
  added_delay_ticks: number;
  added_rate_bits: number | null;
  segment_ticks: number;
}

export interface Frame {
  kind: "Frame";
  tick: number;
  cursor_x: number;
  trail_now: number;
  trail_preview: number[];
  bump_active: boolean;
}

export interface Input {
  kind: "Input";
  client_tick: number;
  wheel: number;
}

export interface TrialSummary {
  sup_error: number;
  mean_windowed: number;
}

export interface TrialEnd {
  kind: "TrialEnd";
  trial_id: number;
  summary: TrialSummary;
}

export interface Metrics {
  kind: "Metrics";
  trial_id: number;
  windowed_errors: number[];
}

export interface ErrorMsg {
  kind: "Error";
  code: string;
  message: string;
}

export type ClientMsg = Hello | Input;
export type ServerMsg = HelloAck | TrialStart | Frame | TrialEnd | Metrics | ErrorMsg;
export type WireMsg = ClientMsg | ServerMsg;

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

const KINDS = new Set([
  "Hello", "HelloAck", "TrialStart", "Frame", "Input", "TrialEnd",
  "Metrics", "Error",
]);

export function encodeMsg(msg: WireMsg): string {
  if (!KINDS.has(msg.kind)) {
    throw new ProtocolError(`unknown message kind ${JSON.stringify(msg.kind)}`);
  }
  return JSON.stringify(msg);
}

function rec(msg: Record<string, unknown>, field: string): unknown {
  if (!(field in msg)) {
    throw new ProtocolError(`${msg.kind} message missing field ${field}`);
  }
  return msg[field];
}

function num(msg: Record<string, unknown>, field: string): number {
  const v = rec(msg, field);
  if (typeof v !== "number") {
    throw new ProtocolError(`${msg.kind}.${field} must be a number, got ${typeof v}`);
  }
  return v;
}

function str(msg: Record<string, unknown>, field: string): string {
  const v = rec(msg, field);
  if (typeof v !== "string") {
    throw new ProtocolError(`${msg.kind}.${field} must be a string, got ${typeof v}`);
  }
  return v;
}

function numArray(msg: Record<string, unknown>, field: string): void {
  const v = rec(msg, field);
  if (!Array.isArray(v) || v.some((e) => typeof e !== "number")) {
    throw new ProtocolError(`${msg.kind}.${field} must be an array of numbers`);
  }
}

/** Parse and validate one wire message; throws ProtocolError on anything
 *  that is not a well-formed message of a known kind. */
export function decodeMsg(raw: unknown): WireMsg {
  let parsed: unknown;
  try {
    parsed = JSON.parse(String(raw));
  } catch (exc) {
    throw new ProtocolError(`message is not valid JSON: ${exc}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new ProtocolError(`message must be a JSON object, got ${JSON.stringify(parsed)}`);
  }
  const msg = parsed as Record<string, unknown>;
  if (typeof msg.kind !== "string" || !KINDS.has(msg.kind)) {
    throw new ProtocolError(`message must carry a known kind, got ${JSON.stringify(msg.kind)}`);
  }
  switch (msg.kind) {
    case "Hello":
      str(msg, "client_version");
      break;
    case "HelloAck":
      str(msg, "session_id");
      num(msg, "tick_seconds");
      num(msg, "preview_ticks");
      break;
    case "TrialStart": {
      num(msg, "trial_id");
      str(msg, "condition");
      num(msg, "added_delay_ticks");
      const rate = rec(msg, "added_rate_bits");
      if (rate !== null && typeof rate !== "number") {
        throw new ProtocolError("TrialStart.added_rate_bits must be a number or null");
      }
      num(msg, "segment_ticks");
      break;
    }
    case "Frame":
      num(msg, "tick");
      num(msg, "cursor_x");
      num(msg, "trail_now");
      numArray(msg, "trail_preview");
      if (typeof rec(msg, "bump_active") !== "boolean") {
        throw new ProtocolError("Frame.bump_active must be a boolean");
      }
      break;
    case "Input":
      num(msg, "client_tick");
      num(msg, "wheel");
      break;
    case "TrialEnd": {
      num(msg, "trial_id");
      const summary = rec(msg, "summary");
      if (typeof summary !== "object" || summary === null || Array.isArray(summary)) {
        throw new ProtocolError("TrialEnd.summary must be an object");
      }
      const s = summary as Record<string, unknown>;
      if (typeof s.sup_error !== "number" || typeof s.mean_windowed !== "number") {
        throw new ProtocolError("TrialEnd.summary must carry numeric sup_error and mean_windowed");
      }
      break;
    }
    case "Metrics":
      num(msg, "trial_id");
      numArray(msg, "windowed_errors");
      break;
    case "Error":
      str(msg, "code");
      str(msg, "message");
      break;
  }
  return msg as unknown as WireMsg;
}
