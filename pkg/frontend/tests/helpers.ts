import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { SocketLike } from "../src/game.js";

/** In-memory socket driven by a test script playing the server. */
export class FakeSocket implements SocketLike {
  readonly sent: string[] = [];
  closed = false;
  onClientSend: ((msg: Record<string, unknown>, sock: FakeSocket) => void) | null = null;
  private listeners = new Map<string, Array<(ev: unknown) => void>>();

  addEventListener(type: string, listener: (ev: unknown) => void): void {
    const list = this.listeners.get(type) ?? [];
    list.push(listener);
    this.listeners.set(type, list);
  }

  send(data: string): void {
    this.sent.push(data);
    this.onClientSend?.(JSON.parse(data) as Record<string, unknown>, this);
  }

  close(): void {
    if (this.closed) return;
    this.closed = true;
    this.emit("close", {});
  }

  // -- test-side controls -------------------------------------------------

  open(): void {
    this.emit("open", {});
  }

  deliver(obj: Record<string, unknown>): void {
    this.emit("message", { data: JSON.stringify(obj) });
  }

  deliverRaw(data: string): void {
    this.emit("message", { data });
  }

  serverClose(): void {
    if (this.closed) return;
    this.closed = true;
    this.emit("close", { code: 1000 });
  }

  sentMessages(): Array<Record<string, unknown>> {
    return this.sent.map((s) => JSON.parse(s) as Record<string, unknown>);
  }

  private emit(type: string, ev: unknown): void {
    for (const fn of this.listeners.get(type) ?? []) fn(ev);
  }
}

export interface RunningService {
  url: string;
  store: string;
  proc: ChildProcess;
  stop(): Promise<void>;
}

const SERVE_BIN = process.env.LOOPLIMITS_BIN ?? "looplimits";

/** Spawn `looplimits serve` on an ephemeral port and wait for its URL. */
export async function startService(options: {
  trials: unknown;
  pace?: "realtime" | "lockstep";
  wheelMode?: "velocity" | "position";
  wheelGain?: number;
}): Promise<RunningService> {
  const store = mkdtempSync(join(tmpdir(), "game-ui-store-"));
  const trialsPath = join(store, "trials.json");
  writeFileSync(trialsPath, JSON.stringify(options.trials));
  const args = [
    "serve",
    "--bind", "127.0.0.1:0",
    "--store", store,
    "--trials", trialsPath,
    "--pace", options.pace ?? "lockstep",
    "--wheel-mode", options.wheelMode ?? "position",
    "--no-reseed",
  ];
  if (options.wheelGain !== undefined) {
    args.push("--wheel-gain", String(options.wheelGain));
  }
  const proc = spawn(SERVE_BIN, args, { stdio: ["ignore", "pipe", "pipe"] });

  let stdout = "";
  let stderr = "";
  proc.stderr?.on("data", (chunk: Buffer) => { stderr += chunk.toString(); });
  const url = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`service did not report a URL\n${stdout}\n${stderr}`)),
      30_000,
    );
    proc.stdout?.on("data", (chunk: Buffer) => {
      stdout += chunk.toString();
      const m = stdout.match(/listening on (ws:\/\/[\d.]+:\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]);
      }
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (code ${code})\n${stdout}\n${stderr}`));
    });
    proc.on("error", (err) => {
      clearTimeout(timer);
      reject(err);
    });
  });

  return {
    url,
    store,
    proc,
    stop: () =>
      new Promise<void>((resolve) => {
        if (proc.exitCode !== null) {
          resolve();
          return;
        }
        proc.once("exit", () => resolve());
        proc.kill("SIGINT");
        setTimeout(() => {
          if (proc.exitCode === null) proc.kill("SIGKILL");
        }, 5_000).unref();
      }),
  };
}

/** Run a looplimits subcommand to completion, asserting exit code 0. */
export function runCli(args: string[]): string {
  return execFileSync(SERVE_BIN, args, { encoding: "utf-8" });
}

/** Minimal CSV reader for the package's own output (no quoting needed). */
export function readCsv(path: string): Array<Record<string, string>> {
  const lines = readFileSync(path, "utf-8").split(/\r?\n/).filter((l) => l.length > 0);
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    header.forEach((name, i) => { row[name] = cells[i] ?? ""; });
    return row;
  });
}
