/**
 * Input devices, all mapping to a wheel value in [-1, 1]:
 *   keyboard  — arrow-hold ramps the wheel at a configurable rate,
 *   pointer   — horizontal drag with a fixed full-deflection distance,
 *   gamepad   — first connected pad's first axis, with a deadzone.
 * An InputHub arbitrates: the device that moved most recently drives.
 */

export function clampWheel(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.max(-1, Math.min(1, v));
}

export interface RampOptions {
  /** wheel units per second toward a held arrow (default 2.0) */
  ratePerSecond?: number;
  /** wheel units per second back toward 0 when released (default: same) */
  returnRatePerSecond?: number;
}

export class KeyboardRamp {
  private readonly rate: number;
  private readonly returnRate: number;
  private left = false;
  private right = false;
  private value = 0;

  constructor(opts: RampOptions = {}) {
    this.rate = opts.ratePerSecond ?? 2.0;
    this.returnRate = opts.returnRatePerSecond ?? this.rate;
    if (this.rate <= 0 || this.returnRate <= 0) {
      throw new Error("ramp rates must be positive");
    }
  }

  /** Returns true when the key is one this device handles. */
  keyDown(key: string): boolean {
    if (key === "ArrowLeft") { this.left = true; return true; }
    if (key === "ArrowRight") { this.right = true; return true; }
    return false;
  }

  keyUp(key: string): boolean {
    if (key === "ArrowLeft") { this.left = false; return true; }
    if (key === "ArrowRight") { this.right = false; return true; }
    return false;
  }

  /** Advance by dt seconds; returns the current wheel value. */
  update(dtSeconds: number): number {
    const target = this.left === this.right ? 0 : this.right ? 1 : -1;
    const rate = target === 0 ? this.returnRate : this.rate;
    const step = rate * Math.max(0, dtSeconds);
    if (this.value < target) this.value = Math.min(target, this.value + step);
    else if (this.value > target) this.value = Math.max(target, this.value - step);
    return clampWheel(this.value);
  }

  current(): number {
    return this.value;
  }
}

export class PointerDrag {
  private originX = 0;
  private value = 0;
  private active = false;

  /** fullDeflectionPx: horizontal pixels from center to |wheel| = 1 */
  constructor(private readonly fullDeflectionPx = 150) {
    if (fullDeflectionPx <= 0) throw new Error("fullDeflectionPx must be positive");
  }

  begin(pixelX: number): void {
    // grab wherever the wheel currently sits so the value never jumps
    this.originX = pixelX - this.value * this.fullDeflectionPx;
    this.active = true;
  }

  move(pixelX: number): void {
    if (!this.active) return;
    this.value = clampWheel((pixelX - this.originX) / this.fullDeflectionPx);
  }

  /** Release keeps the current deflection (a wheel without a return spring). */
  end(): void {
    this.active = false;
  }

  isActive(): boolean {
    return this.active;
  }

  current(): number {
    return this.value;
  }
}

/** The part of the browser Gamepad surface the poll uses. */
export interface GamepadLike {
  axes: ReadonlyArray<number>;
  connected?: boolean;
}

/** Wheel value from the first usable pad, or null when none is present. */
export function gamepadWheel(
  pads: Iterable<GamepadLike | null | undefined>,
  deadzone = 0.08,
): number | null {
  for (const pad of pads) {
    if (!pad || pad.connected === false || pad.axes.length === 0) continue;
    const v = pad.axes[0];
    if (typeof v !== "number" || Number.isNaN(v)) continue;
    return Math.abs(v) < deadzone ? 0 : clampWheel(v);
  }
  return null;
}

export type InputSource = "keyboard" | "pointer" | "gamepad";

export interface InputHubOptions {
  ramp?: RampOptions;
  pointerFullDeflectionPx?: number;
  gamepadDeadzone?: number;
  /** change needed for a device to steal control (default 1e-3) */
  activationEpsilon?: number;
}

export class InputHub {
  readonly keyboard: KeyboardRamp;
  readonly pointer: PointerDrag;
  private readonly deadzone: number;
  private readonly epsilon: number;
  private lastGamepad: number | null = null;
  private lastKeyboard = 0;
  private active: InputSource = "keyboard";
  private value = 0;

  constructor(opts: InputHubOptions = {}) {
    this.keyboard = new KeyboardRamp(opts.ramp);
    this.pointer = new PointerDrag(opts.pointerFullDeflectionPx ?? 150);
    this.deadzone = opts.gamepadDeadzone ?? 0.08;
    this.epsilon = opts.activationEpsilon ?? 1e-3;
  }

  activeSource(): InputSource {
    return this.active;
  }

  /** Advance all devices by dt and return the driving wheel value. */
  update(
    dtSeconds: number,
    pads: Iterable<GamepadLike | null | undefined> = [],
  ): number {
    const k = this.keyboard.update(dtSeconds);
    const g = gamepadWheel(pads, this.deadzone);

    if (this.pointer.isActive()) {
      this.active = "pointer";
    } else {
      if (Math.abs(k - this.lastKeyboard) > this.epsilon) this.active = "keyboard";
      if (g !== null && this.lastGamepad !== null
          && Math.abs(g - this.lastGamepad) > this.epsilon) {
        this.active = "gamepad";
      }
    }
    this.lastKeyboard = k;
    this.lastGamepad = g;

    if (this.active === "pointer") this.value = this.pointer.current();
    else if (this.active === "gamepad") this.value = g ?? this.value;
    else this.value = k;
    return clampWheel(this.value);
  }

  current(): number {
    return clampWheel(this.value);
  }
}
