/**
 * Browser entry point. Configuration rides URL query parameters:
 *   ?service_url=ws://host:port   session service address
 *   &subject_label=NAME           label stored with the session log
 *   &sparkline=1                  live error sparkline (off by default)
 *
 * One requestAnimationFrame loop samples the input devices and repaints;
 * network messages are handled as they arrive and only mutate client
 * state that the loop then renders.
 */

import { GameClient } from "./game.js";
import { InputHub } from "./input.js";
import { defaultGeometry, drawScene } from "./render.js";

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const serviceUrl = params.get("service_url") ?? "ws://127.0.0.1:8765";
  const subjectLabel = params.get("subject_label") ?? "anonymous";
  const sparkline = params.get("sparkline") === "1";

  const canvas = document.getElementById("game") as HTMLCanvasElement | null;
  if (!canvas) throw new Error("missing <canvas id=\"game\">");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas context unavailable");

  const client = new GameClient({
    url: serviceUrl,
    subjectLabel,
    socketFactory: (url) => new WebSocket(url),
  });
  client.connect();

  const hub = new InputHub();

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "r" || ev.key === "R") {
      if (client.phase === "dropped") client.reconnect();
      return;
    }
    if (hub.keyboard.keyDown(ev.key)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => {
    if (hub.keyboard.keyUp(ev.key)) ev.preventDefault();
  });
  canvas.addEventListener("pointerdown", (ev) => {
    if (client.phase === "dropped") {
      client.reconnect();
      return;
    }
    canvas.setPointerCapture(ev.pointerId);
    hub.pointer.begin(ev.clientX);
  });
  canvas.addEventListener("pointermove", (ev) => hub.pointer.move(ev.clientX));
  canvas.addEventListener("pointerup", () => hub.pointer.end());
  canvas.addEventListener("pointercancel", () => hub.pointer.end());

  function fit(): void {
    const el = canvas as HTMLCanvasElement;
    el.width = Math.min(window.innerWidth - 20, 760);
    el.height = Math.min(window.innerHeight - 20, 920);
  }
  fit();
  window.addEventListener("resize", fit);

  let prev = performance.now();
  function loop(now: number): void {
    const dt = (now - prev) / 1000;
    prev = now;
    const pads = typeof navigator.getGamepads === "function"
      ? navigator.getGamepads()
      : [];
    client.setWheel(hub.update(dt, pads));
    const view = client.view();
    const geom = defaultGeometry(
      (canvas as HTMLCanvasElement).width,
      (canvas as HTMLCanvasElement).height,
      view.previewTicks ?? 0,
    );
    drawScene(ctx as CanvasRenderingContext2D, view, geom, { sparkline });
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);
}

main();
