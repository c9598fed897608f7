/** Cockpit entry point: wires the session, the 3D view, the keyboard and the
 * HUD together. All robot state on screen round-trips through the bridge;
 * the only local prediction is the ghost marker. */

import { CockpitView } from "./cockpit3d.js";
import { bindKeyboard } from "./input.js";
import { CockpitSession } from "./session.js";
import type { Vec3 } from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("view");
const banner = el<HTMLDivElement>("banner");
const hudState = el<HTMLSpanElement>("hud-state");
const hudLatency = el<HTMLSpanElement>("hud-latency");
const hudPose = el<HTMLSpanElement>("hud-pose");
const hudPayload = el<HTMLSpanElement>("hud-payload");
const urlBox = el<HTMLInputElement>("bridge-url");
const connectBtn = el<HTMLButtonElement>("connect");
const notice = el<HTMLDivElement>("notice");

const view = new CockpitView(canvas);
const session = new CockpitSession({
  onState: (state, detail) => {
    hudState.textContent = state;
    hudState.className = state;
    banner.textContent = state === "connected" ? "" : `${state}: ${detail}`;
    banner.style.display = state === "connected" ? "none" : "block";
  },
  onMetrics: (m) => {
    hudLatency.textContent =
      `${(m.mean_owd_s * 1000).toFixed(0)} ms (p95 ${(m.p95_owd_s * 1000).toFixed(0)}, ` +
      `injected ${(m.injected_s * 1000).toFixed(0)})`;
  },
});

connectBtn.addEventListener("click", () => {
  if (session.state === "disconnected") {
    session.connect(urlBox.value);
    connectBtn.textContent = "disconnect";
  } else {
    session.disconnect();
    connectBtn.textContent = "connect";
  }
});

bindKeyboard(session, {
  toggleCamera: () => {
    view.cameraMode = view.cameraMode === "chase" ? "free" : "chase";
  },
});

// arm sliders publish absolute joint targets on release and on input
for (let j = 0; j < 3; j++) {
  const slider = el<HTMLInputElement>(`joint${j + 1}`);
  slider.addEventListener("input", () => {
    const joints = [0, 1, 2].map(
      (k) => parseFloat(el<HTMLInputElement>(`joint${k + 1}`).value)) as Vec3;
    if (!session.sendCommand({ kind: "arm", joints })) {
      showNotice("not connected: arm command dropped");
    }
  });
}

el<HTMLButtonElement>("grasp").addEventListener("click", () => {
  if (!session.sendCommand({ kind: "grasp" })) showNotice("not connected");
});
el<HTMLButtonElement>("release").addEventListener("click", () => {
  if (!session.sendCommand({ kind: "release" })) showNotice("not connected");
});

let noticeTimer: ReturnType<typeof setTimeout> | null = null;
function showNotice(text: string): void {
  notice.textContent = text;
  notice.style.display = "block";
  if (noticeTimer) clearTimeout(noticeTimer);
  noticeTimer = setTimeout(() => (notice.style.display = "none"), 1500);
}

function resize(): void {
  const w = canvas.clientWidth || canvas.parentElement!.clientWidth;
  const h = canvas.clientHeight || Math.round((w * 9) / 16);
  view.resize(w, h);
}
window.addEventListener("resize", resize);
resize();

function frame(): void {
  const rs = session.twin.renderState(session.now());
  if (rs.hasData) {
    view.update(rs.position, rs.euler, rs.joints, rs.payloadAttached, rs.stale,
                session.ghost.position, session.ghost.yaw);
    hudPose.textContent =
      `N ${rs.position[0].toFixed(2)}  E ${rs.position[1].toFixed(2)}  ` +
      `alt ${(-rs.position[2]).toFixed(2)}  yaw ${(rs.euler[2] * 57.2958).toFixed(0)}°` +
      (rs.stale ? "  [STALE]" : "");
    hudPayload.textContent = rs.payloadAttached ? "payload: held" : "payload: none";
  }
  view.render();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
