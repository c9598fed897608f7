/** Keyboard mapping: WASD plane nudges, R/F vertical, Q/E yaw, G/V grasp and
 * release, C camera toggle. NED deltas (z down), so "up" is -z. */

import type { CockpitSession } from "./session.js";

export interface InputActions {
  toggleCamera(): void;
}

export function bindKeyboard(session: CockpitSession, actions: InputActions,
                             target: { addEventListener: Window["addEventListener"] } = window): void {
  target.addEventListener("keydown", (ev: KeyboardEvent) => {
    if (ev.repeat) return;
    const tag = (ev.target as HTMLElement | null)?.tagName;
    if (tag === "INPUT" || tag === "TEXTAREA") return;
    const s = session.nudgeStep;
    switch (ev.key.toLowerCase()) {
      case "w": session.nudge(s, 0, 0); break;       // north
      case "s": session.nudge(-s, 0, 0); break;
      case "d": session.nudge(0, s, 0); break;       // east
      case "a": session.nudge(0, -s, 0); break;
      case "r": session.nudge(0, 0, -s); break;      // climb
      case "f": session.nudge(0, 0, s); break;       // descend
      case "q": session.nudge(0, 0, 0, -session.yawStep); break;
      case "e": session.nudge(0, 0, 0, session.yawStep); break;
      case "g": session.sendCommand({ kind: "grasp" }); break;
      case "v": session.sendCommand({ kind: "release" }); break;
      case "c": actions.toggleCamera(); break;
      default: return;
    }
    ev.preventDefault();
  });
}
