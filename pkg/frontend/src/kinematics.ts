/** Arm forward kinematics, body frame (NED): joint 1 about body z, joints
 * 2-3 about successive link y axes, links along -z when stowed. Matches the
 * simulator's convention; cross-checked against fixtures generated there. */

import type { Vec3 } from "./protocol.js";

export interface ArmGeometry {
  mount: Vec3;
  lengths: Vec3;
}

export const DEFAULT_ARM: ArmGeometry = {
  mount: [0, 0, 0.05],
  lengths: [0.1, 0.1, 0.1],
};

/** Positions of the mount and the three link endpoints in the body frame. */
export function armLinkPoints(q: Vec3, geom: ArmGeometry = DEFAULT_ARM): [Vec3, Vec3, Vec3, Vec3] {
  const [l1, l2, l3] = geom.lengths;
  const c1 = Math.cos(q[0]), s1 = Math.sin(q[0]);
  const s2 = Math.sin(q[1]), c2 = Math.cos(q[1]);
  const q23 = q[1] + q[2];
  const s23 = Math.sin(q23), c23 = Math.cos(q23);
  const d1: Vec3 = [0, 0, -1];
  const d2: Vec3 = [-s2 * c1, -s2 * s1, -c2];
  const d3: Vec3 = [-s23 * c1, -s23 * s1, -c23];
  const p0: Vec3 = [...geom.mount] as Vec3;
  const p1: Vec3 = [p0[0] + l1 * d1[0], p0[1] + l1 * d1[1], p0[2] + l1 * d1[2]];
  const p2: Vec3 = [p1[0] + l2 * d2[0], p1[1] + l2 * d2[1], p1[2] + l2 * d2[2]];
  const p3: Vec3 = [p2[0] + l3 * d3[0], p2[1] + l3 * d3[1], p2[2] + l3 * d3[2]];
  return [p0, p1, p2, p3];
}

/** Mass-weighted centre of the link midpoints (for debugging overlays). */
export function armCom(q: Vec3, geom: ArmGeometry = DEFAULT_ARM, masses: Vec3 = [0.05, 0.05, 0.05]): Vec3 {
  const [p0, p1, p2, p3] = armLinkPoints(q, geom);
  const mids: Vec3[] = [
    [(p0[0] + p1[0]) / 2, (p0[1] + p1[1]) / 2, (p0[2] + p1[2]) / 2],
    [(p1[0] + p2[0]) / 2, (p1[1] + p2[1]) / 2, (p1[2] + p2[2]) / 2],
    [(p2[0] + p3[0]) / 2, (p2[1] + p3[1]) / 2, (p2[2] + p3[2]) / 2],
  ];
  const m = masses[0] + masses[1] + masses[2];
  const out: Vec3 = [0, 0, 0];
  for (let k = 0; k < 3; k++) {
    out[0] += (masses[k] * mids[k][0]) / m;
    out[1] += (masses[k] * mids[k][1]) / m;
    out[2] += (masses[k] * mids[k][2]) / m;
  }
  return out;
}
