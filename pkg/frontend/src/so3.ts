/** Minimal rotation math shared by the twin mirror and the 3D view.
 * Same ZYX convention and gimbal fold as the wire protocol. */

import type { Vec3 } from "./protocol.js";

export type Mat3 = [number, number, number, number, number, number, number, number, number];

export const IDENTITY: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const r = new Array(9).fill(0) as Mat3;
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      r[3 * i + j] = a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j];
    }
  }
  return r;
}

export function matT(a: Mat3): Mat3 {
  return [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]];
}

export function matVec(a: Mat3, v: Vec3): Vec3 {
  return [
    a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
    a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
    a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
  ];
}

export function eulerToRotation(e: Vec3): Mat3 {
  const [phi, theta, psi] = e;
  const cf = Math.cos(phi), sf = Math.sin(phi);
  const ct = Math.cos(theta), st = Math.sin(theta);
  const cp = Math.cos(psi), sp = Math.sin(psi);
  return [
    ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp,
    ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp,
    -st, sf * ct, cf * ct,
  ];
}

export function rotationToEuler(r: Mat3): Vec3 {
  const r31 = r[6];
  if (Math.abs(r31) > 1 - 1e-9) {
    // gimbal fold: phi := 0, residual into psi
    if (r31 < 0) return [0, Math.PI / 2, -Math.atan2(r[1], r[4])];
    return [0, -Math.PI / 2, Math.atan2(-r[1], r[4])];
  }
  return [
    Math.atan2(r[7], r[8]),
    -Math.asin(Math.min(1, Math.max(-1, r31))),
    Math.atan2(r[3], r[0]),
  ];
}

export function so3Exp(w: Vec3): Mat3 {
  const angle = Math.hypot(w[0], w[1], w[2]);
  if (angle < 1e-10) {
    const k = skew(w);
    const k2 = matMul(k, k);
    return addScaled(addScaled(IDENTITY, k, 1), k2, 0.5);
  }
  const axis: Vec3 = [w[0] / angle, w[1] / angle, w[2] / angle];
  const k = skew(axis);
  const k2 = matMul(k, k);
  return addScaled(addScaled(IDENTITY, k, Math.sin(angle)), k2, 1 - Math.cos(angle));
}

export function so3Log(r: Mat3): Vec3 {
  const trace = r[0] + r[4] + r[8];
  const c = Math.min(1, Math.max(-1, 0.5 * (trace - 1)));
  const angle = Math.acos(c);
  const v: Vec3 = [r[7] - r[5], r[2] - r[6], r[3] - r[1]];
  if (angle < 1e-10) return [0.5 * v[0], 0.5 * v[1], 0.5 * v[2]];
  const s = angle / (2 * Math.sin(angle));
  return [s * v[0], s * v[1], s * v[2]];
}

function skew(v: Vec3): Mat3 {
  return [0, -v[2], v[1], v[2], 0, -v[0], -v[1], v[0], 0];
}

function addScaled(a: Mat3, b: Mat3, s: number): Mat3 {
  return a.map((x, i) => x + s * b[i]) as Mat3;
}
