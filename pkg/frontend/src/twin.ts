/**
 * Client-side twin: same mirroring semantics as the server's headless avatar.
 * Frames are the only thing that mutates it; rendering reads interpolated
 * snapshots. Attitude interpolates on rotations (shortest arc), positions and
 * joints linearly, extrapolation is clamped to 0.2 s, staleness beyond.
 */

import type { ArmMessage, BridgeFrame, PoseMessage, Vec3 } from "./protocol.js";
import { Mat3, eulerToRotation, rotationToEuler, so3Exp, so3Log, matMul, matT } from "./so3.js";

export const MAX_EXTRAPOLATION_S = 0.2;

interface PoseSample {
  t: number;
  position: Vec3;
  rotation: Mat3;
}

interface ArmSample {
  t: number;
  joints: Vec3;
  payloadAttached: boolean;
}

export interface RenderState {
  t: number;
  position: Vec3;
  euler: Vec3;
  joints: Vec3;
  payloadAttached: boolean;
  stale: boolean;
  hasData: boolean;
}

function lerp3(a: Vec3, b: Vec3, alpha: number): Vec3 {
  return [
    a[0] + alpha * (b[0] - a[0]),
    a[1] + alpha * (b[1] - a[1]),
    a[2] + alpha * (b[2] - a[2]),
  ];
}

export class Twin {
  private pose: PoseSample[] = [];
  private arm: ArmSample[] = [];
  private lastSeq = new Map<string, number>();
  applied = 0;
  droppedStale = 0;
  rejected = 0;

  applyTelemetry(frame: BridgeFrame, tRx: number): boolean {
    if (frame.op !== "publish" || (frame.topic !== "/servo" && frame.topic !== "/data")) {
      this.rejected += 1;
      return false;
    }
    const last = this.lastSeq.get(frame.topic);
    if (last !== undefined && frame.seq <= last) {
      this.droppedStale += 1;
      return false;
    }
    this.lastSeq.set(frame.topic, frame.seq);
    if (frame.topic === "/servo") {
      const m = frame.msg as PoseMessage;
      this.pose.push({ t: tRx, position: m.position, rotation: eulerToRotation(m.euler) });
      if (this.pose.length > 2) this.pose.shift();
    } else {
      const m = frame.msg as ArmMessage;
      this.arm.push({ t: tRx, joints: m.joints, payloadAttached: m.payload_attached });
      if (this.arm.length > 2) this.arm.shift();
    }
    this.applied += 1;
    return true;
  }

  renderState(tQuery: number): RenderState {
    if (this.pose.length === 0 && this.arm.length === 0) {
      return {
        t: tQuery, position: [0, 0, 0], euler: [0, 0, 0], joints: [0, 0, 0],
        payloadAttached: false, stale: false, hasData: false,
      };
    }
    let stale = false;
    let position: Vec3 = [0, 0, 0];
    let euler: Vec3 = [0, 0, 0];
    if (this.pose.length > 0) {
      const [p, rot, st] = interpPose(this.pose, tQuery);
      position = p;
      euler = rotationToEuler(rot);
      stale = stale || st;
    }
    let joints: Vec3 = [0, 0, 0];
    let payload = false;
    if (this.arm.length > 0) {
      const [j, pl, st] = interpArm(this.arm, tQuery);
      joints = j;
      payload = pl;
      stale = stale || st;
    }
    return { t: tQuery, position, euler, joints, payloadAttached: payload, stale, hasData: true };
  }
}

function blend<T extends { t: number }>(samples: T[], tQuery: number): [T, T, number, boolean] {
  const newest = samples[samples.length - 1];
  if (tQuery > newest.t + MAX_EXTRAPOLATION_S) return [newest, newest, 0, true];
  if (samples.length === 1) return [newest, newest, 0, false];
  const older = samples[samples.length - 2];
  const span = newest.t - older.t;
  if (span <= 0) return [newest, newest, 0, false];
  return [older, newest, Math.max((tQuery - older.t) / span, 0), false];
}

function interpPose(samples: PoseSample[], tQuery: number): [Vec3, Mat3, boolean] {
  const [a, b, alpha, stale] = blend(samples, tQuery);
  if (a === b || alpha === 1) return [b.position, b.rotation, stale];
  if (alpha === 0) return [a.position, a.rotation, stale];
  const rel = so3Log(matMul(matT(a.rotation), b.rotation));
  const rot = matMul(a.rotation, so3Exp([rel[0] * alpha, rel[1] * alpha, rel[2] * alpha]));
  return [lerp3(a.position, b.position, alpha), rot, stale];
}

function interpArm(samples: ArmSample[], tQuery: number): [Vec3, boolean, boolean] {
  const [a, b, alpha, stale] = blend(samples, tQuery);
  if (a === b || alpha === 1) return [b.joints, b.payloadAttached, stale];
  if (alpha === 0) return [a.joints, a.payloadAttached, stale];
  const payload = alpha >= 1 ? b.payloadAttached : a.payloadAttached;
  return [lerp3(a.joints, b.joints, alpha), payload, stale];
}
