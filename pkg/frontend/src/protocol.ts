/**
 * Wire protocol mirror of the bridge: frame types and the canonical codec.
 *
 * Canonical form is byte-identical to the server's: fixed key order
 * (op, topic, seq, stamp_tx, msg[, stamp_rx]), floats at 17 significant
 * digits in printf %g style, no whitespace. See docs/protocol.md in the
 * repository root.
 */

export type Op = "advertise" | "subscribe" | "publish" | "unsubscribe" | "ping" | "pong";

export const TOPICS = ["/servo", "/data", "/teleop", "/metrics"] as const;
export type Topic = (typeof TOPICS)[number];

export type Vec3 = [number, number, number];

export interface PoseMessage {
  position: Vec3;
  euler: Vec3;       // phi, theta, psi (ZYX, radians)
  velocity: Vec3;
}

export interface ArmMessage {
  joints: Vec3;
  payload_attached: boolean;
}

export type CommandMessage =
  | { kind: "nudge"; delta: Vec3; dyaw: number }
  | { kind: "arm"; joints: Vec3 }
  | { kind: "grasp" }
  | { kind: "release" };

export interface MetricsMessage {
  window_s: number;
  frame_count: number;
  mean_owd_s: number;
  p95_owd_s: number;
  injected_s: number;
  drop_count: number;
}

export type Payload = PoseMessage | ArmMessage | CommandMessage | MetricsMessage | null;

export interface BridgeFrame {
  op: Op;
  topic: string;
  seq: number;
  stamp_tx: number;
  msg: Payload;
  stamp_rx?: number;
}

export class FrameCodecError extends Error {}

/** printf %.17g for a finite double; negative zero folds to "0". */
export function g17(x: number): string {
  if (!Number.isFinite(x)) throw new FrameCodecError("cannot encode non-finite number");
  if (x === 0) return "0";
  const neg = x < 0;
  const exp17 = Math.abs(x).toExponential(16); // d.dddddddddddddddde±X
  const [mantissaRaw, expRaw] = exp17.split("e");
  const exponent = parseInt(expRaw, 10);
  const digits = mantissaRaw.replace(".", ""); // 17 digits
  let out: string;
  if (exponent < -4 || exponent >= 17) {
    // e style: strip trailing zeros from the mantissa, pad exponent to 2 digits
    let mant = mantissaRaw.replace(/0+$/, "").replace(/\.$/, "");
    const sign = exponent < 0 ? "-" : "+";
    const mag = Math.abs(exponent).toString().padStart(2, "0");
    out = `${mant}e${sign}${mag}`;
  } else if (exponent >= 0) {
    const intPart = digits.slice(0, exponent + 1);
    let frac = digits.slice(exponent + 1).replace(/0+$/, "");
    out = frac.length ? `${intPart}.${frac}` : intPart;
  } else {
    let frac = ("0".repeat(-exponent - 1) + digits).replace(/0+$/, "");
    out = frac.length ? `0.${frac}` : "0";
  }
  return neg ? `-${out}` : out;
}

function intStr(x: number, name: string): string {
  if (!Number.isInteger(x) || x < 0) throw new FrameCodecError(`${name} must be a non-negative integer`);
  return String(x);
}

function flist(v: readonly number[]): string {
  return "[" + v.map(g17).join(",") + "]";
}

function encodeMsg(topic: string, msg: Payload): string {
  if (msg === null) return "null";
  switch (topic) {
    case "/servo": {
      const m = msg as PoseMessage;
      return `{"position":${flist(m.position)},"euler":${flist(m.euler)},"velocity":${flist(m.velocity)}}`;
    }
    case "/data": {
      const m = msg as ArmMessage;
      return `{"joints":${flist(m.joints)},"payload_attached":${m.payload_attached}}`;
    }
    case "/teleop": {
      const m = msg as CommandMessage;
      if (m.kind === "nudge") return `{"kind":"nudge","delta":${flist(m.delta)},"dyaw":${g17(m.dyaw)}}`;
      if (m.kind === "arm") return `{"kind":"arm","joints":${flist(m.joints)}}`;
      return `{"kind":"${m.kind}"}`;
    }
    case "/metrics": {
      const m = msg as MetricsMessage;
      return `{"window_s":${g17(m.window_s)},"frame_count":${intStr(m.frame_count, "frame_count")}` +
        `,"mean_owd_s":${g17(m.mean_owd_s)},"p95_owd_s":${g17(m.p95_owd_s)}` +
        `,"injected_s":${g17(m.injected_s)},"drop_count":${intStr(m.drop_count, "drop_count")}}`;
    }
    default:
      throw new FrameCodecError(`no schema for topic ${topic}`);
  }
}

export function encodeFrame(frame: BridgeFrame): string {
  const body =
    frame.op === "publish" ? encodeMsg(frame.topic, frame.msg) : "null";
  if (frame.op !== "publish" && frame.msg !== null) {
    throw new FrameCodecError(`${frame.op} frames carry no payload`);
  }
  let out =
    `{"op":${JSON.stringify(frame.op)},"topic":${JSON.stringify(frame.topic)}` +
    `,"seq":${intStr(frame.seq, "seq")},"stamp_tx":${g17(frame.stamp_tx)},"msg":${body}`;
  if (frame.stamp_rx !== undefined) out += `,"stamp_rx":${g17(frame.stamp_rx)}`;
  return out + "}";
}

function wantVec3(v: unknown, name: string): Vec3 {
  if (!Array.isArray(v) || v.length !== 3 || !v.every((x) => typeof x === "number" && Number.isFinite(x))) {
    throw new FrameCodecError(`${name} must be an array of 3 finite numbers`);
  }
  return [v[0], v[1], v[2]];
}

function decodeMsg(topic: string, obj: unknown): Payload {
  if (typeof obj !== "object" || obj === null) throw new FrameCodecError(`payload for ${topic} must be an object`);
  const o = obj as Record<string, unknown>;
  switch (topic) {
    case "/servo":
      return {
        position: wantVec3(o.position, "position"),
        euler: wantVec3(o.euler, "euler"),
        velocity: wantVec3(o.velocity, "velocity"),
      };
    case "/data": {
      if (typeof o.payload_attached !== "boolean") throw new FrameCodecError("payload_attached must be boolean");
      return { joints: wantVec3(o.joints, "joints"), payload_attached: o.payload_attached };
    }
    case "/teleop": {
      const kind = o.kind;
      if (kind === "nudge") {
        if (typeof o.dyaw !== "number") throw new FrameCodecError("dyaw must be a number");
        return { kind, delta: wantVec3(o.delta, "delta"), dyaw: o.dyaw };
      }
      if (kind === "arm") return { kind, joints: wantVec3(o.joints, "joints") };
      if (kind === "grasp" || kind === "release") return { kind };
      throw new FrameCodecError(`unknown command kind ${String(kind)}`);
    }
    case "/metrics": {
      for (const k of ["window_s", "mean_owd_s", "p95_owd_s", "injected_s"]) {
        if (typeof o[k] !== "number") throw new FrameCodecError(`${k} must be a number`);
      }
      for (const k of ["frame_count", "drop_count"]) {
        if (typeof o[k] !== "number" || !Number.isInteger(o[k])) throw new FrameCodecError(`${k} must be an integer`);
      }
      return {
        window_s: o.window_s as number,
        frame_count: o.frame_count as number,
        mean_owd_s: o.mean_owd_s as number,
        p95_owd_s: o.p95_owd_s as number,
        injected_s: o.injected_s as number,
        drop_count: o.drop_count as number,
      };
    }
    default:
      throw new FrameCodecError(`unknown topic ${topic}`);
  }
}

const OPS: readonly string[] = ["advertise", "subscribe", "publish", "unsubscribe", "ping", "pong"];

export function decodeFrame(text: string): BridgeFrame {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new FrameCodecError(`invalid JSON: ${(e as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new FrameCodecError("frame must be a JSON object");
  }
  const o = obj as Record<string, unknown>;
  for (const key of ["op", "topic", "seq", "stamp_tx"]) {
    if (!(key in o)) throw new FrameCodecError(`missing frame key ${key}`);
  }
  if (typeof o.op !== "string" || !OPS.includes(o.op)) throw new FrameCodecError(`unknown op ${String(o.op)}`);
  if (typeof o.topic !== "string") throw new FrameCodecError("topic must be a string");
  if (typeof o.seq !== "number" || !Number.isInteger(o.seq) || o.seq < 0) {
    throw new FrameCodecError("seq must be a non-negative integer");
  }
  if (typeof o.stamp_tx !== "number" || !Number.isFinite(o.stamp_tx)) {
    throw new FrameCodecError("stamp_tx must be a finite number");
  }
  const op = o.op as Op;
  const msg = op === "publish" ? decodeMsg(o.topic, o.msg) : null;
  const frame: BridgeFrame = { op, topic: o.topic, seq: o.seq, stamp_tx: o.stamp_tx, msg };
  if (typeof o.stamp_rx === "number") frame.stamp_rx = o.stamp_rx;
  return frame;
}
