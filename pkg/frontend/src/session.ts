/**
 * Cockpit session: owns the bridge connection, the twin mirror, the ghost
 * (commanded) state and the per-topic publish seq counters.
 *
 * The twin is only ever mutated by received frames; everything the operator
 * commands goes out over /teleop and comes back as robot state. The only
 * client-side prediction is the ghost marker.
 */

import { BridgeFrame, CommandMessage, MetricsMessage, Vec3, decodeFrame, encodeFrame } from "./protocol.js";
import { Twin } from "./twin.js";

export type ConnectionState = "disconnected" | "connecting" | "connected";

/** Narrow view of WebSocket so tests can substitute a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionEvents {
  onState?: (state: ConnectionState, detail: string) => void;
  onMetrics?: (m: MetricsMessage) => void;
}

const RECONNECT_BASE_MS = 500;
const RECONNECT_MAX_MS = 8000;

export class CockpitSession {
  readonly twin = new Twin();
  state: ConnectionState = "disconnected";
  nudgeStep = 0.5;          // metres per keypress
  yawStep = 0.3;            // radians per keypress
  epochOffset = 0;          // local clock minus server session clock
  lastMetrics: MetricsMessage | null = null;
  framesReceived = 0;
  /** commanded setpoint mirror (the ghost) */
  ghost: { position: Vec3; yaw: number; joints: Vec3 } = {
    position: [0, 0, -1], yaw: 0, joints: [0, 0, 0],
  };
  ghostInitialized = false;

  private socket: SocketLike | null = null;
  private seq = new Map<string, number>();
  private retryMs = RECONNECT_BASE_MS;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private closedByUser = false;

  constructor(
    private events: SessionEvents = {},
    private makeSocket: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike,
    private clock: () => number = () => performance.now() / 1000,
  ) {}

  connect(url: string): void {
    this.closedByUser = false;
    if (this.retryTimer) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.setState("connecting", url);
    let sock: SocketLike;
    try {
      sock = this.makeSocket(url);
    } catch (e) {
      this.setState("disconnected", `connection failed: ${(e as Error).message}`);
      this.scheduleRetry(url);
      return;
    }
    this.socket = sock;
    sock.onopen = () => {
      this.retryMs = RECONNECT_BASE_MS;
      this.setState("connected", url);
      // subscriptions + advertisement; the epoch pong arrives on its own
      for (const topic of ["/servo", "/data", "/metrics"]) {
        this.sendFrame({ op: "subscribe", topic, seq: 0, stamp_tx: this.now(), msg: null });
      }
      this.sendFrame({ op: "advertise", topic: "/teleop", seq: 0, stamp_tx: this.now(), msg: null });
    };
    sock.onmessage = (ev) => this.handleMessage(String(ev.data));
    sock.onclose = () => {
      this.socket = null;
      if (!this.closedByUser) {
        this.setState("disconnected", "connection lost");
        this.scheduleRetry(url);
      }
    };
    sock.onerror = () => {
      // onclose follows; nothing to do here
    };
  }

  disconnect(): void {
    this.closedByUser = true;
    if (this.retryTimer) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.setState("disconnected", "closed");
  }

  private scheduleRetry(url: string): void {
    if (this.closedByUser || this.retryTimer) return;
    const wait = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, RECONNECT_MAX_MS);
    this.setState("disconnected", `retrying in ${(wait / 1000).toFixed(1)} s`);
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect(url);
    }, wait);
  }

  private setState(state: ConnectionState, detail: string): void {
    this.state = state;
    this.events.onState?.(state, detail);
  }

  now(): number {
    return this.clock() - this.epochOffset;
  }

  handleMessage(data: string): void {
    let frame: BridgeFrame;
    try {
      frame = decodeFrame(data);
    } catch {
      return; // malformed frames are ignored, never fatal to the render loop
    }
    this.framesReceived += 1;
    if (frame.op === "pong" && this.framesReceived === 1) {
      // epoch handshake: align our session clock with the server's
      this.epochOffset = this.clock() - frame.stamp_tx;
      return;
    }
    if (frame.op !== "publish") return;
    if (frame.topic === "/metrics") {
      this.lastMetrics = frame.msg as MetricsMessage;
      this.events.onMetrics?.(this.lastMetrics);
      return;
    }
    const applied = this.twin.applyTelemetry(frame, this.now());
    if (applied && !this.ghostInitialized && frame.topic === "/servo") {
      // seed the ghost from the first real pose so nudges start from reality
      const rs = this.twin.renderState(this.now());
      this.ghost.position = [...rs.position] as Vec3;
      this.ghost.yaw = rs.euler[2];
      this.ghostInitialized = true;
    }
  }

  private nextSeq(topic: string): number {
    const s = (this.seq.get(topic) ?? -1) + 1;
    this.seq.set(topic, s);
    return s;
  }

  private sendFrame(frame: BridgeFrame): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.send(encodeFrame(frame));
  }

  /** Publish an operator command; returns false (with no side effects) when
   * disconnected so the UI can show the rejection. */
  sendCommand(cmd: CommandMessage): boolean {
    if (this.state !== "connected" || !this.socket) return false;
    this.sendFrame({
      op: "publish", topic: "/teleop", seq: this.nextSeq("/teleop"),
      stamp_tx: this.now(), msg: cmd,
    });
    // ghost reflects the command immediately
    if (cmd.kind === "nudge") {
      this.ghost.position = [
        this.ghost.position[0] + cmd.delta[0],
        this.ghost.position[1] + cmd.delta[1],
        this.ghost.position[2] + cmd.delta[2],
      ];
      this.ghost.yaw = wrapPi(this.ghost.yaw + cmd.dyaw);
    } else if (cmd.kind === "arm") {
      this.ghost.joints = [...cmd.joints] as Vec3;
    }
    return true;
  }

  nudge(dx: number, dy: number, dz: number, dyaw = 0): boolean {
    return this.sendCommand({ kind: "nudge", delta: [dx, dy, dz], dyaw });
  }
}

export function wrapPi(a: number): number {
  let x = a % (2 * Math.PI);
  if (x <= -Math.PI) x += 2 * Math.PI;
  else if (x > Math.PI) x -= 2 * Math.PI;
  return x;
}
