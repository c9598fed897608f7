import { describe, expect, it } from "vitest";

import { encodeFrame } from "../src/protocol.js";
import { CockpitSession, SocketLike, wrapPi } from "../src/session.js";

/** In-memory socket capturing sends; the test plays the server. */
class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  closed = false;
  send(data: string): void { this.sent.push(data); }
  close(): void { this.closed = true; this.onclose?.(); }
  open(): void { this.onopen?.(); }
  push(text: string): void { this.onmessage?.({ data: text }); }
}

function makeSession() {
  const sockets: FakeSocket[] = [];
  let t = 100.0;
  const session = new CockpitSession(
    {},
    () => { const s = new FakeSocket(); sockets.push(s); return s; },
    () => t,
  );
  return { session, sockets, tick: (dt: number) => { t += dt; } };
}

describe("cockpit session", () => {
  it("subscribes and advertises on open", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    const ops = sockets[0].sent.map((s) => JSON.parse(s));
    expect(ops.filter((f) => f.op === "subscribe").map((f) => f.topic))
      .toEqual(["/servo", "/data", "/metrics"]);
    expect(ops.filter((f) => f.op === "advertise").map((f) => f.topic))
      .toEqual(["/teleop"]);
    expect(session.state).toBe("connected");
  });

  it("epoch pong sets the clock offset", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    sockets[0].push(encodeFrame({ op: "pong", topic: "", seq: 0, stamp_tx: 40.0, msg: null }));
    expect(session.epochOffset).toBeCloseTo(60.0, 9);   // local 100 - server 40
    expect(session.now()).toBeCloseTo(40.0, 9);
  });

  it("commands are rejected while disconnected", () => {
    const { session } = makeSession();
    expect(session.sendCommand({ kind: "grasp" })).toBe(false);
    expect(session.nudge(0.5, 0, 0)).toBe(false);
  });

  it("nudge publishes with increasing seq and moves the ghost", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    sockets[0].sent.length = 0;
    expect(session.nudge(0.5, 0, 0)).toBe(true);
    expect(session.nudge(0, 0.25, 0, 0.1)).toBe(true);
    const frames = sockets[0].sent.map((s) => JSON.parse(s));
    expect(frames.map((f) => f.seq)).toEqual([0, 1]);
    expect(frames[0].msg.kind).toBe("nudge");
    expect(session.ghost.position[0]).toBeCloseTo(session.ghostInitialized ? 0.5 : 0.5, 9);
    expect(session.ghost.yaw).toBeCloseTo(0.1, 9);
  });

  it("ghost seeds from the first received pose", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    sockets[0].push(encodeFrame({ op: "pong", topic: "", seq: 0, stamp_tx: 100.0, msg: null }));
    sockets[0].push(encodeFrame({
      op: "publish", topic: "/servo", seq: 0, stamp_tx: 99.9,
      msg: { position: [2, 3, -1.5], euler: [0, 0, 0.7], velocity: [0, 0, 0] },
    }));
    expect(session.ghostInitialized).toBe(true);
    expect(session.ghost.position).toEqual([2, 3, -1.5]);
    expect(session.ghost.yaw).toBeCloseTo(0.7, 9);
  });

  it("twin is only mutated by frames; metrics update the readout", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    sockets[0].push(encodeFrame({
      op: "publish", topic: "/metrics", seq: 0, stamp_tx: 1,
      msg: { window_s: 5, frame_count: 10, mean_owd_s: 0.5, p95_owd_s: 0.52, injected_s: 0.5, drop_count: 0 },
    }));
    expect(session.lastMetrics?.mean_owd_s).toBeCloseTo(0.5);
    expect(session.twin.applied).toBe(0);
  });

  it("reconnect keeps publishing seq strictly increasing", () => {
    const { session, sockets } = makeSession();
    session.connect("ws://x");
    sockets[0].open();
    session.nudge(0.1, 0, 0);
    // drop and reconnect
    sockets[0].close();
    session.connect("ws://x");
    sockets[1].open();
    sockets[1].sent.length = 0;
    session.nudge(0.1, 0, 0);
    const frame = JSON.parse(sockets[1].sent[0]);
    expect(frame.seq).toBe(1);   // continues, no duplicate of seq 0
  });

  it("wrapPi stays in (-pi, pi]", () => {
    for (const a of [-9, -Math.PI, Math.PI, 3 * Math.PI, 0, 7.1]) {
      const w = wrapPi(a);
      expect(w).toBeGreaterThan(-Math.PI - 1e-12);
      expect(w).toBeLessThanOrEqual(Math.PI + 1e-12);
      expect(Math.sin(w)).toBeCloseTo(Math.sin(a), 9);
    }
  });
});
