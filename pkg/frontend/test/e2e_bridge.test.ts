/**
 * End-to-end against the real bridge: spawns `twinlift serve` (the Python
 * half of this repository), connects a CockpitSession through a node
 * WebSocket, and checks the secondary acceptance behaviors that do not need
 * a GPU: first pose mirrored on arrival, scripted nudge converging the
 * avatar onto the ghost marker, metrics latency readout.
 *
 * Skips itself when the Python stack is not installed.
 */

import { spawn, spawnSync } from "node:child_process";
import { createServer } from "node:net";
import { describe, expect, it } from "vitest";
import WebSocket from "ws";

import { CockpitSession, SocketLike } from "../src/session.js";

const HAVE_BRIDGE =
  spawnSync("python3", ["-c", "import twinlift"], { timeout: 20000 }).status === 0;

function freePort(): Promise<number> {
  return new Promise((resolve) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
  });
}

function wsFactory(url: string): SocketLike {
  return new WebSocket(url) as unknown as SocketLike;
}

async function waitFor(cond: () => boolean, ms: number, what: string): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error(`timeout waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}

describe.skipIf(!HAVE_BRIDGE)("cockpit against a live bridge", () => {
  it("mirrors poses, converges to a nudge, reads latency", async () => {
    const port = await freePort();
    const scenario = JSON.stringify({ duration: 3600.0, decimation: 50,
                                      bridge: { metrics_period_s: 1.0 } });
    const proc = spawn("python3", ["-c", `
import asyncio, json, sys
from twinlift.scenario import parse_scenario
from twinlift.serve import ServeSession
scn = parse_scenario(json.loads(sys.argv[1]))
session = ServeSession(scn, port=${port})
async def main():
    ready = asyncio.Event()
    task = asyncio.create_task(session.run(stop_after=30.0, ready=ready))
    await ready.wait()
    print("READY", flush=True)
    await task
try:
    asyncio.run(main())
except KeyboardInterrupt:
    pass
`, scenario], { stdio: ["ignore", "pipe", "inherit"] });

    try {
      await new Promise<void>((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("bridge never came up")), 20000);
        proc.stdout!.on("data", (buf) => {
          if (String(buf).includes("READY")) { clearTimeout(timer); resolve(); }
        });
        proc.on("exit", (code) => reject(new Error(`serve exited early: ${code}`)));
      });

      const session = new CockpitSession({}, wsFactory,
                                         () => performance.now() / 1000);
      session.connect(`ws://127.0.0.1:${port}`);
      await waitFor(() => session.state === "connected", 10000, "connection");
      // first pose arrives within one 50 Hz publish interval, not two frames
      await waitFor(() => session.twin.applied > 0, 2000, "first pose");
      await waitFor(() => session.ghostInitialized, 2000, "ghost seed");

      const start = session.twin.renderState(session.now());
      expect(Math.abs(start.position[0])).toBeLessThan(0.05);

      // scripted operator: nudge north 0.5 m; the avatar must catch the ghost
      expect(session.nudge(0.5, 0, 0)).toBe(true);
      expect(session.ghost.position[0]).toBeCloseTo(0.5, 6);
      await waitFor(() => {
        const rs = session.twin.renderState(session.now());
        return Math.abs(rs.position[0] - session.ghost.position[0]) < 0.05;
      }, 15000, "avatar to converge on the ghost");

      // the twin keeps being fed only by frames
      const before = session.twin.applied;
      await new Promise((r) => setTimeout(r, 500));
      expect(session.twin.applied).toBeGreaterThan(before);

      // /metrics readout appears and reports a small loopback delay
      await waitFor(() => session.lastMetrics !== null, 5000, "metrics");
      expect(session.lastMetrics!.injected_s).toBe(0);
      expect(session.lastMetrics!.mean_owd_s).toBeLessThan(0.25);

      session.disconnect();
    } finally {
      proc.kill("SIGINT");
      await new Promise((r) => setTimeout(r, 500));
      if (proc.exitCode === null) proc.kill("SIGKILL");
    }
  }, 60000);
});
