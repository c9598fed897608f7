"""Live session: simulator, WebSocket bridge, in-process mirror and captures.

One asyncio event loop runs three cooperating activities: the paced sim task
(control+physics lockstep, telemetry publishing), the WebSocket server, and a
metrics task. All broker mutations happen on loop tasks, satisfying the
single-writer contract. Per-client send queues are bounded and drop-oldest so
a slow client can never stall the simulation.
"""

from __future__ import annotations

import asyncio
import logging
import time
from collections import deque

import numpy as np
import websockets

from .broker import Broker
from .delay import DelayLine
from .protocol import (ArmMessage, BridgeFrame, CommandMessage, FrameError,
                       MetricsMessage, PoseMessage, decode_frame, encode_frame,
                       write_capture)
from .scenario import BridgeSettings, Scenario
from .se3 import euler_from_rotation, wrap_pi
from .sim import ArmCommand, PayloadAttach, PayloadRelease, SetpointChange, SimEngine

log = logging.getLogger("twinlift.serve")


class PortInUseError(OSError):
    """The bridge port is taken; reported before any simulation starts."""


class _WsClient:
    """A connected WebSocket peer with a bounded drop-oldest send queue."""

    def __init__(self, ws, queue_limit: int):
        self.ws = ws
        self.queue: deque[bytes] = deque()
        self.queue_limit = queue_limit
        self.wakeup = asyncio.Event()
        self.drops = 0
        self.closed = False

    def offer(self, payload: bytes) -> None:
        if len(self.queue) >= self.queue_limit:
            self.queue.popleft()
            self.drops += 1
        self.queue.append(payload)
        self.wakeup.set()

    async def sender(self) -> None:
        try:
            while not self.closed:
                await self.wakeup.wait()
                self.wakeup.clear()
                while self.queue:
                    await self.ws.send(self.queue.popleft().decode("utf-8"))
        except websockets.ConnectionClosed:
            pass


class ServeSession:
    """Owns the full live stack for one scenario."""

    def __init__(self, scenario: Scenario, port: int | None = None,
                 realtime: bool = True, capture: bool = False,
                 delay_s: float | None = None, jitter_s: float | None = None,
                 seed: int | None = None):
        self.scenario = scenario
        self.settings: BridgeSettings = scenario.bridge
        self.port = port if port is not None else self.settings.port
        self.realtime = realtime
        self.capture = capture
        self.delay_s = self.settings.delay_s if delay_s is None else delay_s
        self.jitter_s = self.settings.jitter_s if jitter_s is None else jitter_s
        self.seed = scenario.sim.seed if seed is None else seed

        self.engine = SimEngine(scenario.sim)
        self.broker = Broker()
        self._epoch = time.monotonic()
        self._clients: dict[int, _WsClient] = {}
        self._next_client = 0
        self._seq: dict[str, int] = {}
        self._pending_commands: deque[CommandMessage] = deque()
        self._owd_window: deque[tuple[float, float]] = deque()   # (t, owd)
        self._delay_lines: dict[str, DelayLine] = {}
        if self.delay_s > 0 or self.jitter_s > 0:
            for i, topic in enumerate(("/servo", "/data")):
                self._delay_lines[topic] = DelayLine(self.delay_s, self.jitter_s,
                                                     seed=self.seed + i)
        self.robot_capture: list[BridgeFrame] = []
        self.mirror_capture: list[BridgeFrame] = []
        self._stop = asyncio.Event()
        self._fatal: BaseException | None = None
        self.ROBOT = "robot"
        self.MIRROR = "mirror"

    # -- clock -------------------------------------------------------------
    def now(self) -> float:
        return time.monotonic() - self._epoch

    # -- frame plumbing ----------------------------------------------------
    def _next_seq(self, topic: str) -> int:
        s = self._seq.get(topic, -1) + 1
        self._seq[topic] = s
        return s

    def _deliver(self, client_id, frame: BridgeFrame) -> None:
        t_rx = self.now()
        if client_id == self.MIRROR:
            if self.capture:
                self.mirror_capture.append(frame.received(t_rx))
            if frame.topic == "/servo":
                self._owd_window.append((t_rx, t_rx - frame.stamp_tx))
            return
        if client_id == self.ROBOT:
            if frame.op == "publish" and frame.topic == "/teleop":
                self._pending_commands.append(frame.msg)
            return
        client = self._clients.get(client_id)
        if client is not None:
            client.offer(encode_frame(frame))

    def _route(self, frame: BridgeFrame, sender) -> None:
        deliveries = self.broker.dispatch(frame, sender)
        for client_id, out in deliveries:
            line = self._delay_lines.get(out.topic) if out.op == "publish" else None
            if line is None:
                self._deliver(client_id, out)
            else:
                release = line.push(self.now(), (client_id, out))
                loop = asyncio.get_running_loop()
                loop.call_later(max(0.0, release - self.now()), self._flush_line, line)

    def _flush_line(self, line: DelayLine) -> None:
        for client_id, frame in line.pop_ready(self.now()):
            self._deliver(client_id, frame)

    def publish(self, topic: str, msg) -> BridgeFrame:
        frame = BridgeFrame("publish", topic, self._next_seq(topic), self.now(), msg)
        if self.capture and topic in ("/servo", "/data"):
            self.robot_capture.append(frame)
        self._route(frame, self.ROBOT)
        return frame

    # -- websocket side ------------------------------------------------------
    async def _handler(self, ws) -> None:
        client_id = self._next_client
        self._next_client += 1
        client = _WsClient(ws, self.settings.queue_limit)
        self._clients[client_id] = client
        self.broker.add_client(client_id)
        # epoch handshake: a pong with the server session time lets the client
        # compute its clock offset (single-host setups share the clock anyway)
        client.offer(encode_frame(BridgeFrame("pong", "", 0, self.now())))
        sender = asyncio.create_task(client.sender())
        try:
            async for message in ws:
                try:
                    frame = decode_frame(message)
                except FrameError as exc:
                    log.warning("bad frame from client %d: %s", client_id, exc)
                    continue
                self._route(frame, client_id)
        except websockets.ConnectionClosed:
            pass
        finally:
            client.closed = True
            sender.cancel()
            self.broker.drop_client(client_id)
            self._clients.pop(client_id, None)

    # -- sim side ------------------------------------------------------------
    def _apply_command(self, cmd: CommandMessage) -> None:
        if cmd.kind == "nudge":
            sp = self.engine.setpoint
            self.engine.apply_event(SetpointChange(
                position=tuple(sp.position + np.asarray(cmd.delta)),
                yaw=wrap_pi(sp.yaw + cmd.dyaw)))
        elif cmd.kind == "arm":
            self.engine.apply_event(ArmCommand(joints=cmd.joints))
        elif cmd.kind == "grasp":
            self.engine.apply_event(PayloadAttach())
        elif cmd.kind == "release":
            self.engine.apply_event(PayloadRelease())

    def _publish_snapshot(self) -> None:
        state = self.engine.state
        eul = euler_from_rotation(state.attitude)
        self.publish("/servo", PoseMessage(tuple(state.position),
                                           (eul.phi, eul.theta, eul.psi),
                                           tuple(state.velocity)))
        self.publish("/data", ArmMessage(tuple(state.arm_angles),
                                         state.payload_attached))

    async def _sim_task(self, stop_after: float | None) -> None:
        cfg = self.engine.config
        dt = cfg.dt
        steps_per_publish = max(1, int(round(1.0 / (self.settings.rate_hz * dt))))
        tape = list(cfg.events)
        ev_idx = 0
        wall_start = self.now()
        i = 0
        while not self._stop.is_set():
            sim_t = i * dt
            if stop_after is not None and sim_t >= stop_after:
                break
            while ev_idx < len(tape) and tape[ev_idx][0] <= sim_t + 1e-12:
                self.engine.apply_event(tape[ev_idx][1])
                ev_idx += 1
            while self._pending_commands:
                self._apply_command(self._pending_commands.popleft())
            if i % steps_per_publish == 0:
                self._publish_snapshot()
            self.engine.compute_control()
            self.engine.step()
            i += 1
            if self.realtime:
                target = wall_start + sim_t + dt
                lag = target - self.now()
                if lag > 0:
                    await asyncio.sleep(lag)
                elif i % 50 == 0:
                    await asyncio.sleep(0)   # yield even when behind schedule
            elif i % 25 == 0:
                await asyncio.sleep(0)
        self._stop.set()

    async def _metrics_task(self) -> None:
        period = self.settings.metrics_period_s
        while not self._stop.is_set():
            try:
                await asyncio.wait_for(self._stop.wait(), timeout=period)
                break
            except asyncio.TimeoutError:
                pass
            now = self.now()
            while self._owd_window and self._owd_window[0][0] < now - 5.0:
                self._owd_window.popleft()
            owds = [d for _, d in self._owd_window]
            drops = sum(c.drops for c in self._clients.values())
            msg = MetricsMessage(
                window_s=5.0,
                frame_count=len(owds),
                mean_owd_s=float(np.mean(owds)) if owds else 0.0,
                p95_owd_s=float(np.percentile(owds, 95)) if owds else 0.0,
                injected_s=self.delay_s,
                drop_count=drops,
            )
            self.publish("/metrics", msg)

    # -- lifecycle -----------------------------------------------------------
    async def run(self, stop_after: float | None = None,
                  ready: asyncio.Event | None = None) -> None:
        """Serve until stop() (or stop_after seconds of sim time)."""
        host = self.settings.host
        try:
            server = await websockets.serve(self._handler, host, self.port)
        except OSError as exc:
            raise PortInUseError(f"cannot bind {host}:{self.port}: {exc}") from exc
        # the mirror subscribes through the same broker path as any client
        for topic in ("/servo", "/data"):
            self.broker.dispatch(BridgeFrame("subscribe", topic, 0, self.now()),
                                 self.MIRROR)
        self.broker.dispatch(BridgeFrame("subscribe", "/teleop", 0, self.now()),
                             self.ROBOT)
        log.info("bridge listening on ws://%s:%d", host, self.port)
        if ready is not None:
            ready.set()
        metrics = asyncio.create_task(self._metrics_task())
        try:
            await self._sim_task(stop_after)
        finally:
            self._stop.set()
            metrics.cancel()
            # let in-flight delayed frames and queued sends drain briefly
            deadline = self.now() + min(self.delay_s + self.jitter_s + 0.2, 2.0)
            while any(len(l) for l in self._delay_lines.values()) and self.now() < deadline:
                await asyncio.sleep(0.02)
                for line in self._delay_lines.values():
                    self._flush_line(line)
            await asyncio.sleep(0.05)
            server.close()
            await server.wait_closed()

    def stop(self) -> None:
        self._stop.set()

    def write_captures(self, robot_path, mirror_path) -> None:
        write_capture(robot_path, self.robot_capture)
        write_capture(mirror_path, self.mirror_capture)
