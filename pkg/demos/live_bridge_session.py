#!/usr/bin/env python3
"""Full live loop in one process: simulator + WebSocket bridge with a 0.5 s
delay on /servo, plus a scripted operator client that nudges the setpoint and
grasps. Ends with a latency/fidelity report from the session captures.

Takes about 12 wall seconds (the session runs in real time).
"""

import asyncio
import socket

from websockets.asyncio.client import connect

from twinlift.avatar import fidelity_report
from twinlift.delay import estimate_delay
from twinlift.protocol import BridgeFrame, CommandMessage, decode_frame, encode_frame
from twinlift.scenario import parse_scenario
from twinlift.serve import ServeSession


async def operator(port):
    seq = 0

    def frame(msg):
        nonlocal seq
        f = BridgeFrame("publish", "/teleop", seq, 0.0, msg)
        seq += 1
        return encode_frame(f).decode()

    async with connect(f"ws://127.0.0.1:{port}") as ws:
        decode_frame(await ws.recv())            # epoch pong
        await ws.send(encode_frame(BridgeFrame("advertise", "/teleop", 0, 0.0)).decode())
        script = [
            (1.0, CommandMessage("nudge", delta=(0.6, 0.0, 0.0), dyaw=0.0)),
            (3.0, CommandMessage("nudge", delta=(0.0, 0.5, -0.3), dyaw=0.3)),
            (5.0, CommandMessage("arm", joints=(0.0, 0.8, 0.6))),
            (6.5, CommandMessage("grasp")),
            (8.0, CommandMessage("nudge", delta=(-0.6, -0.5, 0.3), dyaw=-0.3)),
            (10.0, CommandMessage("release")),
        ]
        t_last = 0.0
        for t_cmd, msg in script:
            await asyncio.sleep(t_cmd - t_last)
            await ws.send(frame(msg))
            print(f"[operator] t={t_cmd:.1f}s sent {msg.kind}")
            t_last = t_cmd


async def main():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    scn = parse_scenario({"duration": 3600.0, "decimation": 50})
    session = ServeSession(scn, port=port, delay_s=0.5, capture=True)
    ready = asyncio.Event()
    server = asyncio.create_task(session.run(stop_after=12.0, ready=ready))
    await ready.wait()
    print(f"bridge up on ws://127.0.0.1:{port}, 0.5 s delay injected on /servo")
    await operator(port)
    await server

    est = estimate_delay(session.robot_capture, session.mirror_capture)
    rep = fidelity_report(session.robot_capture, session.mirror_capture, est)
    print("\n--- session report ---")
    print("one-way delay (xcorr):  %.3f s" % est.lag_xcorr_s)
    print("one-way delay (stamps): %.3f s mean, %.3f s p95" % (est.mean_owd_s, est.p95_owd_s))
    print("fidelity: %s" % rep.to_json())


if __name__ == "__main__":
    asyncio.run(main())
