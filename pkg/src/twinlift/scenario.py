"""Declarative scenario files (JSON): params, gains, events, bridge settings.

Validation is strict: unknown keys are rejected with their path, so a typo in
a config never silently falls back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .control import ControlGains, default_gains
from .dynamics import VehicleParams
from .sim import (ArmCommand, DisturbancePulse, PayloadAttach, PayloadRelease,
                  SetpointChange, SimConfig)


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the offending key."""


@dataclass(frozen=True)
class BridgeSettings:
    host: str = "127.0.0.1"
    port: int = 9870
    rate_hz: float = 50.0        # /servo and /data publish rate
    metrics_period_s: float = 1.0
    delay_s: float = 0.0         # injected one-way delay on /servo and /data
    jitter_s: float = 0.0
    queue_limit: int = 256       # per-client send queue, drop-oldest


@dataclass(frozen=True)
class Scenario:
    sim: SimConfig
    bridge: BridgeSettings


def _require(obj, where, allowed):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{where}: unknown key {key!r}")


def _num(obj, where, default=None, required=False):
    if obj is None:
        if required:
            raise ScenarioError(f"{where}: missing required value")
        return default
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ScenarioError(f"{where}: expected a number")
    return float(obj)


def _vec3(obj, where):
    if not isinstance(obj, list) or len(obj) != 3:
        raise ScenarioError(f"{where}: expected an array of 3 numbers")
    return tuple(_num(v, where, required=True) for v in obj)


def _parse_params(obj) -> VehicleParams:
    if obj is None:
        return VehicleParams()
    _require(obj, "params", {"mass_base", "inertia_diag", "gravity",
                             "arm_link_masses", "arm_link_lengths",
                             "arm_mount_offset", "payload_mass", "joint_kp",
                             "joint_kd", "force_max", "moment_max", "thrust_max"})
    kw = {}
    for key in ("mass_base", "gravity", "payload_mass", "force_max", "moment_max",
                "thrust_max"):
        if key in obj:
            kw[key] = _num(obj[key], f"params.{key}", required=True)
    for key in ("inertia_diag", "arm_link_masses", "arm_link_lengths",
                "arm_mount_offset", "joint_kp", "joint_kd"):
        if key in obj:
            kw[key] = _vec3(obj[key], f"params.{key}")
    try:
        return VehicleParams(**kw)
    except ValueError as exc:
        raise ScenarioError(f"params: {exc}") from exc


def _parse_gains(obj) -> ControlGains:
    if obj is None:
        return default_gains()
    _require(obj, "gains", {"k_p", "k_v", "k_r", "k_omega"})
    base = default_gains()
    kw = {"k_p": base.k_p, "k_v": base.k_v, "k_r": base.k_r, "k_omega": base.k_omega}
    for key in ("k_p", "k_v", "k_r", "k_omega"):
        if key in obj:
            v = obj[key]
            kw[key] = _vec3(v, f"gains.{key}") if isinstance(v, list) \
                else _num(v, f"gains.{key}", required=True)
    try:
        return ControlGains.make(**kw)
    except ValueError as exc:
        raise ScenarioError(f"gains: {exc}") from exc


_EVENT_KEYS = {
    "setpoint": {"t", "type", "position", "velocity", "accel", "yaw", "rates"},
    "arm": {"t", "type", "joints"},
    "attach": {"t", "type"},
    "release": {"t", "type"},
    "pulse": {"t", "type", "force", "moment", "duration"},
}


def _parse_event(obj, index):
    where = f"events[{index}]"
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    kind = obj.get("type")
    if kind not in _EVENT_KEYS:
        raise ScenarioError(f"{where}: unknown event type {kind!r}")
    _require(obj, where, _EVENT_KEYS[kind])
    t = _num(obj.get("t"), f"{where}.t", required=True)
    if kind == "setpoint":
        ev = SetpointChange(
            position=_vec3(obj["position"], f"{where}.position") if "position" in obj else None,
            velocity=_vec3(obj["velocity"], f"{where}.velocity") if "velocity" in obj else None,
            accel=_vec3(obj["accel"], f"{where}.accel") if "accel" in obj else None,
            yaw=_num(obj.get("yaw"), f"{where}.yaw"),
            rates=_vec3(obj["rates"], f"{where}.rates") if "rates" in obj else None,
        )
    elif kind == "arm":
        ev = ArmCommand(joints=_vec3(obj.get("joints"), f"{where}.joints"))
    elif kind == "attach":
        ev = PayloadAttach()
    elif kind == "release":
        ev = PayloadRelease()
    else:
        ev = DisturbancePulse(force=_vec3(obj.get("force"), f"{where}.force"),
                              moment=_vec3(obj.get("moment"), f"{where}.moment"),
                              duration=_num(obj.get("duration"), f"{where}.duration",
                                            required=True))
    return t, ev


def _parse_bridge(obj) -> BridgeSettings:
    if obj is None:
        return BridgeSettings()
    _require(obj, "bridge", {"host", "port", "rate_hz", "metrics_period_s",
                             "delay_s", "jitter_s", "queue_limit"})
    kw = {}
    if "host" in obj:
        if not isinstance(obj["host"], str):
            raise ScenarioError("bridge.host: expected a string")
        kw["host"] = obj["host"]
    for key, cast in (("port", int), ("queue_limit", int)):
        if key in obj:
            v = obj[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"bridge.{key}: expected an integer")
            kw[key] = cast(v)
    for key in ("rate_hz", "metrics_period_s", "delay_s", "jitter_s"):
        if key in obj:
            kw[key] = _num(obj[key], f"bridge.{key}", required=True)
    return BridgeSettings(**kw)


_TOP_KEYS = {"duration", "dt", "seed", "decimation", "initial_position",
             "initial_yaw", "disturbance", "params", "gains", "events", "bridge",
             "integrator"}


def parse_scenario(obj: dict) -> Scenario:
    _require(obj, "scenario", _TOP_KEYS)
    if "duration" not in obj:
        raise ScenarioError("scenario: missing required key 'duration'")

    dist_mode, dist_f, dist_m = "arm", 0.15, 0.4
    if "disturbance" in obj:
        d = obj["disturbance"]
        _require(d, "disturbance", {"mode", "force_amp", "moment_amp"})
        dist_mode = d.get("mode", "arm")
        if dist_mode not in ("arm", "multisine"):
            raise ScenarioError(f"disturbance.mode: unknown mode {dist_mode!r}")
        dist_f = _num(d.get("force_amp"), "disturbance.force_amp", default=0.15)
        dist_m = _num(d.get("moment_amp"), "disturbance.moment_amp", default=0.4)

    events = [_parse_event(e, i) for i, e in enumerate(obj.get("events", []))]
    events.sort(key=lambda te: te[0])

    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("scenario.seed: expected an integer")
    decimation = obj.get("decimation", 10)
    if isinstance(decimation, bool) or not isinstance(decimation, int):
        raise ScenarioError("scenario.decimation: expected an integer")
    integrator = obj.get("integrator", "reproject")

    try:
        sim = SimConfig(
            duration=_num(obj.get("duration"), "scenario.duration", required=True),
            dt=_num(obj.get("dt"), "scenario.dt", default=0.002),
            seed=seed,
            params=_parse_params(obj.get("params")),
            gains=_parse_gains(obj.get("gains")),
            events=events,
            decimation=decimation,
            initial_position=_vec3(obj["initial_position"], "scenario.initial_position")
            if "initial_position" in obj else (0.0, 0.0, -1.0),
            initial_yaw=_num(obj.get("initial_yaw"), "scenario.initial_yaw", default=0.0),
            disturbance_mode=dist_mode,
            disturbance_force_amp=dist_f,
            disturbance_moment_amp=dist_m,
            integrator=integrator,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return Scenario(sim=sim, bridge=_parse_bridge(obj.get("bridge")))


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    return parse_scenario(obj)


def scenario_to_dict(scn: Scenario) -> dict:
    """Inverse of parse_scenario for writing presets out."""
    sim = scn.sim
    events = []
    for t, ev in sim.events:
        if isinstance(ev, SetpointChange):
            e = {"t": t, "type": "setpoint"}
            for key in ("position", "velocity", "accel", "rates"):
                v = getattr(ev, key)
                if v is not None:
                    e[key] = list(v)
            if ev.yaw is not None:
                e["yaw"] = ev.yaw
        elif isinstance(ev, ArmCommand):
            e = {"t": t, "type": "arm", "joints": list(ev.joints)}
        elif isinstance(ev, PayloadAttach):
            e = {"t": t, "type": "attach"}
        elif isinstance(ev, PayloadRelease):
            e = {"t": t, "type": "release"}
        else:
            e = {"t": t, "type": "pulse", "force": list(ev.force),
                 "moment": list(ev.moment), "duration": ev.duration}
        events.append(e)
    p = sim.params
    return {
        "duration": sim.duration,
        "dt": sim.dt,
        "seed": sim.seed,
        "decimation": sim.decimation,
        "initial_position": list(sim.initial_position),
        "initial_yaw": sim.initial_yaw,
        "integrator": sim.integrator,
        "disturbance": {"mode": sim.disturbance_mode,
                        "force_amp": sim.disturbance_force_amp,
                        "moment_amp": sim.disturbance_moment_amp},
        "params": {
            "mass_base": p.mass_base,
            "inertia_diag": list(p.inertia_diag),
            "gravity": p.gravity,
            "arm_link_masses": list(p.arm_link_masses),
            "arm_link_lengths": list(p.arm_link_lengths),
            "arm_mount_offset": list(p.arm_mount_offset),
            "payload_mass": p.payload_mass,
            "joint_kp": list(p.joint_kp),
            "joint_kd": list(p.joint_kd),
            "force_max": p.force_max,
            "moment_max": p.moment_max,
        },
        "gains": {
            "k_p": list(sim.gains.k_p),
            "k_v": list(sim.gains.k_v),
            "k_r": list(sim.gains.k_r),
            "k_omega": list(sim.gains.k_omega),
        },
        "events": events,
        "bridge": {
            "host": scn.bridge.host,
            "port": scn.bridge.port,
            "rate_hz": scn.bridge.rate_hz,
            "metrics_period_s": scn.bridge.metrics_period_s,
            "delay_s": scn.bridge.delay_s,
            "jitter_s": scn.bridge.jitter_s,
            "queue_limit": scn.bridge.queue_limit,
        },
    }


def write_scenario(path, scn: Scenario) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scenario_to_dict(scn), fh, indent=2)
        fh.write("\n")
