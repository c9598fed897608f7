"""Wire protocol for the twin bridge: topics, frames and the canonical codec.

Six ops (advertise, subscribe, publish, unsubscribe, ping, pong) over JSON
text frames. The canonical encoding is byte-exact across implementations:
fixed key order (op, topic, seq, stamp_tx, msg, then stamp_rx when a receiver
annotated the frame), floats printed with 17 significant digits, UTF-8, no
whitespace. Receivers never put stamp_rx on the wire; it exists so capture
files can persist arrival times for offline delay estimation.

Topics:
    /servo    robot -> mirror: pose + velocity          (PoseMessage)
    /data     robot -> mirror: arm joints + grasp flag  (ArmMessage)
    /teleop   operator -> robot: commands               (CommandMessage)
    /metrics  bridge -> observers: delay statistics     (MetricsMessage)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

OPS = ("advertise", "subscribe", "publish", "unsubscribe", "ping", "pong")

COMMAND_KINDS = ("nudge", "arm", "grasp", "release")


class FrameError(Exception):
    """Base class for frame codec errors."""


class MalformedFrameError(FrameError):
    """Not valid JSON, or not a frame-shaped object. Carries a byte offset
    when the JSON parser could determine one."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class UnknownOpError(FrameError):
    pass


class UnknownTopicError(FrameError):
    pass


class FrameSchemaError(FrameError):
    """Frame is structurally JSON but violates a topic or field schema."""


# ---------------------------------------------------------------------------
# message bodies

@dataclass(frozen=True)
class PoseMessage:
    position: tuple     # m, world NED
    euler: tuple        # rad, ZYX (phi, theta, psi)
    velocity: tuple     # m/s, world

    def __post_init__(self):
        _check_vec3("position", self.position)
        _check_vec3("euler", self.euler)
        _check_vec3("velocity", self.velocity)


@dataclass(frozen=True)
class ArmMessage:
    joints: tuple       # rad, exactly 3
    payload_attached: bool

    def __post_init__(self):
        _check_vec3("joints", self.joints)
        if not isinstance(self.payload_attached, bool):
            raise FrameSchemaError("payload_attached must be a boolean")


@dataclass(frozen=True)
class CommandMessage:
    """Operator command; kinds mirror the scenario events.

    nudge: relative setpoint move (delta, dyaw); arm: absolute joint targets;
    grasp/release: payload latch.
    """
    kind: str
    delta: tuple | None = None
    dyaw: float = 0.0
    joints: tuple | None = None

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise FrameSchemaError(f"unknown command kind {self.kind!r}")
        if self.kind == "nudge":
            _check_vec3("delta", self.delta)
            _check_finite("dyaw", self.dyaw)
        elif self.kind == "arm":
            _check_vec3("joints", self.joints)


@dataclass(frozen=True)
class MetricsMessage:
    """Bridge-side delay statistics; measured one-way delay is reported next
    to the configured injected delay so transport cost stays visible."""
    window_s: float
    frame_count: int
    mean_owd_s: float
    p95_owd_s: float
    injected_s: float
    drop_count: int

    def __post_init__(self):
        _check_finite("window_s", self.window_s)
        _check_finite("mean_owd_s", self.mean_owd_s)
        _check_finite("p95_owd_s", self.p95_owd_s)
        _check_finite("injected_s", self.injected_s)


@dataclass(frozen=True)
class BridgeFrame:
    op: str
    topic: str
    seq: int
    stamp_tx: float
    msg: object = None
    stamp_rx: float | None = None

    def received(self, t_rx: float) -> "BridgeFrame":
        return BridgeFrame(self.op, self.topic, self.seq, self.stamp_tx, self.msg,
                           float(t_rx))


TOPICS = ("/servo", "/data", "/teleop", "/metrics")

_TOPIC_TYPES = {
    "/servo": PoseMessage,
    "/data": ArmMessage,
    "/teleop": CommandMessage,
    "/metrics": MetricsMessage,
}


# ---------------------------------------------------------------------------
# canonical encoding

def _check_vec3(name, v):
    if v is None or len(v) != 3:
        raise FrameSchemaError(f"{name} must have exactly 3 entries")
    for x in v:
        _check_finite(name, x)


def _check_finite(name, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FrameSchemaError(f"{name} must be a number")
    if not math.isfinite(x):
        raise FrameSchemaError(f"{name} must be finite")


def _num(x) -> str:
    """Canonical number: ints verbatim, floats at 17 significant digits.
    Negative zero folds to 0 so re-encoding a decoded frame is byte-stable."""
    if isinstance(x, bool):
        raise FrameSchemaError("boolean where number expected")
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise FrameSchemaError("cannot encode non-finite number")
    if x == 0.0:
        return "0"
    return "%.17g" % x


def _flist(v) -> str:
    return "[" + ",".join(_num(float(x)) for x in v) + "]"


def _encode_msg(topic: str, msg) -> str:
    if msg is None:
        return "null"
    if topic == "/servo":
        return ('{"position":%s,"euler":%s,"velocity":%s}'
                % (_flist(msg.position), _flist(msg.euler), _flist(msg.velocity)))
    if topic == "/data":
        flag = "true" if msg.payload_attached else "false"
        return '{"joints":%s,"payload_attached":%s}' % (_flist(msg.joints), flag)
    if topic == "/teleop":
        if msg.kind == "nudge":
            return ('{"kind":"nudge","delta":%s,"dyaw":%s}'
                    % (_flist(msg.delta), _num(float(msg.dyaw))))
        if msg.kind == "arm":
            return '{"kind":"arm","joints":%s}' % _flist(msg.joints)
        return '{"kind":"%s"}' % msg.kind
    if topic == "/metrics":
        return ('{"window_s":%s,"frame_count":%d,"mean_owd_s":%s,"p95_owd_s":%s,'
                '"injected_s":%s,"drop_count":%d}'
                % (_num(float(msg.window_s)), msg.frame_count,
                   _num(float(msg.mean_owd_s)), _num(float(msg.p95_owd_s)),
                   _num(float(msg.injected_s)), msg.drop_count))
    raise UnknownTopicError(f"no schema for topic {topic!r}")


def encode_frame(frame: BridgeFrame) -> bytes:
    """Canonical JSON bytes for a frame. Rejects non-finite numbers."""
    if frame.op not in OPS:
        raise UnknownOpError(f"unknown op {frame.op!r}")
    if not isinstance(frame.seq, int) or isinstance(frame.seq, bool) or frame.seq < 0:
        raise FrameSchemaError("seq must be a non-negative integer")
    _check_finite("stamp_tx", frame.stamp_tx)
    if frame.op == "publish":
        if frame.topic not in _TOPIC_TYPES:
            raise UnknownTopicError(f"unknown topic {frame.topic!r}")
        msg_type = _TOPIC_TYPES[frame.topic]
        if not isinstance(frame.msg, msg_type):
            raise FrameSchemaError(f"topic {frame.topic} expects {msg_type.__name__}")
        body = _encode_msg(frame.topic, frame.msg)
    else:
        if frame.op in ("ping", "pong"):
            if frame.topic != "":
                raise FrameSchemaError(f"{frame.op} frames use the empty topic")
        elif frame.topic not in _TOPIC_TYPES:
            raise UnknownTopicError(f"unknown topic {frame.topic!r}")
        if frame.msg is not None:
            raise FrameSchemaError(f"{frame.op} frames carry no payload")
        body = "null"
    parts = ['{"op":%s,"topic":%s,"seq":%d,"stamp_tx":%s,"msg":%s'
             % (json.dumps(frame.op), json.dumps(frame.topic), frame.seq,
                _num(float(frame.stamp_tx)), body)]
    if frame.stamp_rx is not None:
        _check_finite("stamp_rx", frame.stamp_rx)
        parts.append(',"stamp_rx":%s' % _num(float(frame.stamp_rx)))
    parts.append("}")
    return "".join(parts).encode("utf-8")


# ---------------------------------------------------------------------------
# decoding

def _want_float(obj, name) -> float:
    _check_finite(name, obj)
    return float(obj)


def _want_vec3(obj, name) -> tuple:
    if not isinstance(obj, list) or len(obj) != 3:
        raise FrameSchemaError(f"{name} must be an array of 3 numbers")
    return tuple(_want_float(x, name) for x in obj)


def _decode_msg(topic: str, obj):
    if not isinstance(obj, dict):
        raise FrameSchemaError(f"payload for {topic} must be an object")
    if topic == "/servo":
        _require_keys(obj, {"position", "euler", "velocity"}, topic)
        return PoseMessage(_want_vec3(obj["position"], "position"),
                           _want_vec3(obj["euler"], "euler"),
                           _want_vec3(obj["velocity"], "velocity"))
    if topic == "/data":
        _require_keys(obj, {"joints", "payload_attached"}, topic)
        if not isinstance(obj["payload_attached"], bool):
            raise FrameSchemaError("payload_attached must be a boolean")
        return ArmMessage(_want_vec3(obj["joints"], "joints"), obj["payload_attached"])
    if topic == "/teleop":
        kind = obj.get("kind")
        if kind == "nudge":
            _require_keys(obj, {"kind", "delta", "dyaw"}, topic)
            return CommandMessage("nudge", delta=_want_vec3(obj["delta"], "delta"),
                                  dyaw=_want_float(obj["dyaw"], "dyaw"))
        if kind == "arm":
            _require_keys(obj, {"kind", "joints"}, topic)
            return CommandMessage("arm", joints=_want_vec3(obj["joints"], "joints"))
        if kind in ("grasp", "release"):
            _require_keys(obj, {"kind"}, topic)
            return CommandMessage(kind)
        raise FrameSchemaError(f"unknown command kind {kind!r}")
    if topic == "/metrics":
        _require_keys(obj, {"window_s", "frame_count", "mean_owd_s", "p95_owd_s",
                            "injected_s", "drop_count"}, topic)
        for k in ("frame_count", "drop_count"):
            if not isinstance(obj[k], int) or isinstance(obj[k], bool):
                raise FrameSchemaError(f"{k} must be an integer")
        return MetricsMessage(_want_float(obj["window_s"], "window_s"),
                              obj["frame_count"],
                              _want_float(obj["mean_owd_s"], "mean_owd_s"),
                              _want_float(obj["p95_owd_s"], "p95_owd_s"),
                              _want_float(obj["injected_s"], "injected_s"),
                              obj["drop_count"])
    raise UnknownTopicError(f"no schema for topic {topic!r}")


def _require_keys(obj: dict, keys: set, where: str) -> None:
    missing = keys - obj.keys()
    if missing:
        raise FrameSchemaError(f"{where}: missing key {sorted(missing)[0]!r}")
    extra = obj.keys() - keys
    if extra:
        raise FrameSchemaError(f"{where}: unknown key {sorted(extra)[0]!r}")


def decode_frame(data) -> BridgeFrame:
    """Parse a frame from bytes or str; key order is not significant.

    Raises MalformedFrameError (with byte offset when known), UnknownOpError,
    UnknownTopicError or FrameSchemaError.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrameError(f"invalid UTF-8: {exc}", offset=exc.start) from exc
    else:
        text = data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFrameError(f"invalid JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(obj, dict):
        raise MalformedFrameError("frame must be a JSON object")

    allowed = {"op", "topic", "seq", "stamp_tx", "msg", "stamp_rx"}
    extra = obj.keys() - allowed
    if extra:
        raise FrameSchemaError(f"unknown frame key {sorted(extra)[0]!r}")
    for key in ("op", "topic", "seq", "stamp_tx", "msg"):
        if key not in obj:
            raise FrameSchemaError(f"missing frame key {key!r}")

    op = obj["op"]
    if op not in OPS:
        raise UnknownOpError(f"unknown op {op!r}")
    topic = obj["topic"]
    if not isinstance(topic, str):
        raise FrameSchemaError("topic must be a string")
    if op in ("ping", "pong"):
        if topic != "":
            raise FrameSchemaError(f"{op} frames use the empty topic")
    elif topic not in _TOPIC_TYPES:
        raise UnknownTopicError(f"unknown topic {topic!r}")
    seq = obj["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise FrameSchemaError("seq must be a non-negative integer")
    stamp_tx = _want_float(obj["stamp_tx"], "stamp_tx")

    if op == "publish":
        msg = _decode_msg(topic, obj["msg"])
    else:
        if obj["msg"] is not None:
            raise FrameSchemaError(f"{op} frames carry no payload")
        msg = None

    stamp_rx = None
    if obj.get("stamp_rx") is not None:
        stamp_rx = _want_float(obj["stamp_rx"], "stamp_rx")
    return BridgeFrame(op, topic, seq, stamp_tx, msg, stamp_rx)


# ---------------------------------------------------------------------------
# capture files: one canonical frame per line

def write_capture(path, frames) -> None:
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(encode_frame(f) + b"\n")


def read_capture(path) -> list:
    frames = []
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if line:
                frames.append(decode_frame(line))
    return frames
