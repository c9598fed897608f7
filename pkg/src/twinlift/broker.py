"""Topic broker: subscription registry and fan-out, independent of transport.

The broker is the single ownership point for registry state; the WebSocket
server (bridge_server) calls into it from one task only. Delivery order is
per-(publisher, topic) FIFO; nothing is promised across topics. Frames are
frozen values, so fan-out shares them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .protocol import BridgeFrame, FrameSchemaError


@dataclass
class BrokerStats:
    published: int = 0
    delivered: int = 0
    seq_violations: int = 0
    dropped_clients: int = 0


@dataclass
class _ClientRecord:
    subscriptions: set = field(default_factory=set)
    advertised: set = field(default_factory=set)


class Broker:
    def __init__(self):
        self._subscribers: dict[str, list] = {}       # topic -> client ids, sub order
        self._clients: dict[object, _ClientRecord] = {}
        self._last_seq: dict[tuple, int] = {}          # (client, topic) -> seq
        self.stats = BrokerStats()

    def add_client(self, client_id) -> None:
        self._clients.setdefault(client_id, _ClientRecord())

    def drop_client(self, client_id) -> None:
        """Remove a client and all of its subscriptions."""
        rec = self._clients.pop(client_id, None)
        if rec is None:
            return
        for topic in rec.subscriptions:
            subs = self._subscribers.get(topic)
            if subs and client_id in subs:
                subs.remove(client_id)
        self.stats.dropped_clients += 1

    def subscribers(self, topic: str) -> list:
        return list(self._subscribers.get(topic, ()))

    def dispatch(self, frame: BridgeFrame, sender) -> list:
        """Route one decoded frame; returns [(client_id, frame), ...] to deliver.

        publish fans out to current subscribers in subscription order; ping is
        answered with a pong echoing stamp_tx; registry ops mutate state and
        deliver nothing. Stale publisher seq numbers are counted and dropped.
        """
        self.add_client(sender)
        rec = self._clients[sender]
        op = frame.op
        if op == "publish":
            key = (sender, frame.topic)
            last = self._last_seq.get(key)
            if last is not None and frame.seq <= last:
                self.stats.seq_violations += 1
                return []
            self._last_seq[key] = frame.seq
            self.stats.published += 1
            out = [(cid, frame) for cid in self._subscribers.get(frame.topic, ())]
            self.stats.delivered += len(out)
            return out
        if op == "subscribe":
            if sender not in self._subscribers.setdefault(frame.topic, []):
                self._subscribers[frame.topic].append(sender)
            rec.subscriptions.add(frame.topic)
            return []
        if op == "unsubscribe":
            subs = self._subscribers.get(frame.topic)
            if subs and sender in subs:
                subs.remove(sender)
            rec.subscriptions.discard(frame.topic)
            return []
        if op == "advertise":
            rec.advertised.add(frame.topic)
            return []
        if op == "ping":
            pong = BridgeFrame("pong", "", frame.seq, frame.stamp_tx)
            return [(sender, pong)]
        if op == "pong":
            return []
        raise FrameSchemaError(f"op {op!r} cannot be dispatched")
