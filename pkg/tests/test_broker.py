import numpy as np

from twinlift.broker import Broker
from twinlift.protocol import BridgeFrame, PoseMessage


def _pose(seq, t=0.0, x=0.0):
    return BridgeFrame("publish", "/servo", seq, t,
                       PoseMessage((x, 0.0, -1.0), (0, 0, 0), (0, 0, 0)))


def _sub(topic="/servo"):
    return BridgeFrame("subscribe", topic, 0, 0.0)


class TestRegistry:
    def test_publish_without_subscribers(self):
        b = Broker()
        assert b.dispatch(_pose(0), "a") == []

    def test_two_subscribers_get_identical_frame(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(_sub(), "s2")
        frame = _pose(0)
        out = b.dispatch(frame, "pub")
        assert out == [("s1", frame), ("s2", frame)]

    def test_subscription_order_preserved(self):
        b = Broker()
        for cid in ("c3", "c1", "c2"):
            b.dispatch(_sub(), cid)
        out = b.dispatch(_pose(0), "pub")
        assert [cid for cid, _ in out] == ["c3", "c1", "c2"]

    def test_unsubscribe(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(BridgeFrame("unsubscribe", "/servo", 1, 0.0), "s1")
        assert b.dispatch(_pose(0), "pub") == []

    def test_duplicate_subscribe_is_idempotent(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(_sub(), "s1")
        assert len(b.dispatch(_pose(0), "pub")) == 1

    def test_drop_client_removes_subscriptions(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(_sub("/data"), "s1")
        b.drop_client("s1")
        assert b.dispatch(_pose(0), "pub") == []
        assert b.stats.dropped_clients == 1

    def test_ping_answered_with_pong_echoing_stamp(self):
        b = Broker()
        out = b.dispatch(BridgeFrame("ping", "", 7, 123.25), "c")
        assert out == [("c", BridgeFrame("pong", "", 7, 123.25))]

    def test_cross_topic_isolation(self):
        b = Broker()
        b.dispatch(_sub("/servo"), "s1")
        b.dispatch(_sub("/data"), "s2")
        out = b.dispatch(_pose(0), "pub")
        assert [cid for cid, _ in out] == ["s1"]


class TestSeqDiscipline:
    def test_stale_seq_dropped_and_counted(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(_pose(5), "pub")
        assert b.dispatch(_pose(5), "pub") == []
        assert b.dispatch(_pose(4), "pub") == []
        assert b.stats.seq_violations == 2
        assert len(b.dispatch(_pose(6), "pub")) == 1

    def test_seq_tracked_per_publisher(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        assert len(b.dispatch(_pose(5), "pub_a")) == 1
        assert len(b.dispatch(_pose(5), "pub_b")) == 1

    def test_fifo_no_gaps_1000_publishes(self):
        b = Broker()
        b.dispatch(_sub(), "s1")
        b.dispatch(_sub(), "s2")
        received = {"s1": [], "s2": []}
        for i in range(1000):
            for cid, frame in b.dispatch(_pose(i, t=i * 0.02), "pub"):
                received[cid].append(frame.seq)
        for cid in ("s1", "s2"):
            assert received[cid] == list(range(1000))

    def test_interleaved_publishers_each_fifo(self):
        rng = np.random.default_rng(8)
        b = Broker()
        b.dispatch(_sub(), "watcher")
        counters = {"p1": 0, "p2": 0, "p3": 0}
        seen = {p: [] for p in counters}
        frames_by_pub = {}
        for _ in range(3000):
            pub = ("p1", "p2", "p3")[rng.integers(0, 3)]
            seq = counters[pub]
            counters[pub] += 1
            frame = _pose(seq)
            frames_by_pub[(pub, seq)] = frame
            for cid, f in b.dispatch(frame, pub):
                # identify the publisher by matching the frame object
                seen[pub].append(f.seq)
        for pub, seqs in seen.items():
            assert seqs == sorted(seqs)
            assert len(seqs) == counters[pub]
