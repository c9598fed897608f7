import json

import numpy as np
import pytest

from twinlift.cli import main
from twinlift.scenario import (Scenario, ScenarioError, load_scenario, parse_scenario,
                               scenario_to_dict, write_scenario)
from twinlift.sim import PayloadAttach, pick_and_place_scenario
from twinlift.scenario import BridgeSettings


MINIMAL = {"duration": 1.0}

STEP_SCENARIO = {
    "duration": 6.0,
    "dt": 0.002,
    "seed": 1,
    "events": [
        {"t": 0.5, "type": "setpoint", "position": [1.0, 0.0, -1.0]},
        {"t": 2.0, "type": "arm", "joints": [0.2, 0.4, 0.0]},
        {"t": 3.0, "type": "attach"},
        {"t": 4.0, "type": "release"},
        {"t": 4.5, "type": "pulse", "force": [0.5, 0, 0], "moment": [0, 0, 0],
         "duration": 0.5},
    ],
}


class TestParsing:
    def test_minimal(self):
        scn = parse_scenario(dict(MINIMAL))
        assert scn.sim.duration == 1.0
        assert scn.bridge.port == 9870

    def test_full_round_trip(self, tmp_path):
        scn = parse_scenario(json.loads(json.dumps(STEP_SCENARIO)))
        path = tmp_path / "s.json"
        write_scenario(path, scn)
        again = load_scenario(path)
        assert scenario_to_dict(again) == scenario_to_dict(scn)

    def test_unknown_top_key(self):
        with pytest.raises(ScenarioError, match="walrus"):
            parse_scenario({"duration": 1.0, "walrus": True})

    def test_unknown_params_key(self):
        with pytest.raises(ScenarioError, match="params.*lift_coeff|lift_coeff"):
            parse_scenario({"duration": 1.0, "params": {"lift_coeff": 2.0}})

    def test_unknown_event_type(self):
        with pytest.raises(ScenarioError, match="teleport"):
            parse_scenario({"duration": 1.0,
                            "events": [{"t": 0.5, "type": "teleport"}]})

    def test_event_field_typo(self):
        with pytest.raises(ScenarioError, match="positon"):
            parse_scenario({"duration": 1.0,
                            "events": [{"t": 0.5, "type": "setpoint",
                                        "positon": [0, 0, -1]}]})

    def test_missing_duration(self):
        with pytest.raises(ScenarioError, match="duration"):
            parse_scenario({"dt": 0.002})

    def test_bad_vector_arity(self):
        with pytest.raises(ScenarioError, match="initial_position"):
            parse_scenario({"duration": 1.0, "initial_position": [1.0, 2.0]})

    def test_invalid_gains_propagate_key(self):
        with pytest.raises(ScenarioError, match="gains"):
            parse_scenario({"duration": 1.0, "gains": {"k_p": -1.0}})

    def test_events_sorted_automatically(self):
        scn = parse_scenario({"duration": 5.0, "events": [
            {"t": 3.0, "type": "attach"}, {"t": 1.0, "type": "release"}]})
        assert [t for t, _ in scn.sim.events] == [1.0, 3.0]

    def test_scalar_gain_broadcast(self):
        scn = parse_scenario({"duration": 1.0, "gains": {"k_p": 3.0}})
        assert np.array_equal(scn.sim.gains.k_p, [3, 3, 3])

    def test_pick_and_place_preset_round_trips(self, tmp_path):
        scn = Scenario(sim=pick_and_place_scenario(), bridge=BridgeSettings())
        path = tmp_path / "pp.json"
        write_scenario(path, scn)
        again = load_scenario(path)
        attaches = [e for _, e in again.sim.events if isinstance(e, PayloadAttach)]
        assert len(attaches) == 1
        assert again.sim.params.payload_mass == pytest.approx(0.160)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("duration: 1.0\n")
        with pytest.raises(ScenarioError, match="JSON"):
            load_scenario(path)


class TestCli:
    def _write(self, tmp_path, obj):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(obj))
        return path

    def test_simulate_hover(self, tmp_path, capsys):
        path = self._write(tmp_path, {"duration": 6.0, "events": [
            {"t": 0.1, "type": "setpoint", "position": [0.5, 0.0, -1.0]}]})
        code = main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["converged_at_s"] is not None
        assert summary["converged_at_s"] < 10.0
        csv_lines = (tmp_path / "out" / "log.csv").read_text().splitlines()
        assert csv_lines[0].startswith("t,x,y,z,")

    def test_simulate_malformed_scenario(self, tmp_path, capsys):
        path = self._write(tmp_path, {"duration": 1.0, "warp_drive": 9})
        code = main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "warp_drive" in capsys.readouterr().err

    def test_simulate_divergence_exit_code(self, tmp_path, capsys):
        path = self._write(tmp_path, {
            "duration": 5.0,
            "gains": {"k_r": 1e9, "k_omega": 1e-3},
            "events": [{"t": 0.0, "type": "setpoint", "position": [1.0, 0, -1]}]})
        code = main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "o")])
        assert code == 3
        err = capsys.readouterr().err
        assert "diverged" in err

    def test_pick_and_place_writes_mass_step(self, tmp_path):
        out = tmp_path / "pp"
        code = main(["pick-and-place", "--out", str(out),
                     "--write-scenario", str(tmp_path / "pp.json")])
        assert code == 0
        csv = (out / "log.csv").read_text().splitlines()
        cols = csv[0].split(",")
        mass_idx = cols.index("mass")
        masses = {row.split(",")[mass_idx] for row in csv[1:]}
        assert masses == {"1.65", "1.81"}
        assert (tmp_path / "pp.json").exists()

    def test_latency_report_flat_traces_exit_code(self, tmp_path, capsys):
        from twinlift.protocol import BridgeFrame, PoseMessage, write_capture
        frames = [BridgeFrame("publish", "/servo", i, 0.02 * i,
                              PoseMessage((0, 0, -1), (0, 0, 0), (0, 0, 0)))
                  for i in range(500)]
        rx = [f.received(f.stamp_tx + 0.5) for f in frames]
        write_capture(tmp_path / "r.jsonl", frames)
        write_capture(tmp_path / "a.jsonl", rx)
        code = main(["latency-report", str(tmp_path / "r.jsonl"),
                     str(tmp_path / "a.jsonl"), "--out", str(tmp_path / "rep")])
        assert code == 4
        assert "excitation" in capsys.readouterr().err.lower()

    def test_latency_report_shifted(self, tmp_path, capsys):
        import math
        from twinlift.protocol import BridgeFrame, PoseMessage, write_capture
        frames = [BridgeFrame("publish", "/servo", i, 0.02 * i,
                              PoseMessage((math.sin(0.25 * 0.02 * i * 2 * math.pi),
                                           0, -1), (0, 0, 0), (0, 0, 0)))
                  for i in range(1000)]
        rx = [f.received(f.stamp_tx + 0.5) for f in frames]
        write_capture(tmp_path / "r.jsonl", frames)
        write_capture(tmp_path / "a.jsonl", rx)
        code = main(["latency-report", str(tmp_path / "r.jsonl"),
                     str(tmp_path / "a.jsonl"), "--out", str(tmp_path / "rep")])
        assert code == 0
        out = capsys.readouterr().out
        assert "0.5" in out
        assert (tmp_path / "rep" / "paired_trace.csv").exists()
        report = json.loads((tmp_path / "rep" / "fidelity.json").read_text())
        assert abs(report["delay_s"] - 0.5) < 0.05

    def test_identical_captures_zero_delay(self, tmp_path, capsys):
        import math
        from twinlift.protocol import BridgeFrame, PoseMessage, write_capture
        frames = [BridgeFrame("publish", "/servo", i, 0.02 * i,
                              PoseMessage((math.sin(0.3 * 0.02 * i), 0, -1),
                                          (0, 0, 0), (0, 0, 0)), stamp_rx=0.02 * i)
                  for i in range(800)]
        write_capture(tmp_path / "r.jsonl", frames)
        write_capture(tmp_path / "a.jsonl", frames)
        code = main(["latency-report", str(tmp_path / "r.jsonl"),
                     str(tmp_path / "a.jsonl"), "--out", str(tmp_path / "rep")])
        assert code == 0
        report = json.loads((tmp_path / "rep" / "fidelity.json").read_text())
        assert abs(report["delay_s"]) < 0.03
