import csv
import json
import math

import pytest

from vve_sim.bridge import ingest_pose_log
from vve_sim.cli import UsageError, main, parse_param


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_v2p_scenario(self, tmp_path, capsys):
        assert main(["run", "--scenario", "darting_v2p.json", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["max_severity"] == 3 and not summary["collided"]
        assert (tmp_path / "trace.csv").read_text().startswith("t,veh_x,")
        assert json.loads(capsys.readouterr().out) == summary

    def test_collision_exit_code(self, tmp_path):
        assert main(["run", "--scenario", "darting_no_v2p.json", "--out", str(tmp_path), "--quiet"]) == 2

    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
        assert "not found" in capsys.readouterr().err

    def test_seed_override(self, tmp_path):
        assert main(["run", "--scenario", "slow_walk", "--seed", "7", "--out", str(tmp_path), "--quiet"]) == 0

    def test_bad_seed(self, tmp_path):
        assert main(["run", "--scenario", "slow_walk", "--seed", "-1", "--out", str(tmp_path)]) == 1

    def test_unknown_flag(self):
        assert main(["run", "--scenario", "slow_walk", "--bogus"]) == 1

    def test_no_subcommand(self):
        assert main([]) == 1


class TestReplay:
    LOG = "t,x,y,heading_deg,speed\n0.0,1,2,0,0\n0.1,1.5,2,0,5\n"

    def test_identity(self, tmp_path):
        src = tmp_path / "log.csv"
        src.write_text(self.LOG)
        out = tmp_path / "out.csv"
        assert main(["replay", "--log", str(src), "--out", str(out), "--quiet"]) == 0
        a, b = ingest_pose_log(self.LOG), ingest_pose_log(out.read_text())
        assert [s.pose.position for s in a] == [s.pose.position for s in b]

    def test_quarter_turn(self, tmp_path):
        src = tmp_path / "log.csv"
        src.write_text(self.LOG)
        out = tmp_path / "out.csv"
        rc = main(["replay", "--log", str(src), "--virtual-origin", "0,0,90", "--out", str(out), "--quiet"])
        assert rc == 0
        a, b = ingest_pose_log(self.LOG), ingest_pose_log(out.read_text())
        d_real = a[1].pose.position - a[0].pose.position
        d_virt = b[1].pose.position - b[0].pose.position
        assert d_virt.x == pytest.approx(-d_real.y, abs=1e-9)
        assert d_virt.y == pytest.approx(d_real.x, abs=1e-9)
        assert math.degrees(b[0].pose.heading) == pytest.approx(90.0)

    def test_non_monotone(self, tmp_path, capsys):
        src = tmp_path / "log.csv"
        src.write_text("t,x,y,heading_deg,speed\n0.1,0,0,0,0\n0.1,1,0,0,0\n")
        assert main(["replay", "--log", str(src)]) == 1
        assert "row 3" in capsys.readouterr().err

    def test_stdout(self, tmp_path, capsys):
        src = tmp_path / "log.csv"
        src.write_text(self.LOG)
        assert main(["replay", "--log", str(src)]) == 0
        assert capsys.readouterr().out.startswith("t,x,y,heading_deg,speed")


class TestSweep:
    def test_range_arithmetic(self):
        assert parse_param("drop_probability=0.0:1.0:0.5") == ("channel.drop_probability", [0.0, 0.5, 1.0])

    @pytest.mark.parametrize("text", ["x=1:0:0.5", "x=0:1:0", "x=", "x", "x=0:1"])
    def test_bad_ranges(self, text):
        with pytest.raises(UsageError):
            parse_param(text)

    def test_three_rows(self, tmp_path):
        rc = main(["sweep", "--scenario", "slow_walk", "--param", "drop_probability=0.0:1.0:0.5",
                   "--out", str(tmp_path), "--quiet"])
        assert rc == 0
        assert len(read_csv(tmp_path / "sweep.csv")) == 3

    def test_empty_range_exit(self, tmp_path):
        rc = main(["sweep", "--scenario", "slow_walk", "--param", "T_s=2:1:0.5", "--out", str(tmp_path)])
        assert rc == 1

    def test_threshold_pairing(self, tmp_path):
        rc = main(["sweep", "--scenario", "darting_v2p", "--param", "T_s=0.5,1.5",
                   "--out", str(tmp_path), "--quiet"])
        assert rc == 0
        rows = {float(r["risk.ttz_diff_threshold"]): r for r in read_csv(tmp_path / "sweep.csv")}
        assert int(rows[1.5]["max_severity"]) >= int(rows[0.5]["max_severity"])

    def test_bad_path(self, tmp_path):
        rc = main(["sweep", "--scenario", "slow_walk", "--param", "nope.x=1,2", "--out", str(tmp_path)])
        assert rc == 1


class TestValidate:
    def test_valid(self, capsys):
        assert main(["validate", "--scenario", "far_fast"]) == 0
        assert json.loads(capsys.readouterr().out)["dt"] == 0.01

    def test_dt_invalid(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({
            "dt": 0.5, "horizon": 5,
            "vehicle": {"x": 0, "y": 0, "heading_deg": 0, "cruise_speed": 5},
            "pedestrians": [{"source_id": 1, "x": 0, "y": 5, "heading_deg": -90}],
        }))
        assert main(["validate", "--scenario", str(p)]) == 1
        assert "dt" in capsys.readouterr().err

    def test_broken_syntax(self, tmp_path, capsys):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "horizon": \n')
        assert main(["validate", "--scenario", str(p)]) == 1
        assert "line" in capsys.readouterr().err
