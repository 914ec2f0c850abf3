import io
import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vve_sim.geometry import Pose2
from vve_sim.scenario import (
    CANONICAL_SCENARIOS,
    EmptyTrace,
    ParseError,
    TraceRecord,
    ValidationError,
    config_from_dict,
    config_to_dict,
    load_canonical,
    load_config,
    run,
    scenario_path,
    summarize,
    trace_header,
    with_overrides,
    write_trace,
)

MINIMAL = {
    "horizon": 5.0,
    "vehicle": {"x": -30.0, "y": 0.0, "heading_deg": 0.0, "cruise_speed": 10.0},
    "pedestrians": [{"source_id": 1, "x": 0.0, "y": 8.0, "heading_deg": -90.0}],
}


@pytest.fixture(scope="module")
def canonical():
    return {name: run(load_canonical(name)) for name in CANONICAL_SCENARIOS}


def record(t=0.0, speed=10.0, severity=0, cmd=0.0, collided=False, los=False, ttz=math.inf):
    return TraceRecord(
        t=t, vehicle=Pose2.at(0, 0, 0, speed), pedestrians=(Pose2.at(0, 5, 0),),
        ttz_vehicle=ttz, ttz_pedestrian=ttz, dangerous=severity > 0, severity=severity,
        commanded_decel=cmd, actual_decel=0.0, psm_received_count=0, los=los,
        collided=collided, separation=3.0,
    )


class TestLoadConfig:
    def test_minimal_defaults(self):
        cfg = load_config(json.dumps(MINIMAL))
        assert cfg.dt == 0.01
        assert cfg.risk.ttz_diff_threshold == 1.5
        assert cfg.risk.zone_half_extent * 2 == 6.0
        assert cfg.risk.severity_1_2_threshold == 2.3
        assert cfg.risk.severity_2_3_threshold == 1.5

    def test_dt_out_of_range(self):
        with pytest.raises(ValidationError, match="dt"):
            load_config(json.dumps({**MINIMAL, "dt": 0.5}))

    def test_duplicate_source_id(self):
        doc = {**MINIMAL, "pedestrians": MINIMAL["pedestrians"] * 2}
        with pytest.raises(ValidationError, match="source_id"):
            load_config(json.dumps(doc))

    def test_parse_error_location(self):
        with pytest.raises(ParseError) as exc:
            load_config('{\n  "horizon": 5.0,\n  "vehicle": oops\n}')
        assert exc.value.line == 3

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            load_config(json.dumps({**MINIMAL, "bogus": 1}))

    def test_missing_required(self):
        with pytest.raises(ValidationError):
            load_config(json.dumps({"horizon": 5.0}))

    def test_dict_round_trip(self):
        cfg = load_canonical("darting_v2p")
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_seed_drives_channel(self):
        cfg = config_from_dict({**MINIMAL, "seed": 42})
        assert cfg.channel.rng_seed == 42

    def test_overrides(self):
        doc = with_overrides(MINIMAL, {"pedestrians.0.y": 9.0, "risk.ttz_diff_threshold": 0.5})
        assert doc["pedestrians"][0]["y"] == 9.0 and MINIMAL["pedestrians"][0]["y"] == 8.0
        assert config_from_dict(doc).risk.ttz_diff_threshold == 0.5

    @pytest.mark.parametrize("name", CANONICAL_SCENARIOS)
    def test_shipped_files_load(self, name):
        assert scenario_path(name).is_file()
        assert load_config(scenario_path(name)).horizon > 0


class TestCanonicalOutcomes:
    def test_darting_without_v2p(self, canonical):
        _, o = canonical["darting_no_v2p"]
        assert o.collided and o.max_severity == 0 and o.stop_time is None

    def test_darting_with_v2p(self, canonical):
        records, o = canonical["darting_v2p"]
        assert not o.collided and o.stopped and o.max_severity == 3
        first_los = next(r.t for r in records if r.los)
        assert o.first_brake_time < first_los

    def test_slow_walk(self, canonical):
        _, o = canonical["slow_walk"]
        assert not o.collided and o.max_severity == 1

    def test_far_fast(self, canonical):
        _, o = canonical["far_fast"]
        assert not o.collided and o.max_severity == 2

    @pytest.mark.parametrize("name", CANONICAL_SCENARIOS)
    def test_time_grid(self, canonical, name):
        records, _ = canonical[name]
        cfg = load_canonical(name)
        assert all(r.t == k * cfg.dt for k, r in enumerate(records))

    @pytest.mark.parametrize("name", CANONICAL_SCENARIOS)
    def test_latched_severity_monotone(self, canonical, name):
        records, _ = canonical[name]
        for a, b in zip(records, records[1:]):
            assert b.severity >= a.severity or b.severity == 0

    def test_v2p_never_hurts(self, canonical):
        assert canonical["darting_v2p"][1].min_separation >= canonical["darting_no_v2p"][1].min_separation

    @settings(max_examples=15, deadline=None)
    @given(st.floats(2.8, 3.6))
    def test_v2p_never_hurts_paired(self, start):
        base = json.loads(scenario_path("darting_v2p").read_text())
        doc = with_overrides(base, {"pedestrians.0.profile.0.start_time": start})
        on = run(config_from_dict(doc))[1]
        off = run(config_from_dict(with_overrides(doc, {"v2p_enabled": False})))[1]
        assert on.min_separation >= off.min_separation

    def test_causality(self):
        doc = with_overrides(MINIMAL, {"channel.latency_mean": 0.0, "channel.latency_jitter": 0.0})
        records, _ = run(config_from_dict(doc))
        assert records[0].psm_received_count == 0
        assert records[1].psm_received_count == 1

    @pytest.mark.parametrize("name", CANONICAL_SCENARIOS)
    def test_dt_halving(self, canonical, name):
        cfg = load_canonical(name)
        fine = run(replace(cfg, dt=cfg.dt / 2))[1]
        assert abs(fine.min_separation - canonical[name][1].min_separation) < 0.1


class TestSummarize:
    def test_quiet_trace(self):
        o = summarize([record(t=0.01 * k) for k in range(5)])
        assert not o.collided and o.max_severity == 0 and o.first_brake_time is None

    def test_collision(self):
        o = summarize([record(), record(t=0.01, collided=True, speed=0.0)])
        assert o.collided and o.stop_time is None and not o.stopped

    def test_stop(self):
        recs = [record(), record(t=0.01, severity=2, cmd=4.5), record(t=0.02, speed=0.0, severity=2, cmd=4.5)]
        o = summarize(recs)
        assert o.stopped and o.stop_time == 0.02 and o.first_brake_time == 0.01 and o.max_severity == 2

    def test_empty(self):
        with pytest.raises(EmptyTrace):
            summarize([])


class TestTrace:
    def test_header_only(self):
        buf = io.StringIO()
        n = write_trace([], buf)
        assert buf.getvalue() == ",".join(trace_header()) + "\n"
        assert n == len(buf.getvalue())

    def test_inf_sentinel(self):
        buf = io.StringIO()
        write_trace([record()], buf)
        row = dict(zip(trace_header(), buf.getvalue().splitlines()[1].split(",")))
        assert row["ttz_veh"] == "inf" and row["ttz_ped"] == "inf"

    def test_byte_identical(self, tmp_path):
        cfg = load_canonical("darting_v2p")
        write_trace(run(cfg)[0], tmp_path / "a.csv")
        write_trace(run(cfg)[0], tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_extra_pedestrian_columns(self):
        doc = dict(MINIMAL)
        doc["pedestrians"] = MINIMAL["pedestrians"] + [
            {"source_id": 2, "x": 5.0, "y": 8.0, "heading_deg": -90.0}
        ]
        records, _ = run(config_from_dict(doc))
        buf = io.StringIO()
        write_trace(records, buf)
        header = buf.getvalue().splitlines()[0].split(",")
        assert header[-3:] == ["ped1_x", "ped1_y", "ped1_speed"]
