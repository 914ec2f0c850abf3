import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vve_sim.bridge import (
    EmptyLog,
    MalformedRow,
    NonMonotoneTime,
    OutOfRange,
    RealPoseSample,
    calibrate,
    ingest_pose_log,
    map_pose,
    replay_pose,
    write_pose_log,
)
from vve_sim.geometry import Pose2, distance, wrap_angle

coord = st.floats(-500, 500)
hdg = st.floats(-math.pi, math.pi)


class TestCalibrate:
    def test_identity(self):
        cal = calibrate(Pose2.at(0, 0, 0), Pose2.at(0, 0, 0))
        assert cal.transform.rotation == 0.0
        assert (cal.transform.translation.x, cal.transform.translation.y) == (0.0, 0.0)

    def test_origin_at_origin(self):
        cal = calibrate(Pose2.at(0, 0, 0), Pose2.at(100, 50, math.pi / 2))
        assert cal.transform.rotation == pytest.approx(math.pi / 2)
        assert cal.transform.translation.x == pytest.approx(100)
        assert cal.transform.translation.y == pytest.approx(50)

    def test_offset_real_origin(self):
        cal = calibrate(Pose2.at(5, 0, 0), Pose2.at(100, 50, math.pi / 2))
        out = map_pose(cal, Pose2.at(5, 0, 0))
        assert out.position.x == pytest.approx(100, abs=1e-9)
        assert out.position.y == pytest.approx(50, abs=1e-9)

    @given(coord, coord, hdg, coord, coord, hdg)
    def test_maps_origin_to_origin(self, rx, ry, rh, vx, vy, vh):
        a, b = Pose2.at(rx, ry, rh), Pose2.at(vx, vy, vh)
        out = map_pose(calibrate(a, b), a)
        assert distance(out.position, b.position) <= 1e-9
        assert abs(wrap_angle(out.heading - b.heading)) <= 1e-9


class TestMapPose:
    cal = calibrate(Pose2.at(0, 0, 0), Pose2.at(100, 50, math.pi / 2))

    def test_rotated_displacement(self):
        out = map_pose(self.cal, Pose2.at(10, 0, 0, 3.0))
        assert out.position.x == pytest.approx(100, abs=1e-9)
        assert out.position.y == pytest.approx(60, abs=1e-9)
        assert out.heading == pytest.approx(math.pi / 2)
        assert out.speed == 3.0

    def test_rigid_random_pairs(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            cal = calibrate(
                Pose2.at(*rng.uniform(-100, 100, 2), rng.uniform(-4, 4)),
                Pose2.at(*rng.uniform(-1000, 1000, 2), rng.uniform(-4, 4)),
            )
            a = Pose2.at(*rng.uniform(-200, 200, 2), rng.uniform(-4, 4))
            b = Pose2.at(*rng.uniform(-200, 200, 2), rng.uniform(-4, 4))
            d_real = distance(a.position, b.position)
            d_virt = distance(map_pose(cal, a).position, map_pose(cal, b).position)
            assert abs(d_real - d_virt) <= 1e-9
            off = wrap_angle(map_pose(cal, a).heading - a.heading - cal.transform.rotation)
            assert abs(off) <= 1e-9

    def test_noise_needs_rng(self):
        with pytest.raises(ValueError):
            map_pose(self.cal, Pose2.at(0, 0, 0), noise_std=0.1)

    def test_noise_is_seeded(self):
        a = map_pose(self.cal, Pose2.at(0, 0, 0), 0.1, np.random.default_rng(1))
        b = map_pose(self.cal, Pose2.at(0, 0, 0), 0.1, np.random.default_rng(1))
        assert a == b


class TestIngest:
    def test_two_samples(self):
        s = ingest_pose_log("t,x,y,heading_deg,speed\n0.0,0,0,0,0\n0.1,0.5,0,0,5\n")
        assert len(s) == 2
        assert (s[1].pose.position.x, s[1].pose.position.y, s[1].pose.speed) == (0.5, 0.0, 5.0)

    def test_non_monotone(self):
        with pytest.raises(NonMonotoneTime) as exc:
            ingest_pose_log("t,x,y,heading_deg,speed\n0.1,0,0,0,0\n0.1,1,0,0,0\n")
        assert exc.value.row == 3

    def test_header_only(self):
        with pytest.raises(EmptyLog):
            ingest_pose_log("t,x,y,heading_deg,speed\n")

    @pytest.mark.parametrize(
        "body", ["0.0,0,0,0\n", "0.0,0,0,0,0,0\n", "0.0,abc,0,0,0\n", "0.0,0,0,0,-1\n"]
    )
    def test_malformed(self, body):
        with pytest.raises(MalformedRow) as exc:
            ingest_pose_log("t,x,y,heading_deg,speed\n" + body)
        assert exc.value.row == 2

    def test_bad_header(self):
        with pytest.raises(MalformedRow):
            ingest_pose_log("time,x,y\n0,0,0\n")

    def test_write_then_read(self):
        poses = [(0.1 * i, Pose2.at(i * 0.5, -i * 0.25, 0.1 * i, 2.0)) for i in range(20)]
        buf = io.StringIO()
        write_pose_log(poses, buf)
        back = ingest_pose_log(buf.getvalue())
        for (t, p), s in zip(poses, back):
            assert s.t == pytest.approx(t, abs=1e-9)
            assert distance(s.pose.position, p.position) <= 1e-7
            assert abs(wrap_angle(s.pose.heading - p.heading)) <= 1e-7


class TestReplay:
    samples = [
        RealPoseSample(0.0, Pose2.at(0, 0, math.radians(170), 1.0)),
        RealPoseSample(1.0, Pose2.at(1, 0, math.radians(-170), 3.0)),
        RealPoseSample(2.0, Pose2.at(1, 2, 0.0, 3.0)),
    ]

    def test_exact_at_knots(self):
        for s in self.samples:
            assert replay_pose(self.samples, s.t) == s.pose

    def test_midpoint(self):
        p = replay_pose(self.samples, 0.5)
        assert (p.position.x, p.position.y) == (0.5, 0.0)
        assert p.speed == 2.0

    def test_shorter_arc(self):
        h = math.degrees(replay_pose(self.samples, 0.5).heading)
        assert abs(abs(h) - 180.0) < 1e-9

    @pytest.mark.parametrize("t", [-0.1, 2.1])
    def test_out_of_range(self, t):
        with pytest.raises(OutOfRange):
            replay_pose(self.samples, t)

    @given(st.floats(0.0, 2.0))
    def test_continuity(self, t):
        a = replay_pose(self.samples, t)
        b = replay_pose(self.samples, min(2.0, t + 1e-7))
        assert distance(a.position, b.position) < 1e-5
