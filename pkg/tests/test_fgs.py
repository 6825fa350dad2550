import math

import numpy as np
import pytest

from geofence_sim.environment import GeofenceLayout
from geofence_sim.fgs import (DetectionReport, EventRecord, TrackEstimate,
                              coverage_fraction, fuse, predict,
                              select_wakeups, validate_report)
from geofence_sim.sensing import SensorPose, Vec2

P_TH = math.exp(-0.5)
LAYOUT = GeofenceLayout()


def report(device_id, tti, conf, x=0.0, y=0.0):
    return DetectionReport(device_id, tti, conf, Vec2(x, y))


class TestValidateReport:
    def test_boundary_is_valid(self):
        assert validate_report(P_TH, P_TH)

    def test_zero_invalid(self):
        assert not validate_report(0.0, P_TH)

    def test_one_valid(self):
        assert validate_report(1.0, P_TH)


class TestFuse:
    def test_no_reports(self):
        assert fuse([], P_TH) is None

    def test_earliest_valid_wins(self):
        reps = [report(0, 120, 0.9), report(1, 90, 0.8)]
        assert fuse(reps, P_TH) == 90

    def test_invalid_filtered(self):
        reps = [report(0, 50, 0.1), report(1, 200, 0.9)]
        assert fuse(reps, P_TH) == 200

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            reps = [report(int(rng.integers(0, 5)),
                           int(rng.integers(0, 1000)),
                           float(rng.uniform(0, 1)))
                    for _ in range(int(rng.integers(0, 8)))]
            got = fuse(reps, P_TH)
            valid = [r.tti for r in reps if r.confidence >= P_TH]
            assert got == (min(valid) if valid else None)
            if got is not None:
                confs = [r.confidence for r in reps if r.tti == got
                         and r.confidence >= P_TH]
                assert all(c >= P_TH for c in confs)


class TestPredict:
    def test_finite_difference_velocity(self):
        reps = [report(0, 0, 0.9, x=-4.0, y=0.0),
                report(1, 100, 0.9, x=-3.9, y=0.0)]
        est = predict(reps, Vec2(0, 0), 1.0, 0.001)
        assert est.velocity.x == pytest.approx(1.0, abs=1e-9)
        assert est.velocity.y == pytest.approx(0.0, abs=1e-9)

    def test_single_report_aims_at_center(self):
        est = predict([report(0, 10, 0.9, x=-4.0, y=0.0)], Vec2(0, 0), 1.0,
                      0.001)
        assert est.velocity.x == pytest.approx(1.0, abs=1e-9)
        assert est.velocity.y == pytest.approx(0.0, abs=1e-9)

    def test_stationary_duplicates_zero_velocity(self):
        reps = [report(0, 0, 0.9, x=1.0, y=1.0),
                report(1, 50, 0.9, x=1.0, y=1.0)]
        est = predict(reps, Vec2(0, 0), 1.0, 0.001)
        assert (est.velocity.x, est.velocity.y) == (0.0, 0.0)

    def test_same_tti_keeps_later_device(self):
        reps = [report(0, 10, 0.9, x=0.0, y=0.0),
                report(1, 10, 0.9, x=2.0, y=0.0)]
        est = predict(reps, Vec2(0, 0), 1.0, 0.001)
        assert est.last_position.x == 2.0

    def test_speed_clamped(self):
        reps = [report(0, 0, 0.9, x=0.0, y=0.0),
                report(1, 1, 0.9, x=1.0, y=0.0)]  # 1000 m/s apparent
        est = predict(reps, Vec2(0, 0), 1.0, 0.001)
        speed = math.hypot(est.velocity.x, est.velocity.y)
        assert speed == pytest.approx(2.0, abs=1e-9)

    def test_collinear_equal_spacing_exact(self):
        vx, vy = 0.6, -0.8
        reps = []
        for k in range(4):
            tti = 200 * k
            reps.append(report(k, tti, 0.9, x=1.0 + vx * tti * 0.001,
                               y=2.0 + vy * tti * 0.001))
        est = predict(reps, Vec2(0, 0), 1.0, 0.001)
        assert est.velocity.x == pytest.approx(vx, abs=1e-9)
        assert est.velocity.y == pytest.approx(vy, abs=1e-9)

    def test_requires_reports(self):
        with pytest.raises(ValueError):
            predict([], Vec2(0, 0), 1.0, 0.001)


def device(device_id, x, y, theta_min, sleeping=True, available=True):
    pose = SensorPose(position=Vec2(x, y), theta_min=theta_min, fov=60.0,
                      r_max=3.0, eta=1.0)
    return (device_id, pose, sleeping, available)


class TestSelectWakeups:
    def test_no_sector_intersection_empty(self):
        track = TrackEstimate(Vec2(-4.0, 0.0), Vec2(1.0, 0.0), 0)
        devs = [device(0, 0.0, 3.5, 60.0)]  # north side, facing north
        assert select_wakeups(track, devs, P_TH, 2000, 0.001) == []

    def test_path_through_sector_selected(self):
        # track passes 0.3 m in front of a west-side device facing west
        track = TrackEstimate(Vec2(-3.8, -1.0), Vec2(0.0, 1.0), 0)
        devs = [device(0, -3.5, 0.0, 150.0)]
        assert select_wakeups(track, devs, P_TH, 2000, 0.001) == [0]

    def test_active_devices_never_selected(self):
        track = TrackEstimate(Vec2(-3.8, -1.0), Vec2(0.0, 1.0), 0)
        devs = [device(0, -3.5, 0.0, 150.0, sleeping=False)]
        assert select_wakeups(track, devs, P_TH, 2000, 0.001) == []

    def test_unavailable_devices_never_selected(self):
        track = TrackEstimate(Vec2(-3.8, -1.0), Vec2(0.0, 1.0), 0)
        devs = [device(0, -3.5, 0.0, 150.0, available=False)]
        assert select_wakeups(track, devs, P_TH, 2000, 0.001) == []

    def test_cap(self):
        track = TrackEstimate(Vec2(-3.8, -1.0), Vec2(0.0, 1.0), 0)
        devs = [device(0, -3.5, 0.0, 150.0), device(1, -3.5, 0.1, 150.0)]
        got = select_wakeups(track, devs, P_TH, 2000, 0.001, max_wakeups=1)
        assert got == [0]


class TestCoverageFraction:
    def test_no_active_devices(self):
        assert coverage_fraction([], LAYOUT, P_TH) == 0.0

    def test_full_cover_construction(self):
        pose = SensorPose(position=Vec2(0.0, 0.0), theta_min=0.0, fov=360.0,
                          r_max=20.0, eta=0.0)
        assert coverage_fraction([pose], LAYOUT, P_TH, samples=512) == 1.0

    def test_single_sector_matches_brute_force(self):
        from geofence_sim.environment import perimeter_point
        from geofence_sim.sensing import sensing_power

        # sector turned along the boundary so it sweeps perimeter points
        pose = SensorPose(position=Vec2(0.0, -3.5), theta_min=330.0,
                          fov=60.0, r_max=3.0, eta=1.0)
        m = 1024
        got = coverage_fraction([pose], LAYOUT, P_TH, samples=m)
        perim = LAYOUT.protected_perimeter
        covered = 0
        for i in range(m):
            pt = perimeter_point(LAYOUT.center, 3.5, i * perim / m)
            if sensing_power(pose, pt) >= P_TH:
                covered += 1
        assert got == covered / m
        assert 0.0 < got < 0.1

    def test_outward_wedge_covers_no_boundary_points(self):
        # an outward-facing device on the boundary looks away from it
        pose = SensorPose(position=Vec2(0.0, -3.5), theta_min=240.0,
                          fov=60.0, r_max=3.0, eta=1.0)
        assert coverage_fraction([pose], LAYOUT, P_TH, samples=512) == 0.0

    def test_monotone_in_active_set(self):
        rng = np.random.default_rng(9)
        poses = []
        prev = 0.0
        for k in range(6):
            s = rng.uniform(0, LAYOUT.protected_perimeter)
            from geofence_sim.environment import (perimeter_normal_deg,
                                                  perimeter_point)
            pos = perimeter_point(LAYOUT.center, 3.5, s)
            normal = perimeter_normal_deg(3.5, s)
            poses.append(SensorPose(position=pos, theta_min=normal - 30.0,
                                    fov=60.0, r_max=3.0, eta=1.0))
            cur = coverage_fraction(poses, LAYOUT, P_TH, samples=256)
            assert cur >= prev
            prev = cur

    def test_rejects_tiny_sample_count(self):
        with pytest.raises(ValueError):
            coverage_fraction([], LAYOUT, P_TH, samples=3)


class TestEventRecord:
    def test_json_line_stable(self):
        rec = EventRecord(5, "report", 1, 2, 0.75)
        assert rec.to_json_line() == (
            '{"device_id": 1, "event_kind": "report", "object_id": 2, '
            '"tti": 5, "value": 0.75}')
