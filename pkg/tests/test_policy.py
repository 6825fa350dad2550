import math

import numpy as np
import pytest

from geofence_sim.environment import GeofenceLayout
from geofence_sim.policy import (ACTIONS, DeviceState, GridConfig,
                                 IntruderOutcome, OutcomeWeights, QPolicy,
                                 encode_state, export_placement_csv,
                                 grid_placement, grid_schedule, metrics,
                                 object_error, objective, reward)
from geofence_sim.sensing import Vec2

W = OutcomeWeights()
P_TH = math.exp(-0.5)
LAYOUT = GeofenceLayout()


class TestObjectError:
    def test_early(self):
        assert object_error(100, 500, W) == 0.0

    def test_boundary_is_late(self):
        assert object_error(500, 500, W) == W.mu1

    def test_miss(self):
        assert object_error(None, 500, W) == 1.0

    def test_matches_brute_force_classifier(self):
        rng = np.random.default_rng(2)
        for _ in range(10_000):
            detected = rng.random() < 0.7
            t_g = int(rng.integers(1, 10_000))
            t_det = int(rng.integers(0, 20_000)) if detected else None
            got = object_error(t_det, t_g, W)
            if t_det is None:
                expected = 1.0
            elif t_det < t_g:
                expected = 0.0
            else:
                expected = W.mu1
            assert got == expected


class TestObjective:
    def test_empty(self):
        assert objective([], 1e-6, 100) == 0.0

    def test_arithmetic(self):
        assert objective([0.0, 0.5, 1.0], 1.0, 3) == pytest.approx(0.5)

    def test_all_early_zero(self):
        assert objective([0.0] * 50, 2e-6, 1000) == 0.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            objective([0.0], 0.0, 100)
        with pytest.raises(ValueError):
            objective([0.0], 1e-6, 0)


class TestGridPlacement:
    def test_four_devices_at_side_midpoints(self):
        poses = grid_placement(4, LAYOUT)
        got = sorted((round(p.position.x, 9), round(p.position.y, 9))
                     for p in poses)
        assert got == [(-3.5, 0.0), (0.0, -3.5), (0.0, 3.5), (3.5, 0.0)]

    def test_single_device_faces_outward(self):
        pose = grid_placement(1, LAYOUT)[0]
        assert (pose.position.x, pose.position.y) == (0.0, -3.5)
        # fov bisector along the outward (south) normal
        assert (pose.theta_min + pose.fov / 2.0) % 360.0 == 270.0

    def test_equal_spacing(self):
        for n in (1, 2, 3, 5, 8, 13):
            poses = grid_placement(n, LAYOUT)
            assert len(poses) == n
            perim = LAYOUT.protected_perimeter
            # successive devices sit perim/n apart along the boundary walk
            for k in range(n - 1):
                a, b = poses[k].position, poses[k + 1].position
                chord = math.hypot(a.x - b.x, a.y - b.y)
                assert chord <= perim / n + 1e-9


class TestGridSchedule:
    def test_tau_one_always_active(self):
        cfg = GridConfig(4, 1)
        assert all(grid_schedule(2, t, cfg) == 1 for t in range(10))

    def test_aligned_pattern(self):
        cfg = GridConfig(4, 4, phase_mode="aligned")
        got = [grid_schedule(0, t, cfg) for t in range(8)]
        assert got == [1, 0, 0, 0, 1, 0, 0, 0]

    def test_staggered_phases(self):
        cfg = GridConfig(4, 8)
        for k in range(4):
            wakes = [t for t in range(16) if grid_schedule(k, t, cfg)]
            assert wakes == [2 * k, 2 * k + 8]

    def test_activation_count_over_horizon(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            tau = int(rng.integers(1, 40))
            n = int(rng.integers(1, 10))
            horizon = int(rng.integers(1, 500))
            cfg = GridConfig(n, tau)
            for dev in range(n):
                count = sum(grid_schedule(dev, t, cfg)
                            for t in range(horizon))
                assert count in (horizon // tau, -(-horizon // tau))


class TestEncodeState:
    def state(self, **kw):
        defaults = dict(delta=0, theta_min=0.0, last_confidence=0.0,
                        position=Vec2(0.0, -3.5), buffer_level=10.0)
        defaults.update(kw)
        return DeviceState(**defaults)

    def test_full_buffer_zero_confidence(self):
        key = encode_state(self.state(), P_TH, 10.0)
        assert key[3] == 9  # top energy bin
        assert key[2] == 0  # zero-confidence bin

    def test_threshold_confidence_in_valid_bin(self):
        key = encode_state(self.state(last_confidence=P_TH), P_TH, 10.0)
        assert key[2] == 2

    def test_sub_threshold_bin(self):
        key = encode_state(self.state(last_confidence=P_TH / 2), P_TH, 10.0)
        assert key[2] == 1

    def test_same_bins_same_key(self):
        a = encode_state(self.state(theta_min=31.0, buffer_level=9.95),
                         P_TH, 10.0)
        b = encode_state(self.state(theta_min=33.0, buffer_level=9.5),
                         P_TH, 10.0)
        assert a == b

    def test_position_cell(self):
        key = encode_state(self.state(position=Vec2(1.2, -2.7)), P_TH, 10.0)
        assert key[4] == (1, -3)


class TestReward:
    def test_all_asleep_no_errors(self):
        assert reward([0, 0, 0, 0], 0.0, 0.0, 1e-6, W, 4) == 1.0

    def test_arithmetic(self):
        w = OutcomeWeights(mu2=0.5)
        assert reward([1, 1, 0, 0], 0.5, 0.0, 1e-6, w, 4) == \
            pytest.approx(0.75)

    def test_error_term_subtracts(self):
        w = OutcomeWeights(mu3=1.0)
        base = reward([0, 1], 0.3, 0.0, 0.01, w, 2)
        with_miss = reward([0, 1], 0.3, 1.0, 0.01, w, 2)
        assert base - with_miss == pytest.approx(0.01)

    def test_affine_coefficients(self):
        # finite differences recover the exact coefficients
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            w = OutcomeWeights(mu2=float(rng.uniform(0.1, 3.0)),
                               mu3=float(rng.uniform(0.1, 3.0)))
            alpha = float(rng.uniform(1e-7, 1e-4))
            delta = [int(rng.integers(0, 2)) for _ in range(n)]
            cov = float(rng.uniform(0, 1))
            err = float(rng.uniform(0, 3))
            base = reward(delta, cov, err, alpha, w, n)
            # activation slope: -1/n per activated device
            if 0 in delta:
                j = delta.index(0)
                bumped = list(delta)
                bumped[j] = 1
                assert reward(bumped, cov, err, alpha, w, n) - base == \
                    pytest.approx(-1.0 / n, rel=1e-9, abs=1e-12)
            # coverage slope: +mu2 per unit coverage
            assert reward(delta, cov + 0.25, err, alpha, w, n) - base == \
                pytest.approx(w.mu2 * 0.25, rel=1e-9, abs=1e-12)


class TestSelectAction:
    def test_greedy_tie_breaks_to_sleep_hold(self):
        pol = QPolicy(epsilon=0.0)
        rng = np.random.default_rng(0)
        idx = pol.select_action(("k",), rng)
        assert ACTIONS[idx] == (0, 0)

    def test_uniform_under_full_exploration(self):
        pol = QPolicy(epsilon=1.0)
        rng = np.random.default_rng(1)
        counts = np.zeros(len(ACTIONS))
        n = 10_000
        for _ in range(n):
            counts[pol.select_action(("k",), rng)] += 1
        expected = n / len(ACTIONS)
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < 15.086  # chi2(5 dof) at 1%

    def test_greedy_picks_dominant_action(self):
        pol = QPolicy(epsilon=0.0)
        pol.table[("k",)] = np.array([0.0, 0.0, 0.0, 5.0, 0.0, 0.0])
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert pol.select_action(("k",), rng) == 3

    def test_rotation_coerced_when_disallowed(self):
        pol = QPolicy(epsilon=0.0)
        pol.table[("k",)] = np.array([0.0, 9.0, 0.0, 0.0, 0.0, 0.0])
        rng = np.random.default_rng(3)
        idx = pol.select_action(("k",), rng, allow_rotation=False)
        assert ACTIONS[idx] == (0, 0)
        pol.table[("k2",)] = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 9.0])
        idx = pol.select_action(("k2",), rng, allow_rotation=False)
        assert ACTIONS[idx] == (1, 0)


class TestQUpdate:
    def test_zero_learning_rate(self):
        pol = QPolicy(alpha_lr=0.0)
        pol.q_update(("a",), 0, 1.0, ("b",))
        assert float(pol.table[("a",)][0]) == 0.0

    def test_single_step_update(self):
        pol = QPolicy(alpha_lr=0.5, gamma=0.0)
        pol.q_update(("a",), 2, 1.0, ("b",))
        assert float(pol.table[("a",)][2]) == pytest.approx(0.5)

    def test_fixed_point_of_self_loop(self):
        pol = QPolicy(alpha_lr=0.2, gamma=0.9)
        for _ in range(2000):
            pol.q_update(("s",), 0, 1.0, ("s",))
        assert float(pol.table[("s",)][0]) == pytest.approx(1.0 / 0.1,
                                                            abs=1e-3)

    def test_rejects_nonfinite_reward(self):
        pol = QPolicy()
        with pytest.raises(ValueError):
            pol.q_update(("a",), 0, float("nan"), ("b",))

    def test_values_bounded_for_bounded_rewards(self):
        rng = np.random.default_rng(7)
        pol = QPolicy(alpha_lr=0.3, gamma=0.9)
        bound = 2.0
        keys = [("s", k) for k in range(5)]
        for _ in range(5000):
            k = keys[int(rng.integers(5))]
            nk = keys[int(rng.integers(5))]
            pol.q_update(k, int(rng.integers(6)),
                         float(rng.uniform(-bound, bound)), nk)
        limit = bound / (1.0 - 0.9) + 1e-9
        for vals in pol.table.values():
            assert np.all(np.abs(vals) <= limit)


class TestQPolicySerialization:
    def test_roundtrip(self, tmp_path):
        pol = QPolicy(epsilon=0.2, alpha_lr=0.15, gamma=0.95)
        pol.table[(1, 2, 0, 9, (0, -3))] = np.arange(6, dtype=float)
        pol.table[(0, 11, 2, 4, (-1, 2))] = np.ones(6) * 0.5
        path = tmp_path / "qtable.json"
        pol.save(path)
        loaded = QPolicy.load(path)
        assert loaded.epsilon == 0.2
        assert loaded.gamma == 0.95
        assert set(loaded.table) == set(pol.table)
        for k in pol.table:
            assert np.array_equal(loaded.table[k], pol.table[k])

    def test_rejects_unknown_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            QPolicy.load(path)


class TestMetrics:
    def test_counting(self):
        outs = [IntruderOutcome(0, 0, 500, 100),   # early
                IntruderOutcome(1, 0, 500, 600),   # late
                IntruderOutcome(2, 0, 500, None)]  # miss
        got = metrics(outs, 0.001)
        assert got["p_det"] == pytest.approx(2 / 3)
        assert got["p_early"] == pytest.approx(1 / 3)

    def test_all_early(self):
        outs = [IntruderOutcome(k, 0, 500, 10 * k) for k in range(5)]
        got = metrics(outs, 0.001)
        assert got["p_det"] == 1.0 and got["p_early"] == 1.0

    def test_mean_delay_seconds(self):
        outs = [IntruderOutcome(0, 1000, 9000, 1200),
                IntruderOutcome(1, 2000, 9000, 2400)]
        got = metrics(outs, 0.001)
        assert got["mean_t_det_s"] == pytest.approx(0.3)

    def test_no_detections_absent_mean(self):
        outs = [IntruderOutcome(0, 0, 500, None)]
        got = metrics(outs, 0.001)
        assert got["mean_t_det_s"] is None
        assert got["p_det"] == 0.0

    def test_p_early_never_exceeds_p_det(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            outs = []
            for k in range(int(rng.integers(1, 30))):
                t_g = int(rng.integers(100, 1000))
                t_det = int(rng.integers(0, 2000)) \
                    if rng.random() < 0.6 else None
                outs.append(IntruderOutcome(k, 0, t_g, t_det))
            got = metrics(outs, 0.001)
            assert 0.0 <= got["p_early"] <= got["p_det"] <= 1.0


class TestPlacementExport:
    def test_csv_columns(self, tmp_path):
        poses = grid_placement(3, LAYOUT)
        path = tmp_path / "placement.csv"
        export_placement_csv(poses, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "device_id,x,y,theta_min"
        assert len(lines) == 4
