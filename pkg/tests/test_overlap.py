import math

import numpy as np
import pytest

from qlane.overlap import (
    Centroid,
    encode,
    load_centroid,
    newton_step,
    overlap,
    overlap_analytic,
    save_centroid,
    classify,
    train_centroid,
)


def circular_mean(angles):
    return math.atan2(np.mean(np.sin(angles)), np.mean(np.cos(angles)))


def wrapped_diff(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


class TestEncode:
    def test_zero(self):
        assert encode(0).theta == 0.0

    def test_ninety_degrees(self):
        assert encode(90).theta == pytest.approx(math.pi / 2, abs=1e-15)

    def test_full_intensity(self):
        assert encode(255).theta == pytest.approx(255 * math.pi / 180, abs=1e-12)
        assert encode(255).theta == pytest.approx(4.45059, abs=1e-5)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            encode(float("inf"))


class TestOverlap:
    def test_identical_angles(self):
        assert overlap(1.3, 1.3).inner_product == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_angles(self):
        assert overlap(0.4, 0.4 + math.pi).inner_product == pytest.approx(0.0, abs=1e-7)

    def test_quarter_turn(self):
        result = overlap(math.pi / 2, 0.0)
        assert result.inner_product == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(0)
        for t1, t2 in rng.uniform(-2 * math.pi, 2 * math.pi, size=(200, 2)):
            got = overlap(t1, t2).inner_product
            assert got == pytest.approx(overlap_analytic(t1, t2), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for a, b in rng.uniform(-math.pi, math.pi, size=(100, 2)):
            assert overlap(a, b).inner_product == pytest.approx(
                overlap(b, a).inner_product, abs=1e-12
            )

    def test_inner_product_is_sqrt_p_zero(self):
        result = overlap(0.7, 2.1, shots=1024, seed=9)
        assert result.inner_product == pytest.approx(math.sqrt(result.p_zero), abs=1e-12)

    def test_sampled_overlap_close_to_analytic(self):
        rng = np.random.default_rng(2)
        failures = 0
        trials = 300
        for seed in range(trials):
            t1, t2 = rng.uniform(0, math.pi, size=2)
            sampled = overlap(t1, t2, shots=1024, seed=seed).inner_product
            if abs(sampled - overlap_analytic(t1, t2)) > 0.05:
                failures += 1
        assert failures / trials <= 0.01


class TestClassify:
    def test_exact_match_is_shadow(self):
        c = Centroid(theta=encode(120).theta)
        assert classify(120, c, threshold=0.75) == "shadow"

    @pytest.mark.parametrize("threshold", [0.75, 0.97])
    def test_dataset_preset_thresholds_accepted(self, threshold):
        c = Centroid(theta=encode(40).theta)
        assert classify(40, c, threshold=threshold) == "shadow"

    def test_distant_value_is_shadowless(self):
        # overlap cos(0.75) ~ 0.7317 < 0.75
        c = Centroid(theta=0.5)
        value = 2.0 / (math.pi / 180.0)
        assert classify(value, c, threshold=0.75) == "shadowless"

    def test_monotone_in_threshold(self):
        c = Centroid(theta=encode(90).theta)
        rng = np.random.default_rng(3)
        for value in rng.uniform(0, 255, size=50):
            low = classify(value, c, threshold=0.3)
            high = classify(value, c, threshold=0.9)
            if high == "shadow":
                assert low == "shadow"

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            classify(10, Centroid(theta=0.0), threshold=1.5)


class TestNewtonStep:
    def test_contracts_toward_data_angle(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            x = rng.uniform(-math.pi, math.pi)
            tau = rng.uniform(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3)
            if abs(tau) < 1e-6:
                continue
            theta = x + tau
            theta_new = newton_step(theta, x)
            assert abs(theta_new - x) < abs(tau)

    def test_fixed_point_left_alone(self):
        assert newton_step(1.0, 1.0) == 1.0


class TestTrainCentroid:
    def test_single_value_is_fixed_point(self):
        c, trace = train_centroid([30.0], theta0=encode(30).theta)
        assert c.theta == encode(30).theta
        assert all(step.tau == 0.0 for step in trace.steps)

    def test_single_value_converges_from_far_start(self):
        c, _ = train_centroid([30.0], theta0=1.0, max_iters=50)
        assert abs(c.theta - 30 * math.pi / 180) < 1e-6

    def test_two_values_converge_to_circular_mean(self):
        c, _ = train_centroid([80.0, 100.0], theta0=math.pi / 4, max_iters=50)
        assert abs(c.theta - math.pi / 2) < 0.02

    def test_clusters_converge_to_circular_mean(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            center = rng.uniform(10, 240)
            spread = rng.uniform(2, 20)
            values = rng.uniform(center - spread / 2, center + spread / 2,
                                 size=int(rng.integers(5, 60)))
            c, _ = train_centroid(list(values))
            target = circular_mean([encode(v).theta for v in values])
            assert wrapped_diff(c.theta, target) < 0.02

    def test_trace_invariant(self):
        _, trace = train_centroid([10.0, 200.0, 150.0], theta0=0.3, max_iters=10)
        assert trace.steps
        for step in trace.steps:
            assert step.trace_value == pytest.approx(2 * math.cos(step.tau), abs=1e-12)
            assert step.delta == pytest.approx(step.trace_value - 2.0, abs=1e-12)

    def test_empty_values_rejected(self):
        with pytest.raises(ValueError):
            train_centroid([])

    def test_raw_step_diverges_from_data(self):
        converged, _ = train_centroid([60.0], theta0=1.5, max_iters=10)
        raw, _ = train_centroid([60.0], theta0=1.5, max_iters=10, raw_step=True)
        target = encode(60).theta
        assert abs(converged.theta - target) < abs(raw.theta - target)

    def test_default_start_is_mean_angle(self):
        c, trace = train_centroid([100.0, 100.0], max_iters=5)
        assert c.theta == pytest.approx(encode(100).theta, abs=1e-12)
        assert trace.steps[0].theta == pytest.approx(encode(100).theta, abs=1e-12)


class TestCentroidFile:
    def test_round_trip(self, tmp_path):
        c = Centroid(theta=1.23456789, trained_on="shadow", iterations=12)
        path = tmp_path / "centroid.txt"
        save_centroid(c, path)
        loaded = load_centroid(path)
        assert loaded == c

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("trained_on = shadow\n")
        with pytest.raises(ValueError):
            load_centroid(path)
