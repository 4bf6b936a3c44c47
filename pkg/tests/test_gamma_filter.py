import numpy as np
import pytest

from oracles import pulse_displacement_series, synthetic_decaying_oscillation
from reflexq import DelayLine, ReflexiveGamma, SdofParams, build, discretize, enhanced_target, probe
from reflexq.errors import FilterBuildError, InvalidParameterError, ProbeFailedError
from reflexq.gamma_filter import build_from_probe, load_filter_csv, save_filter_csv


class TestBuild:
    def test_stated_cutoff_example(self):
        response = [0.0, 0.5, 1.0, 0.9, 0.84, 0.7, 0.5, 0.2, 0.05]
        filt = build(response, dt=0.01, p=15.0)
        assert np.allclose(filt.gammas, [0.0, 0.5, 1.0, 0.9], atol=1e-15)
        assert filt.bootstrap_gamma == pytest.approx(0.84, rel=1e-12)
        assert filt.n == 3

    def test_shift_equivariance_under_leading_zeros(self):
        base = np.array([0.0, 0.5, 1.0, 0.9, 0.84, 0.7, 0.5, 0.2, 0.05])
        plain = build(base, dt=0.01)
        for d in (1, 4, 17):
            shifted = build(np.concatenate([np.zeros(d), base]), dt=0.01)
            assert np.array_equal(shifted.gammas[:d], np.zeros(d))
            assert np.array_equal(shifted.gammas[d:], plain.gammas)
            assert shifted.bootstrap_gamma == plain.bootstrap_gamma

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        base = synthetic_decaying_oscillation(rng)
        reference = build(base, dt=0.01)
        exact = build(base * 2.0 ** 9, dt=0.01)          # power of two: bitwise equal
        assert np.array_equal(exact.gammas, reference.gammas)
        assert exact.bootstrap_gamma == reference.bootstrap_gamma
        scaled = build(base * 3.7141, dt=0.01)
        assert np.allclose(scaled.gammas, reference.gammas, atol=1e-13)
        assert scaled.bootstrap_gamma == pytest.approx(reference.bootstrap_gamma, abs=1e-13)

    def test_all_zero_rejected(self):
        with pytest.raises(FilterBuildError, match="identically zero"):
            build(np.zeros(50), dt=0.01)

    def test_cutoff_never_reached_rejected(self):
        with pytest.raises(FilterBuildError, match="never decayed"):
            build(np.linspace(0, 1, 50), dt=0.01)        # rising right to the end

    def test_negative_response_rejected(self):
        with pytest.raises(FilterBuildError, match="rectified"):
            build([0.0, -0.1, 1.0], dt=0.01)

    def test_cutoff_rule_to_keeps_longer_window(self):
        # slow decay: "drop BY 15%" cuts high on the envelope, "drop TO 15%" near the floor
        t = np.arange(400) * 0.01
        response = np.exp(-1.2 * t) * np.abs(np.sin(2 * np.pi * 2.0 * t))
        by = build(response, dt=0.01, p=15.0, rule="by")
        to = build(response, dt=0.01, p=15.0, rule="to")
        assert to.n > by.n
        assert to.bootstrap_gamma < 0.15 <= by.bootstrap_gamma < 0.85 + 1e-12

    def test_invariants_on_randomized_decaying_oscillations(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            response = synthetic_decaying_oscillation(rng)
            filt = build(response, dt=0.01, p=15.0)
            g = filt.gammas
            assert g.min() >= 0.0 and g.max() == 1.0
            peak = int(np.argmax(g))
            assert np.all(np.diff(g[: peak + 1]) >= 0.0)
            assert np.all(np.diff(g[peak:]) <= 0.0)
            # cutoff rule: everything retained after the peak stays at or above
            # the threshold, and the bootstrap weight is the first value below
            assert np.all(g[peak:] >= 0.85 - 1e-12)
            assert filt.bootstrap_gamma < 0.85
            assert filt.n >= 0


class TestReflexiveGammaValidation:
    def test_requires_unit_peak(self):
        with pytest.raises(InvalidParameterError, match="normalized"):
            ReflexiveGamma(gammas=np.array([0.5, 0.9]), bootstrap_gamma=0.5, dt=0.01)

    def test_rejects_bimodal_weights(self):
        with pytest.raises(InvalidParameterError, match="non-decreasing"):
            ReflexiveGamma(gammas=np.array([0.2, 1.0, 0.1, 0.6]), bootstrap_gamma=0.1, dt=0.01)

    def test_rejects_bootstrap_outside_unit_interval(self):
        with pytest.raises(InvalidParameterError, match="bootstrap"):
            ReflexiveGamma(gammas=np.array([1.0]), bootstrap_gamma=1.5, dt=0.01)

    def test_degenerate_one_step_filter_is_valid(self):
        filt = ReflexiveGamma(gammas=np.array([1.0]), bootstrap_gamma=0.99, dt=0.01)
        assert filt.n == 0
        assert filt.duration == pytest.approx(0.01)


class TestProbe:
    def test_response_matches_independent_stepper(self, frame_model):
        got = probe(frame_model, DelayLine(0), probe_force=10_000.0)
        ref = pulse_displacement_series(2000.0, 7.9e6, 2.5e5, 0.01, 10_000.0, len(got) - 1)
        assert np.allclose(got, ref, rtol=1e-10, atol=1e-18)

    def test_first_nonzero_at_step_one_and_early_peak(self, frame_model, frame_params):
        response = probe(frame_model, DelayLine(0), probe_force=10_000.0)
        assert response[0] == 0.0
        assert response[1] > 0.0
        peak_step = int(np.argmax(response))
        zeta = frame_params.damping_ratio
        damped_half_period = frame_params.period / np.sqrt(1 - zeta ** 2) / 2.0
        assert peak_step * frame_model.dt <= damped_half_period

    def test_delay_shifts_response_exactly(self, frame_model):
        plain = probe(frame_model, DelayLine(0), probe_force=5000.0)
        d = 37
        shifted = probe(frame_model, DelayLine(d), probe_force=5000.0)
        assert np.all(shifted[: d + 1] == 0.0)
        assert np.array_equal(shifted[d: d + len(plain)], plain[: len(shifted) - d])

    def test_linear_in_probe_force(self, frame_model):
        one = probe(frame_model, DelayLine(0), probe_force=1000.0, horizon=3.0)
        two = probe(frame_model, DelayLine(0), probe_force=2000.0, horizon=3.0)
        assert np.array_equal(two, 2.0 * one)

    def test_undamped_probe_fails(self):
        model = discretize(SdofParams(mass=1.0, stiffness=100.0, damping=0.0), 0.01)
        with pytest.raises(ProbeFailedError):
            probe(model, DelayLine(0), probe_force=1.0)

    def test_explicit_horizon_sets_length(self, frame_model):
        response = probe(frame_model, DelayLine(0), probe_force=1.0, horizon=2.0)
        assert len(response) == 201

    def test_zero_force_rejected(self, frame_model):
        with pytest.raises(InvalidParameterError):
            probe(frame_model, DelayLine(0), probe_force=0.0)


class TestBuildFromProbe:
    def test_benchmark_frame_window_is_short(self, frame_model):
        # near-critical damping: the response collapses within a fraction of a
        # damped cycle, so only a handful of steps survive the cutoff
        filt, response = build_from_probe(frame_model, DelayLine(0), probe_force=10_000.0)
        assert 1 <= filt.n <= 20
        assert filt.gammas[0] == 0.0
        assert response.max() > 0

    def test_delay_prepends_zero_weights(self, frame_model):
        plain, _ = build_from_probe(frame_model, DelayLine(0), probe_force=10_000.0)
        delayed, _ = build_from_probe(frame_model, DelayLine(500), probe_force=10_000.0)
        assert delayed.n == plain.n + 500
        assert np.array_equal(delayed.gammas[500:], plain.gammas)
        assert np.all(delayed.gammas[:500] == 0.0)


class TestEnhancedTarget:
    def test_degenerate_filter_reduces_to_one_step_target(self):
        filt = ReflexiveGamma(gammas=np.array([1.0]), bootstrap_gamma=0.99, dt=0.01)
        rng = np.random.default_rng(5)
        for _ in range(100):
            r, q = rng.normal(size=2) * 10
            assert enhanced_target(filt, [r], q) == r + 0.99 * q

    def test_excluded_early_rewards_example(self):
        filt = ReflexiveGamma(gammas=np.array([0.0, 0.0, 1.0]), bootstrap_gamma=0.85, dt=0.01)
        assert enhanced_target(filt, [5.0, 7.0, 2.0], 10.0) == pytest.approx(10.5, rel=1e-15)

    def test_zero_rewards_leave_bootstrap_term(self):
        filt = ReflexiveGamma(gammas=np.array([0.0, 1.0, 0.5]), bootstrap_gamma=0.4, dt=0.01)
        assert enhanced_target(filt, np.zeros(3), 12.5) == pytest.approx(0.4 * 12.5, rel=1e-15)

    def test_linearity_in_rewards_and_bootstrap_value(self):
        filt = ReflexiveGamma(gammas=np.array([0.2, 1.0, 0.9]), bootstrap_gamma=0.8, dt=0.01)
        rng = np.random.default_rng(9)
        r1, r2 = rng.normal(size=(2, 3))
        q1, q2 = rng.normal(size=2)
        lhs = enhanced_target(filt, r1 + r2, q1 + q2)
        rhs = enhanced_target(filt, r1, q1) + enhanced_target(filt, r2, q2)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_length_mismatch_rejected(self):
        filt = ReflexiveGamma(gammas=np.array([1.0, 0.9]), bootstrap_gamma=0.8, dt=0.01)
        with pytest.raises(InvalidParameterError):
            enhanced_target(filt, [1.0], 0.0)


class TestFilterCsv:
    def test_round_trip_is_bit_exact(self, frame_model, tmp_path):
        filt, _ = build_from_probe(frame_model, DelayLine(12), probe_force=10_000.0)
        path = tmp_path / "filter.csv"
        save_filter_csv(filt, path)
        back = load_filter_csv(path)
        assert np.array_equal(back.gammas, filt.gammas)
        assert back.bootstrap_gamma == filt.bootstrap_gamma
        assert back.dt == filt.dt
        assert back.probe_force == filt.probe_force
        assert back.cutoff_fraction == filt.cutoff_fraction
        assert back.cutoff_rule == filt.cutoff_rule

    def test_missing_bootstrap_rejected(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("# dt = 0.01\n0,0.5\n1,1.0\n")
        with pytest.raises(FilterBuildError):
            load_filter_csv(path)
