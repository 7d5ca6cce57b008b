import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarm_perception.estimation import (
    DEFAULT_ALPHA_MAX,
    NEUTRAL,
    EstimatePair,
    ObservationTally,
    SensorAccuracy,
    fisher_confidence,
    fuse_social,
    informed_estimate,
    local_confidence,
    local_estimate,
    mle_fill_ratio,
    reading_probability,
    sample_reading,
)

from oracles import grid_mle, observed_information, weighted_mean


def acc(b, w=None):
    return SensorAccuracy(b, b if w is None else w)


class TestSensorModel:
    def test_perfect_sensor_reads_fill_ratio(self):
        assert reading_probability(0.55, acc(1.0)) == pytest.approx(0.55)

    def test_noisy_sensor(self):
        assert reading_probability(0.55, acc(0.75)) == pytest.approx(0.525)

    def test_all_white(self):
        assert reading_probability(0.0, acc(0.9, 0.8)) == pytest.approx(0.2)

    def test_matches_two_stage_sampling(self):
        rng = np.random.default_rng(11)
        a = acc(0.75)
        hits = sum(sample_reading(bool(rng.random() < 0.55), a, rng) for _ in range(100_000))
        sigma = math.sqrt(0.525 * 0.475 / 100_000)
        assert abs(hits / 100_000 - reading_probability(0.55, a)) < 4 * sigma

    def test_perfect_readings(self):
        rng = np.random.default_rng(0)
        assert all(sample_reading(True, acc(1.0, 0.6), rng) for _ in range(1000))
        assert not any(sample_reading(False, acc(0.6, 1.0), rng) for _ in range(1000))

    def test_black_detection_rate(self):
        rng = np.random.default_rng(3)
        rate = np.mean([sample_reading(True, acc(0.75), rng) for _ in range(100_000)])
        assert abs(rate - 0.75) < 0.01

    def test_accuracy_range_checked(self):
        with pytest.raises(ValueError):
            SensorAccuracy(1.2, 0.9)
        # uninformative sensors may be constructed, estimation rejects them
        assert not SensorAccuracy(0.4, 0.5).informative

    def test_tally_invariant(self):
        with pytest.raises(ValueError):
            ObservationTally(5, 3)
        assert ObservationTally().record(True).record(False) == ObservationTally(1, 2)


class TestLocalEstimate:
    @pytest.mark.parametrize("t,n,b,w,expected", [
        (10, 5, 1.0, 1.0, 0.5),
        (100, 62, 0.75, 0.75, 0.74),
        (10, 1, 0.9, 0.8, 0.0),
        (10, 9, 0.8, 0.9, 1.0),
    ])
    def test_examples(self, t, n, b, w, expected):
        got = local_estimate(ObservationTally(n, t), acc(b, w))
        assert got == pytest.approx(expected, abs=1e-12)
        assert grid_mle(n, t, b, w) == pytest.approx(expected, abs=1e-3)

    def test_rejects_empty_tally(self):
        with pytest.raises(ValueError, match="observation"):
            local_estimate(ObservationTally(0, 0), acc(0.8))

    @pytest.mark.parametrize("b,w", [(0.5, 0.5), (0.4, 0.3), (0.6, 0.4)])
    def test_rejects_uninformative(self, b, w):
        with pytest.raises(ValueError, match="b \\+ w > 1"):
            local_estimate(ObservationTally(3, 10), acc(b, w))
        with pytest.raises(ValueError):
            local_confidence(ObservationTally(3, 10), acc(b, w))

    @settings(max_examples=200, deadline=None)
    @given(b=st.floats(0.55, 1.0), w=st.floats(0.55, 1.0), t=st.integers(1, 200), data=st.data())
    def test_agrees_with_grid_search(self, b, w, t, data):
        n = data.draw(st.integers(0, t))
        assert mle_fill_ratio(n, t, b, w) == pytest.approx(grid_mle(n, t, b, w), abs=1e-3)

    @settings(max_examples=100, deadline=None)
    @given(b=st.floats(0.51, 1.0), w=st.floats(0.51, 1.0), t=st.integers(1, 300))
    def test_monotone_in_n(self, b, w, t):
        values = mle_fill_ratio(np.arange(t + 1), t, b, w)
        assert np.all(np.diff(values) >= 0)
        assert np.all((values >= 0) & (values <= 1))

    def test_inverts_expected_reading_rate(self):
        # expected n/t plugged into the interior branch gives back f exactly
        for f in np.linspace(0.05, 0.95, 19):
            for b, w in [(0.75, 0.75), (0.9, 0.6), (0.55, 0.99)]:
                p = reading_probability(f, acc(b, w))
                assert (p + w - 1) / (b + w - 1) == pytest.approx(f, abs=1e-12)

    def test_consistent_at_large_t(self):
        a = acc(0.75)
        p = reading_probability(0.55, a)
        ests = []
        for seed in range(100):
            n = np.random.default_rng(seed).binomial(10_000, p)
            ests.append(local_estimate(ObservationTally(int(n), 10_000), a))
        se = np.std(ests, ddof=1) / 10
        assert abs(np.mean(ests) - 0.55) < 3 * se


class TestLocalConfidence:
    def test_perfect_sensor_interior(self):
        assert local_confidence(ObservationTally(5, 10), acc(1.0)) == pytest.approx(40.0)
        assert observed_information(0.5, 5, 10, 1.0, 1.0) == pytest.approx(40.0, rel=1e-4)

    def test_high_branch_at_boundary(self):
        got = local_confidence(ObservationTally(75, 100), acc(0.75))
        assert got == pytest.approx(400 / 3, rel=1e-12)
        # same as the interior expression q t / (b (1 - b)) at n = b t
        assert got == pytest.approx(0.25 * 100 / (0.75 * 0.25), rel=1e-12)

    def test_low_branch(self):
        got = local_confidence(ObservationTally(0, 10), acc(0.9, 0.8))
        assert got == pytest.approx(7.65625, rel=1e-12)
        assert observed_information(0.0, 0, 10, 0.9, 0.8) == pytest.approx(7.65625, rel=1e-4)

    @settings(max_examples=200, deadline=None)
    @given(b=st.floats(0.55, 0.99), w=st.floats(0.55, 0.99), t=st.integers(1, 200), data=st.data())
    def test_is_observed_fisher_information(self, b, w, t, data):
        n = data.draw(st.integers(0, t))
        f_hat = mle_fill_ratio(n, t, b, w)
        expected = observed_information(f_hat, n, t, b, w)
        assert fisher_confidence(n, t, b, w) == pytest.approx(expected, rel=1e-3)

    @settings(max_examples=100, deadline=None)
    @given(b=st.floats(0.51, 0.999), w=st.floats(0.51, 0.999), t=st.integers(1, 10_000))
    def test_branch_continuity(self, b, w, t):
        q = (b + w - 1) ** 2
        lo, hi = (1 - w) * t, b * t
        interior = lambda n: q * t**3 / (n * (t - n))
        assert fisher_confidence(lo, t, b, w) == pytest.approx(interior(lo), rel=1e-6)
        assert fisher_confidence(hi, t, b, w) == pytest.approx(interior(hi), rel=1e-6)
        assert interior(lo) == pytest.approx(q * t / (w * (1 - w)), rel=1e-9)

    @pytest.mark.parametrize("n", [0, 10])
    def test_singular_branches_capped(self, n):
        assert local_confidence(ObservationTally(n, 10), acc(1.0)) == DEFAULT_ALPHA_MAX
        assert local_confidence(ObservationTally(n, 10), acc(1.0), alpha_max=5.0) == 5.0

    def test_finite_and_capped(self):
        n = np.arange(0, 1001)
        a = fisher_confidence(n, 1000, 0.999, 0.52, alpha_max=1e6)
        assert np.all(np.isfinite(a)) and np.all(a > 0) and np.all(a <= 1e6)


class TestFusion:
    def test_no_neighbors_is_neutral(self):
        assert fuse_social([]) == NEUTRAL

    def test_weighted_mean(self):
        s = fuse_social([EstimatePair(0.5, 10), EstimatePair(0.8, 50)])
        assert s.value == pytest.approx(0.75)
        assert s.confidence == 60

    def test_single(self):
        assert fuse_social([EstimatePair(0.6, 7.5)]) == EstimatePair(0.6, 7.5)

    def test_zero_confidence_neighbors(self):
        assert fuse_social([EstimatePair(0.3, 0.0)]) == NEUTRAL

    def test_negative_confidence_rejected(self):
        with pytest.raises(ValueError):
            fuse_social([EstimatePair(0.3, -1.0)])

    def test_informed_examples(self):
        local = EstimatePair(0.74, 40)
        assert informed_estimate(local, NEUTRAL) == local
        mid = informed_estimate(EstimatePair(0.4, 3.0), EstimatePair(0.6, 3.0))
        assert mid.value == pytest.approx(0.5) and mid.confidence == 6.0
        x = informed_estimate(local, fuse_social([EstimatePair(0.5, 10), EstimatePair(0.8, 50)]))
        assert x.value == pytest.approx(0.746, abs=1e-12)
        assert x.confidence == pytest.approx(100)

    def test_informed_needs_information(self):
        with pytest.raises(ValueError):
            informed_estimate(NEUTRAL, NEUTRAL)

    pairs = st.lists(st.tuples(st.floats(0, 1), st.floats(1e-3, 1e6)), min_size=1, max_size=12)

    @settings(max_examples=200, deadline=None)
    @given(local=st.tuples(st.floats(0, 1), st.floats(1e-3, 1e6)), others=pairs)
    def test_two_stage_equals_direct_weighted_mean(self, local, others):
        got = informed_estimate(EstimatePair(*local), fuse_social(EstimatePair(*p) for p in others))
        value, conf = weighted_mean([local, *others])
        assert got.value == pytest.approx(value, rel=1e-12, abs=1e-15)
        assert got.confidence == pytest.approx(conf, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(a=pairs, b=pairs, seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariant_and_additive(self, a, b, seed):
        A = [EstimatePair(*p) for p in a]
        B = [EstimatePair(*p) for p in b]
        shuffled = list(A)
        np.random.default_rng(seed).shuffle(shuffled)
        assert fuse_social(shuffled).value == pytest.approx(fuse_social(A).value, rel=1e-12, abs=1e-15)
        assert fuse_social(A + B).confidence == pytest.approx(
            fuse_social(A).confidence + fuse_social(B).confidence, rel=1e-12)
