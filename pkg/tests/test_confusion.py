import numpy as np
import pytest

from mctime import (AccuracyCurve, ParameterError, ShapeError,
                    auxiliary_labels, ensemble_average, permuted_accuracy,
                    predict_mct, sweep)
from mctime.confusion import moving_average


class TestAuxiliaryLabels:
    def test_below_all(self):
        labels = auxiliary_labels([1.0, 2.0, 3.0], 0.5)
        assert np.array_equal(labels, [1, 1, 1])

    def test_above_all(self):
        labels = auxiliary_labels([1.0, 2.0, 3.0], 9.0)
        assert np.array_equal(labels, [0, 0, 0])

    def test_boundary_is_labeled_b(self):
        labels = auxiliary_labels([1.0, 2.0, 3.0], 2.0)
        assert np.array_equal(labels, [0, 1, 1])


class TestPermutedAccuracy:
    def test_identical(self):
        assert permuted_accuracy([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0

    def test_complemented(self):
        assert permuted_accuracy([1, 0, 0, 1], [0, 1, 1, 0]) == 1.0

    def test_enumerated_example(self):
        # direct identification agrees on 3 of 4, flipped on 1 of 4
        assert permuted_accuracy([0, 0, 1, 1], [0, 1, 1, 1]) == 0.75

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = rng.integers(0, 2, 37)
            a = rng.integers(0, 2, 37)
            assert permuted_accuracy(c, a) == permuted_accuracy(1 - c, a)

    def test_never_below_half(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            c = rng.integers(0, 2, 21)
            a = rng.integers(0, 2, 21)
            assert permuted_accuracy(c, a) >= 0.5

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            permuted_accuracy([0, 1], [0, 1, 1])


def grid_times(step=0.01, end=10.0):
    n = int(round((end - 0.01) / step)) + 1
    return 0.01 + step * np.arange(n)


class TestSweep:
    def test_perfect_separation(self):
        times = grid_times()
        clusters = (times < 5.0).astype(int)
        curve = sweep(clusters, times)
        peak = np.flatnonzero(curve.accuracy == 1.0)
        assert peak.size == 1
        assert curve.t_aux[peak[0]] == pytest.approx(5.0)

    def test_single_cluster_degeneracy(self):
        times = grid_times(0.01, 10.0)
        n = times.size
        curve = sweep(np.ones(n, dtype=int), times)
        assert curve.accuracy[0] == 1.0
        assert curve.accuracy[-1] >= 1.0 - 1.0 / n
        mid = np.argmin(np.abs(curve.t_aux - np.median(times)))
        assert abs(curve.accuracy[mid] - 0.5) < 0.01

    def test_endpoint_dominant_fraction(self):
        rng = np.random.default_rng(3)
        times = grid_times(0.1)
        clusters = rng.integers(0, 2, times.size)
        curve = sweep(clusters, times)
        p = clusters.mean()
        assert curve.accuracy[0] == pytest.approx(max(p, 1 - p))

    def test_coin_labels_stay_near_half(self):
        # Monte Carlo oracle (10^4 trials of the prefix-sum formulation):
        # max accuracy over the grid has mean 0.531, observed maximum 0.574,
        # P(max >= 0.6) < 1e-4; fifty seeded draws must all stay below 0.6
        rng = np.random.default_rng(99)
        times = grid_times()
        for _ in range(50):
            clusters = rng.integers(0, 2, times.size)
            curve = sweep(clusters, times)
            assert curve.accuracy.max() < 0.6

    def test_values_bounded(self):
        rng = np.random.default_rng(4)
        times = grid_times(0.05)
        clusters = rng.integers(0, 2, times.size)
        curve = sweep(clusters, times)
        assert np.all(curve.accuracy >= 0.5)
        assert np.all(curve.accuracy <= 1.0)

    def test_complement_gives_identical_curve(self):
        rng = np.random.default_rng(5)
        times = grid_times(0.05)
        clusters = rng.integers(0, 2, times.size)
        a = sweep(clusters, times)
        b = sweep(1 - clusters, times)
        assert np.array_equal(a.accuracy, b.accuracy)

    def test_explicit_grid(self):
        times = np.array([1.0, 2.0, 3.0, 4.0])
        curve = sweep(np.array([0, 0, 1, 1]), times, t_aux_grid=[2.5])
        assert curve.accuracy[0] == 1.0


class TestEnsembleAverage:
    def _curve(self, values):
        return AccuracyCurve(np.arange(len(values), dtype=float),
                             np.asarray(values, dtype=float))

    def test_single_curve_identity(self):
        c = self._curve([0.5, 0.7, 0.9])
        mean = ensemble_average([c])
        assert np.array_equal(mean.accuracy, c.accuracy)
        assert mean.n_members == 1
        assert np.array_equal(mean.std, np.zeros(3))

    def test_two_curves_pointwise_mean(self):
        a = self._curve([0.5, 0.8, 1.0])
        b = self._curve([0.7, 0.6, 0.8])
        mean = ensemble_average([a, b])
        assert np.allclose(mean.accuracy, [0.6, 0.7, 0.9])
        assert mean.n_members == 2

    def test_grid_mismatch(self):
        a = self._curve([0.5, 0.8])
        b = AccuracyCurve(np.array([0.0, 2.0]), np.array([0.5, 0.8]))
        with pytest.raises(ShapeError):
            ensemble_average([a, b])


class TestPredictMct:
    def test_perfect_separation_peak(self):
        times = grid_times()
        clusters = (times < 5.0).astype(int)
        pred = predict_mct(sweep(clusters, times))
        assert pred.t_prime == pytest.approx(5.0)

    def test_trimming_suppresses_endpoint_degeneracy(self):
        # a weak interior transition plus all-B labels: untrimmed argmax
        # would sit at the first grid point, the trimmed one must not
        times = grid_times(0.01, 10.0)
        rng = np.random.default_rng(8)
        clusters = (times >= 3.0).astype(int)
        noise = rng.random(times.size) < 0.3
        clusters[noise] = 1 - clusters[noise]
        curve = sweep(clusters, times)
        pred = predict_mct(curve)
        assert pred.window[0] > times[0]
        assert pred.window[1] < times[-1]
        assert pred.window[0] <= pred.t_prime <= pred.window[1]

    def test_zero_trim_reaches_ends(self):
        times = grid_times(0.1)
        clusters = np.ones(times.size, dtype=int)
        pred = predict_mct(sweep(clusters, times), trim_fraction=0.0)
        assert pred.t_prime == times[0]  # endpoint degeneracy, tie to smallest

    def test_explicit_window(self):
        times = grid_times(0.1)  # 0.01, 0.11, ..., so the cut lands on 5.01
        clusters = (times < 5.0).astype(int)
        pred = predict_mct(sweep(clusters, times), window=(4.0, 6.0))
        assert pred.t_prime == pytest.approx(5.01)

    def test_disjoint_window_rejected(self):
        times = grid_times(0.1)
        curve = sweep(np.ones(times.size, dtype=int), times)
        with pytest.raises(ParameterError):
            predict_mct(curve, window=(20.0, 30.0))

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(9)
        times = grid_times(0.05)
        clusters = (times >= 2.5).astype(int)
        flip = rng.random(times.size) < 0.1
        clusters[flip] = 1 - clusters[flip]
        a = predict_mct(sweep(clusters, times))
        b = predict_mct(sweep(1 - clusters, times))
        assert a.t_prime == b.t_prime


class TestMovingAverage:
    def test_window_one_is_identity(self):
        c = AccuracyCurve(np.arange(4.0), np.array([0.5, 0.6, 0.7, 0.8]))
        assert moving_average(c, 1) is c

    def test_smooths(self):
        c = AccuracyCurve(np.arange(5.0), np.array([0.5, 1.0, 0.5, 1.0, 0.5]))
        sm = moving_average(c, 3)
        assert sm.accuracy.shape == (5,)
        assert np.all(sm.accuracy <= 1.0)
        assert np.ptp(sm.accuracy) < np.ptp(c.accuracy)

    def test_even_window_rejected(self):
        c = AccuracyCurve(np.arange(4.0), np.full(4, 0.5))
        with pytest.raises(ParameterError):
            moving_average(c, 2)
