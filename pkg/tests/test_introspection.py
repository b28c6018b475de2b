import numpy as np
import pytest

from mctime import (AnalysisError, ArchitectureSpec, MeshSpec, ParameterError,
                    ShapeError, build_problem, center_fidelity_curve,
                    cluster_boundary, compare_periods, estimate_period,
                    generate_dataset, generate_landscape, init_network,
                    kmeans_fit, overlay_mask, select_pixels, weight_importance)
from mctime.autoencoder import NetworkParams
from mctime.confusion import AccuracyCurve
from mctime.introspection import (feature_trajectories, mask_rotation_overlap,
                                  normalized_first_layer)


def member(input_dim=12, nh=6, nf=3, seed=0):
    return init_network(ArchitectureSpec(input_dim, nh, nf), seed=seed)


class TestWeightImportance:
    def test_constant_weights_give_all_ones(self):
        m = member()
        m.w1[:] = 0.37
        imp = weight_importance([m])
        assert np.allclose(imp.mean_map, 1.0, atol=0)

    def test_dominant_column_wins(self):
        m = member()
        m.w1[:] = 0.01
        m.w1[7, :] = 2.0  # pixel 7 feeds every node strongly
        imp = weight_importance([m])
        assert int(np.argmax(imp.mean_map)) == 7

    def test_scale_invariance(self):
        a = member(seed=1)
        b = NetworkParams(*(x.copy() for x in a.arrays()))
        b.w1 *= 1234.5
        map_a = weight_importance([a]).mean_map
        map_b = weight_importance([b]).mean_map
        assert np.allclose(map_a, map_b, atol=1e-15)

    def test_normalization_exact(self):
        for seed in range(5):
            norm = normalized_first_layer(member(seed=seed))
            assert norm.max() == 1.0
            assert norm.min() >= 0.0

    def test_mean_map_in_unit_interval(self):
        imp = weight_importance([member(seed=s) for s in range(4)])
        assert imp.mean_map.min() >= 0.0 and imp.mean_map.max() <= 1.0
        assert imp.per_member.shape == (4, 12)

    def test_input_dim_mismatch(self):
        with pytest.raises(ShapeError):
            weight_importance([member(12), member(13)])

    def test_sum_aggregation_flag(self):
        m = member()
        mean_map = weight_importance([m], node_agg="mean").mean_map
        sum_map = weight_importance([m], node_agg="sum").mean_map
        assert np.allclose(sum_map, mean_map * m.w1.shape[1], rtol=1e-12)


class TestSelectPixels:
    def test_threshold_zero_selects_all(self):
        imp = weight_importance([member(seed=2)])
        assert select_pixels(imp, 0.0).all()

    def test_threshold_above_max_selects_none(self):
        values = np.array([0.1, 0.9, 0.4])
        assert not select_pixels(values, 0.95).any()

    def test_monotone(self):
        imp = weight_importance([member(seed=3)])
        low = select_pixels(imp, 0.5)
        high = select_pixels(imp, 0.7)
        assert not np.any(high & ~low)

    def test_range_check(self):
        with pytest.raises(ParameterError):
            select_pixels(np.array([0.5]), 1.01)


@pytest.fixture(scope="module")
def landscape():
    return generate_landscape(build_problem("LZ", 1.0), 4.0,
                              MeshSpec.uniform(2, -5.0, 5.0, 8))


class TestOverlayMask:
    def test_empty_mask(self, landscape):
        rows = overlay_mask(landscape, np.zeros(64, dtype=bool))
        assert rows.shape == (64, 4)
        assert not rows[:, 3].any()

    def test_full_mask(self, landscape):
        rows = overlay_mask(landscape, np.ones(64, dtype=bool))
        assert rows[:, 3].all()

    def test_mismatch_rejected(self, landscape):
        with pytest.raises(ShapeError):
            overlay_mask(landscape, np.zeros(63, dtype=bool))

    def test_csv_export(self, landscape, tmp_path):
        path = tmp_path / "overlay.csv"
        overlay_mask(landscape, np.zeros(64, dtype=bool), path=path)
        lines = path.read_text().splitlines()
        assert lines[0] == "eps1,eps2,fidelity,selected"
        assert len(lines) == 65

    def test_rotation_overlap_symmetric_mask(self, landscape):
        mask = landscape.pixels > 0.6  # symmetric landscape -> symmetric mask
        assert mask_rotation_overlap(mask, landscape.mesh.shape) == 1.0


class TestFeatureTrajectories:
    def test_rows_and_clusters(self):
        problem = build_problem("LZ", 1.0)
        ds = generate_dataset(problem, 0.2, 6.0, 0.2, MeshSpec.uniform(2, -5, 5, 6))
        m = member(input_dim=36, nh=8, nf=3, seed=4)
        feats = np.stack([np.tanh(np.tanh(l.pixels @ m.w1 + m.b1) @ m.w2 + m.b2)
                          for l in ds.landscapes])
        model = kmeans_fit(feats, 2, seed=0)
        traj = feature_trajectories(m, model, ds)
        assert traj.times.shape == (len(ds),)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.features.shape == (len(ds), 3)
        assert set(np.unique(traj.clusters)) <= {0, 1}


class TestClusterBoundary:
    def test_clean_step(self):
        times = np.linspace(1, 10, 19)
        clusters = (times >= 6.0).astype(int)
        cut = cluster_boundary(times, clusters)
        assert 5.5 < cut < 6.0

    def test_noisy_step(self):
        rng = np.random.default_rng(0)
        times = np.linspace(0.01, 10.0, 500)
        clusters = (times >= np.pi).astype(int)
        flip = rng.random(500) < 0.05
        clusters[flip] = 1 - clusters[flip]
        cut = cluster_boundary(times, clusters)
        assert abs(cut - np.pi) < 0.3

    def test_orientation_independent(self):
        times = np.linspace(1, 10, 40)
        clusters = (times >= 4.0).astype(int)
        assert cluster_boundary(times, clusters) == \
            cluster_boundary(times, 1 - clusters)


class TestCenterFidelityCurve:
    def test_known_values(self):
        p = build_problem("LZ", 1.0)
        curve = center_fidelity_curve(p, [np.pi, 2 * np.pi])
        assert abs(curve[0] - 1.0) < 1e-10
        assert abs(curve[1] - 0.0) < 1e-10

    def test_matches_closed_form(self):
        p = build_problem("LZ", 0.7)
        times = np.linspace(0.1, 20, 57)
        curve = center_fidelity_curve(p, times)
        assert np.max(np.abs(curve - np.sin(0.35 * times) ** 2)) < 1e-10

    def test_three_level_rejected(self):
        p = build_problem("GENERALIZED_LZ3", 1.0, 1.0, 1.0)
        with pytest.raises(ParameterError):
            center_fidelity_curve(p, [1.0])


class TestEstimatePeriod:
    def test_sin_squared(self):
        t = np.arange(0.0, 50.0 + 1e-9, 0.01)
        est = estimate_period(t, np.sin(t / 2) ** 2)
        assert abs(est.period - 2 * np.pi) / (2 * np.pi) < 0.01

    def test_cosine(self):
        t = np.arange(0.0, 50.0 + 1e-9, 0.01)
        est = estimate_period(t, np.cos(t))
        assert abs(est.period - 2 * np.pi) / (2 * np.pi) < 0.01

    def test_constant_rejected(self):
        t = np.linspace(0, 10, 100)
        with pytest.raises(AnalysisError):
            estimate_period(t, np.full(100, 0.7))

    def test_too_few_cycles_rejected(self):
        # under one oscillation across the window, as with a 12-unit sweep
        # of a period-4pi accuracy curve
        t = np.arange(0.01, 12.0, 0.01)
        with pytest.raises(AnalysisError):
            estimate_period(t, np.cos(2 * np.pi * t / 12.57))

    def test_non_uniform_rejected(self):
        t = np.array([0.0, 0.1, 0.25, 0.3, 0.5, 0.6, 0.7, 0.9])
        with pytest.raises(ParameterError):
            estimate_period(t, np.sin(t))

    def test_center_curve_period(self):
        p = build_problem("LZ", 0.5)
        t = 0.01 + 0.01 * np.arange(4990)
        est = estimate_period(t, center_fidelity_curve(p, t))
        assert abs(est.period - 4 * np.pi) / (4 * np.pi) < 0.01


class TestComparePeriods:
    def test_synthetic_accuracy_plumbing(self):
        p = build_problem("LZ", 1.0)
        t = 0.01 + 0.01 * np.arange(4990)
        curve = AccuracyCurve(t, 0.75 + 0.2 * np.cos(t / 2))
        cmp = compare_periods(p, curve)
        # tau_acc = 4 pi against twice the fidelity period 2 pi
        assert abs(cmp.two_tau_fidelity - 4 * np.pi) / (4 * np.pi) < 0.01
        assert abs(cmp.ratio - 1.0) < 0.02
