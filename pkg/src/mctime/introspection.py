"""Post-hoc analyses of trained ensembles.

First-layer weight magnitudes locate the landscape pixels the networks
attend to; feature trajectories show the transition of the encoded
representation as the total time grows; the long-time study compares the
oscillation period of the accuracy curve with the period of the
center-of-landscape fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import NetworkParams, extract_features
from .clustering import ClusterModel, kmeans_assign
from .confusion import AccuracyCurve
from .dynamics import ControlProblem, Protocol, fidelity
from .errors import AnalysisError, NumericError, ParameterError, ShapeError
from .landscapes import Landscape, LandscapeDataset
from .reporting import write_csv


@dataclass
class ImportanceMap:
    """Per-pixel attention of the ensemble's first layers.

    mean_map averages the per-architecture maps; per_member keeps one
    node-aggregated row per architecture for stacked reporting.
    """

    mean_map: np.ndarray
    per_member: np.ndarray
    node_agg: str = "mean"


@dataclass
class PeriodEstimate:
    period: float
    method: str
    n_samples: int


@dataclass
class PeriodComparison:
    tau_accuracy: float
    two_tau_fidelity: float

    @property
    def ratio(self) -> float:
        return self.tau_accuracy / self.two_tau_fidelity


@dataclass
class FeatureTrajectories:
    times: np.ndarray
    features: np.ndarray
    clusters: np.ndarray


def normalized_first_layer(params: NetworkParams) -> np.ndarray:
    """|w1| normalized by its global maximum; (pixels, nodes), max exactly 1."""
    a = np.abs(params.w1)
    peak = a.max()
    if peak == 0.0:
        raise NumericError("first-layer weights are all zero")
    return a / peak


def weight_importance(members, node_agg: str = "mean") -> ImportanceMap:
    """Mean normalized absolute first-layer weight per pixel.

    Per architecture: normalize |w1| by that architecture's maximum, then
    aggregate over nodes ("mean", the default; "sum" keeps the literal
    per-architecture node sum, which is not bounded by 1). The mean map
    averages the per-architecture rows.
    """
    if node_agg not in ("mean", "sum"):
        raise ParameterError("node_agg must be 'mean' or 'sum'")
    members = list(members)
    if not members:
        raise ParameterError("empty ensemble")
    input_dim = members[0].w1.shape[0]
    rows = []
    for m in members:
        if m.w1.shape[0] != input_dim:
            raise ShapeError("ensemble members disagree on input_dim")
        norm = normalized_first_layer(m)
        rows.append(norm.mean(axis=1) if node_agg == "mean" else norm.sum(axis=1))
    per_member = np.stack(rows)
    return ImportanceMap(per_member.mean(axis=0), per_member, node_agg)


def select_pixels(importance, threshold: float) -> np.ndarray:
    """Boolean mask of pixels whose mean importance reaches the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    values = importance.mean_map if isinstance(importance, ImportanceMap) else importance
    return np.asarray(values, dtype=np.float64) >= threshold


def overlay_mask(landscape: Landscape, mask, path=None) -> np.ndarray:
    """Landscape grid annotated with the selection mask, flattening order.

    Returns one row per pixel: the mesh coordinates, the fidelity, and
    selected (0/1). Writes CSV when a path is given.
    """
    mask = np.asarray(mask)
    if mask.shape != landscape.pixels.shape:
        raise ShapeError("mask length does not match the landscape")
    coords = landscape.mesh.pixel_coordinates()
    rows = np.column_stack([coords, landscape.pixels, mask.astype(np.float64)])
    if path is not None:
        header = [f"eps{i + 1}" for i in range(landscape.mesh.n_axes)]
        header += ["fidelity", "selected"]
        write_csv(path, header,
                  [(*row[:-1], int(row[-1])) for row in rows])
    return rows


def mask_rotation_overlap(mask, shape) -> float:
    """Jaccard overlap of a pixel mask with its own 180-degree rotation.

    Diagnostic for the symmetry the two-level landscapes induce in the
    learned weights; reported, not asserted.
    """
    grid = np.asarray(mask, dtype=bool).reshape(shape)
    rotated = grid[tuple(slice(None, None, -1) for _ in shape)]
    union = np.logical_or(grid, rotated).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(grid, rotated).sum() / union)


def feature_trajectories(params: NetworkParams, model: ClusterModel,
                         dataset: LandscapeDataset) -> FeatureTrajectories:
    """Features and cluster of every landscape, rows sorted by total time."""
    order = np.argsort(dataset.times, kind="stable")
    times = dataset.times[order]
    feats = np.stack([
        extract_features(params, dataset.landscapes[i].pixels) for i in order
    ])
    clusters = kmeans_assign(model, feats)
    return FeatureTrajectories(times, feats, clusters)


def cluster_boundary(times, clusters) -> float:
    """Best two-segment changepoint of a binary cluster sequence over time.

    Scans every cut position, scoring agreement with a low/high split under
    both cluster identifications; returns the midpoint between the samples
    flanking the best cut (earliest cut on ties).
    """
    times = np.asarray(times, dtype=np.float64)
    c = np.asarray(clusters)
    if times.shape != c.shape or times.size < 2:
        raise ShapeError("need aligned times and clusters with >= 2 samples")
    is1 = (c != 0).astype(np.int64)
    prefix1 = np.concatenate([[0], np.cumsum(is1)])
    n = times.size
    total1 = prefix1[-1]
    cuts = np.arange(1, n)
    # agreement of labeling [t >= cut] with clusters, for both orientations
    agree_b = (cuts - prefix1[1:-1]) + (total1 - prefix1[1:-1])
    agree_a = n - agree_b
    score = np.maximum(agree_a, agree_b)
    i = int(np.argmax(score)) + 1
    return float(0.5 * (times[i - 1] + times[i]))


def center_fidelity_curve(problem: ControlProblem, times) -> np.ndarray:
    """Fidelity of the zero-control two-segment protocol at each time."""
    if problem.dim != 2:
        raise ParameterError("center-fidelity curve is defined for the 2-level model")
    times = np.asarray(times, dtype=np.float64)
    return np.array([
        fidelity(problem, Protocol(np.zeros(2), float(t))) for t in times
    ])


_PAD_FACTOR = 8
_MIN_CYCLES = 1.5


def estimate_period(t, y) -> PeriodEstimate:
    """Dominant oscillation period of a uniformly sampled series.

    Discrete Fourier transform of the mean-removed, Hann-tapered series
    (zero-padded for fine frequency sampling), dominant non-zero bin refined
    by quadratic interpolation of the magnitude peak. Needs a clear non-zero
    peak and at least ~1.5 observed cycles; fewer cycles are
    indistinguishable from a trend and raise an analysis error.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.shape != y.shape or t.size < 8:
        raise ParameterError("need aligned t and y with at least 8 samples")
    steps = np.diff(t)
    dt = steps.mean()
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(dt, 1.0):
        raise ParameterError("t must be uniformly spaced and increasing")

    centered = y - y.mean()
    scale = np.max(np.abs(centered))
    if scale < 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise AnalysisError("series is constant; no oscillation to measure")

    n = y.size
    m = _PAD_FACTOR * n
    mag = np.abs(np.fft.rfft(centered * np.hanning(n), n=m))
    k = 1 + int(np.argmax(mag[1:]))
    cycles = k * n / m
    if cycles < _MIN_CYCLES:
        raise AnalysisError(
            f"only {cycles:.2f} oscillations in range; need >= {_MIN_CYCLES}"
        )
    k_ref = float(k)
    if 1 <= k < mag.size - 1:
        y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0.0:
            shift = 0.5 * (y0 - y2) / denom
            if abs(shift) <= 1.0:
                k_ref = k + shift
    period = m * dt / k_ref
    return PeriodEstimate(float(period), "dft-quadratic", int(n))


def compare_periods(problem: ControlProblem, curve: AccuracyCurve) -> PeriodComparison:
    """Accuracy-curve period against twice the center-fidelity period."""
    tau_acc = estimate_period(curve.t_aux, curve.accuracy).period
    fid = center_fidelity_curve(problem, curve.t_aux)
    tau_fid = estimate_period(curve.t_aux, fid).period
    return PeriodComparison(tau_acc, 2.0 * tau_fid)
