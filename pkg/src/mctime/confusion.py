"""Confusion-scheme sweep for locating the critical time.

An auxiliary boundary t_aux labels every landscape by whether its total
time falls below (A) or at/above (B) the boundary. Agreement between that
labeling and the unsupervised cluster labels, maximized over the two
cluster-to-label identifications, peaks when t_aux sits at the true
transition; sweeping t_aux over the time grid traces the performance curve
whose argmax is the predicted critical time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass
class AccuracyCurve:
    t_aux: np.ndarray
    accuracy: np.ndarray
    n_members: int = 1
    std: np.ndarray | None = None


@dataclass
class MctPrediction:
    t_prime: float
    curve: AccuracyCurve
    window: tuple[float, float]


def auxiliary_labels(times, t_aux: float) -> np.ndarray:
    """0 (A) where time < t_aux, 1 (B) where time >= t_aux."""
    times = np.asarray(times, dtype=np.float64)
    return (times >= t_aux).astype(np.uint8)


def permuted_accuracy(cluster_labels, aux_labels) -> float:
    """Agreement fraction, maximized over the two binary identifications."""
    c = np.asarray(cluster_labels)
    a = np.asarray(aux_labels)
    if c.shape != a.shape or c.ndim != 1 or c.size < 1:
        raise ShapeError("label vectors must be equal-length and non-empty")
    # integer counting keeps the 0<->1 relabeling invariance exact
    matches = int(np.count_nonzero((c != 0) == (a != 0)))
    return max(matches, c.size - matches) / c.size


def sweep(cluster_labels, times, t_aux_grid=None) -> AccuracyCurve:
    """Permutation-maximized accuracy at every auxiliary boundary.

    The grid defaults to the sample times themselves.
    """
    c = np.asarray(cluster_labels)
    times = np.asarray(times, dtype=np.float64)
    if c.shape != times.shape:
        raise ShapeError("labels and times must be aligned")
    grid = np.sort(times) if t_aux_grid is None else np.asarray(t_aux_grid, np.float64)
    if grid.size < 1:
        raise ParameterError("t_aux grid is empty")
    # agreement with the B=(time >= t_aux) labeling, all grid points at once;
    # integer counts keep the relabeling invariance exact
    aux = times[None, :] >= grid[:, None]
    matches = np.count_nonzero(aux == (c[None, :] != 0), axis=1)
    n = times.size
    return AccuracyCurve(grid, np.maximum(matches, n - matches) / n)


def ensemble_average(curves) -> AccuracyCurve:
    """Pointwise mean over member curves, with the pointwise spread."""
    if not curves:
        raise ParameterError("no curves to average")
    grid = curves[0].t_aux
    for c in curves[1:]:
        if not np.array_equal(c.t_aux, grid):
            raise ShapeError("accuracy curves have mismatched t_aux grids")
    stack = np.stack([c.accuracy for c in curves])
    return AccuracyCurve(grid, stack.mean(axis=0), n_members=len(curves),
                         std=stack.std(axis=0))


def moving_average(curve: AccuracyCurve, window: int) -> AccuracyCurve:
    """Centered odd-window moving average; reporting aid, off by default."""
    if window < 1 or window % 2 == 0:
        raise ParameterError("smoothing window must be odd and >= 1")
    if window == 1:
        return curve
    pad = window // 2
    padded = np.pad(curve.accuracy, pad, mode="edge")
    kernel = np.full(window, 1.0 / window)
    smooth = np.convolve(padded, kernel, mode="valid")
    return AccuracyCurve(curve.t_aux, smooth, curve.n_members, curve.std)


def predict_mct(curve: AccuracyCurve, window: tuple[float, float] | None = None,
                trim_fraction: float = 0.05) -> MctPrediction:
    """Grid argmax of the accuracy curve inside a search window.

    The default window trims trim_fraction of the grid at each end: the
    degenerate all-one-label points at the extremes always score max(p, 1-p)
    and can top an interior peak. Ties go to the smallest time.
    """
    grid = curve.t_aux
    if window is None:
        if not 0.0 <= trim_fraction < 0.5:
            raise ParameterError("trim_fraction must be in [0, 0.5)")
        ntrim = int(np.floor(trim_fraction * grid.size))
        window = (float(grid[ntrim]), float(grid[grid.size - 1 - ntrim]))
    lo, hi = float(window[0]), float(window[1])
    mask = (grid >= lo) & (grid <= hi)
    if not np.any(mask):
        raise ParameterError(f"window [{lo}, {hi}] does not intersect the grid")
    sub = curve.accuracy[mask]
    t_prime = float(grid[mask][int(np.argmax(sub))])
    return MctPrediction(t_prime, curve, (lo, hi))
