"""k-means over extracted features, with elbow-based selection of k.

Plain Lloyd iterations from k-means++ seeding, best of n_init restarts by
inertia. Tie and empty-cluster rules are fixed explicitly so fits are
deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass
class ClusterModel:
    centroids: np.ndarray
    inertia: float
    seed: int

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass
class ElbowResult:
    ks: np.ndarray
    inertia: np.ndarray
    k_star: int


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all remaining points coincide with a chosen center
            idx = rng.integers(n)
        centers[c] = points[idx]
        np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1), out=d2)
    return centers


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 300,
          tol: float = 1e-6):
    """Lloyd iterations from explicit starting centroids.

    Ties in assignment go to the lower centroid index; an emptied cluster is
    reseeded to the point farthest from its assigned centroid. Returns
    (centroids, labels, inertia) with labels recomputed against the final
    centroids, so every point is assigned to its true nearest centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.array(centers, dtype=np.float64)
    k = centers.shape[0]
    n = points.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = _sq_distances(points, centers)
        new_labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), new_labels]
        counts = np.bincount(new_labels, minlength=k)
        for c in range(k):
            if counts[c] == 0:
                # reseed to the farthest point, but never empty another cluster
                eligible = counts[new_labels] > 1
                if not eligible.any():
                    continue
                far = int(np.argmax(np.where(eligible, point_d2, -1.0)))
                counts[new_labels[far]] -= 1
                new_labels[far] = c
                counts[c] = 1
                centers[c] = points[far]
                point_d2[far] = 0.0
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        new_centers = np.array([
            points[labels == c].mean(axis=0) if counts[c] else centers[c]
            for c in range(k)
        ])
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < tol:
            break
    d2 = _sq_distances(points, centers)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(points.shape[0]), labels].sum())
    return centers, labels, inertia


def kmeans_fit(points, k: int, seed: int, n_init: int = 10, max_iter: int = 300,
               tol: float = 1e-6) -> ClusterModel:
    """Best of n_init k-means++ restarts on one seeded stream."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ShapeError("points must be a (n, dim) matrix")
    if not 1 <= k <= points.shape[0]:
        raise ParameterError(f"need 1 <= k <= n_points, got k={k}, n={points.shape[0]}")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    best = None
    for _ in range(n_init):
        centers0 = _kmeanspp(points, k, rng)
        centers, _, inertia = lloyd(points, centers0, max_iter, tol)
        if best is None or inertia < best[0]:
            best = (inertia, centers)
    return ClusterModel(best[1], best[0], int(seed))


def kmeans_assign(model: ClusterModel, point):
    """Nearest-centroid label(s); ties go to the lower index."""
    p = np.asarray(point, dtype=np.float64)
    single = p.ndim == 1
    pb = p[None, :] if single else p
    if pb.shape[1] != model.centroids.shape[1]:
        raise ShapeError(
            f"point dimension {pb.shape[1]} != centroid dimension "
            f"{model.centroids.shape[1]}"
        )
    labels = _sq_distances(pb, model.centroids).argmin(axis=1)
    return int(labels[0]) if single else labels


def elbow_scan(points, k_min: int = 1, k_max: int = 8, seed: int = 0,
               n_init: int = 10) -> ElbowResult:
    """Inertia for each k, plus the sharpest-bend k*.

    k* maximizes the discrete second difference of the inertia curve over
    interior k; the full curve is returned so a human can override.
    """
    points = np.asarray(points, dtype=np.float64)
    if not (1 <= k_min and k_min + 2 <= k_max):
        raise ParameterError("need k_min >= 1 and k_max >= k_min + 2")
    if points.shape[0] < k_max:
        raise ParameterError("need at least k_max points")
    ks = np.arange(k_min, k_max + 1)
    inertia = np.array([kmeans_fit(points, int(k), seed, n_init=n_init).inertia
                        for k in ks])
    k_star = _elbow_k(ks, inertia)
    return ElbowResult(ks, inertia, k_star)


def _elbow_k(ks: np.ndarray, inertia: np.ndarray) -> int:
    second = inertia[:-2] - 2.0 * inertia[1:-1] + inertia[2:]
    return int(ks[1 + int(np.argmax(second))])


def averaged_elbow(results: list[ElbowResult]) -> tuple[np.ndarray, int]:
    """Ensemble elbow: normalize each inertia curve by its first entry,
    average pointwise, pick k* on the mean curve.

    Feature dimensions differ across ensemble members, so raw inertias are
    not comparable without the normalization.
    """
    if not results:
        raise ParameterError("no elbow curves to average")
    ks = results[0].ks
    for r in results[1:]:
        if not np.array_equal(r.ks, ks):
            raise ShapeError("elbow curves have mismatched k grids")
    normalized = [r.inertia / r.inertia[0] if r.inertia[0] > 0 else r.inertia
                  for r in results]
    mean_curve = np.mean(normalized, axis=0)
    return mean_curve, _elbow_k(ks, mean_curve)
