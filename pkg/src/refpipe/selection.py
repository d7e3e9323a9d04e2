"""Reducing a tracked RoI list to a few representatives.

The main route clusters RoI feature vectors with K-means (k-means++ init,
Lloyd iterations, restarts) and keeps one member per cluster. Uniform,
random, and take-first baselines exist for comparison; all methods return
a frame-ordered subset of the input.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_vectors
from .diversity import analyze
from .roi_align import RoiFeature, stack_vectors

DEFAULT_TRACKED = 8   # raw list length fed into selection
DEFAULT_SELECTED = 4  # representatives kept for the prompt

METHODS = ("clustering", "uniform", "random", "none")


@dataclass
class Clustering:
    """K-means result: per-point cluster ids, centroids, and total inertia."""

    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float

    def __post_init__(self):
        counts = np.bincount(self.assignments, minlength=self.centroids.shape[0])
        if (counts == 0).any():
            raise ValueError("clustering contains an empty cluster")


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("nmd,nmd->nm", diff, diff)


def _kmeanspp_init(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: per step, try several D^2-sampled candidates and
    keep the one that lowers the potential the most."""
    n = x.shape[0]
    n_candidates = 2 + int(np.log(m))
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    while len(chosen) < m:
        total = d2.sum()
        if total <= 0.0:
            # all remaining mass at distance zero: fall back to an unchosen index
            remaining = [i for i in range(n) if i not in chosen]
            nxt = int(rng.choice(remaining)) if remaining else int(rng.integers(n))
            new_d2 = np.minimum(d2, np.sum((x - x[nxt]) ** 2, axis=1))
        else:
            candidates = rng.choice(n, size=n_candidates, p=d2 / total)
            nxt, new_d2 = -1, None
            for c in candidates:
                cand_d2 = np.minimum(d2, np.sum((x - x[int(c)]) ** 2, axis=1))
                if new_d2 is None or cand_d2.sum() < new_d2.sum():
                    nxt, new_d2 = int(c), cand_d2
        chosen.append(nxt)
        d2 = new_d2
    return x[chosen].copy()


def _repair_empty(assign: np.ndarray, d2: np.ndarray, m: int) -> np.ndarray:
    """Give each empty cluster the point farthest from its own centroid."""
    counts = np.bincount(assign, minlength=m)
    for c in range(m):
        if counts[c] > 0:
            continue
        dist_to_own = d2[np.arange(len(assign)), assign].copy()
        dist_to_own[counts[assign] <= 1] = -np.inf  # never empty another cluster
        steal = int(np.argmax(dist_to_own))
        counts[assign[steal]] -= 1
        assign[steal] = c
        counts[c] = 1
    return assign


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int):
    m = centers.shape[0]
    assign = None
    path = []
    for it in range(max_iters):
        d2 = _sq_dists(x, centers)
        new_assign = _repair_empty(d2.argmin(axis=1), d2, m)
        for c in range(m):
            centers[c] = x[new_assign == c].mean(axis=0)
        inertia = float(np.sum((x - centers[new_assign]) ** 2))
        path.append(inertia)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
    return assign, centers, path[-1], path


class KMeans(BaseEstimator):
    """Seeded K-means with k-means++ restarts and empty-cluster repair.

    fit exposes cluster_centers_, labels_, inertia_, and the per-iteration
    inertia of every restart (inertia_paths_), which is non-increasing
    within each run. The best restart by inertia wins; ties go to the
    lowest restart index.
    """

    def __init__(self, n_clusters: int = DEFAULT_SELECTED, restarts: int = 10,
                 max_iters: int = 100, seed: int = 0):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.max_iters = max_iters
        self.seed = seed

    def fit(self, X, y=None):
        x = check_vectors(X)
        m = check_positive_int(self.n_clusters, "n_clusters")
        check_positive_int(self.restarts, "restarts")
        check_positive_int(self.max_iters, "max_iters")
        if m > x.shape[0]:
            raise ValueError(f"n_clusters={m} exceeds the {x.shape[0]} input vectors")
        streams = np.random.SeedSequence(self.seed).spawn(self.restarts)
        best = None
        self.inertia_paths_ = []
        for r in range(self.restarts):
            rng = np.random.default_rng(streams[r])
            centers = _kmeanspp_init(x, m, rng)
            assign, centers, inertia, path = _lloyd(x, centers, self.max_iters)
            self.inertia_paths_.append(path)
            if best is None or inertia < best[0]:
                best = (inertia, assign, centers, path)
        self.inertia_, self.labels_, self.cluster_centers_, self.inertia_path_ = (
            best[0], best[1], best[2], best[3])
        self.n_features_in_ = x.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        x = check_vectors(X)
        return _sq_dists(x, self.cluster_centers_).argmin(axis=1)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


def kmeans(vectors, m: int, restarts: int = 10, max_iters: int = 100,
           seed: int = 0) -> Clustering:
    """Cluster row vectors into m non-empty clusters; best inertia over restarts."""
    km = KMeans(n_clusters=m, restarts=restarts, max_iters=max_iters, seed=seed).fit(vectors)
    return Clustering(assignments=km.labels_, centroids=km.cluster_centers_,
                      inertia=km.inertia_)


def _even_indices(n: int, m: int) -> list[int]:
    if m == 1:
        return [0]
    span = n - 1
    return [int(np.floor(i * span / (m - 1) + 0.5)) for i in range(m)]


class RoiSelector(BaseEstimator):
    """Picks m representative rows out of an ordered feature stack.

    method "clustering" keeps one member per K-means cluster (the medoid by
    default, for reproducibility; "random_member" with an explicit seed is
    the sampling variant); "uniform" takes evenly spaced indices, "random"
    a seeded sample without replacement, "none" the first m rows. Selected
    indices are always sorted, so output order follows input (frame) order.
    """

    def __init__(self, m: int = DEFAULT_SELECTED, method: str = "clustering",
                 restarts: int = 10, max_iters: int = 100, seed: int = 0,
                 representative: str = "medoid"):
        self.m = m
        self.method = method
        self.restarts = restarts
        self.max_iters = max_iters
        self.seed = seed
        self.representative = representative

    def fit(self, X, y=None):
        x = check_vectors(X)
        n = x.shape[0]
        m = check_positive_int(self.m, "m")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.representative not in ("medoid", "random_member"):
            raise ValueError(f"unknown representative {self.representative!r}")
        if m >= n:
            if m > n:
                warnings.warn(
                    f"requested m={m} exceeds the {n} available RoIs; returning all",
                    stacklevel=2)
            indices = list(range(n))
        elif self.method == "clustering":
            indices = self._cluster_select(x, m)
        elif self.method == "uniform":
            indices = _even_indices(n, m)
        elif self.method == "random":
            rng = np.random.default_rng(self.seed)
            indices = sorted(int(i) for i in rng.choice(n, size=m, replace=False))
        else:
            indices = list(range(m))
        self.selected_indices_ = sorted(indices)
        self.support_ = np.zeros(n, dtype=bool)
        self.support_[self.selected_indices_] = True
        self.n_features_in_ = x.shape[1]
        return self

    def _cluster_select(self, x: np.ndarray, m: int) -> list[int]:
        km = KMeans(n_clusters=m, restarts=self.restarts, max_iters=self.max_iters,
                    seed=self.seed).fit(x)
        self.labels_ = km.labels_
        rng = np.random.default_rng(self.seed)
        indices = []
        for c in range(m):
            members = np.flatnonzero(km.labels_ == c)
            if self.representative == "random_member":
                indices.append(int(rng.choice(members)))
            else:
                d2 = np.sum((x[members] - km.cluster_centers_[c]) ** 2, axis=1)
                indices.append(int(members[int(np.argmin(d2))]))
        return indices

    def transform(self, X) -> np.ndarray:
        x = check_vectors(X)
        return x[self.selected_indices_]

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform(X)


def select_rois(rois: Sequence[RoiFeature], selector: RoiSelector) -> list[RoiFeature]:
    """Apply a selector to RoI features, returning the frame-ordered subset."""
    if len(rois) == 0:
        raise ValueError("empty RoI feature set")
    selector.fit(stack_vectors(rois))
    return [rois[i] for i in selector.selected_indices_]


def selection_report(rois: Sequence[RoiFeature], selector: RoiSelector,
                     bins: int = 32) -> list[dict]:
    """Run every selection method on the same input and score its diversity.

    One row per method with the method name, how many RoIs it kept, and
    the diversity measurements of the kept set.
    """
    rows = []
    for method in METHODS:
        candidate = RoiSelector(**{**selector.get_params(), "method": method})
        chosen = select_rois(list(rois), candidate)
        report = analyze(stack_vectors(chosen), bins=bins)
        rows.append({"method": method, **report.to_dict()})
    return rows
