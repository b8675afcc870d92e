"""Regions of competence over the dynamic selection set (DSEL)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Standardizer
from .learners import TrainedPool


@dataclass(frozen=True)
class DselState:
    """DSEL in standardized space plus every pool output on it.

    Built once at fit time; competence estimates only read from here.
    """

    features: np.ndarray          # (n_dsel, n_features), standardized
    labels: np.ndarray            # (n_dsel,)
    predictions: np.ndarray       # (n_dsel, L)
    supports: np.ndarray          # (n_dsel, L, M)
    correctness: np.ndarray       # (n_dsel, L) bool
    n_classes: int

    def __len__(self):
        return len(self.labels)

    @property
    def n_classifiers(self):
        return self.predictions.shape[1]

    @property
    def profiles(self):
        """Output profiles, shape ``(n_dsel, L * M)``."""
        return self.supports.reshape(len(self.labels), -1)


@dataclass(frozen=True)
class CompetenceRegion:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.indices)


def build_dsel_state(pool: TrainedPool, dsel: Dataset, std: Standardizer) -> DselState:
    if len(dsel) == 0:
        raise ValueError("DSEL must not be empty")
    supports = pool.predict_proba(dsel.features)
    predictions = pool.predict(dsel.features)
    labels = np.asarray(dsel.labels)
    return DselState(
        features=std.apply(dsel.features),
        labels=labels,
        predictions=predictions,
        supports=supports,
        correctness=predictions == labels[:, None],
        n_classes=dsel.n_classes,
    )


def _check_k(k, n):
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range [1, {n}]")


def pairwise_distances(queries, points):
    """Euclidean distances, shape ``(n_queries, n_points)``."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    diff = queries[:, None, :] - np.asarray(points, dtype=float)[None, :, :]
    return np.sqrt(np.einsum("qpf,qpf->qp", diff, diff))


# distances equal to this many decimals count as ties (lower index first)
TIE_DECIMALS = 10


def _nearest(distances, k, exclude=None):
    """k smallest of one distance row; ties keep index order."""
    if exclude is not None:
        distances = distances.copy()
        distances[exclude] = np.inf
    order = np.argsort(np.round(distances, TIE_DECIMALS), kind="stable")[:k]
    # ulp-level disorder inside a tie is flattened so distances never decrease
    return CompetenceRegion(order, np.maximum.accumulate(distances[order]))


def knn_query(state: DselState, x, k: int) -> CompetenceRegion:
    """Exact k nearest DSEL samples to standardized ``x``; ties to lower index."""
    _check_k(k, len(state))
    return _nearest(pairwise_distances(x, state.features)[0], k)


def profile_knn_query(state: DselState, profile, k: int) -> CompetenceRegion:
    """k nearest DSEL samples in output-profile (decision) space."""
    _check_k(k, len(state))
    return _nearest(pairwise_distances(np.ravel(profile), state.profiles)[0], k)


def knn_batch(points, queries, k, leave_one_out=False, chunk=256):
    """Row-wise k-NN of ``queries`` among ``points``.

    With ``leave_one_out`` the queries are the points themselves and each
    sample is excluded from its own neighborhood.
    """
    n = len(points)
    _check_k(k, n - 1 if leave_one_out else n)
    regions = []
    for start in range(0, len(queries), chunk):
        block = pairwise_distances(queries[start:start + chunk], points)
        for r, row in enumerate(block):
            exclude = start + r if leave_one_out else None
            regions.append(_nearest(row, k, exclude))
    return regions


# --------------------------------------------------------------------------
# k-means
# --------------------------------------------------------------------------

@dataclass
class ClusterModel:
    centroids: np.ndarray
    assignment: np.ndarray
    inertia_history: list = field(default_factory=list)
    selected: dict = field(default_factory=dict)

    @property
    def inertia(self):
        return self.inertia_history[-1]


def nearest_cluster(model: ClusterModel, x) -> int:
    return int(np.argmin(pairwise_distances(x, model.centroids)[0]))


def _assign(X, centroids):
    d = pairwise_distances(X, centroids)
    assignment = np.argmin(d, axis=1)
    return assignment, d[np.arange(len(X)), assignment]


def _kmeans_pp(X, n_clusters, rng):
    n = len(X)
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # all remaining points coincide with a centroid
            nxt = int(np.setdiff1d(np.arange(n), chosen)[0])
        chosen.append(nxt)
        closest = np.minimum(closest, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def kmeans_fit(state_or_features, n_clusters: int, seed: int = 0,
               tol: float = 1e-6, max_iter: int = 100) -> ClusterModel:
    """Lloyd's algorithm from a seeded k-means++ start.

    An empty cluster is moved to the point farthest from its own centroid.
    ``inertia_history`` records the inertia after every assignment step.
    """
    X = getattr(state_or_features, "features", state_or_features)
    X = np.asarray(X, dtype=float)
    if not 1 <= n_clusters <= len(X):
        raise ValueError(f"n_clusters={n_clusters} must be in [1, {len(X)}]")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(X, n_clusters, rng)
    assignment, dist = _assign(X, centroids)
    history = [float((dist ** 2).sum())]
    for _ in range(max_iter):
        new = centroids.copy()
        taken = set()
        for c in range(n_clusters):
            members = assignment == c
            if members.any():
                new[c] = X[members].mean(axis=0)
                continue
            far = dist.copy()
            far[list(taken)] = -1.0
            j = int(np.argmax(far))
            taken.add(j)
            new[c] = X[j]
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        assignment, dist = _assign(X, centroids)
        history.append(float((dist ** 2).sum()))
        if shift < tol:
            break
    return ClusterModel(centroids, assignment, history)
