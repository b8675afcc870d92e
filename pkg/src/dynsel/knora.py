"""Oracle and accuracy based dynamic ensemble selection."""

from __future__ import annotations

import numpy as np

from .dcs import ola_competence
from .region import ClusterModel, CompetenceRegion, DselState, kmeans_fit, \
    nearest_cluster, profile_knn_query
from .selection import DynamicSelector, SelectionResult, ceil_frac


def knora_e_select(state: DselState, region: CompetenceRegion, active=None) -> SelectionResult:
    """Classifiers correct on every neighbor, shrinking the region from the
    far end until some classifier qualifies; else the whole active pool."""
    L = state.n_classifiers
    active = np.ones(L, bool) if active is None else np.asarray(active, bool)
    correct = state.correctness[region.indices]
    for size in range(len(region), 0, -1):
        oracles = np.flatnonzero(active & correct[:size].all(axis=0))
        if oracles.size:
            return SelectionResult(tuple(int(i) for i in oracles))
    return SelectionResult(tuple(int(i) for i in np.flatnonzero(active)))


def knora_u_weights(state: DselState, region: CompetenceRegion) -> np.ndarray:
    """Number of neighbors each classifier classifies correctly."""
    return state.correctness[region.indices].sum(axis=0).astype(float)


def knora_u_select(state: DselState, region: CompetenceRegion, active=None) -> SelectionResult:
    weights = knora_u_weights(state, region)
    return _union_select(weights, active)


def _union_select(weights, active):
    L = len(weights)
    active = np.ones(L, bool) if active is None else np.asarray(active, bool)
    chosen = np.flatnonzero(active & (weights > 0))
    if chosen.size == 0:
        return SelectionResult(tuple(int(i) for i in np.flatnonzero(active)))
    return SelectionResult(tuple(int(i) for i in chosen),
                           tuple(float(weights[i]) for i in chosen))


def knop_select(state: DselState, query_profile, k: int, active=None) -> SelectionResult:
    """KNORA-U weighting over the nearest DSEL output profiles."""
    region = profile_knn_query(state, query_profile, k)
    return knora_u_select(state, region, active)


def double_fault(correctness: np.ndarray) -> np.ndarray:
    """Pairwise fraction of samples both classifiers misclassify, (L, L)."""
    wrong = (~np.asarray(correctness, bool)).astype(float)
    return wrong.T @ wrong / len(wrong)


def accuracy_diversity_select(correctness, pct_accuracy, pct_diversity, active=None):
    """Top-N most accurate active classifiers, then the J of those with the
    lowest mean double-fault against the rest of the N-set."""
    correctness = np.asarray(correctness, bool)
    L = correctness.shape[1]
    active = np.ones(L, bool) if active is None else np.asarray(active, bool)
    candidates = np.flatnonzero(active)
    n_acc = min(ceil_frac(pct_accuracy, L), candidates.size)
    n_div = min(n_acc, ceil_frac(pct_diversity, L))
    accuracy = correctness[:, candidates].mean(axis=0)
    top = candidates[np.argsort(-accuracy, kind="stable")[:n_acc]]
    top = np.sort(top)
    df = double_fault(correctness[:, top])
    if len(top) > 1:
        mean_df = (df.sum(axis=1) - np.diag(df)) / (len(top) - 1)
    else:
        mean_df = np.zeros(1)
    chosen = top[np.argsort(mean_df, kind="stable")[:n_div]]
    return SelectionResult(tuple(int(i) for i in np.sort(chosen)))


def desknn_select(state: DselState, region: CompetenceRegion, pct_accuracy=0.5,
                  pct_diversity=0.3, active=None) -> SelectionResult:
    return accuracy_diversity_select(state.correctness[region.indices],
                                     pct_accuracy, pct_diversity, active)


def desclustering_fit(state: DselState, n_clusters=5, seed=0, pct_accuracy=0.5,
                      pct_diversity=0.3) -> ClusterModel:
    """k-means over DSEL with a cached accuracy/diversity ensemble per cluster."""
    model = kmeans_fit(state, n_clusters, seed)
    for c in range(n_clusters):
        members = model.assignment == c
        if members.any():
            model.selected[c] = accuracy_diversity_select(
                state.correctness[members], pct_accuracy, pct_diversity).selected
        else:
            model.selected[c] = tuple(range(state.n_classifiers))
    return model


def desclustering_select(model: ClusterModel, x, active=None) -> SelectionResult:
    chosen = model.selected[nearest_cluster(model, x)]
    if active is not None:
        kept = tuple(i for i in chosen if active[i])
        chosen = kept or tuple(int(i) for i in np.flatnonzero(active))
    return SelectionResult(chosen)


class KNORAE(DynamicSelector):
    name = "knora_e"

    def estimate_competence(self, query):
        return ola_competence(self.state_, query.region)

    def select(self, competences, query):
        return knora_e_select(self.state_, query.region, query.active)


class KNORAU(DynamicSelector):
    name = "knora_u"

    def estimate_competence(self, query):
        return knora_u_weights(self.state_, query.region)

    def select(self, competences, query):
        return _union_select(competences, query.active)


class KNOP(DynamicSelector):
    name = "knop"
    uses_region = False

    def _fit_method(self):
        if self.config.k > len(self.state_):
            raise ValueError(f"k={self.config.k} exceeds DSEL size {len(self.state_)}")

    def estimate_competence(self, query):
        region = profile_knn_query(self.state_, query.supports.ravel(), self.config.k)
        return knora_u_weights(self.state_, region)

    def select(self, competences, query):
        return _union_select(competences, query.active)


class DESKNN(DynamicSelector):
    name = "des_knn"

    def estimate_competence(self, query):
        return ola_competence(self.state_, query.region)

    def select(self, competences, query):
        return desknn_select(self.state_, query.region, self.config.pct_accuracy,
                             self.config.pct_diversity, query.active)


class DESClustering(DynamicSelector):
    name = "des_clustering"
    uses_region = False

    def _fit_method(self):
        cfg = self.config
        self.clusters_ = desclustering_fit(self.state_, min(cfg.n_clusters, len(self.state_)),
                                           cfg.seed, cfg.pct_accuracy, cfg.pct_diversity)

    def estimate_competence(self, query):
        members = self.clusters_.assignment == nearest_cluster(self.clusters_, query.xs)
        if not members.any():
            return np.zeros(self.state_.n_classifiers)
        return self.state_.correctness[members].mean(axis=0)

    def select(self, competences, query):
        return desclustering_select(self.clusters_, query.xs, query.active)
