"""Dynamic classifier selection: pick the single most competent classifier.

The competence functions are vectorized over the pool and return one value
per classifier for a given region of competence.
"""

from __future__ import annotations

import numpy as np

from .region import CompetenceRegion, DselState
from .selection import DynamicSelector, Query, select_best

DIST_EPS = 1e-9


def ola_competence(state: DselState, region: CompetenceRegion) -> np.ndarray:
    """Overall local accuracy: fraction of the region each classifier gets right."""
    return state.correctness[region.indices].mean(axis=0)


def lca_competence(state: DselState, region: CompetenceRegion, query_preds) -> np.ndarray:
    """Local class accuracy.

    For classifier ``i`` only neighbors whose true label equals
    ``query_preds[i]`` count. No such neighbor gives competence 0.
    """
    labels = state.labels[region.indices]
    correct = state.correctness[region.indices]
    relevant = labels[:, None] == np.asarray(query_preds)[None, :]
    n_rel = relevant.sum(axis=0)
    hits = (relevant & correct).sum(axis=0)
    return np.divide(hits, n_rel, out=np.zeros(len(n_rel)), where=n_rel > 0)


def apriori_competence(state: DselState, region: CompetenceRegion) -> np.ndarray:
    """Distance-weighted mean support for each neighbor's true class."""
    idx = region.indices
    w = 1.0 / (region.distances + DIST_EPS)
    true_support = state.supports[idx, :, state.labels[idx]]        # (k, L)
    return (w[:, None] * true_support).sum(axis=0) / w.sum()


def aposteriori_competence(state: DselState, region: CompetenceRegion,
                           query_preds) -> np.ndarray:
    """As A Priori, over neighbors of the predicted class, using the support
    each classifier gives to that predicted class."""
    idx = region.indices
    query_preds = np.asarray(query_preds)
    L = len(query_preds)
    w = 1.0 / (region.distances + DIST_EPS)
    relevant = state.labels[idx][:, None] == query_preds[None, :]   # (k, L)
    support = state.supports[idx][:, np.arange(L), query_preds]     # (k, L)
    num = (relevant * w[:, None] * support).sum(axis=0)
    den = (relevant * w[:, None]).sum(axis=0)
    return np.divide(num, den, out=np.zeros(L), where=den > 0)


def mla_competence(state: DselState, region: CompetenceRegion, query_preds) -> np.ndarray:
    """Modified local accuracy: LCA with weights ``1 / (1 + d)``."""
    idx = region.indices
    query_preds = np.asarray(query_preds)
    w = 1.0 / (1.0 + region.distances)
    relevant = state.labels[idx][:, None] == query_preds[None, :]
    correct = state.correctness[idx]
    num = (relevant * correct * w[:, None]).sum(axis=0)
    den = (relevant * w[:, None]).sum(axis=0)
    return np.divide(num, den, out=np.zeros(len(query_preds)), where=den > 0)


def behavior_similarity(state: DselState, region: CompetenceRegion, query_behavior):
    """Fraction of pool members agreeing between the query and each neighbor."""
    return (state.predictions[region.indices] == np.asarray(query_behavior)[None, :]).mean(axis=1)


def mcb_competence(state: DselState, region: CompetenceRegion, query_behavior,
                   similarity_threshold=0.7) -> np.ndarray:
    """OLA on the neighbors whose multiple classifier behavior resembles the
    query's; falls back to the whole region when none reaches the threshold.

    The comparison is inclusive so a threshold of 0 keeps every neighbor.
    """
    sim = behavior_similarity(state, region, query_behavior)
    keep = sim >= similarity_threshold
    if keep.any():
        region = CompetenceRegion(region.indices[keep], region.distances[keep])
    return ola_competence(state, region)


def rank_competence(state: DselState, region: CompetenceRegion) -> np.ndarray:
    """Length of the nearest-first run of neighbors each classifier gets right."""
    correct = state.correctness[region.indices]
    wrong = ~correct
    first_wrong = np.where(wrong.any(axis=0), wrong.argmax(axis=0), len(correct))
    return first_wrong.astype(float)


class DCS(DynamicSelector):
    default_diff = 0.0

    def select(self, competences, query: Query):
        diff = self.config.diff_threshold
        diff = self.default_diff if diff is None else diff
        return select_best(competences, diff, query.active)


class OLA(DCS):
    name = "ola"

    def estimate_competence(self, query):
        return ola_competence(self.state_, query.region)


class LCA(DCS):
    name = "lca"

    def estimate_competence(self, query):
        return lca_competence(self.state_, query.region, query.predictions)


class APriori(DCS):
    name = "a_priori"

    def estimate_competence(self, query):
        return apriori_competence(self.state_, query.region)


class APosteriori(DCS):
    name = "a_posteriori"

    def estimate_competence(self, query):
        return aposteriori_competence(self.state_, query.region, query.predictions)


class MLA(DCS):
    name = "mla"

    def estimate_competence(self, query):
        return mla_competence(self.state_, query.region, query.predictions)


class MCB(DCS):
    name = "mcb"
    default_diff = 0.1

    def estimate_competence(self, query):
        return mcb_competence(self.state_, query.region, query.predictions,
                              self.config.similarity_threshold)


class Rank(DCS):
    name = "rank"

    def estimate_competence(self, query):
        return rank_competence(self.state_, query.region)
