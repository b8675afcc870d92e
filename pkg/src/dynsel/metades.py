"""META-DES: competence estimation as meta-classification.

Each (sample, classifier) pair is described by five meta-feature groups:

* ``f1`` correctness of the classifier on the k nearest DSEL samples;
* ``f2`` its support for the true class of each of those neighbors;
* ``f3`` its local accuracy, the mean of ``f1``;
* ``f4`` correctness on the Kp nearest DSEL samples in output-profile space;
* ``f5`` its support for its own predicted class on the sample.

A Gaussian naive Bayes meta-classifier, trained on DSEL with leave-one-out
regions, maps the vector to the probability that the classifier is
competent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knora import knora_u_weights, _union_select
from .learners import train_gnb
from .region import CompetenceRegion, DselState, knn_batch, profile_knn_query
from .selection import DynamicSelector, select_above

# keeps posteriors inside (0, 1) so thresholds 0 and 1 stay meaningful
PROBA_CLIP = 1e-12


def meta_feature_length(k, Kp):
    return 2 * k + Kp + 2


def extract_meta_features(state: DselState, region_feat: CompetenceRegion,
                          region_prof: CompetenceRegion, i: int, query_supports) -> np.ndarray:
    """Meta-feature vector of classifier ``i`` for one query."""
    idx = region_feat.indices
    f1 = state.correctness[idx, i].astype(float)
    f2 = state.supports[idx, i, state.labels[idx]]
    f3 = [f1.mean()]
    f4 = state.correctness[region_prof.indices, i].astype(float)
    f5 = [float(np.max(query_supports))]
    return np.concatenate([f1, f2, f3, f4, f5])


def meta_features_all(state: DselState, region_feat, region_prof, query_supports):
    """Meta-feature vectors for every classifier, shape ``(L, 2k+Kp+2)``."""
    idx = region_feat.indices
    f1 = state.correctness[idx].T.astype(float)                     # (L, k)
    f2 = state.supports[idx, :, state.labels[idx]].T                # (L, k)
    f3 = f1.mean(axis=1, keepdims=True)
    f4 = state.correctness[region_prof.indices].T.astype(float)     # (L, Kp)
    f5 = np.max(query_supports, axis=1, keepdims=True)              # (L, 1)
    return np.hstack([f1, f2, f3, f4, f5])


def consensus(predictions, n_classes):
    """Share of the pool voting for the plurality class, per sample."""
    predictions = np.atleast_2d(predictions)
    counts = np.stack([np.bincount(row, minlength=n_classes) for row in predictions])
    return counts.max(axis=1) / predictions.shape[1]


@dataclass(frozen=True)
class MetaTrainingSet:
    vectors: np.ndarray
    labels: np.ndarray
    samples: np.ndarray     # DSEL index behind each row

    def __len__(self):
        return len(self.labels)


def build_meta_training_set(state: DselState, k=7, Kp=5, Hc=1.0) -> MetaTrainingSet:
    """Meta-training data from DSEL samples whose pool consensus is below Hc.

    The regions for sample ``j`` are computed over DSEL without ``j``.
    """
    keep = np.flatnonzero(consensus(state.predictions, state.n_classes) < Hc)
    width = meta_feature_length(k, Kp)
    if keep.size == 0:
        return MetaTrainingSet(np.empty((0, width)), np.empty(0, int), np.empty(0, int))
    feats = knn_batch(state.features, state.features, k, leave_one_out=True)
    profs = knn_batch(state.profiles, state.profiles, Kp, leave_one_out=True)
    vectors, labels, samples = [], [], []
    for j in keep:
        vectors.append(meta_features_all(state, feats[j], profs[j], state.supports[j]))
        labels.append(state.correctness[j].astype(int))
        samples.append(np.full(state.n_classifiers, j))
    return MetaTrainingSet(np.vstack(vectors), np.concatenate(labels),
                           np.concatenate(samples))


class _ConstantMeta:
    def __init__(self, p):
        self.p = p

    def predict_proba(self, X):
        return np.tile([1.0 - self.p, self.p], (len(X), 1))


def train_meta_model(meta: MetaTrainingSet):
    """Naive Bayes on the meta-data; a constant model when one label is missing."""
    positives = int(meta.labels.sum())
    if positives == len(meta):
        return _ConstantMeta(1.0)
    if positives == 0:
        return _ConstantMeta(0.0)
    return train_gnb(meta.vectors, meta.labels, 2)


def metades_competence(meta_model, vectors):
    p = meta_model.predict_proba(vectors)[:, 1]
    return np.clip(p, PROBA_CLIP, 1.0 - PROBA_CLIP)


def metades_select(competences, gamma=0.5, active=None):
    """Classifiers whose competence exceeds ``gamma``; else the best one."""
    return select_above(competences, gamma, active)


class METADES(DynamicSelector):
    """META-DES with a Gaussian naive Bayes meta-classifier.

    When every DSEL sample is classified unanimously there is nothing to
    meta-train on and the selector behaves like KNORA-U.
    """

    name = "meta_des"

    def _fit_method(self):
        cfg = self.config
        n = len(self.state_)
        if cfg.k > n - 1 or cfg.Kp > n - 1:
            raise ValueError("k and Kp must be smaller than the DSEL size")
        self.meta_data_ = build_meta_training_set(self.state_, cfg.k, cfg.Kp, cfg.Hc)
        self.meta_model_ = train_meta_model(self.meta_data_) if len(self.meta_data_) else None

    def estimate_competence(self, query):
        if self.meta_model_ is None:
            return knora_u_weights(self.state_, query.region)
        region_prof = profile_knn_query(self.state_, query.supports.ravel(), self.config.Kp)
        vectors = meta_features_all(self.state_, query.region, region_prof, query.supports)
        return metades_competence(self.meta_model_, vectors)

    def select(self, competences, query):
        if self.meta_model_ is None:
            return _union_select(competences, query.active)
        return metades_select(competences, self.config.gamma, query.active)
