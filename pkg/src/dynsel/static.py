"""Static baselines: Oracle, Single Best, Static Selection, Stacking."""

from __future__ import annotations

import numpy as np

from .learners import train_logistic
from .selection import BaseEnsemble, ceil_frac, majority_vote


def oracle_score(pool, X, y) -> float:
    """Fraction of samples that at least one pool member labels correctly."""
    predictions = pool.predict(X)
    return float(np.mean((predictions == np.asarray(y)[:, None]).any(axis=1)))


def dsel_accuracies(pool, dsel):
    return (pool.predict(dsel.features) == dsel.labels[:, None]).mean(axis=0)


class Oracle(BaseEnsemble):
    """Upper bound of the pool: needs the true labels to predict.

    ``predict(X, y)`` returns ``y`` wherever some member is right and the
    first member's prediction elsewhere.
    """

    name = "oracle"

    def predict_proba(self, X, y):
        self._check_fitted()
        y = np.asarray(y)
        predictions = self.pool_.predict(X)
        hit = (predictions == y[:, None]).any(axis=1)
        labels = np.where(hit, y, predictions[:, 0])
        return np.eye(self.n_classes_)[labels]

    def predict(self, X, y):
        return np.argmax(self.predict_proba(X, y), axis=1)

    def score(self, X, y):
        self._check_fitted()
        return oracle_score(self.pool_, X, y)


class SingleBest(BaseEnsemble):
    """Pool member with the highest DSEL accuracy (lowest index on ties)."""

    name = "single_best"

    def _fit(self, train, dsel):
        self.accuracies_ = dsel_accuracies(self.pool_, dsel)
        self.best_index_ = int(np.argmax(self.accuracies_))

    def predict_proba(self, X):
        self._check_fitted()
        return self.pool_[self.best_index_].predict_proba(X)


def top_indices(accuracies, n):
    order = np.argsort(-np.asarray(accuracies), kind="stable")
    return np.sort(order[:n])


class StaticSelection(BaseEnsemble):
    """Majority vote of the ``ceil(pct * L)`` most accurate members on DSEL."""

    name = "static_selection"

    def __init__(self, pool=None, config=None, pct=0.5, **overrides):
        super().__init__(pool, config, **overrides)
        self.pct = pct

    def _fit(self, train, dsel):
        self.accuracies_ = dsel_accuracies(self.pool_, dsel)
        n = min(ceil_frac(self.pct, len(self.pool_)), len(self.pool_))
        self.subset_ = top_indices(self.accuracies_, n)

    def predict_proba(self, X):
        self._check_fitted()
        preds = self.pool_.predict(X)[:, self.subset_]
        sups = self.pool_.predict_proba(X)[:, self.subset_]
        return np.array([majority_vote(p, s, self.n_classes_)[1]
                         for p, s in zip(preds, sups)])


class Stacked(BaseEnsemble):
    """Multinomial logistic meta-model over the concatenated pool supports.

    A pool of one has nothing to combine, so it is used as is.
    """

    name = "stacked"

    def __init__(self, pool=None, config=None, epochs=200, lr=0.1, l2=1e-4, **overrides):
        super().__init__(pool, config, **overrides)
        self.epochs, self.lr, self.l2 = epochs, lr, l2

    def _meta_features(self, X):
        return self.pool_.predict_proba(X).reshape(len(X), -1)

    def _fit(self, train, dsel):
        if len(self.pool_) == 1:
            self.meta_model_ = self.pool_[0]
            return
        self.meta_model_ = train_logistic(self._meta_features(dsel.features), dsel.labels,
                                          self.n_classes_, self.epochs, self.lr, self.l2)

    def predict_proba(self, X):
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(self.pool_) == 1:
            return self.meta_model_.predict_proba(X)
        return self.meta_model_.predict_proba(self._meta_features(X))
