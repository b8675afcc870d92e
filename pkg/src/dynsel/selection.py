"""Selection rules, vote aggregation and the dynamic selector lifecycle."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .data import Dataset, _stratified_indices, fit_standardizer
from .learners import TrainedPool, generate_bagging_pool
from .region import CompetenceRegion, DselState, build_dsel_state, knn_batch

MODES = ("selection", "weighting", "hybrid")


class NotFittedError(RuntimeError):
    pass


@dataclass(frozen=True)
class DSConfig:
    """Hyperparameters shared by all dynamic selection methods.

    ``diff_threshold=None`` lets each DCS method use its own band (0.0,
    or 0.1 for MCB).
    """

    k: int = 7
    Kp: int = 5
    similarity_threshold: float = 0.7
    diff_threshold: float | None = None
    Hc: float = 1.0
    gamma: float = 0.5
    pct_accuracy: float = 0.5
    pct_diversity: float = 0.3
    n_clusters: int = 5
    mode: str = "selection"
    with_dfp: bool = False
    seed: int = 0
    pool_size: int = 10
    rrc_draws: int = 1000

    def __post_init__(self):
        if self.k < 1 or self.Kp < 1:
            raise ValueError("k and Kp must be >= 1")
        if not 0 <= self.similarity_threshold <= 1:
            raise ValueError("similarity_threshold must lie in [0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not (0 < self.pct_accuracy <= 1 and 0 < self.pct_diversity <= 1):
            raise ValueError("pct_accuracy and pct_diversity must lie in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.pool_size < 1 or self.n_clusters < 1:
            raise ValueError("pool_size and n_clusters must be >= 1")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple
    weights: tuple | None = None

    def __post_init__(self):
        if len(self.selected) == 0:
            raise ValueError("empty selection")
        if self.weights is not None:
            if len(self.weights) != len(self.selected):
                raise ValueError("weights must align with selected")
            if not any(w > 0 for w in self.weights):
                raise ValueError("weights must not be all zero")


def ceil_frac(frac, L):
    """``ceil(frac * L)`` that ignores float noise such as 0.3 * 10."""
    return max(1, math.ceil(frac * L - 1e-9))


# --------------------------------------------------------------------------
# Selection rules
# --------------------------------------------------------------------------

def _active(competences, active_mask):
    c = np.asarray(competences, dtype=float)
    mask = np.ones(len(c), bool) if active_mask is None else np.asarray(active_mask, bool)
    if not mask.any():
        raise ValueError("no active classifier")
    return c, mask


def select_best(competences, diff_threshold=0.0, active_mask=None) -> SelectionResult:
    """Most competent active classifier, or every one within the tie band.

    With ``diff_threshold == 0`` exact ties keep only the lowest index.
    """
    c, mask = _active(competences, active_mask)
    best = np.max(c[mask])
    if diff_threshold > 0:
        tied = np.flatnonzero(mask & (c >= best - diff_threshold - 1e-12))
        return SelectionResult(tuple(int(i) for i in tied))
    return SelectionResult((int(np.flatnonzero(mask & (c == best))[0]),))


def select_above(competences, threshold, active_mask=None) -> SelectionResult:
    """Active classifiers with competence strictly above ``threshold``."""
    c, mask = _active(competences, active_mask)
    chosen = np.flatnonzero(mask & (c > threshold))
    if chosen.size == 0:
        return select_best(c, 0.0, mask)
    return SelectionResult(tuple(int(i) for i in chosen))


def dfp_prune(state: DselState, region: CompetenceRegion, L=None):
    """Dynamic frienemy pruning mask for one region of competence.

    In a single-class region every classifier stays. Otherwise a classifier
    stays iff it is correct on two region samples of different classes; if
    none qualifies, all stay.
    """
    idx = np.asarray(region.indices)
    if idx.size == 0:
        raise ValueError("empty region")
    L = state.n_classifiers if L is None else L
    labels = state.labels[idx]
    if np.unique(labels).size == 1:
        return np.ones(L, bool)
    correct = state.correctness[idx]
    mask = np.array([np.unique(labels[correct[:, i]]).size >= 2 for i in range(L)])
    if not mask.any():
        return np.ones(L, bool)
    return mask


# --------------------------------------------------------------------------
# Aggregation
# --------------------------------------------------------------------------

def _vote_winner(tallies, predictions, supports):
    """Argmax of class tallies; ties by mean voter support, then lower class."""
    top = np.flatnonzero(tallies == tallies.max())
    if top.size == 1 or supports is None:
        return int(top[0])
    predictions = np.asarray(predictions)
    supports = np.asarray(supports, dtype=float)
    means = [supports[predictions == c, c].mean() for c in top]
    return int(top[int(np.argmax(means))])


def _shares_with_winner(tallies, winner):
    """Normalized tallies nudged so that argmax resolves to ``winner``."""
    shares = tallies / tallies.sum()
    if np.argmax(shares) != winner:
        shares[winner] += 1e-12
        shares /= shares.sum()
    return shares


def majority_vote(predictions, supports=None, n_classes=None):
    """Plurality class among ``predictions``.

    Returns ``(winner, vote_shares)``.
    """
    predictions = np.asarray(predictions, dtype=int)
    if predictions.size == 0:
        raise ValueError("no votes")
    if n_classes is None:
        n_classes = np.asarray(supports).shape[1] if supports is not None else predictions.max() + 1
    tallies = np.bincount(predictions, minlength=n_classes).astype(float)
    winner = _vote_winner(tallies, predictions, supports)
    return winner, _shares_with_winner(tallies, winner)


def _clean_weights(weights):
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    if not w.any():
        w = np.ones_like(w)
    return w


def weighted_vote(predictions, weights, supports=None, n_classes=None):
    """Class with the largest summed weight; same tie rules as majority_vote.

    Negative weights are clipped to zero; all-zero weights become uniform.
    Returns ``(winner, weighted_vote_shares)``.
    """
    predictions = np.asarray(predictions, dtype=int)
    if predictions.size == 0:
        raise ValueError("no votes")
    w = _clean_weights(weights)
    if n_classes is None:
        n_classes = np.asarray(supports).shape[1] if supports is not None else predictions.max() + 1
    tallies = np.bincount(predictions, weights=w, minlength=n_classes)
    winner = _vote_winner(tallies, predictions[w > 0], None if supports is None
                          else np.asarray(supports)[w > 0])
    return winner, _shares_with_winner(tallies, winner)


def combine_proba(supports, weights=None):
    """Weight-normalized average of support vectors."""
    supports = np.asarray(supports, dtype=float)
    w = np.ones(len(supports)) if weights is None else _clean_weights(weights)
    return (w[:, None] * supports).sum(axis=0) / w.sum()


# --------------------------------------------------------------------------
# Estimators
# --------------------------------------------------------------------------

@dataclass
class Query:
    """Everything the pipeline knows about one query sample."""

    index: int
    x: np.ndarray                 # raw features
    xs: np.ndarray                # standardized features
    predictions: np.ndarray       # (L,) pool predictions
    supports: np.ndarray          # (L, M) pool supports
    region: CompetenceRegion | None = None
    active: np.ndarray | None = None


def _as_dataset(X, y, n_classes):
    y = np.asarray(y, dtype=int)
    if n_classes is None:
        n_classes = max(int(y.max()) + 1, 2)
    return Dataset(np.asarray(X, dtype=float), y, n_classes)


class BaseEnsemble:
    """Pool handling shared by dynamic and static methods.

    Parameters
    ----------
    pool : TrainedPool or None
        Fitted pool. When None, ``fit`` trains the default bagging pool of
        ``config.pool_size`` trees.
    config : DSConfig or None
        Hyperparameters; keyword overrides are applied on top.
    """

    name = "base"

    def __init__(self, pool: TrainedPool | None = None, config: DSConfig | None = None,
                 **overrides):
        config = config or DSConfig()
        self.config = replace(config, **overrides) if overrides else config
        self.pool = pool
        self.pool_ = None

    def fit(self, X, y, X_train=None, y_train=None, n_classes=None):
        """Fit on the dynamic selection set ``(X, y)``.

        Without a pool, one is trained on ``(X_train, y_train)``; if those are
        also missing, ``(X, y)`` is split in half (stratified) first.
        """
        dsel = _as_dataset(X, y, n_classes)
        train = None
        if X_train is not None:
            train = _as_dataset(X_train, y_train, dsel.n_classes)
        return self.fit_datasets(dsel, train)

    def fit_datasets(self, dsel: Dataset, train: Dataset | None = None):
        n_classes = dsel.n_classes
        if train is not None:
            if train.n_classes != n_classes:
                raise ValueError("train and DSEL disagree on the number of classes")
        if self.pool is not None:
            if self.pool.n_classes != n_classes:
                raise ValueError("pool and data disagree on the number of classes")
            self.pool_ = self.pool
        else:
            if train is None:
                tr, ds = _stratified_indices(dsel.labels, n_classes, (0.5, 0.5),
                                             self.config.seed)
                train, dsel = dsel.subset(tr), dsel.subset(ds)
            self.pool_ = generate_bagging_pool(train, self.config.pool_size,
                                               seed=self.config.seed)
        self.n_classes_ = n_classes
        self.train_ = train
        self.dsel_ = dsel
        self._fit(train, dsel)
        return self

    def _fit(self, train, dsel):
        pass

    def _check_fitted(self):
        if self.pool_ is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted")

    def predict_proba(self, X):
        raise NotImplementedError

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))


class DynamicSelector(BaseEnsemble):
    """Per-query selection pipeline.

    standardize -> region of competence -> optional DFP -> competence
    estimation -> selection -> aggregation. Subclasses implement
    ``estimate_competence`` and usually ``select``; ``uses_region`` says
    whether the feature-space k-NN region is needed.
    """

    uses_region = True

    def _fit(self, train, dsel):
        both = dsel.features if train is None else np.vstack([train.features, dsel.features])
        self.standardizer_ = fit_standardizer(both)
        self.state_ = build_dsel_state(self.pool_, dsel, self.standardizer_)
        if self.uses_region or self.config.with_dfp:
            if self.config.k > len(self.state_):
                raise ValueError(f"k={self.config.k} exceeds DSEL size {len(self.state_)}")
        self._fit_method()

    def _fit_method(self):
        pass

    def estimate_competence(self, query: Query) -> np.ndarray:
        raise NotImplementedError

    def select(self, competences, query: Query) -> SelectionResult:
        return select_best(competences, 0.0, query.active)

    def _queries(self, X):
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xs = self.standardizer_.apply(X)
        preds = self.pool_.predict(X)
        sups = self.pool_.predict_proba(X)
        regions = [None] * len(X)
        if self.uses_region or self.config.with_dfp:
            regions = knn_batch(self.state_.features, Xs, self.config.k)
        L = len(self.pool_)
        out = []
        for q in range(len(X)):
            query = Query(q, X[q], Xs[q], preds[q], sups[q], regions[q])
            if self.config.with_dfp:
                query.active = dfp_prune(self.state_, regions[q], L)
            else:
                query.active = np.ones(L, bool)
            out.append(query)
        return out

    def predict_query(self, query: Query):
        """Return ``(class_id, probability_vector, selection)`` for one query."""
        c = np.asarray(self.estimate_competence(query), dtype=float)
        selection = self.select(c, query)
        return (*self.aggregate(c, selection, query), selection)

    def aggregate(self, competences, selection: SelectionResult, query: Query):
        sel = np.asarray(selection.selected)
        M = self.n_classes_
        mode = self.config.mode
        if mode == "selection":
            if selection.weights is None:
                return majority_vote(query.predictions[sel], query.supports[sel], M)
            return weighted_vote(query.predictions[sel], selection.weights,
                                 query.supports[sel], M)
        if mode == "weighting":
            sel = np.flatnonzero(query.active)
            c = competences[sel]
            weights = c - c.min()
        else:
            weights = competences[sel]
        return weighted_vote(query.predictions[sel], weights, query.supports[sel], M)

    def _run(self, X):
        return [self.predict_query(q) for q in self._queries(X)]

    def predict_proba(self, X):
        return np.array([proba for _, proba, _ in self._run(X)])

    def predict(self, X):
        return np.array([label for label, _, _ in self._run(X)], dtype=int)

    def selections(self, X):
        """Per-query :class:`SelectionResult` (useful for ensemble-size stats)."""
        return [sel for _, _, sel in self._run(X)]
