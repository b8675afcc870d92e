"""Registry of method ids and the one-call fitting entry point."""

from __future__ import annotations

from .data import Dataset
from .dcs import APosteriori, APriori, LCA, MCB, MLA, OLA, Rank
from .knora import DESClustering, DESKNN, KNOP, KNORAE, KNORAU
from .learners import TrainedPool
from .metades import METADES
from .probabilistic import (DESExponential, DESKL, DESLogarithmic,
                            DESMinimumDifference, DESP, DESRRC)
from .selection import BaseEnsemble, DSConfig
from .static import Oracle, SingleBest, Stacked, StaticSelection

DCS_METHODS = {c.name: c for c in (OLA, LCA, APriori, APosteriori, MLA, MCB, Rank)}
DES_METHODS = {c.name: c for c in (
    KNORAE, KNORAU, KNOP, DESKNN, DESClustering,
    DESP, DESKL, DESRRC, DESExponential, DESLogarithmic, DESMinimumDifference,
    METADES,
)}
STATIC_METHODS = {c.name: c for c in (Oracle, SingleBest, StaticSelection, Stacked)}

METHODS = {**DCS_METHODS, **DES_METHODS, **STATIC_METHODS}
METHOD_IDS = tuple(sorted(METHODS))

# methods whose prediction is always some pool member's vote
HARD_VOTING_IDS = tuple(sorted(set(DCS_METHODS) | set(DES_METHODS)
                               | {"single_best", "static_selection"}))


class UnknownMethodError(ValueError):
    pass


def method_class(method_id: str):
    try:
        return METHODS[method_id]
    except KeyError:
        raise UnknownMethodError(
            f"unknown method {method_id!r}; valid ids: {', '.join(METHOD_IDS)}"
        ) from None


def make_method(method_id: str, pool: TrainedPool | None = None,
                config: DSConfig | None = None, **overrides) -> BaseEnsemble:
    return method_class(method_id)(pool, config, **overrides)


def fit_selector(method_id: str, pool: TrainedPool | None, train: Dataset | None,
                 dsel: Dataset, config: DSConfig | None = None) -> BaseEnsemble:
    """Build and fit ``method_id`` on DSEL.

    Without a pool, the default bagging pool is trained on ``train``.
    """
    config = config or DSConfig()
    if train is not None and train.n_classes != dsel.n_classes:
        raise ValueError("train and DSEL disagree on the number of classes")
    return make_method(method_id, pool, config).fit_datasets(dsel, train)
