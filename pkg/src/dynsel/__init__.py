"""Dynamic classifier and ensemble selection."""

__version__ = "0.1.0"

from .data import Dataset, DataError, SplitSpec, Standardizer, fit_standardizer, \
    load_csv, stratified_split
from .learners import TrainedPool, TreeParams, generate_bagging_pool
from .methods import HARD_VOTING_IDS, METHOD_IDS, fit_selector, make_method
from .selection import DSConfig, DynamicSelector, SelectionResult

__all__ = [
    "Dataset", "DataError", "SplitSpec", "Standardizer", "fit_standardizer",
    "load_csv", "stratified_split", "TrainedPool", "TreeParams",
    "generate_bagging_pool", "HARD_VOTING_IDS", "METHOD_IDS", "fit_selector",
    "make_method", "DSConfig", "DynamicSelector", "SelectionResult",
]
