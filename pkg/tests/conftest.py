import numpy as np
import pytest

from dynsel.data import Dataset, SplitSpec, stratified_split
from dynsel.learners import generate_bagging_pool
from dynsel.synthetic import blobs, quadrant_experts, quadrant_pool


@pytest.fixture(scope="session")
def blob_splits():
    return stratified_split(blobs(300, seed=3), SplitSpec(seed=3))


@pytest.fixture(scope="session")
def blob_pool(blob_splits):
    train, _, _ = blob_splits
    return generate_bagging_pool(train, 10, seed=3)


@pytest.fixture(scope="session")
def quad_splits():
    return stratified_split(quadrant_experts(400, seed=1), SplitSpec(seed=1))


@pytest.fixture(scope="session")
def quad_pool(quad_splits):
    return quadrant_pool(quad_splits[0], 10, seed=1)


def make_dataset(X, y, n_classes=None):
    y = np.asarray(y)
    return Dataset(np.asarray(X, dtype=float), y, n_classes or int(y.max()) + 1)


def hand_state(labels, predictions, features=None, supports=None, n_classes=None):
    """DselState from explicit pool outputs; supports default to one-hot votes."""
    from dynsel.region import DselState

    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    n_classes = n_classes or int(max(labels.max(), predictions.max())) + 1
    if supports is None:
        supports = np.eye(n_classes)[predictions]
    if features is None:
        features = np.arange(len(labels), dtype=float)[:, None]
    return DselState(np.asarray(features, dtype=float), labels, predictions,
                     np.asarray(supports, dtype=float),
                     predictions == labels[:, None], n_classes)


def region(indices, distances=None):
    from dynsel.region import CompetenceRegion

    indices = np.asarray(indices)
    if distances is None:
        distances = np.arange(len(indices), dtype=float)
    return CompetenceRegion(indices, np.asarray(distances, dtype=float))


# --------------------------------------------------------------------------
# acceptance summary
# --------------------------------------------------------------------------

_SESSION_START = []


def pytest_sessionstart(session):
    import time

    _SESSION_START.append(time.perf_counter())


@pytest.hookimpl(tryfirst=True)
def pytest_sessionfinish(session, exitstatus):
    import sys
    import time

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    ok = acceptance.check_suite_runtime(time.perf_counter() - _SESSION_START[0], echo=False)
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[number])
