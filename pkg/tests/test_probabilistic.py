import math

import numpy as np
import pytest

from dynsel.probabilistic import (DESKL, DESP, DESRRC, DESExponential, DESLogarithmic,
                                  DESMinimumDifference, entropy, potential_aggregate,
                                  source_matrix, src_exp, src_kl, src_log, src_min_diff,
                                  src_p, src_rrc)
from dynsel.selection import select_above

from conftest import hand_state

FAMILY = [DESP, DESKL, DESRRC, DESExponential, DESLogarithmic, DESMinimumDifference]
KINDS = ["p", "kl", "min_diff", "log", "exp", "rrc"]


def test_potential_aggregate_examples():
    assert potential_aggregate([[0.4]], [0.0]) == pytest.approx([0.4], abs=1e-12)
    assert potential_aggregate([[0.4], [-0.4]], [1.0, 1.0]) == pytest.approx([0.0], abs=1e-12)
    near_far = potential_aggregate([[0.4], [-0.4]], [0.0, 3.0])
    assert math.exp(-9) == pytest.approx(1.234e-4, rel=1e-3)
    assert abs(near_far[0] - 0.4) < 1e-3


def test_potential_aggregate_far_queries_do_not_underflow():
    out = potential_aggregate([[0.4], [-0.2]], [100.0, 100.0])
    assert out == pytest.approx([0.1])


def test_potential_aggregate_permutation_invariant():
    rng = np.random.default_rng(0)
    src, d = rng.uniform(-1, 1, (30, 4)), rng.uniform(0, 3, 30)
    perm = rng.permutation(30)
    np.testing.assert_allclose(potential_aggregate(src, d), potential_aggregate(src[perm], d[perm]),
                               rtol=0, atol=1e-12)


def test_src_p_examples():
    assert src_p(True, 2) == pytest.approx(0.5, abs=1e-12)
    assert src_p(False, 2) == pytest.approx(-0.5, abs=1e-12)
    assert src_p(True, 4) == pytest.approx(0.75, abs=1e-12)


def test_src_kl_examples():
    assert src_kl([1.0, 0.0], True, 2) == pytest.approx(0.6931, abs=1e-4)
    assert src_kl([0.5, 0.5], True, 2) == pytest.approx(0.0, abs=1e-12)
    assert src_kl([0.5, 0.5], False, 2) == pytest.approx(0.0, abs=1e-12)
    assert entropy([0.9, 0.1]) == pytest.approx(0.3251, abs=1e-4)
    assert src_kl([0.9, 0.1], False, 2) == pytest.approx(-0.3680, abs=1e-4)
    h = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
    assert src_kl([0.9, 0.1], False, 2) == pytest.approx(-(math.log(2) - h), abs=1e-12)


def test_src_min_diff_examples():
    assert src_min_diff([0.7, 0.3], 0) == pytest.approx(0.4, abs=1e-12)
    assert src_min_diff([1.0, 0.0], 0) == pytest.approx(1.0, abs=1e-12)
    assert src_min_diff([0.3, 0.7], 0) == pytest.approx(-0.4, abs=1e-12)
    assert src_min_diff([0.2, 0.5, 0.3], 2) == pytest.approx(-0.2, abs=1e-12)


def test_closed_form_points():
    assert src_log(0.75, 2) == pytest.approx(0.5, abs=1e-12)
    s = np.linspace(0, 1, 11)
    np.testing.assert_allclose(src_exp(s, 2), 2 * s - 1, rtol=0, atol=1e-12)


@pytest.mark.parametrize("M", [2, 3, 5, 10])
@pytest.mark.parametrize("phi", [src_log, src_exp])
def test_calibration_anchors_and_monotonicity(phi, M):
    assert phi(0.0, M) == pytest.approx(-1.0, abs=1e-12)
    assert phi(1.0 / M, M) == pytest.approx(0.0, abs=1e-12)
    assert phi(1.0, M) == pytest.approx(1.0, abs=1e-12)
    grid = phi(np.linspace(0.0, 1.0, 1000), M)
    assert np.all(np.diff(grid) > 0)


def test_rrc_symmetry_and_bounds():
    assert -0.05 <= src_rrc([0.5, 0.5], 0, 2, seed=0, n_draws=1000) <= 0.05
    assert src_rrc([1.0, 0.0], 0, 2, seed=0, n_draws=1000) >= 0.98
    a = src_rrc([0.5, 0.5], 0, seed=3)
    b = src_rrc([0.5, 0.5], 1, seed=3)
    assert abs(a + b) <= 0.1
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = rng.dirichlet(np.ones(3))
        v = src_rrc(p, int(rng.integers(3)), seed=int(rng.integers(100)), n_draws=200)
        assert -1.0 <= v <= 1.0


def test_rrc_label_permutation_invariance():
    # relabelling classes consistently leaves the estimate unchanged
    p = np.array([0.6, 0.3, 0.1])
    perm = np.array([2, 0, 1])
    a = src_rrc(p, 0, seed=7, n_draws=4000)
    b = src_rrc(p[perm], int(np.flatnonzero(perm == 0)[0]), seed=7, n_draws=4000)
    assert abs(a - b) < 0.08


def test_source_bounds_on_random_state():
    rng = np.random.default_rng(5)
    M, n, L = 3, 40, 4
    sup = rng.dirichlet(np.ones(M), size=(n, L))
    state = hand_state(rng.integers(0, M, n), sup.argmax(axis=2), supports=sup, n_classes=M)
    for kind in KINDS:
        s = source_matrix(kind, state, seed=0, n_draws=200)
        bound = math.log(M) if kind == "kl" else 1.0
        assert np.all(np.abs(s) <= bound + 1e-12), kind


def test_perfect_classifier_is_maximal_for_every_source():
    rng = np.random.default_rng(6)
    M, n, L = 3, 30, 4
    labels = rng.integers(0, M, n)
    sup = rng.dirichlet(np.ones(M), size=(n, L))
    sup[:, 0] = np.eye(M)[labels]
    state = hand_state(labels, sup.argmax(axis=2), supports=sup, n_classes=M)
    for kind in KINDS:
        src = source_matrix(kind, state, seed=0, n_draws=1000)
        for _ in range(20):
            agg = potential_aggregate(src, rng.uniform(0, 3, n))
            assert agg[0] >= agg.max() - 1e-12, kind


def test_select_above_zero_never_empty():
    assert select_above([-0.3, -0.1, -0.2], 0.0).selected == (1,)
    assert select_above([-0.3, 0.2, 0.5], 0.0).selected == (1, 2)


@pytest.mark.parametrize("cls", FAMILY)
def test_family_fits_and_predicts(cls, blob_splits, blob_pool):
    train, dsel, test = blob_splits
    m = cls(blob_pool).fit(dsel.features, dsel.labels, train.features, train.labels)
    proba = m.predict_proba(test.features)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
    assert np.array_equal(m.predict(test.features), proba.argmax(axis=1))
    assert all(len(s.selected) >= 1 for s in m.selections(test.features[:20]))
    assert m.score(test.features, test.labels) > 0.5
