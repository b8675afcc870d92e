import math

import numpy as np
import pytest

from dynsel.knora import (DESClustering, KNOP, KNORAU, accuracy_diversity_select,
                          desclustering_fit, desclustering_select, desknn_select,
                          double_fault, knop_select, knora_e_select, knora_u_select,
                          knora_u_weights)
from dynsel.learners import TrainedPool
from dynsel.region import nearest_cluster
from dynsel.selection import majority_vote, weighted_vote

from conftest import hand_state, region

A, B, C = 0, 1, 2
X_, Y_ = 0, 1


def correctness_state(columns):
    """State whose correctness matrix is ``columns`` (one list per classifier)."""
    corr = np.array(columns, dtype=bool).T
    labels = np.zeros(corr.shape[0], int)
    preds = np.where(corr, 0, 1)
    return hand_state(labels, preds, n_classes=2)


def test_knora_e_examples():
    state = correctness_state([[1, 1], [1, 0], [0, 0]])
    assert knora_e_select(state, region([0, 1])).selected == (A,)
    shrink = correctness_state([[1, 0], [0, 1]])
    assert knora_e_select(shrink, region([0, 1])).selected == (A,)
    hopeless = correctness_state([[0, 1], [0, 1], [0, 0]])
    assert knora_e_select(hopeless, region([0, 1])).selected == (0, 1, 2)


def test_knora_e_monotone_under_shrinking():
    rng = np.random.default_rng(0)
    for _ in range(50):
        corr = rng.random((6, 7)) < 0.7
        full = [set(np.flatnonzero(corr[:m].all(axis=0))) for m in range(1, 7)]
        for m in range(len(full) - 1):
            assert full[m + 1] <= full[m]


def test_knora_u_weighted_tally():
    # A right twice and predicts X, B right once and predicts Y, C never right
    state = correctness_state([[1, 1, 0], [1, 0, 0], [0, 0, 0]])
    sel = knora_u_select(state, region([0, 1, 2]))
    assert sel.selected == (A, B) and sel.weights == (2.0, 1.0)
    assert weighted_vote([X_, Y_], sel.weights, n_classes=2)[0] == X_
    none = knora_u_select(correctness_state([[0, 0], [0, 0]]), region([0, 1]))
    assert none.selected == (0, 1) and none.weights is None


def test_knora_u_equals_expanded_majority_vote():
    rng = np.random.default_rng(1)
    for _ in range(100):
        w = rng.integers(0, 4, 6).astype(float)
        if not w.any():
            continue
        preds = rng.integers(0, 3, 6)
        sups = np.eye(3)[preds]
        expanded = np.repeat(preds, w.astype(int))
        exp_sups = np.repeat(sups, w.astype(int), axis=0)
        assert weighted_vote(preds, w, sups, 3)[0] == majority_vote(expanded, exp_sups, 3)[0]


def test_knop_profile_region():
    sup = np.tile([[0.9, 0.1]], (5, 2, 1))
    sup[3] = [[0.1, 0.9], [0.4, 0.6]]
    state = hand_state([0, 0, 0, 1, 0], sup.argmax(axis=2), supports=sup)
    sel = knop_select(state, sup[3].ravel(), 1)
    # DSEL sample 3 is the only neighbour: classifier 0 right, classifier 1 right
    assert sel.selected == (0, 1)
    zero = np.tile([[0.1, 0.9]], (3, 2, 1))
    bad = hand_state([0, 0, 0], zero.argmax(axis=2), supports=zero)
    assert knop_select(bad, zero[0].ravel(), 2).selected == (0, 1)


def test_knop_with_identical_members_is_knora_u_on_lowest_indices(blob_splits):
    train, dsel, test = blob_splits
    from dynsel.learners import train_tree
    tree = train_tree(train)
    pool = TrainedPool([tree, tree, tree])
    knop = KNOP(pool).fit(dsel.features, dsel.labels, train.features, train.labels)
    for q in knop._queries(test.features[:20]):
        w = knop.estimate_competence(q)
        prof = knop.state_.profiles
        d = np.linalg.norm(prof - q.supports.ravel(), axis=1)
        # oracle: sort (distance, index) by hand
        idx = sorted(range(len(d)), key=lambda j: (round(d[j], 10), j))[:7]
        assert np.array_equal(w, knora_u_weights(knop.state_, region(idx)))


def test_desknn_counts_and_double_fault():
    assert (math.ceil(0.5 * 10), min(5, math.ceil(0.3 * 10 - 1e-9))) == (5, 3)
    state = correctness_state([[1] * 4] * 10)
    sel = desknn_select(state, region([0, 1, 2, 3]))
    assert sel.selected == (0, 1, 2)
    # two equally accurate candidates; candidate 0 shares fewer errors with the others
    corr = np.array([
        [1, 0, 1, 0],   # errs on samples 1,3
        [0, 1, 1, 0],   # errs on 0,3
        [0, 1, 1, 0],
    ], dtype=bool).T
    df = double_fault(corr)
    assert df[0, 1] == pytest.approx(0.25) and df[1, 2] == pytest.approx(0.5)
    mean_df = [(df[i].sum() - df[i, i]) / 2 for i in range(3)]
    assert mean_df == pytest.approx([0.25, 0.375, 0.375])
    sel = accuracy_diversity_select(corr, 1.0, 1 / 3)
    assert sel.selected == (0,)


def test_desknn_subset_chain():
    rng = np.random.default_rng(2)
    for _ in range(50):
        corr = rng.random((7, 10)) < 0.6
        active = rng.random(10) < 0.7
        if not active.any():
            continue
        sel = accuracy_diversity_select(corr, 0.5, 0.3, active)
        acc = corr.mean(axis=0)
        cand = np.flatnonzero(active)
        top = cand[np.argsort(-acc[cand], kind="stable")[:min(5, cand.size)]]
        assert set(sel.selected) <= set(top) <= set(cand)


def test_desclustering_single_cluster_is_static(blob_splits, blob_pool):
    train, dsel, test = blob_splits
    sel = DESClustering(blob_pool, n_clusters=1).fit(dsel.features, dsel.labels,
                                                     train.features, train.labels)
    chosen = {s.selected for s in sel.selections(test.features)}
    assert len(chosen) == 1


def test_desclustering_cluster_accuracy_ranking():
    # cluster 0 (left) only classifier 2 gets right; cluster 1 everyone right
    feats = np.array([[-5.0], [-5.1], [-4.9], [5.0], [5.1], [4.9]])
    labels = np.zeros(6, int)
    preds = np.array([[1, 1, 0], [1, 1, 0], [1, 1, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]])
    state = hand_state(labels, preds, features=feats, n_classes=2)
    model = desclustering_fit(state, 2, seed=0, pct_accuracy=1 / 3, pct_diversity=1 / 3)
    left = nearest_cluster(model, [-5.0])
    assert model.selected[left] == (2,)
    assert desclustering_select(model, [-5.0]).selected == (2,)


def test_desclustering_constant_within_voronoi_cells(blob_splits, blob_pool):
    train, dsel, test = blob_splits
    sel = DESClustering(blob_pool).fit(dsel.features, dsel.labels, train.features, train.labels)
    qs = sel._queries(test.features)
    cells = [nearest_cluster(sel.clusters_, q.xs) for q in qs]
    by_cell = {}
    for cell, s in zip(cells, sel.selections(test.features)):
        by_cell.setdefault(cell, set()).add(s.selected)
    assert all(len(v) == 1 for v in by_cell.values())


def test_knora_u_selector_uses_integer_weights(blob_splits, blob_pool):
    train, dsel, test = blob_splits
    sel = KNORAU(blob_pool).fit(dsel.features, dsel.labels, train.features, train.labels)
    for s in sel.selections(test.features[:30]):
        if s.weights is not None:
            assert all(float(w).is_integer() and w > 0 for w in s.weights)
