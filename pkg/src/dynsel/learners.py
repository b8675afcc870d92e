"""Native base classifiers and pool generation.

Every classifier here exposes ``predict_proba(X) -> (n, M)`` and
``predict(X) -> (n,)`` where ``predict`` is the argmax of the probabilities
with ties going to the lowest class index (numpy's ``argmax`` semantics).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, DataError

VAR_FLOOR = 1e-9


def softmax(z):
    z = np.asarray(z, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class BaseClassifier:
    """Common surface of the pool members."""

    kind = "base"
    n_classes: int

    def predict_proba(self, X):
        raise NotImplementedError

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self) -> dict:
        raise NotImplementedError


# --------------------------------------------------------------------------
# Decision tree
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 8
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")


def _best_split(X, y, n_classes, min_leaf):
    """Exhaustive Gini search. Returns (feature, threshold) or None."""
    n = len(y)
    if n < 2:
        return None
    onehot = np.eye(n_classes)[y]
    best = None
    best_impurity = np.inf
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[:-1]
        right = cum[-1] - left
        n_left = np.arange(1, n)
        n_right = n - n_left
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        gini_left = n_left - (left ** 2).sum(axis=1) / n_left
        gini_right = n_right - (right ** 2).sum(axis=1) / n_right
        # weighted child impurity (times n); minimizing it maximizes the gain
        impurity = np.where(valid, gini_left + gini_right, np.inf)
        pos = int(np.argmin(impurity))
        if impurity[pos] < best_impurity - 1e-12:
            best_impurity = impurity[pos]
            best = (f, (xs[pos] + xs[pos + 1]) / 2.0)
    return best


class DecisionTree(BaseClassifier):
    """Axis-aligned binary tree grown by Gini impurity.

    Leaves store Laplace-smoothed class frequencies. Split ties resolve to
    the lower feature index, then the lower threshold.
    """

    kind = "tree"

    def __init__(self, n_classes, params: TreeParams = TreeParams()):
        self.n_classes = n_classes
        self.params = params
        # flat node arrays; feature == -1 marks a leaf
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[list[float]] = []

    def _add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append([])
        return len(self.feature) - 1

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.feature, self.threshold, self.left, self.right, self.value = (
            [], [], [], [], [])
        stack = [(self._add_node(), np.arange(len(y)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            counts = np.bincount(y[idx], minlength=self.n_classes)
            self.value[node] = ((counts + 1.0) / (len(idx) + self.n_classes)).tolist()
            if depth >= self.params.max_depth or np.count_nonzero(counts) <= 1:
                continue
            split = _best_split(X[idx], y[idx], self.n_classes, self.params.min_leaf)
            if split is None:
                continue
            f, t = split
            go_left = X[idx, f] <= t
            left, right = self._add_node(), self._add_node()
            self.feature[node], self.threshold[node] = int(f), float(t)
            self.left[node], self.right[node] = left, right
            stack.append((right, idx[~go_left], depth + 1))
            stack.append((left, idx[go_left], depth + 1))
        return self

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        nodes = np.zeros(len(X), dtype=int)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feature[nodes] >= 0
        while active.any():
            cur = nodes[active]
            go_left = X[active, feature[cur]] <= threshold[cur]
            nodes[active] = np.where(go_left, left[cur], right[cur])
            active = feature[nodes] >= 0
        return nodes

    def predict_proba(self, X):
        return np.asarray(self.value)[self.apply(X)]

    @property
    def n_nodes(self):
        return len(self.feature)

    def to_dict(self):
        return {
            "kind": self.kind,
            "n_classes": self.n_classes,
            "params": {"max_depth": self.params.max_depth,
                       "min_leaf": self.params.min_leaf,
                       "seed": self.params.seed},
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, doc):
        tree = cls(doc["n_classes"], TreeParams(**doc["params"]))
        tree.feature = list(doc["feature"])
        tree.threshold = list(doc["threshold"])
        tree.left = list(doc["left"])
        tree.right = list(doc["right"])
        tree.value = [list(v) for v in doc["value"]]
        return tree


def train_tree(d: Dataset, p: TreeParams = TreeParams()) -> DecisionTree:
    if len(d) == 0:
        raise DataError("cannot train a tree on an empty dataset")
    return DecisionTree(d.n_classes, p).fit(d.features, d.labels)


# --------------------------------------------------------------------------
# Perceptron
# --------------------------------------------------------------------------

class Perceptron(BaseClassifier):
    """One-vs-rest perceptron on internally standardized inputs.

    Probabilities are the softmax of the per-class margins.
    """

    kind = "perceptron"

    def __init__(self, n_classes, n_features):
        self.n_classes = n_classes
        self.weights = np.zeros((n_classes, n_features + 1))
        self.means = np.zeros(n_features)
        self.scales = np.ones(n_features)

    def _augment(self, X):
        Z = (np.asarray(X, dtype=float) - self.means) / self.scales
        return np.hstack([Z, np.ones((len(Z), 1))])

    def fit(self, X, y, epochs=20, seed=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.means = X.mean(axis=0)
        self.scales = np.maximum(X.std(axis=0), 1e-9)
        Z = self._augment(X)
        targets = np.where(np.arange(self.n_classes)[None, :] == y[:, None], 1.0, -1.0)
        rng = np.random.default_rng(seed)
        W = self.weights
        for _ in range(epochs):
            errors = 0
            for j in rng.permutation(len(y)):
                margins = W @ Z[j]
                wrong = targets[j] * margins <= 0
                if wrong.any():
                    W[wrong] += targets[j, wrong, None] * Z[j]
                    errors += 1
            if errors == 0:
                break
        return self

    def decision_function(self, X):
        return self._augment(X) @ self.weights.T

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def to_dict(self):
        return {"kind": self.kind, "n_classes": self.n_classes,
                "weights": self.weights.tolist(), "means": self.means.tolist(),
                "scales": self.scales.tolist()}

    @classmethod
    def from_dict(cls, doc):
        weights = np.asarray(doc["weights"], dtype=float)
        model = cls(doc["n_classes"], weights.shape[1] - 1)
        model.weights = weights
        model.means = np.asarray(doc["means"], dtype=float)
        model.scales = np.asarray(doc["scales"], dtype=float)
        return model


def train_perceptron(d: Dataset, epochs: int = 20, seed: int = 0) -> Perceptron:
    return Perceptron(d.n_classes, d.n_features).fit(
        d.features, d.labels, epochs=epochs, seed=seed)


# --------------------------------------------------------------------------
# Gaussian naive Bayes
# --------------------------------------------------------------------------

class GaussianNB(BaseClassifier):
    kind = "gnb"

    def __init__(self, means, variances, log_priors):
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.log_priors = np.asarray(log_priors, dtype=float)
        self.n_classes = len(self.log_priors)

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        diff = X[:, None, :] - self.means[None, :, :]
        ll = -0.5 * (np.log(2 * np.pi * self.variances)[None]
                     + diff ** 2 / self.variances[None]).sum(axis=2)
        return ll + self.log_priors

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def to_dict(self):
        return {"kind": self.kind, "means": self.means.tolist(),
                "variances": self.variances.tolist(),
                "log_priors": self.log_priors.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["means"], doc["variances"], doc["log_priors"])


def train_gnb(features, labels, n_classes) -> GaussianNB:
    """Per-class Gaussian likelihoods with a variance floor of ``VAR_FLOOR``."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    counts = np.bincount(labels, minlength=n_classes)
    if (counts == 0).any():
        missing = int(np.flatnonzero(counts == 0)[0])
        raise DataError(f"class {missing} absent from training labels")
    means = np.array([features[labels == c].mean(axis=0) for c in range(n_classes)])
    variances = np.array([features[labels == c].var(axis=0) for c in range(n_classes)])
    variances = np.maximum(variances, VAR_FLOOR)
    return GaussianNB(means, variances, np.log(counts / counts.sum()))


# --------------------------------------------------------------------------
# Multinomial logistic regression
# --------------------------------------------------------------------------

class LogisticRegression(BaseClassifier):
    kind = "logistic"

    def __init__(self, n_classes, n_features):
        self.n_classes = n_classes
        self.coef = np.zeros((n_features, n_classes))
        self.intercept = np.zeros(n_classes)

    def predict_proba(self, X):
        return softmax(np.asarray(X, dtype=float) @ self.coef + self.intercept)

    def to_dict(self):
        return {"kind": self.kind, "n_classes": self.n_classes,
                "coef": self.coef.tolist(), "intercept": self.intercept.tolist()}

    @classmethod
    def from_dict(cls, doc):
        coef = np.asarray(doc["coef"], dtype=float)
        model = cls(doc["n_classes"], coef.shape[0])
        model.coef = coef
        model.intercept = np.asarray(doc["intercept"], dtype=float)
        return model


def logistic_loss_grad(coef, intercept, X, Y, l2):
    """Mean cross-entropy plus ``l2/2 * ||coef||^2`` and its gradients.

    ``Y`` is the one-hot label matrix. The intercept is not penalized.
    """
    n = len(X)
    P = softmax(X @ coef + intercept)
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n
    loss += 0.5 * l2 * np.sum(coef ** 2)
    residual = (P - Y) / n
    return loss, X.T @ residual + l2 * coef, residual.sum(axis=0)


def train_logistic(features, labels, n_classes, epochs=200, lr=0.1, l2=1e-4):
    """Full-batch gradient descent from zero weights."""
    X = np.asarray(features, dtype=float)
    Y = np.eye(n_classes)[np.asarray(labels, dtype=int)]
    model = LogisticRegression(n_classes, X.shape[1])
    for _ in range(epochs):
        _, g_coef, g_int = logistic_loss_grad(model.coef, model.intercept, X, Y, l2)
        model.coef -= lr * g_coef
        model.intercept -= lr * g_int
    return model


# --------------------------------------------------------------------------
# Pools
# --------------------------------------------------------------------------

class TrainedPool:
    """Ordered, fixed collection of fitted classifiers sharing ``n_classes``."""

    def __init__(self, classifiers, n_classes=None):
        classifiers = tuple(classifiers)
        if not classifiers:
            raise ValueError("a pool needs at least one classifier")
        if n_classes is None:
            n_classes = classifiers[0].n_classes
        if any(c.n_classes != n_classes for c in classifiers):
            raise ValueError("pool members disagree on the number of classes")
        self.classifiers = classifiers
        self.n_classes = n_classes

    def __len__(self):
        return len(self.classifiers)

    def __getitem__(self, i):
        return self.classifiers[i]

    def __iter__(self):
        return iter(self.classifiers)

    def predict_proba(self, X):
        """Supports tensor of shape ``(n, L, M)``."""
        return np.stack([c.predict_proba(X) for c in self.classifiers], axis=1)

    def predict(self, X):
        """Predictions matrix of shape ``(n, L)``."""
        return np.stack([c.predict(X) for c in self.classifiers], axis=1)

    def to_dict(self):
        return {"n_classes": self.n_classes,
                "classifiers": [c.to_dict() for c in self.classifiers]}

    @classmethod
    def from_dict(cls, doc):
        return cls([classifier_from_dict(c) for c in doc["classifiers"]],
                   doc["n_classes"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_KINDS = {k.kind: k for k in (DecisionTree, Perceptron, GaussianNB, LogisticRegression)}


def classifier_from_dict(doc) -> BaseClassifier:
    try:
        return _KINDS[doc["kind"]].from_dict(doc)
    except KeyError:
        raise ValueError(f"unknown classifier kind {doc.get('kind')!r}") from None


LEARNER_KINDS = ("tree", "perceptron", "mixed")


def bootstrap_indices(n, member_seed):
    """Resample of ``range(n)`` with replacement, size ``n``."""
    return np.random.default_rng(member_seed).integers(0, n, size=n)


def generate_bagging_pool(train: Dataset, L: int = 10, learner_kind: str = "tree",
                          seed: int = 0, tree_params: TreeParams | None = None,
                          perceptron_epochs: int = 20, bootstrap: bool = True,
                          n_jobs: int = 1) -> TrainedPool:
    """Train ``L`` learners on bootstrap resamples of ``train``.

    Member ``i`` draws its resample from a generator seeded with
    ``seed ^ i``, so the result does not depend on ``n_jobs``. The 'mixed'
    kind alternates tree (even ``i``) and perceptron (odd ``i``).
    """
    if L < 1:
        raise ValueError("pool size must be >= 1")
    if learner_kind not in LEARNER_KINDS:
        raise ValueError(f"unknown learner kind {learner_kind!r}")
    tree_params = tree_params or TreeParams()
    n = len(train)

    def build(i):
        member_seed = seed ^ i
        idx = bootstrap_indices(n, member_seed) if bootstrap else np.arange(n)
        sample = train.subset(idx)
        use_tree = learner_kind == "tree" or (learner_kind == "mixed" and i % 2 == 0)
        if use_tree:
            params = TreeParams(tree_params.max_depth, tree_params.min_leaf, member_seed)
            return train_tree(sample, params)
        return train_perceptron(sample, epochs=perceptron_epochs, seed=member_seed)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            members = list(ex.map(build, range(L)))
    else:
        members = [build(i) for i in range(L)]
    return TrainedPool(members, train.n_classes)
