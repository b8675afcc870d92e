"""Potential-function DES family.

Every DSEL sample contributes a signed source competence for each
classifier; a query aggregates them over the whole of DSEL with Gaussian
potential weights ``exp(-d^2)`` and keeps classifiers whose aggregate is
positive.
"""

from __future__ import annotations

import math

import numpy as np

from .region import DselState, pairwise_distances
from .selection import DynamicSelector, select_above

DIRICHLET_FLOOR = 1e-3


def potential_aggregate(source, distances) -> np.ndarray:
    """Potential-weighted mean of ``source`` rows, shape ``(L,)``.

    ``source`` is ``(n_dsel, L)`` (or ``(n_dsel,)``) and ``distances``
    ``(n_dsel,)``. Weights are shifted by the smallest squared distance
    before exponentiating; the ratio is unchanged and cannot underflow.
    """
    source = np.asarray(source, dtype=float)
    d2 = np.asarray(distances, dtype=float) ** 2
    w = np.exp(-(d2 - d2.min()))
    return np.tensordot(w, source, axes=1) / max(w.sum(), 1e-300)


def src_p(correct, n_classes):
    """DES-P source: correctness minus the chance rate."""
    return np.asarray(correct, dtype=float) - 1.0 / n_classes


def entropy(p):
    """Shannon entropy in nats along the last axis, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    logs = np.log(np.where(p > 0, p, 1.0))
    return -(p * logs).sum(axis=-1)


def src_kl(p, correct, n_classes):
    """DES-KL source: signed gap between the maximal and the actual entropy."""
    sign = np.where(np.asarray(correct, bool), 1.0, -1.0)
    return (math.log(n_classes) - entropy(p)) * sign


def src_min_diff(p, c):
    """Support for class ``c`` minus the largest support for any other class."""
    p = np.asarray(p, dtype=float)
    c = np.asarray(c)
    own = np.take_along_axis(p, c[..., None], axis=-1)[..., 0]
    others = p.copy()
    np.put_along_axis(others, c[..., None], -np.inf, axis=-1)
    return own - others.max(axis=-1)


def log_exponent(n_classes):
    return math.log(2) / math.log(n_classes)


def exp_rate(n_classes):
    """Rate ``a`` of ``A e^(a s) + B`` through (0, -1), (1/M, 0), (1, 1).

    With ``u = e^(a/M)`` the anchors reduce to ``1 + u + ... + u^(M-1) = 2``,
    solved by bisection on ``(0, 1]``. ``M = 2`` gives the linear limit.
    """
    if n_classes == 2:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        u = 0.5 * (lo + hi)
        if (1.0 - u ** n_classes) / (1.0 - u) > 2.0:
            hi = u
        else:
            lo = u
    return n_classes * math.log(0.5 * (lo + hi))


def src_log(s, n_classes):
    """``2 s^a - 1`` with ``a`` such that chance support maps to 0."""
    return 2.0 * np.power(np.asarray(s, dtype=float), log_exponent(n_classes)) - 1.0


def src_exp(s, n_classes):
    """Exponential calibration mapping 0, 1/M and 1 to -1, 0 and 1."""
    s = np.asarray(s, dtype=float)
    a = exp_rate(n_classes)
    if a == 0.0:
        return 2.0 * s - 1.0
    # (e^(a s) - 1) / (e^a - 1) rescaled to [-1, 1]
    return 2.0 * np.expm1(a * s) / math.expm1(a) - 1.0


def rrc_probability(p, c, rng, n_draws=1000):
    """Monte-Carlo probability that the randomized reference classifier
    built around supports ``p`` ranks class ``c`` first.

    ``p`` may be batched as ``(..., M)`` with ``c`` of shape ``(...)``.
    """
    p = np.asarray(p, dtype=float)
    M = p.shape[-1]
    alpha = np.maximum(M * p, DIRICHLET_FLOOR)
    draws = rng.standard_gamma(alpha, size=(n_draws,) + alpha.shape)
    winners = draws.argmax(axis=-1)
    return (winners == np.asarray(c)).mean(axis=0)


def src_rrc(p, c, n_classes=None, seed=0, n_draws=1000):
    """DES-RRC source rescaled to ``[-1, 1]`` as ``2 P - 1``."""
    rng = np.random.default_rng(seed)
    return 2.0 * rrc_probability(p, c, rng, n_draws) - 1.0


def _true_supports(state: DselState):
    return state.supports[np.arange(len(state)), :, state.labels]      # (n, L)


def source_matrix(kind: str, state: DselState, seed=0, n_draws=1000) -> np.ndarray:
    """Source competences ``(n_dsel, L)`` for one family member."""
    M = state.n_classes
    if kind == "p":
        return src_p(state.correctness, M)
    if kind == "kl":
        return src_kl(state.supports, state.correctness, M)
    if kind == "min_diff":
        labels = np.broadcast_to(state.labels[:, None], state.correctness.shape)
        return src_min_diff(state.supports, labels)
    if kind == "log":
        return src_log(_true_supports(state), M)
    if kind == "exp":
        return src_exp(_true_supports(state), M)
    if kind == "rrc":
        rng = np.random.default_rng(seed)
        out = np.empty(state.correctness.shape)
        for j in range(len(state)):
            out[j] = rrc_probability(state.supports[j], state.labels[j], rng, n_draws)
        return 2.0 * out - 1.0
    raise ValueError(f"unknown source {kind!r}")


class ProbabilisticDES(DynamicSelector):
    uses_region = False
    source = ""

    def _fit_method(self):
        self.source_ = source_matrix(self.source, self.state_, self.config.seed,
                                     self.config.rrc_draws)

    def estimate_competence(self, query):
        d = pairwise_distances(query.xs, self.state_.features)[0]
        return potential_aggregate(self.source_, d)

    def select(self, competences, query):
        return select_above(competences, 0.0, query.active)


class DESP(ProbabilisticDES):
    name = "des_p"
    source = "p"


class DESKL(ProbabilisticDES):
    name = "des_kl"
    source = "kl"


class DESRRC(ProbabilisticDES):
    name = "des_rrc"
    source = "rrc"


class DESExponential(ProbabilisticDES):
    name = "des_exponential"
    source = "exp"


class DESLogarithmic(ProbabilisticDES):
    name = "des_logarithmic"
    source = "log"


class DESMinimumDifference(ProbabilisticDES):
    name = "des_minimum_difference"
    source = "min_diff"
