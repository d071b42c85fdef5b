"""Regularized quantization objective, optimal weights and divergences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import pairwise_cost
from .measures import sample
from .softmin import smooth_min_rows

__all__ = [
    "SoftObjectiveEstimate",
    "InfiniteDivergence",
    "INFINITE_DIVERGENCE",
    "soft_objective",
    "objective_on_points",
    "optimal_weights",
    "voronoi_weights",
    "tessellation_probabilities",
    "kl_divergence",
    "entropy",
    "cross_entropy",
]


@dataclass(frozen=True)
class SoftObjectiveEstimate:
    value: float
    std_error: float
    n: int


class InfiniteDivergence:
    """Result of a divergence whose first argument escapes the support of the second.

    Deliberately not a float: arithmetic on it raises, so callers have to
    handle the case.  ``float(INFINITE_DIVERGENCE)`` gives ``inf``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __float__(self):
        return float("inf")

    def __repr__(self):
        return "INFINITE_DIVERGENCE"


INFINITE_DIVERGENCE = InfiniteDivergence()


def objective_on_points(points, state, dspec, lam):
    """Per-point smooth minimum of ``d(xi, y_j)^r`` under the state weights."""
    cost = pairwise_cost(dspec, points, state.locations)
    smin, _ = smooth_min_rows(cost, state.weights, lam)
    return smin


def soft_objective(state, spec, dspec, lam, n=10_000, seed=0, stream=0):
    """Monte-Carlo estimate of ``E_P smin_lam(d(xi, y_1)^r, ..., d(xi, y_m)^r)``.

    With ``lam = 0`` this is the classical quantization error.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    vals = objective_on_points(sample(spec, n, seed, stream), state, dspec, lam)
    se = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return SoftObjectiveEstimate(float(vals.mean()), se, n)


def tessellation_probabilities(points, state, dspec, lam):
    """Matrix of ``p_j sigma_j`` allocation probabilities, one row per point.

    ``lam = 0`` yields one-hot rows at the nearest atom (lowest index on ties).
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    cost = pairwise_cost(dspec, points, state.locations)
    _, assign = smooth_min_rows(cost, state.weights, lam)
    return assign


def optimal_weights(state, spec, dspec, lam, n=10_000, seed=0, stream=0):
    """Monte-Carlo estimate of ``q = E_P sigma_lam(d(xi, y)^r)``.

    The improved measure carries weights ``p_j q_j``; since every sample's
    softmin is normalized, ``sum_j p_j q_j = 1`` holds to rounding.
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0; use voronoi_weights for lambda = 0")
    assign = tessellation_probabilities(sample(spec, n, seed, stream), state, dspec, lam)
    return assign.mean(axis=0) / state.weights


def voronoi_weights(state, spec, dspec, n=10_000, seed=0, stream=0):
    """Fraction of samples whose nearest atom is ``j``."""
    assign = tessellation_probabilities(sample(spec, n, seed, stream), state, dspec, 0.0)
    return assign.mean(axis=0)


def _prob_pair(q, p):
    q = np.asarray(getattr(q, "weights", q), dtype=float).ravel()
    p = np.asarray(getattr(p, "weights", p), dtype=float).ravel()
    if q.shape != p.shape:
        raise ValueError("measures live on different ground sets")
    return q, p


def kl_divergence(q, p):
    """``sum_x q(x) log(q(x)/p(x))`` with ``0 log 0 = 0``.

    Accepts probability vectors or :class:`DiscreteMeasure` objects matched
    by index.  Returns :data:`INFINITE_DIVERGENCE` when ``supp q`` is not
    contained in ``supp p``.
    """
    q, p = _prob_pair(q, p)
    pos = q > 0
    if (p[pos] <= 0).any():
        return INFINITE_DIVERGENCE
    # rounding can push an exact zero slightly negative
    return max(0.0, float(np.sum(q[pos] * np.log(q[pos] / p[pos]))))


def entropy(p):
    """Shannon entropy ``-sum p log p``."""
    p = np.asarray(getattr(p, "weights", p), dtype=float).ravel()
    pos = p > 0
    return float(-np.sum(p[pos] * np.log(p[pos])))


def cross_entropy(q, p):
    """``-sum_x q(x) log p(x)``; ``inf`` when ``q`` charges a zero of ``p``."""
    q, p = _prob_pair(q, p)
    pos = q > 0
    if (p[pos] <= 0).any():
        return float("inf")
    return float(-np.sum(q[pos] * np.log(p[pos])))
