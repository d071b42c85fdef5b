"""Smooth minimum, softmin (Gibbs density) and their derivatives.

All routines work on a finite weighted value list ``(x_j, p_j)`` and a
regularization parameter ``lam``.  Exponentials are always evaluated after
shifting by the smallest value so the largest exponent is zero.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_weighted_values",
    "smooth_min",
    "softmin",
    "hard_assignment",
    "smin_gradient",
    "smin_hessian",
    "conditional_smooth_min",
    "cumulants",
    "cumulant_expansion",
    "smooth_min_rows",
]


def check_weighted_values(values, weights=None):
    """Validate a weighted value list and return it as float arrays.

    ``weights=None`` means uniform weights.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty support")
    if np.isnan(x).any() or np.isinf(x).any():
        raise ValueError("non-finite value")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape:
            raise ValueError("values and weights differ in length")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12 * max(1, x.size):
            raise ValueError("weights must sum to 1")
    return x, w


def _check_lambda(lam, allow_zero=True):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError("lambda must be a finite nonnegative number")
    if lam == 0 and not allow_zero:
        raise ValueError("lambda = 0: use hard_assignment")
    return lam


def _shifted_exp(x, w, lam):
    # shift by the minimum over the support so every exponent is <= 0
    xs = x[w > 0].min()
    e = np.exp(-(x - xs) / lam)
    return xs, e


def smooth_min(values, weights=None, lam=1.0):
    """Smooth minimum ``-lam * log(sum_j p_j exp(-x_j / lam))``.

    For ``lam = 0`` the essential infimum ``min{x_j : p_j > 0}`` is returned.

    Examples
    --------
    >>> round(smooth_min([0.0, 1.0], [0.5, 0.5], lam=1.0), 6)
    0.379885
    >>> smooth_min([0.0, 1.0], [0.5, 0.5], lam=0.0)
    0.0
    """
    x, w = check_weighted_values(values, weights)
    lam = _check_lambda(lam)
    if lam == 0:
        return float(x[w > 0].min())
    xs, e = _shifted_exp(x, w, lam)
    return float(xs - lam * np.log(np.dot(w, e)))


def softmin(values, weights=None, lam=1.0):
    """Gibbs density ``sigma_j = exp(-x_j/lam) / sum_k p_k exp(-x_k/lam)``.

    The density is relative to the weights, so ``sum_j p_j sigma_j = 1``.
    """
    x, w = check_weighted_values(values, weights)
    lam = _check_lambda(lam, allow_zero=False)
    _, e = _shifted_exp(x, w, lam)
    return e / np.dot(w, e)


def hard_assignment(values, weights=None):
    """Index of the smallest value among atoms with positive weight.

    Ties go to the lowest index.
    """
    x, w = check_weighted_values(values, weights)
    masked = np.where(w > 0, x, np.inf)
    return int(np.argmin(masked))


def smin_gradient(values, weights=None, lam=1.0):
    """Partial derivatives ``p_j * sigma_j`` of :func:`smooth_min`; they sum to 1."""
    x, w = check_weighted_values(values, weights)
    return w * softmin(x, w, lam)


def smin_hessian(values, weights=None, lam=1.0):
    """Hessian ``-(diag(g) - g g^T) / lam`` of :func:`smooth_min`, ``g`` the gradient."""
    g = smin_gradient(values, weights, lam)
    return -(np.diag(g) - np.outer(g, g)) / float(lam)


def conditional_smooth_min(values, weights, blocks, lam=1.0):
    """Smooth minimum conditioned on a finite partition.

    Parameters
    ----------
    values, weights : array_like
        Weighted value list.
    blocks : array_like of int
        Block index ``0..B-1`` of every atom.  Every block must be nonempty.
    lam : float
        Regularization, strictly positive.

    Returns
    -------
    (values, weights) : tuple of ndarray
        One atom per block: the smooth minimum over the block under the
        renormalized within-block weights, and the block's total weight.
    """
    x, w = check_weighted_values(values, weights)
    lam = _check_lambda(lam, allow_zero=False)
    b = np.asarray(blocks)
    if b.shape != x.shape or not np.issubdtype(b.dtype, np.integer):
        raise ValueError("one integer block index per atom required")
    if b.min() < 0:
        raise ValueError("block index out of range")
    nblocks = int(b.max()) + 1
    out_x = np.empty(nblocks)
    out_w = np.empty(nblocks)
    for k in range(nblocks):
        members = b == k
        if not members.any():
            raise ValueError(f"empty block {k}")
        mass = w[members].sum()
        out_w[k] = mass
        if mass > 0:
            out_x[k] = smooth_min(x[members], w[members] / mass, lam)
        else:
            # zero-mass block contributes nothing; keep its plain minimum
            out_x[k] = x[members].min()
    return out_x, out_w


def cumulants(values):
    """Mean, population variance and third central moment of ``values``."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty support")
    mean = x.mean()
    c = x - mean
    return float(mean), float(np.mean(c**2)), float(np.mean(c**3))


def cumulant_expansion(values, lam, order=2):
    """Large-``lam`` expansion of the smooth minimum under uniform weights.

    ``order`` 1, 2, 3 gives ``mean``, ``mean - var/(2 lam)`` and
    ``mean - var/(2 lam) + k3/(6 lam^2)``.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    lam = _check_lambda(lam, allow_zero=False)
    mean, var, k3 = cumulants(values)
    out = mean
    if order >= 2:
        out -= var / (2 * lam)
    if order >= 3:
        out += k3 / (6 * lam**2)
    return out


def smooth_min_rows(costs, weights, lam):
    """Row-wise smooth minimum and Gibbs density for a cost matrix.

    Parameters
    ----------
    costs : ndarray, shape (n, m)
        Row ``i`` holds the values ``x_1..x_m`` seen by sample ``i``.
    weights : ndarray, shape (m,)
        Common weight vector.
    lam : float
        Regularization; ``0`` gives the hard minimum and one-hot rows.

    Returns
    -------
    smin : ndarray, shape (n,)
    assign : ndarray, shape (n, m)
        ``p_j * sigma_j`` per row (rows sum to one).
    """
    c = np.asarray(costs, dtype=float)
    w = np.asarray(weights, dtype=float)
    masked = np.where(w > 0, c, np.inf)
    if lam == 0:
        idx = np.argmin(masked, axis=1)
        assign = np.zeros_like(c)
        assign[np.arange(c.shape[0]), idx] = 1.0
        return masked[np.arange(c.shape[0]), idx], assign
    shift = masked.min(axis=1, keepdims=True)
    e = w * np.exp(-(c - shift) / lam)
    z = e.sum(axis=1, keepdims=True)
    smin = shift[:, 0] - lam * np.log(z[:, 0])
    return smin, e / z
