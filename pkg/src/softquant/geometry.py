"""Weighted p-norm distances on R^d and the gradient of their r-th power."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DistanceSpec", "dist", "dist_power", "dist_power_grad", "pairwise_cost"]


@dataclass(frozen=True)
class DistanceSpec:
    """Distance ``(sum_l w_l |y_l - xi_l|^p)^(1/p)`` raised to the order ``r``.

    ``coord_weights=None`` stands for unit weights in any dimension.
    """

    p: float = 2.0
    r: float = 2.0
    coord_weights: tuple | None = field(default=None)

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.r >= 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.coord_weights is not None:
            w = tuple(float(v) for v in np.ravel(self.coord_weights))
            if not all(v > 0 and np.isfinite(v) for v in w):
                raise ValueError("coordinate weights must be positive")
            object.__setattr__(self, "coord_weights", w)

    def weights(self, d):
        if self.coord_weights is None:
            return np.ones(d)
        if len(self.coord_weights) != d:
            raise ValueError(
                f"dimension mismatch: {len(self.coord_weights)} weights for d={d}"
            )
        return np.asarray(self.coord_weights)


def _diff(y, xi):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if y.shape[-1] != xi.shape[-1]:
        raise ValueError(f"dimension mismatch: {y.shape[-1]} vs {xi.shape[-1]}")
    return y - xi


def _norm(spec, diff):
    w = spec.weights(diff.shape[-1])
    a = np.abs(diff)
    if spec.p == 2:
        return np.sqrt(np.sum(w * a * a, axis=-1))
    return np.sum(w * a**spec.p, axis=-1) ** (1.0 / spec.p)


def dist(spec, y, xi):
    """Weighted p-norm distance between ``y`` and ``xi`` (broadcasts)."""
    return _norm(spec, _diff(y, xi))


def dist_power(spec, y, xi):
    """``dist(spec, y, xi) ** r``."""
    diff = _diff(y, xi)
    if spec.p == 2 and spec.r == 2:
        return np.sum(spec.weights(diff.shape[-1]) * diff * diff, axis=-1)
    return _norm(spec, diff) ** spec.r


def _grad_from_diff(spec, diff):
    w = spec.weights(diff.shape[-1])
    if spec.p == 2 and spec.r == 2:
        return 2.0 * w * diff
    p, r = spec.p, spec.r
    norm = _norm(spec, diff)[..., None]
    a = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = norm ** (r - p)
        g = r * w * scale * a ** (p - 1) * np.sign(diff)
    # subgradient 0 where y == xi
    return np.where(norm > 0, g, 0.0)


def dist_power_grad(spec, y, xi):
    """Gradient of ``dist(spec, y, xi) ** r`` with respect to ``y``.

    Component ``l`` is ``r w_l ||y - xi||^(r-p) |y_l - xi_l|^(p-1) sign(y_l - xi_l)``.
    At ``y == xi`` the zero vector is returned.
    """
    return _grad_from_diff(spec, _diff(y, xi))


def pairwise_cost(spec, points, locations, with_grad=False):
    """Cost matrix ``d(xi_i, y_j)^r`` for ``points`` (n, d) and ``locations`` (m, d).

    With ``with_grad=True`` also returns the (n, m, d) array of gradients
    with respect to each location.
    """
    xi = np.asarray(points, dtype=float)
    y = np.asarray(locations, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if xi.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {xi.shape[1]} vs {y.shape[1]}")
    diff = y[None, :, :] - xi[:, None, :]
    if spec.p == 2 and spec.r == 2:
        cost = np.sum(spec.weights(diff.shape[-1]) * diff * diff, axis=-1)
    else:
        cost = _norm(spec, diff) ** spec.r
    if not with_grad:
        return cost
    return cost, _grad_from_diff(spec, diff)
