"""Stochastic gradient optimization of quantizer locations and weights."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .geometry import DistanceSpec, pairwise_cost
from .measures import SourceSpec, draw, make_rng
from ._kernel import run_steps
from .softmin import smooth_min_rows

__all__ = [
    "QuantizerState",
    "RunConfig",
    "Snapshot",
    "Trajectory",
    "lr",
    "step",
    "run",
    "initial_locations",
    "distinct_quantizers",
    "default_merge_radius",
]

WEIGHT_FLOOR = 1e-12

# stream ids carved out of one seed
INIT_STREAM, SAMPLE_STREAM, EVAL_STREAM = 0, 1, 2


@dataclass
class QuantizerState:
    """Locations ``(m, d)``, probability weights ``(m,)`` and iteration count."""

    locations: np.ndarray
    weights: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        if self.locations.ndim == 1:
            self.locations = self.locations[:, None]
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.weights.size != self.locations.shape[0]:
            raise ValueError("one weight per location required")
        if not np.isfinite(self.locations).all():
            raise ValueError("locations must be finite")
        if (self.weights <= 0).any() or abs(self.weights.sum() - 1) > 1e-10:
            raise ValueError("weights must be positive and sum to 1")

    @property
    def m(self):
        return self.locations.shape[0]

    @classmethod
    def uniform(cls, locations):
        locations = np.asarray(locations, dtype=float)
        m = locations.shape[0]
        return cls(locations, np.full(m, 1.0 / m))


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    The learning rate is ``lr_scale / (lr_offset + k) ** lr_exponent``;
    ``lr_scale=None`` uses the standard deviation of the source.
    ``init`` is one of ``"sample"`` (m draws from the source),
    ``"quantile"`` (1-d only, evenly spread sample quantiles) or
    ``"explicit"`` (``init_locations``).
    """

    m: int
    lam: float
    source: SourceSpec
    dspec: DistanceSpec = field(default_factory=DistanceSpec)
    iterations: int = 10_000
    batch_size: int = 1
    lr_scale: float | None = None
    lr_offset: float = 30.0
    lr_exponent: float = 2.0 / 3.0
    seed: int = 0
    init: str = "sample"
    init_locations: tuple | None = None
    init_weights: tuple | None = None
    snapshot_every: int = 0
    snapshot_n: int = 2000

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        if self.iterations < 0 or self.batch_size < 1:
            raise ValueError("iterations >= 0 and batch_size >= 1 required")
        # Robbins-Monro: sum a_k = inf and sum a_k^2 < inf
        if not 0.5 < self.lr_exponent <= 1:
            raise ValueError("lr_exponent must lie in (1/2, 1]")
        if self.lr_offset < 0 or (self.lr_scale is not None and not self.lr_scale > 0):
            raise ValueError("lr_offset >= 0 and lr_scale > 0 required")
        if self.init not in ("sample", "quantile", "explicit"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "explicit" and self.init_locations is None:
            raise ValueError("init='explicit' needs init_locations")
        if self.init == "quantile" and self.source.dim != 1:
            raise ValueError("init='quantile' is only defined in one dimension")

    @property
    def scale(self):
        return self.source.std if self.lr_scale is None else float(self.lr_scale)

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class Snapshot:
    iteration: int
    state: QuantizerState
    objective: float


@dataclass
class Trajectory:
    snapshots: list
    final: QuantizerState
    samples_mean: np.ndarray | None = None
    samples_used: int = 0


def lr(config, k):
    """Step size ``alpha_k`` at iteration ``k >= 0``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return config.scale / (config.lr_offset + k) ** config.lr_exponent


def _update(y, p, k, batch, lam, dspec, alpha):
    # non-finite samples are dropped below, silence their warnings here
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        cost, grad = pairwise_cost(dspec, batch, y, with_grad=True)
        _, assign = smooth_min_rows(cost, p, lam)
        contrib = assign[:, :, None] * grad
    # assign[i, j] = p_j sigma_j for sample i (one-hot when lam == 0)
    ok = np.isfinite(contrib).all(axis=(1, 2)) & np.isfinite(assign).all(axis=1)
    if not ok.all():
        contrib, assign = contrib[ok], assign[ok]
    if assign.shape[0] == 0:
        return y, p
    y_new = y - alpha * contrib.mean(axis=0)
    p_new = (k * p + assign.mean(axis=0)) / (k + 1)
    p_new = np.maximum(p_new, WEIGHT_FLOOR)
    return y_new, p_new / p_new.sum()


def step(state, batch, config):
    """One stochastic approximation step on a batch of source points.

    Each atom moves against the batch average of ``p_j sigma_j grad d(xi, y_j)^r``;
    weights follow the running average ``(k p + mean(p * sigma)) / (k + 1)``.
    Samples producing non-finite gradients are skipped.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim == 1:
        batch = batch[:, None] if state.locations.shape[1] == 1 else batch[None, :]
    k = state.iteration
    y, p = _update(
        state.locations, state.weights, k, batch, config.lam, config.dspec, lr(config, k)
    )
    return QuantizerState(y, p, k + 1)


def initial_locations(config):
    rng = make_rng(config.seed, INIT_STREAM)
    if config.init == "explicit":
        y = np.asarray(config.init_locations, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.shape != (config.m, config.source.dim):
            raise ValueError(f"init_locations must have shape ({config.m}, {config.source.dim})")
        return y
    if config.init == "quantile":
        pts = np.sort(draw(config.source, rng, max(10_000, 100 * config.m))[:, 0])
        q = (np.arange(config.m) + 0.5) / config.m
        return np.quantile(pts, q)[:, None]
    return draw(config.source, rng, config.m)


def _initial_weights(config):
    if config.init_weights is None:
        return np.full(config.m, 1.0 / config.m)
    w = np.asarray(config.init_weights, dtype=float)
    return w / w.sum()


def run(config, chunk=4096):
    """Run the optimizer for ``config.iterations`` steps.

    Deterministic for a fixed config.  Snapshots (with a Monte-Carlo
    objective estimate on a fixed evaluation sample) are taken every
    ``config.snapshot_every`` iterations and at the end when enabled.
    """
    from .objective import soft_objective

    y = initial_locations(config)
    p = _initial_weights(config)
    rng = make_rng(config.seed, SAMPLE_STREAM)
    lam, dspec, B = config.lam, config.dspec, config.batch_size
    snapshots = []
    w = dspec.weights(config.source.dim)

    def snap(k):
        st = QuantizerState(y.copy(), p.copy(), k)
        est = soft_objective(st, config.source, dspec, lam, config.snapshot_n, config.seed,
                             stream=EVAL_STREAM)
        snapshots.append(Snapshot(k, st, est.value))

    total = np.zeros(config.source.dim)
    used = 0
    k = 0
    if config.snapshot_every:
        snap(0)
    while k < config.iterations:
        nsteps = min(chunk, config.iterations - k)
        if config.snapshot_every:
            # stop exactly on snapshot boundaries
            nsteps = min(nsteps, config.snapshot_every - k % config.snapshot_every)
        pts = draw(config.source, rng, nsteps * B).reshape(nsteps, B, -1)
        total += pts.sum(axis=(0, 1))
        used += nsteps * B
        run_steps(y, p, k, pts, float(lam), float(dspec.p), float(dspec.r), w,
                  config.scale, float(config.lr_offset), float(config.lr_exponent), WEIGHT_FLOOR)
        k += nsteps
        if config.snapshot_every and k % config.snapshot_every == 0:
            snap(k)
    if config.snapshot_every and (not snapshots or snapshots[-1].iteration != k):
        snap(k)
    return Trajectory(snapshots, QuantizerState(y, p, k), total / max(used, 1), used)


def default_merge_radius(source):
    """Per-coordinate merge radius ``1e-2 * std`` of the source."""
    return 1e-2 * source.coord_std


def distinct_quantizers(state, merge_radius, min_weight=0.0):
    """Single-linkage clusters of the locations at threshold ``merge_radius``.

    ``merge_radius`` may be a scalar or a per-coordinate vector (coordinates
    are then rescaled so the threshold is 1).  Atoms with weight below
    ``min_weight`` are left out and labelled ``-1``; the others get labels
    ``0..count-1`` in order of first appearance.
    """
    if isinstance(state, QuantizerState):
        y, weights = state.locations, state.weights
    else:
        y = np.asarray(state, dtype=float)
        weights = None
    if y.ndim == 1:
        y = y[:, None]
    radius = np.asarray(merge_radius, dtype=float)
    if (radius <= 0).any():
        raise ValueError("merge_radius must be positive")
    live = np.ones(y.shape[0], dtype=bool)
    if min_weight > 0 and weights is not None:
        live = weights >= min_weight
    labels = np.full(y.shape[0], -1)
    pts = y[live] / radius if radius.ndim else y[live] / float(radius)
    if pts.shape[0] == 0:
        return 0, labels
    if pts.shape[0] == 1:
        labels[live] = 0
        return 1, labels
    raw = fcluster(linkage(pts, method="single"), t=1.0, criterion="distance")
    _, first, inv = np.unique(raw, return_index=True, return_inverse=True)
    # relabel by first appearance
    labels[live] = np.argsort(np.argsort(first))[inv]
    return int(first.size), labels
