"""Source distributions, discrete measures and the center of a measure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DistanceSpec

__all__ = [
    "SourceSpec",
    "DiscreteMeasure",
    "make_rng",
    "draw",
    "sample",
    "center_of_measure",
    "empirical_cdf",
]

KINDS = ("normal1d", "exponential", "gamma", "uniform_box", "mvnormal", "empirical")


@dataclass(frozen=True)
class SourceSpec:
    """A named source distribution.

    Use the classmethod constructors; ``params`` is a tuple of
    ``(name, value)`` pairs so the spec stays hashable.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        self._validate()

    # constructors ---------------------------------------------------------

    @classmethod
    def normal1d(cls, mu=0.0, sigma=1.0):
        return cls("normal1d", (("mu", float(mu)), ("sigma", float(sigma))))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", (("rate", float(rate)),))

    @classmethod
    def gamma(cls, shape=2.0, scale=2.0):
        return cls("gamma", (("shape", float(shape)), ("scale", float(scale))))

    @classmethod
    def uniform_box(cls, lo, hi):
        lo = tuple(float(v) for v in np.ravel(lo))
        hi = tuple(float(v) for v in np.ravel(hi))
        return cls("uniform_box", (("lo", lo), ("hi", hi)))

    @classmethod
    def mvnormal(cls, mean, cov):
        mean = tuple(float(v) for v in np.ravel(mean))
        cov = tuple(tuple(float(v) for v in row) for row in np.atleast_2d(cov))
        return cls("mvnormal", (("mean", mean), ("cov", cov)))

    @classmethod
    def empirical(cls, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls("empirical", (("points", tuple(map(tuple, pts))),))

    # ----------------------------------------------------------------------

    @property
    def p(self):
        return dict(self.params)

    def _validate(self):
        p = self.p
        k = self.kind
        if k == "normal1d" and not p["sigma"] > 0:
            raise ValueError("sigma must be positive")
        if k == "exponential" and not p["rate"] > 0:
            raise ValueError("rate must be positive")
        if k == "gamma" and not (p["shape"] > 0 and p["scale"] > 0):
            raise ValueError("shape and scale must be positive")
        if k == "uniform_box":
            lo, hi = np.array(p["lo"]), np.array(p["hi"])
            if lo.shape != hi.shape or lo.size == 0 or not (lo < hi).all():
                raise ValueError("uniform_box needs lo < hi in every coordinate")
        if k == "mvnormal":
            mu, cov = np.array(p["mean"]), np.array(p["cov"])
            if cov.shape != (mu.size, mu.size):
                raise ValueError("covariance shape does not match mean")
            if not np.allclose(cov, cov.T):
                raise ValueError("covariance must be symmetric")
            if np.linalg.eigvalsh(cov).min() <= 0:
                raise ValueError("covariance must be positive definite")
        if k == "empirical" and len(p["points"]) == 0:
            raise ValueError("empirical source needs at least one point")

    @property
    def dim(self):
        p = self.p
        if self.kind in ("normal1d", "exponential", "gamma"):
            return 1
        if self.kind == "uniform_box":
            return len(p["lo"])
        if self.kind == "mvnormal":
            return len(p["mean"])
        return len(p["points"][0])

    @property
    def mean(self):
        p = self.p
        k = self.kind
        if k == "normal1d":
            return np.array([p["mu"]])
        if k == "exponential":
            return np.array([1.0 / p["rate"]])
        if k == "gamma":
            return np.array([p["shape"] * p["scale"]])
        if k == "uniform_box":
            return (np.array(p["lo"]) + np.array(p["hi"])) / 2
        if k == "mvnormal":
            return np.array(p["mean"])
        return np.asarray(p["points"]).mean(axis=0)

    @property
    def coord_std(self):
        """Per-coordinate standard deviation."""
        p = self.p
        k = self.kind
        if k == "normal1d":
            return np.array([p["sigma"]])
        if k == "exponential":
            return np.array([1.0 / p["rate"]])
        if k == "gamma":
            return np.array([np.sqrt(p["shape"]) * p["scale"]])
        if k == "uniform_box":
            return (np.array(p["hi"]) - np.array(p["lo"])) / np.sqrt(12)
        if k == "mvnormal":
            return np.sqrt(np.diag(np.array(p["cov"])))
        return np.asarray(p["points"]).std(axis=0)

    @property
    def std(self):
        """Scalar spread: root of the mean per-coordinate variance."""
        return float(np.sqrt(np.mean(self.coord_std**2)))


def make_rng(seed, stream=0):
    """Counter-based generator for ``(seed, stream)``; streams are independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def draw(spec, rng, n):
    """Draw ``n`` points, shape ``(n, dim)``, from ``spec`` using ``rng``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = spec.p
    k = spec.kind
    if k == "normal1d":
        return rng.normal(p["mu"], p["sigma"], size=(n, 1))
    if k == "exponential":
        return rng.exponential(1.0 / p["rate"], size=(n, 1))
    if k == "gamma":
        return rng.gamma(p["shape"], p["scale"], size=(n, 1))
    if k == "uniform_box":
        lo, hi = np.array(p["lo"]), np.array(p["hi"])
        return rng.uniform(lo, hi, size=(n, lo.size))
    if k == "mvnormal":
        chol = np.linalg.cholesky(np.array(p["cov"]))
        z = rng.standard_normal(size=(n, len(p["mean"])))
        return np.array(p["mean"]) + z @ chol.T
    pts = np.asarray(p["points"], dtype=float)
    return pts[rng.integers(0, len(pts), size=n)]


def sample(spec, n, seed, stream=0):
    """``n`` i.i.d. draws; identical arguments give bit-identical output."""
    return draw(spec, make_rng(seed, stream), n)


@dataclass
class DiscreteMeasure:
    """Atoms ``(m, d)`` with a probability vector of weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        if self.atoms.ndim == 1:
            self.atoms = self.atoms[:, None]
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.weights.size != self.atoms.shape[0]:
            raise ValueError("one weight per atom required")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1) > 1e-10:
            raise ValueError("weights must sum to 1")

    @property
    def dim(self):
        return self.atoms.shape[1]


def empirical_cdf(measure):
    """Knots ``(location, cumulative weight)`` of a 1-d discrete measure.

    Coincident atoms are merged; the last cumulative weight is 1.
    """
    if measure.dim != 1:
        raise ValueError(f"empirical_cdf needs a 1-d measure, got d={measure.dim}")
    knots, inverse = np.unique(measure.atoms[:, 0], return_inverse=True)
    mass = np.bincount(inverse, weights=measure.weights, minlength=knots.size)
    cum = np.cumsum(mass) / mass.sum()
    cum[-1] = 1.0
    return [(float(x), float(c)) for x, c in zip(knots, cum)]


def center_of_measure(spec, dspec=None, n=10_000, seed=0, method="auto", iterations=2000):
    """Minimizer of the Monte-Carlo estimate of ``E d(x, xi)^r``.

    For ``p = r = 2`` the sample mean is returned (``method="auto"``).
    Otherwise, or with ``method="sgd"``, the single-atom quantizer is
    optimized by full-batch gradient steps over the same sample.
    """
    dspec = dspec or DistanceSpec()
    pts = sample(spec, n, seed)
    if method == "auto" and dspec.p == 2 and dspec.r == 2:
        return pts.mean(axis=0)
    if method not in ("auto", "sgd"):
        raise ValueError(f"unknown method {method!r}")
    from .sgd import QuantizerState, RunConfig, step

    config = RunConfig(
        m=1, lam=0.0, dspec=dspec, source=spec, iterations=iterations, lr_scale=spec.std
    )
    state = QuantizerState(np.median(pts, axis=0)[None, :], np.ones(1))
    for _ in range(iterations):
        state = step(state, pts, config)
    return state.locations[0]
