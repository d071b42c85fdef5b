"""Entropy-regularized (soft) quantization of probability measures."""

from .geometry import DistanceSpec, dist, dist_power, dist_power_grad
from .measures import DiscreteMeasure, SourceSpec, center_of_measure, empirical_cdf, sample
from .objective import (
    INFINITE_DIVERGENCE,
    kl_divergence,
    optimal_weights,
    soft_objective,
    tessellation_probabilities,
    voronoi_weights,
)
from .sgd import QuantizerState, RunConfig, distinct_quantizers, run, step
from .softmin import smooth_min, softmin

__version__ = "0.1.0"
