"""Experiment recipes: built-ins and the ``key = value`` config format.

A config file holds one section per recipe::

    [normal-small]
    source = normal1d
    mu = 0
    sigma = 1
    m = 8
    lambdas = 0, 1, 10
    iterations = 200000
    batch_size = 16
    init = quantile
    replicates = 2
    outputs = final_state, cdf

Recognized keys are listed in ``RUN_KEYS``, ``SOURCE_KEYS`` and
``RECIPE_KEYS``.  Anything else is a config error.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .geometry import DistanceSpec
from .measures import SourceSpec
from .sgd import RunConfig

__all__ = ["ConfigError", "ExperimentRecipe", "BUILTIN_RECIPES", "load_config", "get_recipe"]

OUTPUT_FLAGS = ("trajectory", "final_state", "cdf", "tessellation_grid")

SOURCE_KEYS = {
    "normal1d": ("mu", "sigma"),
    "exponential": ("rate",),
    "gamma": ("shape", "scale"),
    "uniform_box": ("lo", "hi"),
    "mvnormal": ("mean", "cov"),
    "empirical": ("points", "points_file"),
}
RUN_KEYS = (
    "m", "iterations", "batch_size", "lr_scale", "lr_offset", "lr_exponent", "seed",
    "init", "init_locations", "init_weights", "snapshot_every", "snapshot_n", "p", "r",
    "coord_weights",
)
RECIPE_KEYS = ("source", "lambdas", "replicates", "outputs", "merge_radius", "min_weight",
               "eval_n", "description")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentRecipe:
    """A run configuration swept over a lambda grid and several seeds.

    ``merge_radius=None`` uses ``1e-2`` times the per-coordinate standard
    deviation of the source.  ``min_weight`` is the weight below which an
    atom does not count as a quantization point.
    """

    name: str
    base: RunConfig
    lambda_grid: tuple
    replicates: int = 1
    outputs: frozenset = frozenset({"final_state", "cdf"})
    merge_radius: float | None = None
    min_weight: float = 1e-3
    eval_n: int = 20_000
    description: str = ""
    gated: bool = field(default=True, compare=False)

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise ConfigError(f"{self.name}: lambda grid is empty")
        if list(grid) != sorted(grid) or min(grid) < 0:
            raise ConfigError(f"{self.name}: lambda grid must be nonnegative and ascending")
        if self.replicates < 1:
            raise ConfigError(f"{self.name}: replicates must be >= 1")
        unknown = set(self.outputs) - set(OUTPUT_FLAGS)
        if unknown:
            raise ConfigError(f"{self.name}: unknown outputs {sorted(unknown)}")
        object.__setattr__(self, "lambda_grid", grid)
        object.__setattr__(self, "outputs", frozenset(self.outputs))

    @property
    def seeds(self):
        return tuple(self.base.seed + i for i in range(self.replicates))


UNIT_SQUARE = SourceSpec.uniform_box((0.0, 0.0), (1.0, 1.0))

# slow merging near the phase transitions needs a flatter, larger step schedule
_SQUARE = dict(iterations=1_000_000, batch_size=16, lr_scale=8.0, lr_exponent=0.55)

BUILTIN_RECIPES = {
    r.name: r
    for r in [
        ExperimentRecipe(
            "normal1d-m8",
            RunConfig(m=8, lam=0.0, source=SourceSpec.normal1d(0, 1), iterations=200_000,
                      batch_size=16, init="quantile"),
            (0.0, 1.0, 10.0),
            description="standard normal, 8 points",
        ),
        ExperimentRecipe(
            "exp1-m8",
            RunConfig(m=8, lam=0.0, source=SourceSpec.exponential(1.0), iterations=200_000,
                      batch_size=16, init="quantile"),
            (0.0, 0.5, 1.0, 10.0),
            description="Exp(1), 8 points",
        ),
        ExperimentRecipe(
            "gamma22-m8",
            RunConfig(m=8, lam=0.0, source=SourceSpec.gamma(2, 2), iterations=200_000,
                      batch_size=16, init="quantile"),
            (0.0, 1.0, 10.0, 20.0),
            description="Gamma(shape 2, scale 2), 8 points",
        ),
        ExperimentRecipe(
            "uniform2d-m4",
            RunConfig(m=4, lam=0.0, source=UNIT_SQUARE, **_SQUARE),
            (0.0, 0.1, 0.5, 1.0),
            outputs=frozenset({"final_state", "tessellation_grid"}),
            description="uniform on the unit square, 4 points",
        ),
        ExperimentRecipe(
            "uniform2d-m16",
            RunConfig(m=16, lam=0.0, source=UNIT_SQUARE, **_SQUARE),
            (0.0, 0.037, 0.1, 1.0),
            outputs=frozenset({"final_state", "tessellation_grid"}),
            description="uniform on the unit square, 16 points",
        ),
        ExperimentRecipe(
            "mvnormal2d-m100",
            RunConfig(m=100, lam=0.0, source=SourceSpec.mvnormal((0, 0), [[3, 1], [1, 3]]),
                      iterations=200_000, batch_size=16),
            (0.0, 5.0, 10.0),
            outputs=frozenset({"final_state"}),
            description="correlated 2-d normal, 100 points (qualitative only)",
            gated=False,
        ),
    ]
}


# config parsing ----------------------------------------------------------

def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _matrix(text):
    return tuple(_floats(row) for row in text.split(";") if row.strip())


def _source_from(section, name):
    kind = section.get("source")
    if kind not in SOURCE_KEYS:
        raise ConfigError(f"[{name}] source must be one of {sorted(SOURCE_KEYS)}")
    g = section.get
    try:
        if kind == "normal1d":
            return SourceSpec.normal1d(float(g("mu", "0")), float(g("sigma", "1")))
        if kind == "exponential":
            return SourceSpec.exponential(float(g("rate", "1")))
        if kind == "gamma":
            return SourceSpec.gamma(float(g("shape", "2")), float(g("scale", "2")))
        if kind == "uniform_box":
            return SourceSpec.uniform_box(_floats(section["lo"]), _floats(section["hi"]))
        if kind == "mvnormal":
            return SourceSpec.mvnormal(_floats(section["mean"]), _matrix(section["cov"]))
        if "points_file" in section:
            pts = np.loadtxt(section["points_file"], delimiter=",", ndmin=2)
        else:
            pts = np.array(_matrix(section["points"]))
        return SourceSpec.empirical(pts)
    except KeyError as exc:
        raise ConfigError(f"[{name}] missing key {exc.args[0]!r} for source {kind}") from None
    except (ValueError, OSError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def _recipe_from(section, name):
    allowed = set(RUN_KEYS) | set(RECIPE_KEYS) | set(SOURCE_KEYS.get(section.get("source"), ()))
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}] unknown keys {sorted(unknown)}")
    source = _source_from(section, name)
    g = section.get
    try:
        dspec = DistanceSpec(
            p=float(g("p", "2")),
            r=float(g("r", "2")),
            coord_weights=_floats(section["coord_weights"]) if "coord_weights" in section else None,
        )
        run = dict(
            m=int(section["m"]),
            lam=0.0,
            source=source,
            dspec=dspec,
            iterations=int(g("iterations", "200000")),
            batch_size=int(g("batch_size", "1")),
            lr_scale=float(section["lr_scale"]) if "lr_scale" in section else None,
            lr_offset=float(g("lr_offset", "30")),
            lr_exponent=float(g("lr_exponent", str(2 / 3))),
            seed=int(g("seed", "0")),
            init=g("init", "sample"),
            snapshot_every=int(g("snapshot_every", "0")),
            snapshot_n=int(g("snapshot_n", "2000")),
        )
        if "init_locations" in section:
            run["init_locations"] = _matrix(section["init_locations"])
            run["init"] = "explicit"
        if "init_weights" in section:
            run["init_weights"] = _floats(section["init_weights"])
        outputs = {o.strip() for o in g("outputs", "final_state").split(",") if o.strip()}
        return ExperimentRecipe(
            name,
            RunConfig(**run),
            _floats(section["lambdas"]),
            replicates=int(g("replicates", "1")),
            outputs=frozenset(outputs),
            merge_radius=float(section["merge_radius"]) if "merge_radius" in section else None,
            min_weight=float(g("min_weight", "1e-3")),
            eval_n=int(g("eval_n", "20000")),
            description=g("description", ""),
        )
    except KeyError as exc:
        raise ConfigError(f"[{name}] missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def load_config(path):
    """Parse a config file into ``{name: ExperimentRecipe}``."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from None
    if not parser.sections():
        raise ConfigError(f"{path}: no recipe sections")
    return {name: _recipe_from(parser[name], name) for name in parser.sections()}


def get_recipe(name_or_path):
    """A built-in recipe by name, or every recipe in a config file."""
    if name_or_path in BUILTIN_RECIPES:
        return [BUILTIN_RECIPES[name_or_path]]
    import os

    if os.path.exists(name_or_path):
        return list(load_config(name_or_path).values())
    raise ConfigError(f"no built-in recipe or config file named {name_or_path!r}")
