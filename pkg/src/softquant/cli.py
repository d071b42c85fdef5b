"""Command line experiment runner.

    softquant list-recipes
    softquant run RECIPE_OR_CONFIG --out DIR [--seed N] [--lambda L ...]
    softquant sweep RECIPE_OR_CONFIG --out DIR [--jobs J]
    softquant verify [--out DIR] [--seed N]

Exit status: 0 success, 1 verification failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure, center_of_measure, empirical_cdf
from .objective import soft_objective, tessellation_probabilities
from .recipes import BUILTIN_RECIPES, ConfigError, ExperimentRecipe, get_recipe
from .sgd import EVAL_STREAM, default_merge_radius, distinct_quantizers, run
from .verify import format_report, run_verification

__all__ = ["SUMMARY_COLUMNS", "RunResult", "run_point", "run_recipe", "main"]

SUMMARY_COLUMNS = (
    "recipe",
    "lambda",
    "seed",
    "distinct_count",
    "final_objective_at_lambda",
    "final_objective_at_zero",
    "center_distance",
    "distinct_count_weighted",
    "atoms_weight_gt_1e-6",
)
LIVE_WEIGHT = 1e-6
GRID_SIDE = 41


@dataclass
class RunResult:
    row: dict
    state: object
    trajectory: object


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([_fmt(v) for v in row] for row in rows)


def _coord_names(d):
    return [f"x{i}" for i in range(d)]


def _state_rows(state):
    return [[j, *state.locations[j], state.weights[j]] for j in range(state.m)]


def _grid(source):
    if source.kind == "uniform_box":
        lo, hi = np.asarray(source.p["lo"]), np.asarray(source.p["hi"])
    else:
        lo = source.mean - 3 * source.coord_std
        hi = source.mean + 3 * source.coord_std
    axes = [np.linspace(a, b, GRID_SIDE) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def run_point(recipe, lam, seed):
    """One ``(lambda, seed)`` grid point: optimize and summarize."""
    config = recipe.base.with_(lam=float(lam), seed=int(seed))
    if "trajectory" in recipe.outputs and not config.snapshot_every:
        config = config.with_(snapshot_every=max(1, config.iterations // 50))
    traj = run(config)
    state = traj.final
    radius = recipe.merge_radius or default_merge_radius(config.source)
    count, _ = distinct_quantizers(state, radius)
    weighted, _ = distinct_quantizers(state, radius, min_weight=recipe.min_weight)
    center = center_of_measure(config.source, config.dspec, seed=seed)
    diff = state.locations - center
    row = {
        "recipe": recipe.name,
        "lambda": float(lam),
        "seed": int(seed),
        "distinct_count": count,
        "final_objective_at_lambda": soft_objective(
            state, config.source, config.dspec, lam, recipe.eval_n, seed, EVAL_STREAM).value,
        "final_objective_at_zero": soft_objective(
            state, config.source, config.dspec, 0.0, recipe.eval_n, seed, EVAL_STREAM).value,
        "center_distance": float(np.sqrt((diff**2).sum(axis=1)).max()),
        "distinct_count_weighted": weighted,
        "atoms_weight_gt_1e-6": int((state.weights > LIVE_WEIGHT).sum()),
    }
    return RunResult(row, state, traj)


def _write_point(recipe, result, outdir):
    row, state = result.row, result.state
    stem = os.path.join(outdir, f"{recipe.name}_lam{row['lambda']:g}_seed{row['seed']}")
    d = state.locations.shape[1]
    if "final_state" in recipe.outputs:
        _write_csv(stem + "_final.csv", ["atom_index", *_coord_names(d), "weight"],
                   _state_rows(state))
    if "trajectory" in recipe.outputs:
        rows = []
        for snap in result.trajectory.snapshots:
            rows += [[snap.iteration, *r] for r in _state_rows(snap.state)]
        _write_csv(stem + "_trajectory.csv",
                   ["iteration", "atom_index", *_coord_names(d), "weight"], rows)
    if "cdf" in recipe.outputs and d == 1:
        knots = empirical_cdf(DiscreteMeasure(state.locations, state.weights))
        _write_csv(stem + "_cdf.csv", ["location", "cumulative"], knots)
    if "tessellation_grid" in recipe.outputs:
        pts = _grid(recipe.base.source)
        assign = tessellation_probabilities(pts, state, recipe.base.dspec, row["lambda"])
        rows = [[*x, int(a.argmax()), a.max()] for x, a in zip(pts, assign)]
        _write_csv(stem + "_tessellation.csv", [*_coord_names(d), "atom", "probability"], rows)
    with open(stem + "_summary.txt", "w") as fh:
        for key in SUMMARY_COLUMNS:
            fh.write(f"{key}: {_fmt(row[key])}\n")
        fh.write(f"iterations: {state.iteration}\n")
        fh.write(f"samples_used: {result.trajectory.samples_used}\n")


def _point_job(args):
    recipe, lam, seed, outdir = args
    result = run_point(recipe, lam, seed)
    if outdir is not None:
        _write_point(recipe, result, outdir)
    return result.row


def run_recipe(recipe: ExperimentRecipe, outdir=None, lambdas=None, seeds=None, jobs=1):
    """Run every ``(lambda, seed)`` point, write per-run files and ``summary.csv``.

    Returns the summary rows sorted by seed then lambda.  Rows are written
    by the calling process only, so output is identical for any ``jobs``.
    """
    lambdas = recipe.lambda_grid if lambdas is None else tuple(sorted(float(v) for v in lambdas))
    seeds = recipe.seeds if seeds is None else tuple(seeds)
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
    tasks = [(recipe, lam, seed, outdir) for seed in seeds for lam in lambdas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point_job, tasks))
    else:
        rows = [_point_job(t) for t in tasks]
    if outdir is not None:
        path = os.path.join(outdir, "summary.csv")
        new = not os.path.exists(path)
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(SUMMARY_COLUMNS)
            w.writerows([_fmt(r[c]) for c in SUMMARY_COLUMNS] for r in rows)
    return rows


def _print_rows(rows, out=sys.stdout):
    cols = ("recipe", "lambda", "seed", "distinct_count", "distinct_count_weighted",
            "atoms_weight_gt_1e-6", "final_objective_at_lambda", "center_distance")
    out.write("  ".join(cols) + "\n")
    for r in rows:
        cells = [f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols]
        out.write("  ".join(cells) + "\n")


def _cmd_list(args):
    for name, r in BUILTIN_RECIPES.items():
        lams = ", ".join(f"{v:g}" for v in r.lambda_grid)
        gate = "" if r.gated else "  [not gated]"
        print(f"{name:18s} m={r.base.m:<4d} lambda={{{lams}}}  {r.description}{gate}")
    return 0


def _cmd_run(args, sweep):
    recipes = get_recipe(args.recipe)
    for recipe in recipes:
        seeds = None
        if args.seed is not None:
            seeds = tuple(args.seed + i for i in range(recipe.replicates)) if sweep else (args.seed,)
        elif not sweep:
            seeds = recipe.seeds[:1]
        rows = run_recipe(recipe, args.out, args.lambdas, seeds, jobs=getattr(args, "jobs", 1))
        _print_rows(rows)
    return 0


def _cmd_verify(args):
    report, ok = format_report(run_verification(seed=args.seed), args.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verify_report.txt"), "w") as fh:
            fh.write(report)
    sys.stdout.write(report)
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="softquant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-recipes", help="show the built-in recipes")

    for name, help_ in (("run", "run one seed of a recipe"),
                        ("sweep", "run the full lambda grid for every replicate")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("recipe", help="built-in recipe name or config file path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the recipe seed")
        p.add_argument("--lambda", dest="lambdas", type=float, nargs="+",
                       help="override the lambda grid")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("verify", help="run the oracle and property suites")
    p.add_argument("--out", help="directory for verify_report.txt")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-recipes":
            return _cmd_list(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_run(args, sweep=args.command == "sweep")
    except (ConfigError, ValueError) as exc:
        print(f"softquant: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
