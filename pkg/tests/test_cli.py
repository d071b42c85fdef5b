import csv
import textwrap

import numpy as np
import pytest

from softquant import cli
from softquant.recipes import BUILTIN_RECIPES, ConfigError, ExperimentRecipe, load_config
from softquant.verify import format_report, run_verification

SMALL = textwrap.dedent(
    """
    [tiny-normal]
    source = normal1d
    mu = 1
    sigma = 2
    m = 3
    lambdas = 0, 5
    iterations = 3000
    batch_size = 4
    init = quantile
    replicates = 2
    outputs = final_state, cdf, trajectory
    snapshot_every = 1000

    [tiny-square]
    source = uniform_box
    lo = 0, 0
    hi = 2, 1
    m = 2
    lambdas = 0.1
    iterations = 500
    lr_offset = 10
    outputs = final_state, tessellation_grid
    """
)


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "recipes.ini"
    path.write_text(SMALL)
    return str(path)


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_list_recipes(capsys):
    assert cli.main(["list-recipes"]) == 0
    out = capsys.readouterr().out
    for name in BUILTIN_RECIPES:
        assert name in out


def test_builtin_grids():
    assert BUILTIN_RECIPES["normal1d-m8"].lambda_grid == (0.0, 1.0, 10.0)
    assert BUILTIN_RECIPES["exp1-m8"].lambda_grid == (0.0, 0.5, 1.0, 10.0)
    assert BUILTIN_RECIPES["uniform2d-m16"].lambda_grid == (0.0, 0.037, 0.1, 1.0)
    assert not BUILTIN_RECIPES["mvnormal2d-m100"].gated
    assert BUILTIN_RECIPES["mvnormal2d-m100"].base.m == 100


def test_config_parsing(config):
    recipes = load_config(config)
    r = recipes["tiny-normal"]
    assert r.base.source.kind == "normal1d" and r.base.m == 3
    assert r.lambda_grid == (0.0, 5.0) and r.seeds == (0, 1)
    assert recipes["tiny-square"].base.lr_offset == 10.0
    assert recipes["tiny-square"].base.source.dim == 2


def test_sweep_outputs(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["sweep", config, "--out", str(out)]) == 0
    rows = read(out / "summary.csv")
    assert tuple(rows[0]) == cli.SUMMARY_COLUMNS
    assert len(rows) == 1 + 2 * 2 + 1
    final = read(out / "tiny-normal_lam5_seed1_final.csv")
    assert final[0] == ["atom_index", "x0", "weight"] and len(final) == 4
    assert np.isclose(sum(float(r[2]) for r in final[1:]), 1)
    traj = read(out / "tiny-normal_lam0_seed0_trajectory.csv")
    assert traj[0] == ["iteration", "atom_index", "x0", "weight"]
    assert sorted({int(r[0]) for r in traj[1:]}) == [0, 1000, 2000, 3000]
    cdf = read(out / "tiny-normal_lam0_seed0_cdf.csv")
    assert cdf[0] == ["location", "cumulative"] and float(cdf[-1][1]) == 1.0
    grid = read(out / "tiny-square_lam0.1_seed0_tessellation.csv")
    assert grid[0] == ["x0", "x1", "atom", "probability"] and len(grid) == 1 + cli.GRID_SIDE**2
    summary = (out / "tiny-normal_lam5_seed0_summary.txt").read_text()
    assert "distinct_count: " in summary and "atoms_weight_gt_1e-6: " in summary


def test_rerun_is_byte_identical(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["sweep", config, "--out", str(a)])
    cli.main(["sweep", config, "--out", str(b), "--jobs", "2"])
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_run_overrides(config, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", config, "--out", str(out), "--seed", "7", "--lambda", "2"]) == 0
    rows = read(out / "summary.csv")[1:]
    assert {(r[0], r[1], r[2]) for r in rows} == {("tiny-normal", "2.0", "7"),
                                                   ("tiny-square", "2.0", "7")}


def test_summary_row_contents(config):
    recipe = load_config(config)["tiny-normal"]
    row = cli.run_point(recipe, 50.0, 0).row
    assert row["distinct_count"] == 1 and row["center_distance"] < 0.1
    assert row["final_objective_at_lambda"] >= row["final_objective_at_zero"] - 1e-12


@pytest.mark.parametrize(
    "text",
    [
        "[x]\nsource = normal1d\nm = 2\nlambdas = 1, 0\n",
        "[x]\nsource = normal1d\nm = 2\nlambdas =\n",
        "[x]\nsource = cauchy\nm = 2\nlambdas = 1\n",
        "[x]\nsource = normal1d\nm = 2\nlambdas = 1\nfoo = 3\n",
        "[x]\nsource = normal1d\nlambdas = 1\n",
        "[x]\nsource = normal1d\nm = 2\nlambdas = 1\nlr_exponent = 0.5\n",
        "[x]\nsource = normal1d\nm = 2\nlambdas = 1\noutputs = movie\n",
        "[x]\nsource = mvnormal\nmean = 0 0\ncov = 1 2; 2 1\nm = 2\nlambdas = 1\n",
        "no sections here\n",
    ],
)
def test_config_errors(text, tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(str(path))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_recipe(tmp_path):
    assert cli.main(["run", "no-such-recipe", "--out", str(tmp_path)]) == 2


def test_recipe_invariants():
    base = BUILTIN_RECIPES["normal1d-m8"].base
    with pytest.raises(ConfigError):
        ExperimentRecipe("x", base, ())
    with pytest.raises(ConfigError):
        ExperimentRecipe("x", base, (1.0,), replicates=0)


def test_verify_passes_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["verify", "--out", str(a), "--seed", "5"]) == 0
    assert cli.main(["verify", "--out", str(b), "--seed", "5"]) == 0
    ra, rb = (a / "verify_report.txt").read_text(), (b / "verify_report.txt").read_text()
    assert ra == rb and "status: pass" in ra


def test_verify_catches_mutation(monkeypatch, capsys):
    def no_lambda(x):
        return float(sum(p * -np.log(np.dot(x.Q, np.exp(-c / x.lam))) for p, c in zip(x.P, x.cost)))

    monkeypatch.setattr(cli, "run_verification",
                        lambda seed: run_verification(seed, closed_form=no_lambda))
    assert cli.main(["verify"]) == 1
    out = capsys.readouterr().out
    assert "FAIL: closed_form_vs_brute_force" in out and "status: fail" in out


def test_report_format():
    report, ok = format_report(run_verification(seed=1, n_instances=5), 1)
    assert ok and report.splitlines()[0] == "seed: 1"
