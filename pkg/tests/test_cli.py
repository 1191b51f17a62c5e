import csv
import subprocess
import sys

import numpy as np
import pytest

from ttdensity import __version__
from ttdensity.cli import main
from ttdensity.experiments import ConfigError, ExperimentConfig, run_experiment


def _rows(path):
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def _without_timestamp(path):
    return [ln for ln in path.read_text(encoding="utf-8").splitlines()
            if not ln.startswith("# generated")]


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    for name in ("svd-cross", "quadratic", "gauss-ranks", "grid-transform"):
        assert main([name, "--out", str(base / "a")]) == 0
    return base / "a"


def test_every_file_has_a_header(outputs):
    files = [p for p in outputs.rglob("*") if p.is_file()]
    assert len(files) > 30
    for path in files:
        head = path.read_text(encoding="utf-8").splitlines()[:3]
        assert head[0].startswith(f"# ttdensity {__version__} experiment=")
        assert head[1].startswith("# config {")
        assert head[2].startswith("# generated ")


def test_rank_table_rows(outputs):
    rows = {r[0]: r[1:] for r in _rows(outputs / "quadratic" / "quadratic_ranks.csv")[1:]}
    assert rows["full"] == ["1", "3", "4", "3", "1"]
    assert rows["∅"] == ["1", "2", "2", "2", "1"]
    assert rows["(1,3), (2,4)"] == ["1", "3", "4", "3", "1"]
    assert len(rows) == 9


def test_gaussian_rank_table(outputs):
    rows = {r[0]: r[1:6] for r in _rows(outputs / "gauss-ranks" / "gaussian_ranks.csv")[1:]}
    assert rows["∅"] == ["1", "1", "1", "1", "1"]
    assert rows["(1,4)"] == ["1", "10", "10", "10", "1"]
    assert rows["(1,4), (2,3)"] == ["1", "10", "55", "10", "1"]
    text = (outputs / "gauss-ranks" / "hadamard.txt").read_text().splitlines()[-1]
    assert text == "[1,10,10,1,1]x[1,1,10,10,1]->[1,10,100,10,1]->rounded[1,10,55,10,1]"


def test_svd_cross_outputs(outputs):
    d = outputs / "svd-cross"
    sv = _rows(d / "singular_values.csv")
    assert sv[0] == ["index", "sigma"]
    sigma = np.array([float(r[1]) for r in sv[1:]])
    assert np.all(np.diff(sigma) <= 0)
    for method in ("svd", "cross"):
        for r in range(1, 5):
            for name in ("approximation", "update", "error"):
                M = np.array(_rows(d / f"{method}_r{r}_{name}.csv"), dtype=float)
                assert M.shape == (66, 41)
    pivots = _rows(d / "cross_pivots.csv")
    assert pivots[0] == ["order", "row_index", "col_index", "x1", "x2"]
    assert len(pivots) == 5


def test_grid_transform_outputs(outputs):
    d = outputs / "grid-transform"
    for kind in ("symmetric", "cholesky", "eigen"):
        spectra = _rows(d / f"spectra_{kind}.csv")
        assert spectra[0] == ["index", "sigma_original", "sigma_exact_resample",
                              "sigma_interpolated"]
        M = np.array(_rows(d / f"interpolated_{kind}.csv"), dtype=float)
        assert M.shape == (61, 61)
        assert M.sum() * 0.01 == pytest.approx(1.0, rel=1e-12)
        grid_rows = _rows(d / f"grid_{kind}.csv")
        assert len(grid_rows) == 1 + 61 * 61


def test_reruns_are_identical_apart_from_timestamp(outputs, tmp_path):
    for name in ("svd-cross", "quadratic", "gauss-ranks", "grid-transform"):
        assert main([name, "--out", str(tmp_path)]) == 0
    for path in outputs.rglob("*"):
        if path.is_file():
            other = tmp_path / path.relative_to(outputs)
            assert _without_timestamp(path) == _without_timestamp(other), path.name


def test_root_flag_limits_kinds(tmp_path):
    assert main(["grid-transform", "--root", "eigen", "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in (tmp_path / "grid-transform").iterdir())
    assert names == ["grid_eigen.csv", "interpolated_eigen.csv", "moments_eigen.csv",
                     "spectra_eigen.csv"]


def test_identity_override_makes_resampling_exact(tmp_path):
    cfg = ExperimentConfig(name="grid-transform", out=tmp_path, root="symmetric",
                           overrides={"moments": "identity", "target": "source"})
    summary = run_experiment(cfg)["kinds"]["symmetric"]
    np.testing.assert_allclose(summary["interpolated_tensor"], summary["exact_tensor"],
                               rtol=1e-13, atol=1e-300)


def test_stochastic_pivots_depend_on_seed_only(tmp_path):
    for out in ("a", "b"):
        assert main(["svd-cross", "--pivot", "stochastic", "--seed", "4",
                     "--out", str(tmp_path / out)]) == 0
    a = _rows(tmp_path / "a" / "svd-cross" / "cross_pivots.csv")
    b = _rows(tmp_path / "b" / "svd-cross" / "cross_pivots.csv")
    assert a == b


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["quadratic", "--set", "bogus=1"],
    ["quadratic", "--set", "novalue"],
    ["quadratic", "--eps", "2"],
    ["quadratic", "--grid-step", "-0.1"],
    ["grid-transform", "--root", "qr"],
    ["grid-transform", "--set", "moments=other"],
    ["svd-cross", "--set", "r_max=0"],
    ["svd-cross", "--set", "sigma_r=abc"],
])
def test_configuration_errors_exit_one(tmp_path, argv, capsys):
    # argparse rejections exit through SystemExit, the rest return the code
    try:
        code = main(argv + ["--out", str(tmp_path)])
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


def test_numerical_failure_exits_two(tmp_path, capsys):
    # a density that underflows to zero leaves no pivot for the cross
    assert main(["svd-cross", "--set", "mu_r=1000", "--out", str(tmp_path)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_config_validation_directly():
    with pytest.raises(ConfigError):
        ExperimentConfig(name="quadratic", seed=-1)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ttdensity", "quadratic", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "quadratic" / "quadratic_ranks.csv").exists()
