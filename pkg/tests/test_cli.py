import json

import numpy as np
import pytest

from treegibbs import __version__
from treegibbs.cli import main
from treegibbs.hammerstein import SampledDensity, chebyshev_w_grid
from treegibbs.kernel import ModelParams, basis
from treegibbs.reduction import apply_Vk, to_density


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("theta, count", [(0.5, 1), (0.9, 3)])
def test_verify_k2(capsys, theta, count):
    code, out, _ = run(capsys, "verify", "--k", "2", "--theta", str(theta))
    assert code == 0
    assert f"gibbs_measures={count}" in out and f"predicted={count}" in out
    assert out.startswith(f"# treegibbs {__version__}")


def test_verify_k3(capsys):
    code, out, _ = run(capsys, "verify", "--k", "3", "--theta", "0.8")
    assert code == 0 and "gibbs_measures=3" in out


def test_verify_rejects_k4(capsys):
    code, _, err = run(capsys, "verify", "--k", "4", "--theta", "0.5")
    assert code == 1 and "k = 2 or 3" in err


def test_usage_errors(capsys):
    assert run(capsys, "verify", "--k", "2", "--theta", "1.5")[0] == 1
    assert run(capsys, "verify", "--bogus")[0] == 1
    assert run(capsys, "sample", "--branch", "7", "--theta", "0.5")[0] == 1


def test_fixed_points_structured(tmp_path, capsys):
    out_file = tmp_path / "fp.json"
    code, _, _ = run(capsys, "fixed-points", "--k", "3", "--theta", "0.8", "--format", "structured", "--out", str(out_file))
    assert code == 0
    text = out_file.read_text()
    assert text.startswith("# treegibbs")
    data = json.loads("".join(l for l in text.splitlines(True) if not l.startswith("#")))
    assert data["count_positive"] == 3 and len(data["points"]) == 9


def test_fixed_points_newton_table(capsys):
    code, out, _ = run(capsys, "fixed-points", "--k", "4", "--theta", "0.7", "--method", "newton")
    assert code == 0 and "found" in out


def test_sweep_refine(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--k", "2", "--theta-min", "0.8", "--theta-max", "0.9", "--step", "0.01",
                       "--refine", "--out", str(out_file))
    assert code == 0
    est = float(out.split("threshold_estimate=")[1].split()[0])
    assert abs(est - 5 / 6) < 1e-6
    lines = out_file.read_text().splitlines()
    assert lines[-1].startswith("# threshold_estimate=")
    assert any(l.startswith("theta,count_positive") for l in lines)


def test_sweep_conjectural(tmp_path, capsys):
    out_file = tmp_path / "s.csv"
    code, out, _ = run(capsys, "sweep", "--k", "4", "--theta-min", "0.3", "--theta-max", "0.5", "--step", "0.05",
                       "--method", "newton", "--out", str(out_file))
    assert code == 0 and "conjectural" in out
    assert "conjectural" in out_file.read_text()


def test_sweep_to_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--k", "2", "--theta-min", "0.1", "--theta-max", "0.3", "--step", "0.1")
    assert code == 0 and "theta,count_positive" in out


def test_sample_deterministic(tmp_path, capsys):
    argv = ["sample", "--k", "2", "--theta", "0.9", "--branch", "1", "--depth", "2", "--n", "2000", "--seed", "4"]
    a = run(capsys, *argv)
    b = run(capsys, *argv, "--jobs", "2")
    assert a[0] == 0 and a[1] == b[1]
    assert "name,estimate,std_error" in a[1]
    out_file = tmp_path / "samples.csv"
    run(capsys, *argv, "--out", str(out_file))
    assert "sample,vertex,depth,spin" in out_file.read_text()


def test_sample_single_draw(capsys):
    code, out, _ = run(capsys, "sample", "--theta", "0.5", "--n", "1", "--depth", "1")
    assert code == 0 and "undefined" in out


def test_dlr_check(capsys):
    code, out, _ = run(capsys, "dlr-check", "--k", "2", "--theta", "0.9", "--branch", "1")
    assert code == 0 and "compatibility=" in out and "gibbs_vs_markov=" in out


def test_apply_roundtrip(tmp_path, capsys):
    grid = chebyshev_w_grid(129)
    phi = 1.0 + 0.3 * basis(grid)
    inp = tmp_path / "f.csv"
    inp.write_text(SampledDensity(grid, phi).to_csv("input"))
    out_file = tmp_path / "g.csv"
    code, _, _ = run(capsys, "apply", "--k", "2", "--theta", "0.5", "--input", str(inp), "--out", str(out_file))
    assert code == 0
    res = SampledDensity.from_csv(out_file.read_text())
    # 1 + 0.3 e(t) is the family member (c1, c2) = (1, 0.6) at theta = 0.5
    params = ModelParams(2, 0.5)
    expected = to_density(apply_Vk(params, (1.0, 0.6)), params)(grid)
    np.testing.assert_allclose(res.values, expected, atol=1e-12)
    code, _, _ = run(capsys, "apply", "--input", str(inp), "--normalized", "--out", str(out_file))
    assert code == 0


def test_apply_missing_file(capsys):
    assert run(capsys, "apply", "--input", "/nonexistent.csv")[0] == 1


def test_config_file(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# settings\nk=3\ntheta=0.8\n")
    code, out, _ = run(capsys, "--config", str(conf), "verify")
    assert code == 0 and "gibbs_measures=3" in out and "k=3" in out
    code, out, _ = run(capsys, "--config", str(conf), "verify", "--theta", "0.5")
    assert "gibbs_measures=1" in out
    conf.write_text("nonsense=1\n")
    assert run(capsys, "--config", str(conf), "verify")[0] == 1


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out
