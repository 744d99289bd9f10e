import json

import pytest
from click.testing import CliRunner

from gapstates.cli import main


def write_config(tmp_path, **overrides):
    doc = {
        "schema_version": 1,
        "problem": {
            "d": 1,
            "potential": {"kind": "zero"},
            "perturbation": {"bumps": [
                {"kind": "box", "amplitude": 1.0, "half_width": 0.5}]},
            "gammas": [-0.2, -0.1],
        },
        "numerics": {"box_half_width": 20, "h": 0.03125,
                     "momentum_grid": 33, "n_lambda": 13,
                     "n_branches": 2, "n_want": 2, "n_bands": 3},
    }
    for key, val in overrides.items():
        section, name = key.split(".")
        doc[section][name] = val
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, cmd, cfg, out):
    return runner.invoke(main, [cmd, "--config", str(cfg), "--out", str(out)])


def test_bands_gap_predict_pipeline(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    for cmd, artifact in (("bands", "bands.csv"), ("gap", "gap.json"),
                          ("edge", "edge.json"), ("predict", "predict.csv")):
        res = run(runner, cmd, cfg, out)
        assert res.exit_code == 0, res.output
        assert (out / artifact).exists()
        assert (out / "manifest.json").exists()
    gap_doc = json.loads((out / "gap.json").read_text())
    assert gap_doc["lambda_minus"] is None            # semi-infinite gap
    assert 0.0 <= gap_doc["lambda_plus"] <= 1e-6      # refined free edge -> 0
    lines = (out / "predict.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["gamma", "k", "rho_pred"]
    assert len(lines) == 3                            # header + two gammas


def test_pencil_oracle_compare(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    res = run(runner, "pencil", cfg, out)
    assert res.exit_code == 0, res.output
    assert (out / "branches.csv").exists() and (out / "pencil_roots.csv").exists()
    res = run(runner, "compare", cfg, out)
    assert res.exit_code == 0, res.output
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["n_pairs"] >= 2
    assert verdict["pencil_oracle_within_1e-8"]


def test_exit_code_2_on_config_errors(runner, tmp_path):
    out = tmp_path / "out"
    missing = tmp_path / "nope.json"
    assert run(runner, "bands", missing, out).exit_code == 2
    bad = write_config(tmp_path, **{"numerics.n_lamda": 11})
    assert run(runner, "bands", bad, out).exit_code == 2


def test_exit_code_3_on_numerical_failure(runner, tmp_path):
    # the free problem has no finite gap, so gap_index 3 cannot be located
    cfg = write_config(tmp_path, **{"numerics.gap_index": 3})
    res = run(runner, "gap", cfg, tmp_path / "out")
    assert res.exit_code == 3


def test_reruns_are_byte_identical(runner, tmp_path):
    cfg = write_config(tmp_path)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run(runner, "pencil", cfg, out).exit_code == 0
        outs.append(out)
    for artifact in ("branches.csv", "pencil_roots.csv"):
        assert (outs[0] / artifact).read_bytes() == \
            (outs[1] / artifact).read_bytes()


def test_green_check(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    res = run(runner, "green-check", cfg, out)
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "green_check.json").read_text())
    assert doc["ok"] and doc["checks"]["scaling_identity"]["ok"]
