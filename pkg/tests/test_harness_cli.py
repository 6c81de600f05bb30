import json
from pathlib import Path

import pytest

from fheatlab.cli import main
from fheatlab.config import scenario_from_dict
from fheatlab.errors import ConfigurationError, HypothesisError
from fheatlab.harness import (EXIT_ERROR, EXIT_FAIL, EXIT_OK, convergence_study, exit_code,
                              run_batch, run_scenario)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def gaussian(certs, scale=1.0, **over):
    d = {
        "name": "gauss",
        "space": {"dimension": 3, "warp": "euclidean", "r_max": 6.0},
        "equation": {"family": "logpower"},
        "initial": {"profile": "gaussian", "t_s": 0.1, "scale": scale},
        "grid": {"nodes": 65},
        "solver": {"dt": 4e-3},
        "window": {"t0": 0.3, "T": 0.2, "snapshot_every": 10},
        "certificates": certs,
    }
    d.update(over)
    return scenario_from_dict(d)


def constant(**over):
    d = {
        "name": "const",
        "space": {"dimension": 3, "warp": "hyperbolic", "curvature": 1.0, "r_max": 2.0},
        "equation": {"family": "logpower", "a": -1.0},
        "initial": {"profile": "constant", "c": 1.0},
        "grid": {"nodes": 33},
        "solver": {"dt": 0.05},
        "window": {"t0": 1.0, "T": 1.0},
    }
    d.update(over)
    return scenario_from_dict(d)


def test_minimal_run_passes(tmp_path):
    rep = run_scenario(gaussian([{"kind": "lemma21"}]), out_dir=tmp_path, figures=True)
    assert len(rep.certificates) == 1
    assert rep.certificates[0]["passed"] is True
    assert rep.exit_code() == EXIT_OK
    assert {"trajectory.csv", "trajectory.png"} <= set(rep.files)
    saved = json.loads((tmp_path / "certificates.json").read_text())
    assert "wall_clock" not in saved


def test_hypothesis_violation_is_embedded(tmp_path):
    rep = run_scenario(gaussian([{"kind": "lemma21"}], scale=4.0), out_dir=tmp_path, figures=False)
    cert = rep.certificates[0]
    assert cert["status"] == "hypothesis_error" and "u <= 1" in cert["error"]
    assert (tmp_path / "trajectory.csv").exists()
    assert rep.exit_code() == EXIT_ERROR


def test_static_precheck_aborts():
    with pytest.raises(ConfigurationError):
        run_scenario(gaussian([{"kind": "lemma31"}]))
    with pytest.raises(HypothesisError):
        run_scenario(gaussian([{"kind": "lemma41"}]))


def test_repeat_runs_identical(tmp_path):
    sc = gaussian([{"kind": "lemma21", "dump": True}, {"kind": "thm11", "R": 2.0}])
    run_scenario(sc, out_dir=tmp_path / "a", figures=False)
    run_scenario(sc, out_dir=tmp_path / "b", figures=False)
    assert (tmp_path / "a" / "certificates.json").read_bytes() == (tmp_path / "b" / "certificates.json").read_bytes()
    assert (tmp_path / "a" / "lemma21_residual.csv").exists()


def test_exit_code_precedence():
    assert exit_code([]) == EXIT_OK
    assert exit_code([{"passed": True}, {"passed": None, "status": "inconclusive"}]) == EXIT_OK
    assert exit_code([{"passed": False}, {"passed": True}]) == EXIT_FAIL
    assert exit_code([{"passed": False}, {"passed": None, "status": "hypothesis_error"}]) == EXIT_ERROR


def test_refinement_attached():
    rep = run_scenario(gaussian([{"kind": "thm11", "R": 2.0, "refine": True}]))
    ref = rep.certificates[0]["refinement"]
    assert ref["fine_nodes"] == 129 and ref["relative_drift"] < 0.1


def test_convergence_constant_exact():
    res = convergence_study(constant(), levels=3)
    assert res["reference"] == "self_convergence"
    assert all(row["error"] == 0.0 for row in res["levels"])
    assert [row["order"] for row in res["levels"][1:]] == ["exact", "exact"]


def test_convergence_gaussian_order(tmp_path):
    res = convergence_study(gaussian([]), levels=3, out_dir=tmp_path, figures=False)
    assert res["reference"] == "closed_form"
    assert res["levels"][-1]["order"] > 1.8
    assert (tmp_path / "convergence.csv").exists()


def test_convergence_needs_three_levels():
    with pytest.raises(ConfigurationError):
        convergence_study(constant(), levels=2)


def test_batch_writes_summary(tmp_path):
    summary = run_batch([SCENARIOS / "ode_constant.toml", SCENARIOS / "cutoff.toml"], tmp_path)
    assert set(summary) == {"ode_constant", "cutoff"}
    assert (tmp_path / "batch.json").exists()
    assert (tmp_path / "cutoff" / "certificates.json").exists()


# -- CLI -------------------------------------------------------------------

def test_cli_solve(tmp_path, capsys):
    code = main(["solve", "--config", str(SCENARIOS / "ode_constant.toml"), "--out", str(tmp_path),
                 "--no-figures"])
    assert code == EXIT_OK
    assert (tmp_path / "trajectory.csv").exists()
    out = capsys.readouterr().out
    assert out.startswith("== ode_constant") and out.rstrip().endswith("== end")


def test_cli_certify_kind_filter(capsys):
    code = main(["certify", "--config", str(SCENARIOS / "gaussian_heat.toml"), "--kind", "liyau",
                 "--refine", "0", "--no-figures"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "liyau" in out and "lemma21" not in out


def test_cli_cutoff(tmp_path, capsys):
    code = main(["cutoff", "--R", "1", "--tau", "0.5", "--eps", "0.75", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "cutoff.png").exists()
    text = capsys.readouterr().out
    body = text.split("== cutoff\n", 1)[1].rsplit("== end", 1)[0]
    assert json.loads(body)["C"] == pytest.approx(2.0)


def test_cli_flow_requires_flow_table(capsys):
    with pytest.raises(SystemExit) as info:
        main(["flow", "--config", str(SCENARIOS / "ode_constant.toml")])
    assert info.value.code == EXIT_ERROR


def test_cli_configuration_error(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[space]\ndimension = 3\nr_max = 1.0\nbogus = 1\n")
    assert main(["solve", "--config", str(bad)]) == EXIT_ERROR
    assert "bogus" in capsys.readouterr().err
