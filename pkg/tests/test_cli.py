import json

import numpy as np
import pytest

from vnsim import build_basis, commutator_coeffs
from vnsim.cli import main
from vnsim.models import DriveTerm, ModelSpec, save_model


def run_cli(*args):
    return main([str(a) for a in args])


def test_constants_single_site(tmp_path, capsys):
    assert run_cli("constants", "--sites", 1) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "k,i,j,c"
    rows = [tuple(line.split(",")) for line in out[1:]]
    assert len(rows) == 6
    assert ("2", "3", "4", "2") in rows
    assert ("4", "3", "2", "-2") in rows
    assert all(r[0] != "1" and r[1] != "1" and r[2] != "1" for r in rows)


def test_constants_two_sites_matches_brute_force(tmp_path):
    out = tmp_path / "constants.csv"
    assert run_cli("constants", "--sites", 2, "--out", out) == 0
    rows = out.read_text().splitlines()[1:]
    basis = build_basis(2)
    expected = 0
    for k in range(16):
        for i in range(16):
            expected += len(commutator_coeffs(k, i, basis))
    assert len(rows) == expected


def test_evolve_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert (
        run_cli(
            "evolve", "--model", "example1", "--method", "oracle",
            "--dt", 0.001, "--t-final", 2.0, "--stride", 100, "--out", out,
        )
        == 0
    )
    coeffs = (out / "coeffs.csv").read_text().splitlines()
    assert coeffs[0].startswith("# config: ")
    assert coeffs[1] == "t,c1,c2,c3,c4"
    assert len(coeffs) == 2 + 21
    obs_lines = (out / "observables.csv").read_text().splitlines()
    assert obs_lines[1] == "t,P_L,P_H,S_z"
    for line in obs_lines[2:]:
        vals = [float(v) for v in line.split(",")]
        assert vals[1] + vals[2] == pytest.approx(1.0, abs=1e-8)


def test_evolve_circuit_shots_outputs(tmp_path):
    out = tmp_path / "shots"
    assert (
        run_cli(
            "evolve", "--model", "example1", "--method", "circuit_shots",
            "--dt", 0.01, "--t-final", 0.5, "--stride", 10,
            "--shots", 4096, "--seed", 7, "--out", out,
        )
        == 0
    )
    est = (out / "estimates.csv").read_text().splitlines()
    assert est[1] == "t,i,coeff,stderr"
    assert len(est) == 2 + 6 * 4
    first = est[2].split(",")
    assert float(first[3]) > 0.0


def test_evolve_determinism(tmp_path):
    args = [
        "evolve", "--model", "example2", "--method", "circuit_shots",
        "--dt", 0.01, "--t-final", 0.3, "--stride", 10,
        "--shots", 2048, "--seed", 99,
    ]
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert run_cli(*args, "--out", out_a) == 0
    assert run_cli(*args, "--out", out_b) == 0
    for name in ("coeffs.csv", "observables.csv", "estimates.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_compare_report_and_determinism(tmp_path, capsys):
    args = [
        "compare", "--model", "example1",
        "--methods", "oracle,classical_ode,lie_euler",
        "--dt", 0.002, "--t-final", 1.0, "--stride", 50,
    ]
    out_a = tmp_path / "ra"
    out_b = tmp_path / "rb"
    assert run_cli(*args, "--out", out_a) == 0
    assert run_cli(*args, "--out", out_b) == 0
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
    report = json.loads((out_a / "report.json").read_text())
    assert report["reference"] == "oracle"
    assert report["methods"]["classical_ode"]["max_abs_vs_reference"] <= 1e-6
    assert report["methods"]["oracle"]["max_abs_vs_reference"] == 0.0
    assert "observable_max_abs" in report["methods"]["lie_euler"]
    assert report["notes"]
    text = capsys.readouterr().out
    assert "reference: oracle" in text


def test_compare_circuit_exact_embedding(tmp_path):
    out = tmp_path / "emb"
    assert run_cli(
        "compare", "--model", "example2", "--methods", "lie_euler,circuit_exact",
        "--dt", 0.005, "--t-final", 0.5, "--stride", 20, "--out", out,
    ) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["reference"] == "lie_euler"
    assert report["methods"]["circuit_exact"]["max_abs_vs_reference"] <= 1e-9


def test_compare_assert_mode(tmp_path):
    tol_ok = tmp_path / "ok.json"
    tol_ok.write_text(json.dumps({"classical_ode": 1e-6}))
    tol_bad = tmp_path / "bad.json"
    tol_bad.write_text(json.dumps({"lie_euler": 1e-12}))
    base = [
        "compare", "--model", "example1", "--methods", "oracle,classical_ode,lie_euler",
        "--dt", 0.002, "--t-final", 0.5, "--stride", 50,
    ]
    assert run_cli(*base, "--assert", tol_ok) == 0
    assert run_cli(*base, "--assert", tol_bad) == 4


def test_config_errors(tmp_path):
    assert run_cli("evolve", "--model", "nope-model", "--method", "oracle",
                   "--t-final", 1.0, "--out", tmp_path / "x") == 2
    assert run_cli("evolve", "--model", "example1", "--method", "circuit_shots",
                   "--t-final", 1.0, "--out", tmp_path / "x") == 2
    assert run_cli("evolve", "--model", "example1", "--method", "oracle",
                   "--dt", -1.0, "--t-final", 1.0, "--out", tmp_path / "x") == 2
    assert run_cli("compare", "--model", "example1", "--methods", "oracle",
                   "--t-final", 1.0) == 2


def test_singularity_exit_code(tmp_path):
    # constant drive on the middle generator alone degenerates the frame at
    # t = pi/4; the step size lands an integration stage on it exactly
    spec = ModelSpec(
        name="gimbal",
        n_sites=1,
        terms=[DriveTerm(index=3, constant=1.0)],
        initial_kind="coeffs",
        initial_data=np.array([0.5, 0.0, 0.0, -0.5]),
    )
    path = tmp_path / "gimbal.json"
    save_model(spec, str(path))
    code = run_cli(
        "evolve", "--model", path, "--method", "alpha_exact",
        "--dt", np.pi / 400, "--t-final", 1.0, "--out", tmp_path / "g",
    )
    assert code == 3


def test_default_dt_follows_angle_budget(tmp_path):
    out = tmp_path / "auto"
    assert run_cli("evolve", "--model", "example1", "--method", "lie_euler",
                   "--t-final", 0.5, "--out", out) == 0
    header = (out / "coeffs.csv").read_text().splitlines()[0]
    cfg = json.loads(header.split("# config: ")[1])
    # example1 peak drive is ~0.5 + harmonics, so dt stays near 0.05/peak
    assert 0.0 < cfg["dt"] <= 0.05 / 0.5 + 1e-9
