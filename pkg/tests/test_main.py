import json

import numpy as np
import pytest

import main
import spectrahedra as sp
import steering


def run_cli(capsys, *argv):
    code = main.main(list(argv))
    return code, capsys.readouterr().out


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_pauli_subcommand(capsys):
    code, out = run_cli(capsys, "pauli", "--g", "3")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["vl"] == pytest.approx(np.sqrt(3), abs=1e-6)
    assert result["vq"] == pytest.approx(3.0, abs=1e-5)
    assert result["violation"] == pytest.approx(np.sqrt(3), abs=1e-5)
    assert result["assemblage_value"] == pytest.approx(3.0, abs=1e-9)


def test_value_on_zero_inequality(capsys, tmp_path):
    zero = steering.SteeringInequality.unbiased_from([np.zeros((2, 2))] * 2)
    path = write_json(tmp_path / "zero.json", zero.to_dict())
    code, out = run_cli(capsys, "value", "--input", path)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["vl"] == 0
    assert result["vq"] == 0
    assert result["violation"] == 1


def test_value_with_seesaw(capsys, tmp_path, paulis):
    sx, _, sz = paulis
    path = write_json(tmp_path / "f.json", steering.SteeringInequality.unbiased_from([sx, sz]).to_dict())
    code, out = run_cli(capsys, "value", "--input", path, "--seesaw-n", "2", "--restarts", "3")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["vq"] == pytest.approx(2.0, abs=1e-5)
    assert result["seesaw"] <= result["vq"] + 1e-6
    assert result["seesaw"] >= np.sqrt(2) - 1e-9


def test_tau_single_dimension(capsys):
    code, out = run_cli(capsys, "--samples", "2000", "tau", "--d", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["config"]["samples"] == 2000
    result = payload["result"]
    assert result["closed"] == 0.5
    assert isinstance(result["closed"], float)
    assert result["closed_exact"] == "1/2"
    assert result["k_argmin"] == 1
    assert result["k_expected"] is True


def test_tau_sweep_csv(capsys):
    code, out = run_cli(capsys, "--format", "csv", "tau", "--d-max", "6")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# config ")
    assert lines[1] == "d,closed,closed_exact,inverse,asymptotic_ratio"
    assert len(lines) == 8
    assert lines[5].startswith("4,0.375,3/8,")


def test_csv_carries_config_and_seed(capsys):
    code, out = run_cli(capsys, "--seed", "17", "--samples", "2000", "--format", "csv", "tau", "--d", "3")
    assert code == 0
    first, header = out.splitlines()[:2]
    config_row = json.loads(first[len("# config "):])
    assert config_row["seed"] == 17
    assert config_row["samples"] == 2000
    assert config_row["subcommand"] == "tau"
    assert config_row["options"]["d"] == 3
    assert header.split(",")[:3] == ["d", "closed", "closed_exact"]


def test_missing_input_file_exits_with_two(capsys, tmp_path):
    code, out = run_cli(capsys, "value", "--input", str(tmp_path / "missing.json"))
    assert code == 2
    assert json.loads(out)["stage"] == "input"


def test_malformed_input_exits_with_two(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    code, out = run_cli(capsys, "lhs", "--input", str(path))
    assert code == 2
    assert json.loads(out)["type"] == "InputError"


def test_too_few_samples_exits_with_two(capsys):
    code, _ = run_cli(capsys, "--samples", "10", "tau", "--d", "2")
    assert code == 2


def test_inclusion_over_budget_exits_with_one(capsys, tmp_path):
    tup = sp.SpectrahedronTuple.from_monic([np.eye(8)] * 5)
    path = write_json(tmp_path / "big.json", tup.to_dict())
    code, out = run_cli(capsys, "inclusion", "--input", path)
    assert code == 1
    assert json.loads(out)["stage"] == "compute"


def test_inclusion_subcommand(capsys, tmp_path, paulis):
    sx, sy, _ = paulis
    tup = sp.SpectrahedronTuple.from_monic([sx / np.sqrt(2), sy / np.sqrt(2)])
    path = write_json(tmp_path / "pair.json", tup.to_dict())
    code, out = run_cli(capsys, "inclusion", "--input", path)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["max_scale"] == pytest.approx(1 / np.sqrt(2), abs=1e-5)
    assert result["level1_cube_in"] is True


def test_lhs_and_robustness(capsys, tmp_path, paulis):
    sx, _, sz = paulis
    povms = steering.PovmCollection.from_observables([sx, sz])
    omega = np.eye(2).reshape(-1) / np.sqrt(2)
    rho = np.outer(omega, omega)
    assemblage = steering.assemblage_from_state(rho, povms)
    path = write_json(tmp_path / "a.json", assemblage.to_dict())
    code, out = run_cli(capsys, "lhs", "--input", path)
    assert code == 0
    assert json.loads(out)["result"]["has_lhs"] == "no"

    code, out = run_cli(capsys, "robustness", "--input", path)
    assert code == 0
    assert json.loads(out)["result"]["threshold"] == pytest.approx(1 / np.sqrt(2), abs=2e-4)

    code, _ = run_cli(capsys, "robustness", "--input", path, "--direction", "1", "1", "1")
    assert code == 2


def test_region_random_corpus(capsys):
    code, out = run_cli(capsys, "region", "--random", "2", "--angles", "3")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["instances"] == 3
    assert len(result["rows"]) == 3
    for row in result["rows"]:
        assert row["upper_bound"] >= row["tau_star"] - 1e-5


def test_region_unbounded_direction_is_null(capsys, tmp_path, paulis):
    sx, _, _ = paulis
    tup = sp.SpectrahedronTuple.from_monic([np.zeros((2, 2)), sx])
    path = write_json(tmp_path / "half.json", [tup.to_dict()])
    code, out = run_cli(capsys, "region", "--input", path, "--angles", "3")
    assert code == 0
    rows = json.loads(out)["result"]["rows"]
    assert [row["u1"] for row in rows][0] == 1.0
    # along u = (1, 0) the scaled tuple vanishes and every scale is admissible
    assert rows[0]["upper_bound"] is None
    assert rows[1]["upper_bound"] == pytest.approx(np.sqrt(2), abs=1e-5)
    assert rows[2]["upper_bound"] == pytest.approx(1.0, abs=1e-5)


def test_region_unbounded_direction_in_csv(capsys, tmp_path, paulis):
    sx, _, _ = paulis
    tup = sp.SpectrahedronTuple.from_monic([np.zeros((2, 2)), sx])
    path = write_json(tmp_path / "half.json", tup.to_dict())
    code, out = run_cli(capsys, "--format", "csv", "region", "--input", path, "--angles", "2")
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[1].split(",")
    first = lines[2].split(",")
    assert first[header.index("upper_bound")] == ""


def test_netopt_csv(capsys):
    code, out = run_cli(capsys, "--format", "csv", "netopt", "--K", "4", "8", "--pool", "200")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# config ")
    assert lines[1] == "K,seeds,delta,vq_lower,vl_upper,ratio,certified"
    assert [line.split(",")[0] for line in lines[2:]] == ["4", "8"]
    for line in lines[2:]:
        _, _, delta, vq, vl, ratio, certified = line.split(",")
        assert float(vq) / float(vl) == pytest.approx(float(ratio), rel=1e-9)
        assert 0 < float(ratio) <= 2 + 1e-6
        assert certified == "True"


@pytest.mark.slow
def test_netopt_ratio_grows_with_net_size(capsys):
    code, out = run_cli(capsys, "netopt", "--d", "2", "--K", "4", "8", "16", "32", "--seeds", "5")
    assert code == 0
    result = json.loads(out)["result"]
    ratios = [row["ratio"] for row in result["rows"]]
    assert result["cap"] == pytest.approx(2.0)
    assert all(a <= b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 1.3
    assert max(ratios) <= result["cap"] + 1e-6


def test_region_angles_need_two_settings(capsys):
    code, _ = run_cli(capsys, "region", "--g", "3", "--d", "2", "--random", "1")
    assert code == 2


def test_repeated_runs_are_byte_identical(capsys):
    argv = ("--seed", "5", "--samples", "3000", "tau", "--d", "3")
    first = run_cli(capsys, *argv)
    second = run_cli(capsys, *argv)
    assert first == second


def test_out_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out = run_cli(capsys, "--out", str(target), "pauli", "--g", "2")
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["result"]["g"] == 2


def test_run_config_validation():
    with pytest.raises(main.InputError):
        main.RunConfig("value").validate()
    with pytest.raises(main.InputError):
        main.RunConfig("nope").validate()
    cfg = main.RunConfig("pauli", seed=3)
    cfg.validate()
    assert cfg.to_dict()["seed"] == 3
