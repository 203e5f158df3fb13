import json
import math

import dotenv
import pytest
from click.testing import CliRunner

from concurrence_classes.cli import main, run_sweep
from concurrence_classes.concurrence import DEFAULT_POLICY
from concurrence_classes.errors import ConfigError
from concurrence_classes.states import (
    Ensemble,
    ghz_state,
    product_state,
    random_ensemble,
    save_state,
    w_state,
)

INV_SQRT3 = 1 / math.sqrt(3)
W3 = {
    "kind": "pure",
    "qubits": 3,
    "amplitudes": [[0, 0], [INV_SQRT3, 0], [INV_SQRT3, 0], [0, 0], [INV_SQRT3, 0], [0, 0], [0, 0], [0, 0]],
}


def _invoke(*args):
    return CliRunner().invoke(main, list(args))


def _machine(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


def test_compute_w3_machine(state_file):
    path = state_file(W3)
    data = _machine(_invoke("compute", "--in", str(path), "--classes", "W,GHZ", "--format", "machine"))
    assert data["kind"] == "pure"
    assert data["qubits"] == 3
    by_class = {entry["class"]: entry for entry in data["results"]}
    assert by_class["W"]["aggregate"] == pytest.approx(1.0)
    assert by_class["GHZ"]["aggregate"] == pytest.approx(0.0, abs=1e-12)
    assert [op["indices"] for op in by_class["W"]["operators"]] == [[1, 2], [1, 3], [2, 3]]


def test_compute_machine_output_is_deterministic(state_file):
    path = state_file(W3)
    first = _invoke("compute", "--in", str(path), "--format", "machine")
    second = _invoke("compute", "--in", str(path), "--format", "machine")
    assert first.stdout == second.stdout


def test_compute_default_classes_for_pure_three_qubits(state_file):
    path = state_file(W3)
    data = _machine(_invoke("compute", "--in", str(path), "--format", "machine"))
    assert [entry["class"] for entry in data["results"]] == ["W", "GHZ", "Overall"]


def test_compute_human_output_uses_one_two_labels(state_file):
    result = _invoke("compute", "--in", str(state_file(W3)), "--classes", "W")
    assert result.exit_code == 0, result.output
    assert "|1,1,2⟩" in result.stdout
    assert "aggregate" in result.stdout


def test_compute_ensemble_two_qubits(tmp_path):
    path = tmp_path / "ens.json"
    save_state(random_ensemble(2, 2, seed=4), path)
    data = _machine(_invoke("compute", "--in", str(path), "--format", "machine"))
    assert data["kind"] == "ensemble"
    classes = [entry["class"] for entry in data["results"]]
    assert classes == ["W", "Wootters", "EoF"]
    by_class = {entry["class"]: entry for entry in data["results"]}
    assert by_class["W"]["aggregate"] == pytest.approx(by_class["Wootters"]["aggregate"])


def test_compute_optimize_ghz(tmp_path):
    path = tmp_path / "ghz.json"
    save_state(ghz_state(3), path)
    data = _machine(
        _invoke("compute", "--in", str(path), "--classes", "GHZ", "--optimize",
                "--restarts", "2", "--iters", "20", "--seed", "3", "--format", "machine")
    )
    entry = data["results"][0]
    assert entry["optimized"] is True
    assert entry["optimizer"]["seed"] == 3
    assert entry["aggregate"] == pytest.approx(1.0)


def test_compute_norm_override(state_file):
    path = state_file(W3)
    data = _machine(_invoke("compute", "--in", str(path), "--classes", "W", "--norm-w", "1", "--format", "machine"))
    assert data["results"][0]["aggregate"] == pytest.approx(math.sqrt(4 / 3))


def test_compute_ghz_ensemble(tmp_path):
    path = tmp_path / "ghz_mix.json"
    save_state(Ensemble(((0.75, ghz_state(3)), (0.25, ghz_state(3, sign=-1)))), path)
    data = _machine(_invoke("compute", "--in", str(path), "--classes", "GHZ", "--format", "machine"))
    entry = data["results"][0]
    assert entry["aggregation_rule"] == "MaxOverOperators"
    assert entry["aggregate"] == pytest.approx(0.5, abs=1e-9)


def test_compute_product_state_all_zero(tmp_path):
    path = tmp_path / "product.json"
    save_state(product_state([[1, 0], [0.6, 0.8], [0, 1], [1, 0]]), path)
    data = _machine(_invoke("compute", "--in", str(path), "--format", "machine"))
    assert len(data["results"]) == 4
    for entry in data["results"]:
        assert entry["aggregate"] == pytest.approx(0.0, abs=1e-12)


def test_compute_malformed_input_exit_code(state_file, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json", encoding="utf-8")
    assert _invoke("compute", "--in", str(bad)).exit_code == 2
    missing = state_file({"kind": "pure", "qubits": 3})
    assert _invoke("compute", "--in", str(missing)).exit_code == 2


def test_compute_contract_violation_exit_code(state_file):
    unnormalized = dict(W3, amplitudes=[[1, 0]] * 8)
    assert _invoke("compute", "--in", str(state_file(unnormalized))).exit_code == 3
    assert _invoke("compute", "--in", str(state_file(W3)), "--classes", "GHZSub").exit_code == 3


def test_compute_rejects_unknown_class(state_file):
    result = _invoke("compute", "--in", str(state_file(W3)), "--classes", "Bogus")
    assert result.exit_code == 2


def test_compute_rejects_non_positive_override(state_file):
    result = _invoke("compute", "--in", str(state_file(W3)), "--norm-ghz", "0")
    assert result.exit_code == 2


def test_sweep_ghz_mix_machine():
    data = _machine(_invoke("sweep", "ghz-mix-q", "--points", "5", "--format", "machine"))
    assert data["columns"] == ["q", "aggregate"]
    values = [row["aggregate"] for row in data["rows"]]
    assert values == pytest.approx([1.0, 0.5, 0.0, 0.5, 1.0], abs=1e-9)


def test_sweep_w_m_human():
    result = _invoke("sweep", "w-m", "--max-m", "4")
    assert result.exit_code == 0, result.output
    assert "1.0000000000" in result.stdout


def test_sweep_unknown_name():
    assert _invoke("sweep", "nope").exit_code == 2


def test_run_sweep_frames():
    frame = run_sweep("w-m", DEFAULT_POLICY, max_m=6)
    assert list(frame["m"]) == [2, 3, 4, 5, 6]
    assert frame["aggregate"].tolist() == pytest.approx([1.0] * 5)
    with pytest.raises(ConfigError):
        run_sweep("ghz-mix-q", DEFAULT_POLICY, points=1)


def test_verify_quick_machine():
    data = _machine(
        _invoke("verify", "--quick", "--restarts", "16", "--iters", "400", "--format", "machine")
    )
    assert data["passed"] is True
    assert all(check["passed"] for check in data["checks"])


def test_verify_failure_exit_code():
    result = _invoke("verify", "--quick", "--norm-w", "1")
    assert result.exit_code == 1


def test_bad_environment_is_reported(monkeypatch, state_file):
    monkeypatch.setenv("CONCURRENCE_SEED", "abc")
    assert _invoke("compute", "--in", str(state_file(W3))).exit_code == 2


def test_w_state_file_round_trip_through_cli(tmp_path):
    path = tmp_path / "w4.json"
    save_state(w_state(4), path)
    data = _machine(_invoke("compute", "--in", str(path), "--format", "machine"))
    assert [entry["class"] for entry in data["results"]] == ["W", "GHZ", "GHZSub", "Overall"]
    assert data["results"][0]["aggregate"] == pytest.approx(1.0)


def test_compute_amplitude_count_mismatch_is_malformed(state_file):
    short = {"kind": "pure", "qubits": 3, "amplitudes": [[1, 0], [0, 0]]}
    result = _invoke("compute", "--in", str(state_file(short)))
    assert result.exit_code == 2
    assert "8 amplitudes" in result.stderr


def test_compute_single_qubit_has_no_class(state_file):
    one = {"kind": "pure", "qubits": 1, "amplitudes": [[1, 0], [0, 0]]}
    result = _invoke("compute", "--in", str(state_file(one)))
    assert result.exit_code == 3
    assert result.stdout == ""


def test_environment_normalization_reaches_cli(monkeypatch, state_file):
    path = state_file(W3)
    monkeypatch.setenv("CONCURRENCE_NORM_W", "1")
    data = _machine(_invoke("compute", "--in", str(path), "--classes", "W", "--format", "machine"))
    assert data["results"][0]["aggregate"] == pytest.approx(math.sqrt(4 / 3))
    monkeypatch.setenv("CONCURRENCE_NORM_W", "7")
    data = _machine(_invoke("compute", "--in", str(path), "--classes", "W", "--norm-w", "1", "--format", "machine"))
    assert data["results"][0]["aggregate"] == pytest.approx(math.sqrt(4 / 3))


def test_dotenv_read_from_working_directory(monkeypatch, tmp_path, state_file):
    # register teardown removal for a variable load_dotenv will set
    monkeypatch.setenv("CONCURRENCE_NORM_W", "unset")
    monkeypatch.delenv("CONCURRENCE_NORM_W")
    monkeypatch.setattr("concurrence_classes.cli.load_dotenv", dotenv.load_dotenv)
    (tmp_path / ".env").write_text("CONCURRENCE_NORM_W=1\n", encoding="utf-8")
    monkeypatch.chdir(tmp_path)
    data = _machine(_invoke("compute", "--in", str(state_file(W3)), "--classes", "W", "--format", "machine"))
    assert data["results"][0]["aggregate"] == pytest.approx(math.sqrt(4 / 3))


def test_verify_output_is_identical_for_fixed_seed():
    args = ("verify", "--quick", "--seed", "7", "--restarts", "4", "--iters", "100", "--format", "machine")
    first, second = _invoke(*args), _invoke(*args)
    assert first.exit_code == second.exit_code
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["seed"] == 7


def test_sweep_w_m_unit_normalization():
    data = _machine(_invoke("sweep", "w-m", "--max-m", "7", "--norm-w", "1", "--format", "machine"))
    assert [row["m"] for row in data["rows"]] == [2, 3, 4, 5, 6, 7]
    expected = [math.sqrt(2 * (m - 1) / m) for m in range(2, 8)]
    assert [row["aggregate"] for row in data["rows"]] == pytest.approx(expected)
