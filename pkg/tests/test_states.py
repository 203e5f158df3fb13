import json
import math

import numpy as np
import pytest

from concurrence_classes.errors import CapacityError, ContractViolation, StateFormatError
from concurrence_classes.states import (
    DensityMatrix,
    Ensemble,
    PureState,
    densify,
    describe,
    ghz_mixture,
    ghz_state,
    label_ket,
    load_state,
    permute_qubits,
    product_state,
    random_ensemble,
    random_pure,
    save_state,
    state_from_dict,
    state_to_dict,
    w_state,
)


def test_w_state_amplitudes():
    psi = w_state(3)
    assert [ket for ket, _ in describe(psi)] == ["|1,1,2⟩", "|1,2,1⟩", "|2,1,1⟩"]
    assert all(a == pytest.approx(1 / math.sqrt(3)) for _, a in describe(psi))


def test_ghz_state_sign():
    plus, minus = ghz_state(3), ghz_state(3, sign=-1)
    assert plus.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
    assert minus.amplitudes[-1] == pytest.approx(-1 / math.sqrt(2))
    with pytest.raises(ContractViolation):
        ghz_state(3, sign=2)


def test_label_ket_labels():
    assert label_ket(0, 3) == "|1,1,1⟩"
    assert label_ket(3, 3) == "|1,2,2⟩"
    assert label_ket(7, 3) == "|2,2,2⟩"


def test_pure_state_rejects_bad_norm():
    with pytest.raises(ContractViolation) as exc:
        PureState(1, np.array([1.0, 1.0]))
    assert exc.value.invariant == "norm"
    with pytest.raises(ContractViolation):
        PureState(1, np.zeros(2))


def test_pure_state_rejects_wrong_length():
    with pytest.raises(ContractViolation):
        PureState(2, np.array([1.0, 0.0]))
    with pytest.raises(ContractViolation):
        PureState.from_vector([1.0, 0.0, 0.0])


def test_pure_state_is_immutable():
    psi = w_state(3)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1.0


def test_capacity_limit(monkeypatch):
    monkeypatch.setenv("CONCURRENCE_MAX_QUBITS", "4")
    with pytest.raises(CapacityError):
        w_state(5)


def test_product_state():
    psi = product_state([[1, 0], [0, 1]])
    assert np.allclose(psi.amplitudes, [0, 1, 0, 0])
    with pytest.raises(ContractViolation):
        product_state([[1, 1]])


def test_random_pure_is_seeded():
    a, b = random_pure(3, 11), random_pure(3, 11)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, random_pure(3, 12).amplitudes)


def test_ensemble_weight_checks():
    psi = w_state(3)
    with pytest.raises(ContractViolation) as exc:
        Ensemble(((0.5, psi), (0.4, psi)))
    assert exc.value.invariant == "weight-sum"
    with pytest.raises(ContractViolation):
        Ensemble(((1.0, psi), (0.0, psi)))
    with pytest.raises(ContractViolation):
        Ensemble(((0.5, psi), (0.5, ghz_state(4))))


def test_densify_matches_outer_products():
    ens = random_ensemble(2, 3, seed=5)
    rho = densify(ens)
    expected = sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in ens.members)
    assert np.allclose(rho.matrix, expected)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)


def test_density_matrix_validation():
    with pytest.raises(ContractViolation) as exc:
        DensityMatrix(1, np.diag([1.5, -0.5]))
    assert exc.value.invariant == "psd"
    with pytest.raises(ContractViolation):
        DensityMatrix(1, np.diag([0.5, 0.4]))


def test_ghz_mixture_endpoints():
    assert np.allclose(ghz_mixture(3, 1.0).matrix, DensityMatrix.from_pure(ghz_state(3)).matrix)
    assert np.allclose(ghz_mixture(3, 0.0).matrix, DensityMatrix.from_pure(ghz_state(3, -1)).matrix)
    with pytest.raises(ContractViolation):
        ghz_mixture(3, 1.5)


def test_permute_qubits_moves_excitation():
    psi = product_state([[0, 1], [1, 0], [1, 0]])
    moved = permute_qubits(psi, [2, 1, 0])
    assert describe(moved) == [("|1,1,2⟩", 1 + 0j)]


def test_state_dict_validation_errors():
    with pytest.raises(StateFormatError):
        state_from_dict({"kind": "pure", "qubits": 1})
    with pytest.raises(StateFormatError):
        state_from_dict({"kind": "mixed", "qubits": 1, "amplitudes": [[1, 0], [0, 0]]})
    with pytest.raises(ContractViolation):
        state_from_dict({"kind": "pure", "qubits": 1, "amplitudes": [[1, 0], [1, 0]]})


def test_state_dict_amplitude_count_mismatch():
    with pytest.raises(StateFormatError, match="8 amplitudes, got 2"):
        state_from_dict({"kind": "pure", "qubits": 3, "amplitudes": [[1, 0], [0, 0]]})
    with pytest.raises(StateFormatError, match="members/1/amplitudes"):
        state_from_dict(
            {
                "kind": "ensemble",
                "qubits": 1,
                "members": [
                    {"weight": 0.5, "amplitudes": [[1, 0], [0, 0]]},
                    {"weight": 0.5, "amplitudes": [[1, 0], [0, 0], [0, 0], [0, 0]]},
                ],
            }
        )


def test_save_and_load_pure_state(tmp_path):
    psi = random_pure(3, 99)
    path = tmp_path / "psi.json"
    save_state(psi, path)
    loaded = load_state(path)
    assert isinstance(loaded, PureState)
    assert np.array_equal(loaded.amplitudes, psi.amplitudes)
    assert list(tmp_path.iterdir()) == [path]


def test_save_and_load_ensemble(tmp_path):
    ens = random_ensemble(2, 2, seed=3)
    path = tmp_path / "ens.json"
    save_state(ens, path)
    loaded = load_state(path)
    assert isinstance(loaded, Ensemble)
    assert state_to_dict(loaded) == state_to_dict(ens)


def test_load_state_errors(tmp_path):
    with pytest.raises(StateFormatError):
        load_state(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(StateFormatError):
        load_state(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"kind": "pure", "qubits": "three"}), encoding="utf-8")
    with pytest.raises(StateFormatError):
        load_state(wrong)


def test_product_state_is_associative():
    a, b, c = [1, 0], [0.6, 0.8j], [1 / math.sqrt(2), -1 / math.sqrt(2)]
    whole = product_state([a, b, c]).amplitudes
    left = np.kron(product_state([a, b]).amplitudes, c)
    right = np.kron(a, product_state([b, c]).amplitudes)
    assert np.allclose(whole, left)
    assert np.allclose(whole, right)


def test_densify_rank_bounded_by_ensemble_size():
    for rank in (1, 2, 3, 4):
        rho = densify(random_ensemble(3, rank, seed=20 + rank))
        assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) <= rank
