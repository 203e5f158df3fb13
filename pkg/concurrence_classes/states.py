"""
State construction and persistence.

Provides:
- PureState / DensityMatrix / Ensemble value types
- canonical generators (W, GHZ, product) and seeded random sampling
- densification of ensembles
- JSON state files (load_state / save_state)

Amplitude index convention: qubit 1 is the most significant bit and the
ket label |1> is bit 0, |2> is bit 1.
"""

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError

from concurrence_classes.config import get_settings
from concurrence_classes.errors import CapacityError, ContractViolation, StateFormatError
from concurrence_classes.tensor_algebra import (
    hermitian_deviation,
    hermitian_eigenvalues,
    kron,
)

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
TRACE_TOL = 1e-8
EIGEN_FLOOR = -1e-10
WEIGHT_TOL = 1e-10

# -------------------------
# Value types
# -------------------------


def _check_qubits(m: int) -> None:
    if m < 1:
        raise ContractViolation(f"qubit count must be positive, got {m}", invariant="qubit-count")
    limit = get_settings().max_qubits
    if m > limit:
        raise CapacityError(f"{m} qubits exceeds the configured maximum of {limit}")


def _readonly(a: npt.ArrayLike) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm amplitude vector over m qubits."""

    qubit_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_qubits(self.qubit_count)
        amps = _readonly(self.amplitudes)
        if amps.shape != (2 ** self.qubit_count,):
            raise ContractViolation(
                f"{self.qubit_count} qubits need {2 ** self.qubit_count} amplitudes, got {amps.shape}",
                invariant="qubit-count",
            )
        if not np.all(np.isfinite(amps)):
            raise ContractViolation("amplitudes must be finite", invariant="finite")
        norm = float(np.vdot(amps, amps).real)
        if norm == 0.0:
            raise ContractViolation("zero vector is not a state", invariant="norm")
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"sum |alpha|^2 = {norm:.12g}, expected 1", invariant="norm")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector: npt.ArrayLike) -> "PureState":
        amps = np.asarray(vector, dtype=np.complex128)
        m = int(round(math.log2(amps.size))) if amps.size else 0
        if amps.ndim != 1 or 2 ** m != amps.size:
            raise ContractViolation(f"length {amps.size} is not a power of two", invariant="qubit-count")
        return cls(m, amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2^m x 2^m matrix."""

    qubit_count: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_qubits(self.qubit_count)
        rho = _readonly(self.matrix)
        dim = 2 ** self.qubit_count
        if rho.shape != (dim, dim):
            raise ContractViolation(
                f"{self.qubit_count} qubits need a {dim}x{dim} matrix, got {rho.shape}",
                invariant="qubit-count",
            )
        if hermitian_deviation(rho) > NORM_TOL:
            raise ContractViolation("density matrix is not Hermitian", invariant="hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ContractViolation(f"trace = {trace.real:.12g}, expected 1", invariant="trace")
        lowest = float(hermitian_eigenvalues(rho)[-1])
        if lowest < EIGEN_FLOOR:
            raise ContractViolation(f"negative eigenvalue {lowest:.3e}", invariant="psd")
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return cls(psi.qubit_count, np.outer(psi.amplitudes, psi.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Weighted pure states {p_n, |Psi_n>} with weights summing to one."""

    members: Tuple[Tuple[float, PureState], ...]

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        if not members:
            raise ContractViolation("ensemble has no members", invariant="weight-sum")
        for w, _ in members:
            if not 0.0 < w <= 1.0:
                raise ContractViolation(f"weight {w} outside (0, 1]", invariant="weight-sum")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ContractViolation(f"weights sum to {total:.12g}, expected 1", invariant="weight-sum")
        counts = {s.qubit_count for _, s in members}
        if len(counts) != 1:
            raise ContractViolation(f"members mix qubit counts {sorted(counts)}", invariant="qubit-count")
        object.__setattr__(self, "members", members)

    @property
    def qubit_count(self) -> int:
        return self.members[0][1].qubit_count


# -------------------------
# Generators
# -------------------------


def w_state(m: int) -> PureState:
    """Equal superposition of the m single-excitation kets."""
    if m < 2:
        raise ContractViolation(f"W state needs at least 2 qubits, got {m}", invariant="qubit-count")
    _check_qubits(m)
    amps = np.zeros(2 ** m, dtype=np.complex128)
    for site in range(m):
        amps[1 << (m - 1 - site)] = 1.0 / math.sqrt(m)
    return PureState(m, amps)


def ghz_state(m: int, sign: int = 1) -> PureState:
    """(|1...1> + sign |2...2>) / sqrt(2)."""
    if m < 2:
        raise ContractViolation(f"GHZ state needs at least 2 qubits, got {m}", invariant="qubit-count")
    if sign not in (1, -1):
        raise ContractViolation(f"sign must be +1 or -1, got {sign}", invariant="sign")
    _check_qubits(m)
    amps = np.zeros(2 ** m, dtype=np.complex128)
    amps[0] = 1.0 / math.sqrt(2.0)
    amps[-1] = sign / math.sqrt(2.0)
    return PureState(m, amps)


def product_state(local_states: Sequence[npt.ArrayLike]) -> PureState:
    """
    Kronecker product of single-qubit amplitude pairs.

    Raises:
        ContractViolation: if a local pair is not normalized.
    """
    if not local_states:
        raise ContractViolation("product state needs at least one qubit", invariant="qubit-count")
    _check_qubits(len(local_states))

    vec = np.ones(1, dtype=np.complex128)
    for j, local in enumerate(local_states, start=1):
        pair = np.asarray(local, dtype=np.complex128)
        if pair.shape != (2,):
            raise ContractViolation(f"qubit {j} needs two amplitudes, got {pair.shape}", invariant="qubit-count")
        norm = float(np.vdot(pair, pair).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"qubit {j} local state has norm {norm:.12g}", invariant="norm")
        vec = kron(vec, pair)
    return PureState(len(local_states), vec)


def random_pure(m: int, seed: int) -> PureState:
    """Normalized vector of 2^m complex standard normals; deterministic per seed."""
    _check_qubits(m)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(2 ** m) + 1j * rng.standard_normal(2 ** m)
    return PureState(m, raw / np.linalg.norm(raw))


def random_ensemble(m: int, rank: int, seed: int) -> Ensemble:
    """rank random pure states with Dirichlet weights."""
    if rank < 1:
        raise ContractViolation(f"rank must be positive, got {rank}", invariant="rank")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(rank))
    weights = weights / weights.sum()
    seeds = rng.integers(0, 2 ** 32, size=rank)
    return Ensemble(tuple((float(w), random_pure(m, int(s))) for w, s in zip(weights, seeds)))


def densify(ensemble: Ensemble) -> DensityMatrix:
    """rho = sum_n p_n |Psi_n><Psi_n|."""
    dim = 2 ** ensemble.qubit_count
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for weight, psi in ensemble.members:
        rho += weight * np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(ensemble.qubit_count, rho)


def mixture(weights: Sequence[float], states: Sequence[PureState]) -> DensityMatrix:
    return densify(Ensemble(tuple(zip(weights, states))))


def ghz_mixture(m: int, q: float) -> DensityMatrix:
    """q |GHZ+><GHZ+| + (1 - q) |GHZ-><GHZ-|, for q in [0, 1]."""
    if not 0.0 <= q <= 1.0:
        raise ContractViolation(f"mixing weight {q} outside [0, 1]", invariant="weight-sum")
    plus, minus = ghz_state(m, 1).amplitudes, ghz_state(m, -1).amplitudes
    rho = q * np.outer(plus, plus.conj()) + (1.0 - q) * np.outer(minus, minus.conj())
    return DensityMatrix(m, rho)


def permute_qubits(psi: PureState, perm: Sequence[int]) -> PureState:
    """
    Relabel qubits: qubit j (zero based) of psi becomes qubit perm[j].
    """
    m = psi.qubit_count
    if sorted(perm) != list(range(m)):
        raise ContractViolation(f"{list(perm)} is not a permutation of range({m})", invariant="permutation")
    tensor = psi.amplitudes.reshape((2,) * m)
    return PureState(m, np.transpose(tensor, tuple(np.argsort(perm))).reshape(-1))


# -------------------------
# Display
# -------------------------


def label_ket(index: int, m: int) -> str:
    """Render a basis index with 1/2 labels, e.g. 3 of 3 qubits -> |1,2,2>."""
    bits = format(index, f"0{m}b")
    return "|" + ",".join("2" if b == "1" else "1" for b in bits) + "⟩"


def describe(psi: PureState, tol: float = 1e-12) -> List[Tuple[str, complex]]:
    return [
        (label_ket(i, psi.qubit_count), complex(a))
        for i, a in enumerate(psi.amplitudes)
        if abs(a) > tol
    ]


# -------------------------
# State files
# -------------------------

STATE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "qubits"],
    "properties": {
        "kind": {"enum": ["pure", "ensemble"]},
        "qubits": {"type": "integer", "minimum": 1},
        "amplitudes": {"$ref": "#/$defs/amplitudes"},
        "members": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["weight", "amplitudes"],
                "properties": {
                    "weight": {"type": "number"},
                    "amplitudes": {"$ref": "#/$defs/amplitudes"},
                },
            },
        },
    },
    "if": {"properties": {"kind": {"const": "pure"}}},
    "then": {"required": ["amplitudes"]},
    "else": {"required": ["members"]},
    "$defs": {
        "amplitudes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        }
    },
}

_VALIDATOR = Draft202012Validator(STATE_SCHEMA)

StateObject = Union[PureState, Ensemble]


def _pairs(psi: PureState) -> List[List[float]]:
    return [[float(a.real), float(a.imag)] for a in psi.amplitudes]


def _from_pairs(m: int, pairs: List[List[float]]) -> PureState:
    amps = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return PureState(m, amps)


def _check_amplitude_count(m: int, pairs: List[List[float]], location: str) -> None:
    if len(pairs) != 2 ** m:
        raise StateFormatError(
            f"state file invalid at {location}: {m} qubits need {2 ** m} amplitudes, got {len(pairs)}"
        )


def state_to_dict(obj: StateObject) -> dict:
    if isinstance(obj, PureState):
        return {"kind": "pure", "qubits": obj.qubit_count, "amplitudes": _pairs(obj)}
    if isinstance(obj, Ensemble):
        return {
            "kind": "ensemble",
            "qubits": obj.qubit_count,
            "members": [{"weight": w, "amplitudes": _pairs(s)} for w, s in obj.members],
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def state_from_dict(data: dict) -> StateObject:
    """
    Validate a decoded state object and build the matching value type.

    Raises:
        StateFormatError: on schema violations or an amplitude count that
            does not match the qubit count.
        ContractViolation: on norm, weight-sum or qubit-count violations.
    """
    try:
        _VALIDATOR.validate(data)
    except ValidationError as exc:
        location = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise StateFormatError(f"state file invalid at {location}: {exc.message}") from exc

    m = int(data["qubits"])
    if data["kind"] == "pure":
        _check_amplitude_count(m, data["amplitudes"], "amplitudes")
        return _from_pairs(m, data["amplitudes"])
    for n, mem in enumerate(data["members"]):
        _check_amplitude_count(m, mem["amplitudes"], f"members/{n}/amplitudes")
    members = tuple((float(mem["weight"]), _from_pairs(m, mem["amplitudes"])) for mem in data["members"])
    return Ensemble(members)


def load_state(path: Union[str, Path]) -> StateObject:
    """
    Load a pure state or ensemble from a UTF-8 JSON file.

    Args:
        path: File path.

    Returns:
        PureState or Ensemble.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise StateFormatError(f"cannot read {p}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{p} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc

    obj = state_from_dict(data)
    logger.debug("loaded %s state with %d qubits from %s", data["kind"], obj.qubit_count, p)
    return obj


def save_state(obj: StateObject, path: Union[str, Path]) -> None:
    """
    Write a state file atomically (temp file + rename).

    Floats use Python's shortest round-trip repr, so loading reproduces every
    amplitude exactly.
    """
    p = Path(path)
    payload = json.dumps(state_to_dict(obj), indent=2)
    fd, tmp = tempfile.mkstemp(prefix=p.name + ".", suffix=".tmp", dir=p.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        os.replace(tmp, p)
    except BaseException:
        try:
            os.remove(tmp)
        except OSError:
            pass
        raise
