"""
Concurrence classes for pure and mixed multi-qubit states.

Pure states: a class value is sqrt(N * sum_X |<Psi|X|Psi*>|^2) over the class
operator set. Mixed states: for each operator X, rho~ = X rho* X and the
value is max(0, l1 - sum_{n>1} l_n) with l_n the descending square roots of
the eigenvalues of rho rho~.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import entropy

from concurrence_classes.config import Settings, get_settings
from concurrence_classes.errors import ConfigError, ContractViolation, DimensionMismatch
from concurrence_classes.povm_operators import (
    ClassOperator,
    ClassTag,
    epr_pair_operator,
    ghz_full_operator_set,
    ghz_sub_operator_set,
    w_class_operator_set,
)
from concurrence_classes.states import DensityMatrix, PureState
from concurrence_classes.tensor_algebra import RealVector, hermitian_eigenvalues, psd_sqrt

logger = logging.getLogger(__name__)


# -------------------------
# Normalization
# -------------------------


@dataclass(frozen=True)
class NormalizationPolicy:
    """
    Per-class scale factors.

    Defaults make the canonical state of each class score exactly 1:
    N^W_m = m / (2(m-1)), N^GHZ_m = 1 / C(m, 2), N^GHZ_{m-1} = 1 / C(m, m-1).
    A non-None override replaces the default for every m.
    """

    w_override: Optional[float] = None
    ghz_override: Optional[float] = None
    ghz_sub_override: Optional[float] = None

    def __post_init__(self):
        for name in ("w_override", "ghz_override", "ghz_sub_override"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"normalization {name} must be strictly positive, got {value}")

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "NormalizationPolicy":
        s = settings or get_settings()
        return cls(s.norm_w, s.norm_ghz, s.norm_ghz_sub)

    def w_constant(self, m: int) -> float:
        if self.w_override is not None:
            return self.w_override
        return m / (2.0 * (m - 1))

    def ghz_constant(self, m: int) -> float:
        if self.ghz_override is not None:
            return self.ghz_override
        return 1.0 / math.comb(m, 2)

    def ghz_sub_constant(self, m: int) -> float:
        if self.ghz_sub_override is not None:
            return self.ghz_sub_override
        return 1.0 / math.comb(m, m - 1)


DEFAULT_POLICY = NormalizationPolicy()


# -------------------------
# Reports
# -------------------------


class AggregationRule(str, Enum):
    ROOT_SUM_SQUARES = "RootSumSquares"
    MAX_OVER_OPERATORS = "MaxOverOperators"


@dataclass(frozen=True)
class OperatorValue:
    acting_indices: Tuple[int, ...]
    value: float


@dataclass(frozen=True)
class OptimizerMetadata:
    seed: int
    restarts: int
    iterations: int
    best_restart: int
    best_angles: Tuple[float, ...]
    baseline: float
    evaluations: int = 0


@dataclass(frozen=True)
class ConcurrenceReport:
    """
    One class value with its per-operator breakdown.

    Pure reports store raw squared overlaps per operator and scale once in the
    aggregate; mixed reports store per-operator lambda values and take the max.
    """

    class_tag: ClassTag
    qubit_count: int
    per_operator: Tuple[OperatorValue, ...]
    normalization_used: float
    aggregate: float
    aggregation_rule: AggregationRule
    optimized: bool = False
    optimizer: Optional[OptimizerMetadata] = None

    def recompute_aggregate(self) -> float:
        values = [item.value for item in self.per_operator]
        if self.aggregation_rule is AggregationRule.ROOT_SUM_SQUARES:
            return math.sqrt(self.normalization_used * math.fsum(values))
        return max(values)

    def to_dict(self) -> dict:
        out = {
            "class": self.class_tag.value,
            "qubits": self.qubit_count,
            "operators": [
                {"indices": list(item.acting_indices), "value": item.value} for item in self.per_operator
            ],
            "normalization": self.normalization_used,
            "aggregation_rule": self.aggregation_rule.value,
            "aggregate": self.aggregate,
            "optimized": self.optimized,
        }
        if self.optimizer is not None:
            meta = asdict(self.optimizer)
            meta["best_angles"] = list(self.optimizer.best_angles)
            out["optimizer"] = meta
        return out


# -------------------------
# Pure states
# -------------------------


def _check_dims(m: int, op: ClassOperator) -> None:
    if m != op.qubit_count:
        raise DimensionMismatch(f"{m}-qubit state with {op.qubit_count}-qubit operator")


def overlap_amplitude(psi: PureState, op: ClassOperator) -> complex:
    """<Psi| X |Psi*>."""
    _check_dims(psi.qubit_count, op)
    return complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes.conj()))


def overlap_magnitude_sq(psi: PureState, op: ClassOperator) -> float:
    """|<Psi| X |Psi*>|^2, in [0, 1] for unit-norm Psi."""
    return abs(overlap_amplitude(psi, op)) ** 2


def class_pure(psi: PureState, ops: Sequence[ClassOperator], constant: float) -> ConcurrenceReport:
    """Root-sum-squares report over an explicit operator list."""
    if not ops:
        raise ContractViolation("operator list is empty", invariant="non-empty")
    per_operator = tuple(OperatorValue(op.acting_indices, overlap_magnitude_sq(psi, op)) for op in ops)
    aggregate = math.sqrt(constant * math.fsum(item.value for item in per_operator))
    return ConcurrenceReport(
        class_tag=ops[0].class_tag,
        qubit_count=psi.qubit_count,
        per_operator=per_operator,
        normalization_used=constant,
        aggregate=aggregate,
        aggregation_rule=AggregationRule.ROOT_SUM_SQUARES,
    )


def w_class_pure(psi: PureState, policy: NormalizationPolicy = DEFAULT_POLICY) -> ConcurrenceReport:
    m = psi.qubit_count
    if m < 2:
        raise ContractViolation(f"W class needs at least 2 qubits, got {m}", invariant="qubit-count")
    return class_pure(psi, w_class_operator_set(m), policy.w_constant(m))


def ghz_class_pure(psi: PureState, policy: NormalizationPolicy = DEFAULT_POLICY) -> ConcurrenceReport:
    m = psi.qubit_count
    if m < 3:
        raise ContractViolation(f"GHZ class needs at least 3 qubits, got {m}", invariant="qubit-count")
    return class_pure(psi, ghz_full_operator_set(m), policy.ghz_constant(m))


def ghz_sub_class_pure(psi: PureState, policy: NormalizationPolicy = DEFAULT_POLICY) -> ConcurrenceReport:
    m = psi.qubit_count
    if m < 4:
        raise ContractViolation(f"GHZ^(m-1) class needs at least 4 qubits, got {m}", invariant="qubit-count")
    return class_pure(psi, ghz_sub_operator_set(m), policy.ghz_sub_constant(m))


# -------------------------
# Mixed states
# -------------------------


def mixed_lambda_spectrum(rho: DensityMatrix, op: ClassOperator) -> RealVector:
    """
    Descending square roots of the eigenvalues of rho rho~.

    rho rho~ is similar to the Hermitian sqrt(rho) rho~ sqrt(rho) = A A^dagger
    with A = sqrt(rho) sqrt(rho~) and sqrt(rho~) = X sqrt(rho)* X, so the
    lambdas are the singular values of A. Taking them from an SVD keeps
    near-zero lambdas at rounding level instead of sqrt(rounding).
    """
    _check_dims(rho.qubit_count, op)
    x = op.matrix
    root = psd_sqrt(rho.matrix)
    root_tilde = x @ root.conj() @ x
    return np.linalg.svd(root @ root_tilde, compute_uv=False)


def rho_tilde(rho: DensityMatrix, op: ClassOperator) -> np.ndarray:
    """X rho* X."""
    _check_dims(rho.qubit_count, op)
    return op.matrix @ rho.matrix.conj() @ op.matrix


def sandwich_eigenvalues(rho: DensityMatrix, op: ClassOperator) -> RealVector:
    """Eigenvalues of sqrt(rho) rho~ sqrt(rho), descending (squares of the lambdas)."""
    root = psd_sqrt(rho.matrix)
    sandwich = root @ rho_tilde(rho, op) @ root
    return hermitian_eigenvalues(0.5 * (sandwich + sandwich.conj().T))


def lambda_value(spectrum: Sequence[float]) -> float:
    """max(0, l1 - sum_{n>1} l_n) for a descending spectrum."""
    lams = np.asarray(spectrum, dtype=float)
    return max(0.0, float(lams[0] - math.fsum(lams[1:])))


def mixed_class_concurrence(rho: DensityMatrix, ops: Sequence[ClassOperator]) -> ConcurrenceReport:
    """
    Per-operator lambda values; the aggregate is their maximum.

    Raises:
        ContractViolation: if ops is empty.
    """
    if not ops:
        raise ContractViolation("operator list is empty", invariant="non-empty")
    per_operator = tuple(
        OperatorValue(op.acting_indices, lambda_value(mixed_lambda_spectrum(rho, op))) for op in ops
    )
    return ConcurrenceReport(
        class_tag=ops[0].class_tag,
        qubit_count=rho.qubit_count,
        per_operator=per_operator,
        normalization_used=1.0,
        aggregate=max(item.value for item in per_operator),
        aggregation_rule=AggregationRule.MAX_OVER_OPERATORS,
    )


def w_class_mixed(rho: DensityMatrix) -> ConcurrenceReport:
    return mixed_class_concurrence(rho, w_class_operator_set(rho.qubit_count))


def ghz_class_mixed(rho: DensityMatrix) -> ConcurrenceReport:
    return mixed_class_concurrence(rho, ghz_full_operator_set(rho.qubit_count))


def ghz_sub_class_mixed(rho: DensityMatrix) -> ConcurrenceReport:
    return mixed_class_concurrence(rho, ghz_sub_operator_set(rho.qubit_count))


# -------------------------
# Two qubits
# -------------------------


def _require_two_qubits(m: int) -> None:
    if m != 2:
        raise ContractViolation(f"two-qubit formula applied to {m} qubits", invariant="qubit-count")


def wootters_concurrence_2q(rho: DensityMatrix) -> float:
    _require_two_qubits(rho.qubit_count)
    return mixed_class_concurrence(rho, [epr_pair_operator(2, 1, 2)]).aggregate


def eof_from_concurrence(c: float) -> float:
    """Binary entropy (bits) of (1 + sqrt(1 - C^2)) / 2."""
    c = min(max(float(c), 0.0), 1.0)
    x = 0.5 * (1.0 + math.sqrt(1.0 - c * c))
    return float(entropy([x, 1.0 - x], base=2))


def entanglement_of_formation_2q(rho: DensityMatrix) -> float:
    return eof_from_concurrence(wootters_concurrence_2q(rho))


# -------------------------
# Overall (heuristic)
# -------------------------


@dataclass(frozen=True)
class OverallReport:
    value: float
    components: Dict[str, float] = field(default_factory=dict)
    heuristic: bool = True

    def to_dict(self) -> dict:
        return {"class": "Overall", "aggregate": self.value, "components": dict(self.components), "heuristic": True}


def overall_report(psi: PureState, policy: NormalizationPolicy = DEFAULT_POLICY) -> OverallReport:
    """
    Square root of the summed squared class aggregates.

    This combination is a heuristic, not an established entanglement measure.
    """
    m = psi.qubit_count
    if m < 3:
        raise ContractViolation(f"overall concurrence needs at least 3 qubits, got {m}", invariant="qubit-count")

    reports: List[ConcurrenceReport] = [w_class_pure(psi, policy), ghz_class_pure(psi, policy)]
    if m >= 4:
        reports.append(ghz_sub_class_pure(psi, policy))
    components = {r.class_tag.value: r.aggregate for r in reports}
    value = math.sqrt(math.fsum(v * v for v in components.values()))
    return OverallReport(value=value, components=components)


def overall_concurrence(psi: PureState, policy: NormalizationPolicy = DEFAULT_POLICY) -> float:
    return overall_report(psi, policy).value
