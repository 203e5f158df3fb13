"""
Phase POVM, its orthogonal complement, and the class-operator families.

Basis convention: the ket label |1> is index 0 and |2> is index 1;
qubit 1 is the most significant bit of a 2^m index, so an operator is the
Kronecker product of its per-site matrices in site order.

Site indices in the public API are 1-based, matching the labels Q_1 ... Q_m.
"""

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Tuple

import numpy as np
from cachetools import LRUCache, cached

from concurrence_classes.errors import ContractViolation
from concurrence_classes.tensor_algebra import ComplexMatrix, kron_all, max_abs

logger = logging.getLogger(__name__)


def _frozen(a) -> ComplexMatrix:
    m = np.array(a, dtype=np.complex128)
    m.flags.writeable = False
    return m


I2 = _frozen([[1, 0], [0, 1]])
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])


class PhaseChoice(Enum):
    """Per-site role inside a class operator."""

    HALF_PI = "HalfPi"
    PI = "Pi"
    IDENTITY = "Identity"

    @property
    def matrix(self) -> ComplexMatrix:
        return _SITE_MATRICES[self]


# complement(pi/2) = sigma_y and complement(pi) = sigma_x exactly
_SITE_MATRICES = {
    PhaseChoice.HALF_PI: SIGMA_Y,
    PhaseChoice.PI: SIGMA_X,
    PhaseChoice.IDENTITY: I2,
}


class ClassTag(str, Enum):
    EPR_PAIR = "EprPair"
    GHZ_FULL = "GhzFull"
    GHZ_SUB = "GhzSub"


# -------------------------
# Single-qubit POVM
# -------------------------


def single_qubit_povm(phi: float) -> ComplexMatrix:
    """
    Two-dimensional phase POVM element [[1, e^{i phi}], [e^{-i phi}, 1]].

    Args:
        phi: Phase in radians.

    Returns:
        A 2x2 Hermitian matrix with eigenvalues {0, 2}.
    """
    if not np.isfinite(phi):
        raise ContractViolation(f"phase must be finite, got {phi}", invariant="finite")
    e = np.exp(1j * phi)
    return np.array([[1.0, e], [np.conj(e), 1.0]], dtype=np.complex128)


def single_qubit_complement(phi: float) -> ComplexMatrix:
    """Orthogonal complement I_2 - Delta(phi)."""
    return np.eye(2, dtype=np.complex128) - single_qubit_povm(phi)


def povm_normalization_check(samples: int) -> float:
    """
    Integrate Delta(phi) / 2pi over one period on a uniform grid.

    Args:
        samples: Number of grid points, at least 8.

    Returns:
        Max-abs deviation of the quadrature from I_2.
    """
    if samples < 8:
        raise ContractViolation(f"need at least 8 samples, got {samples}", invariant="samples")

    grid = 2.0 * np.pi * np.arange(samples) / samples
    total = sum(single_qubit_povm(phi) for phi in grid) / samples
    return max_abs(total - np.eye(2))


# -------------------------
# Class operators
# -------------------------


@cached(cache=LRUCache(maxsize=512), lock=threading.Lock())
def _materialize(sites: Tuple[PhaseChoice, ...]) -> ComplexMatrix:
    logger.debug("materializing operator %s", "".join(s.value[0] for s in sites))
    return _frozen(kron_all(s.matrix for s in sites))


@dataclass(frozen=True)
class ClassOperator:
    """
    One tensor-product complement operator plus its metadata.

    acting_indices are 1-based: the pi/2 pair for EprPair and GhzFull, the
    non-identity sites for GhzSub.
    """

    qubit_count: int
    sites: Tuple[PhaseChoice, ...]
    class_tag: ClassTag
    acting_indices: Tuple[int, ...]

    def __post_init__(self):
        if len(self.sites) != self.qubit_count:
            raise ContractViolation(
                f"{len(self.sites)} sites for {self.qubit_count} qubits", invariant="qubit-count"
            )
        half = sum(s is PhaseChoice.HALF_PI for s in self.sites)
        ident = sum(s is PhaseChoice.IDENTITY for s in self.sites)
        if half != 2:
            raise ContractViolation("class operators carry exactly two pi/2 sites", invariant="site-pattern")
        if self.class_tag is ClassTag.EPR_PAIR and ident != self.qubit_count - 2:
            raise ContractViolation("EprPair operators are identity off the pair", invariant="site-pattern")
        if self.class_tag is ClassTag.GHZ_FULL and ident != 0:
            raise ContractViolation("GhzFull operators have no identity site", invariant="site-pattern")
        if self.class_tag is ClassTag.GHZ_SUB and (ident < 1 or ident > self.qubit_count - 3):
            raise ContractViolation(
                "GhzSub operators need at least one identity and one pi site", invariant="site-pattern"
            )

    @property
    def matrix(self) -> ComplexMatrix:
        """Read-only 2^m x 2^m matrix, shared through a bounded cache."""
        return _materialize(self.sites)

    def describe(self) -> str:
        names = {PhaseChoice.HALF_PI: "sy", PhaseChoice.PI: "sx", PhaseChoice.IDENTITY: "I"}
        return " x ".join(names[s] for s in self.sites)


def _check_pair(m: int, r1: int, r2: int, minimum: int) -> None:
    if m < minimum:
        raise ContractViolation(f"need at least {minimum} qubits, got {m}", invariant="qubit-count")
    if not (1 <= r1 < r2 <= m):
        raise ContractViolation(
            f"indices must satisfy 1 <= r1 < r2 <= {m}, got ({r1}, {r2})", invariant="index-order"
        )


def epr_pair_operator(m: int, r1: int, r2: int) -> ClassOperator:
    """sigma_y on sites r1 and r2, identity elsewhere."""
    _check_pair(m, r1, r2, minimum=2)
    sites = tuple(
        PhaseChoice.HALF_PI if j in (r1, r2) else PhaseChoice.IDENTITY for j in range(1, m + 1)
    )
    return ClassOperator(m, sites, ClassTag.EPR_PAIR, (r1, r2))


def w_class_operator_set(m: int) -> List[ClassOperator]:
    """All C(m, 2) pair operators in lexicographic (r1, r2) order."""
    if m < 2:
        raise ContractViolation(f"W class needs at least 2 qubits, got {m}", invariant="qubit-count")
    return [epr_pair_operator(m, r1, r2) for r1, r2 in combinations(range(1, m + 1), 2)]


def ghz_full_operator(m: int, r1: int, r2: int) -> ClassOperator:
    """sigma_y on sites r1 and r2, sigma_x on every other site."""
    _check_pair(m, r1, r2, minimum=3)
    sites = tuple(PhaseChoice.HALF_PI if j in (r1, r2) else PhaseChoice.PI for j in range(1, m + 1))
    return ClassOperator(m, sites, ClassTag.GHZ_FULL, (r1, r2))


def ghz_full_operator_set(m: int) -> List[ClassOperator]:
    if m < 3:
        raise ContractViolation(f"GHZ class needs at least 3 qubits, got {m}", invariant="qubit-count")
    return [ghz_full_operator(m, r1, r2) for r1, r2 in combinations(range(1, m + 1), 2)]


def ghz_sub_operator(m: int, identity_site: int) -> ClassOperator:
    """
    GHZ^(m-1) operator leaving identity_site untouched.

    sigma_y goes on the two lowest remaining sites, sigma_x on the rest.
    """
    if m < 4:
        raise ContractViolation(f"GHZ^(m-1) class needs at least 4 qubits, got {m}", invariant="qubit-count")
    if not 1 <= identity_site <= m:
        raise ContractViolation(f"identity site {identity_site} out of range 1..{m}", invariant="index-order")

    active = [j for j in range(1, m + 1) if j != identity_site]
    half = set(active[:2])
    sites = tuple(
        PhaseChoice.IDENTITY if j == identity_site
        else PhaseChoice.HALF_PI if j in half
        else PhaseChoice.PI
        for j in range(1, m + 1)
    )
    return ClassOperator(m, sites, ClassTag.GHZ_SUB, tuple(active))


def ghz_sub_operator_set(m: int) -> List[ClassOperator]:
    """C(m, m-1) = m operators, identity site running from m down to 1."""
    return [ghz_sub_operator(m, site) for site in range(m, 0, -1)]


def operator_set(tag: ClassTag, m: int) -> List[ClassOperator]:
    builders = {
        ClassTag.EPR_PAIR: w_class_operator_set,
        ClassTag.GHZ_FULL: ghz_full_operator_set,
        ClassTag.GHZ_SUB: ghz_sub_operator_set,
    }
    return builders[ClassTag(tag)](m)
