"""
Dense complex linear algebra kernel.

Matrices are plain numpy complex128 arrays. Everything here is a pure
function of its inputs; nothing mutates arguments, so the helpers are safe to
call from several threads at once.
"""

import logging
from functools import reduce
from typing import Iterable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from concurrence_classes.config import get_settings
from concurrence_classes.errors import CapacityError, ContractViolation, DimensionMismatch

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

HERMITIAN_TOL = 1e-10
PSD_CLAMP_TOL = 1e-10
PSD_REJECT_TOL = 1e-8

# -------------------------
# Validation helpers
# -------------------------


def as_matrix(a: npt.ArrayLike, *, name: str = "matrix") -> ComplexMatrix:
    """
    Coerce to a finite square complex matrix.

    Raises:
        DimensionMismatch: if the input is not square.
        ContractViolation: if any entry is NaN or infinite.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation(f"{name} has non-finite entries", invariant="finite")
    return m


def max_abs(a: npt.ArrayLike) -> float:
    arr = np.asarray(a)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def hermitian_deviation(a: ComplexMatrix) -> float:
    return max_abs(a - a.conj().T)


def is_hermitian(a: npt.ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_deviation(as_matrix(a)) <= tol


def _capacity_dim(max_qubits: Optional[int]) -> int:
    limit = get_settings().max_qubits if max_qubits is None else max_qubits
    return 2 ** limit


# -------------------------
# Products
# -------------------------


def kron(a: npt.ArrayLike, b: npt.ArrayLike, *, max_qubits: Optional[int] = None) -> ComplexMatrix:
    """
    Kronecker product with a capacity guard.

    Accepts two vectors or two square matrices. Entry (i*db+k, j*db+l) of the
    result is a[i, j] * b[k, l], so the left factor is the most significant
    index.

    Raises:
        CapacityError: if the product dimension exceeds 2**max_qubits.
    """
    left = np.asarray(a, dtype=np.complex128)
    right = np.asarray(b, dtype=np.complex128)
    if left.ndim != right.ndim or left.ndim not in (1, 2):
        raise DimensionMismatch(f"kron needs two vectors or two matrices, got {left.shape} and {right.shape}")
    if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
        raise ContractViolation("kron inputs must be finite", invariant="finite")

    dim = left.shape[0] * right.shape[0]
    cap = _capacity_dim(max_qubits)
    if dim > cap:
        raise CapacityError(f"kron result dimension {dim} exceeds capacity {cap}")
    return np.kron(left, right)


def kron_all(factors: Iterable[npt.ArrayLike], *, max_qubits: Optional[int] = None) -> ComplexMatrix:
    """Left-to-right Kronecker product of a non-empty sequence."""
    items = [np.asarray(f, dtype=np.complex128) for f in factors]
    if not items:
        raise ContractViolation("kron_all needs at least one factor", invariant="non-empty")
    return reduce(lambda x, y: kron(x, y, max_qubits=max_qubits), items)


def conjugate(a: npt.ArrayLike) -> ComplexMatrix:
    return np.conj(np.asarray(a, dtype=np.complex128))


def matmul(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    left = as_matrix(a, name="left operand")
    right = as_matrix(b, name="right operand")
    if left.shape != right.shape:
        raise DimensionMismatch(f"matmul dimension mismatch: {left.shape} vs {right.shape}")
    return left @ right


def apply_local(factors: Sequence[npt.ArrayLike], vector: npt.ArrayLike) -> ComplexMatrix:
    """
    Apply U_1 (x) ... (x) U_m to a state vector without forming the 2^m matrix.

    Args:
        factors: m single-qubit 2x2 operators, qubit 1 first.
        vector: Length 2^m amplitude vector.

    Returns:
        The transformed vector.
    """
    vec = np.asarray(vector, dtype=np.complex128)
    m = len(factors)
    if vec.shape != (2 ** m,):
        raise DimensionMismatch(f"vector of shape {vec.shape} does not match {m} factors")

    tensor = vec.reshape((2,) * m)
    for site, factor in enumerate(factors):
        tensor = np.tensordot(np.asarray(factor, dtype=np.complex128), tensor, axes=([1], [site]))
        tensor = np.moveaxis(tensor, 0, site)
    return tensor.reshape(-1)


def qubit_permutation_matrix(perm: Sequence[int]) -> ComplexMatrix:
    """
    Unitary P that relabels qubits: qubit j of the input becomes qubit perm[j].

    Indices in perm are zero based.
    """
    m = len(perm)
    if sorted(perm) != list(range(m)):
        raise ContractViolation(f"{list(perm)} is not a permutation of range({m})", invariant="permutation")

    dim = 2 ** m
    identity = np.eye(dim, dtype=np.complex128).reshape((2,) * m + (dim,))
    inverse = np.argsort(perm)
    permuted = np.transpose(identity, tuple(inverse) + (m,))
    return permuted.reshape(dim, dim)


# -------------------------
# Spectra
# -------------------------


def hermitian_eigenvalues(a: npt.ArrayLike, tol: float = HERMITIAN_TOL) -> RealVector:
    """
    Real eigenvalues of a Hermitian matrix in descending order.

    Args:
        a: Square matrix, Hermitian within tol (max-abs deviation from a^dagger).
        tol: Hermiticity tolerance.

    Returns:
        Descending float array of length dim.

    Raises:
        ContractViolation: if a is not Hermitian within tol.
    """
    m = as_matrix(a)
    deviation = hermitian_deviation(m)
    if deviation > tol:
        raise ContractViolation(
            f"matrix is not Hermitian (deviation {deviation:.3e} > {tol:.1e})",
            invariant="hermitian",
        )
    # eigvalsh reads one triangle only; symmetrize so both halves count
    values = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return values[::-1].copy()


def psd_sqrt(a: npt.ArrayLike) -> ComplexMatrix:
    """
    Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues down to -PSD_REJECT_TOL are clamped to zero.

    Raises:
        ContractViolation: if a is not Hermitian or has an eigenvalue below
            -PSD_REJECT_TOL.
    """
    m = as_matrix(a)
    deviation = hermitian_deviation(m)
    if deviation > HERMITIAN_TOL:
        raise ContractViolation(
            f"psd_sqrt input is not Hermitian (deviation {deviation:.3e})",
            invariant="hermitian",
        )

    values, vectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    lowest = float(values.min())
    if lowest < -PSD_REJECT_TOL:
        raise ContractViolation(
            f"psd_sqrt input has negative eigenvalue {lowest:.3e}",
            invariant="psd",
        )
    if lowest < -PSD_CLAMP_TOL:
        logger.debug("clamping eigenvalue %.3e to zero", lowest)

    roots = np.sqrt(np.clip(values, 0.0, None))
    root = (vectors * roots) @ vectors.conj().T
    return 0.5 * (root + root.conj().T)
