"""
Local-unitary maximization of the GHZ^m class value.

Each qubit gets U = Rz(a) Ry(b) Rz(c); global phases are dropped since they
cancel under |<Psi|X|Psi*>|. The search is random-restart Nelder-Mead;
restart 0 starts at the identity so the optimum never falls below the
unrotated value.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize

from concurrence_classes.concurrence import (
    DEFAULT_POLICY,
    ConcurrenceReport,
    NormalizationPolicy,
    OptimizerMetadata,
    ghz_class_pure,
)
from concurrence_classes.config import get_settings
from concurrence_classes.errors import ContractViolation
from concurrence_classes.povm_operators import ghz_full_operator_set
from concurrence_classes.states import PureState
from concurrence_classes.tensor_algebra import ComplexMatrix, apply_local, kron_all, max_abs

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
SIMPLEX_STEP = 0.5
CEILING_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """U_1 (x) ... (x) U_m, one 2x2 unitary per qubit."""

    qubit_count: int
    factors: Tuple[ComplexMatrix, ...]

    def __post_init__(self):
        factors = tuple(np.asarray(f, dtype=np.complex128) for f in self.factors)
        if len(factors) != self.qubit_count:
            raise ContractViolation(
                f"{len(factors)} factors for {self.qubit_count} qubits", invariant="qubit-count"
            )
        for j, u in enumerate(factors, start=1):
            if u.shape != (2, 2) or max_abs(u.conj().T @ u - np.eye(2)) > UNITARY_TOL:
                raise ContractViolation(f"factor {j} is not a 2x2 unitary", invariant="unitary")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def identity(cls, m: int) -> "LocalUnitary":
        return cls(m, tuple(np.eye(2, dtype=np.complex128) for _ in range(m)))

    @classmethod
    def from_angles(cls, angles: Sequence[float]) -> "LocalUnitary":
        a = np.asarray(angles, dtype=float)
        if a.size % 3:
            raise ContractViolation("need three angles per qubit", invariant="qubit-count")
        return cls(a.size // 3, tuple(rotation(*a[i:i + 3]) for i in range(0, a.size, 3)))

    @property
    def matrix(self) -> ComplexMatrix:
        return kron_all(self.factors)

    def apply(self, psi: PureState) -> PureState:
        if psi.qubit_count != self.qubit_count:
            raise ContractViolation(
                f"{self.qubit_count}-qubit unitary on {psi.qubit_count}-qubit state", invariant="qubit-count"
            )
        return PureState(psi.qubit_count, apply_local(self.factors, psi.amplitudes))


def rotation(a: float, b: float, c: float) -> ComplexMatrix:
    """Rz(a) Ry(b) Rz(c)."""
    cb, sb = math.cos(b / 2), math.sin(b / 2)
    return np.array(
        [
            [np.exp(-0.5j * (a + c)) * cb, -np.exp(-0.5j * (a - c)) * sb],
            [np.exp(0.5j * (a - c)) * sb, np.exp(0.5j * (a + c)) * cb],
        ],
        dtype=np.complex128,
    )


class _GhzObjective:
    """Sum of squared GHZ overlaps of U psi as a function of 3m angles."""

    def __init__(self, psi: PureState):
        self.m = psi.qubit_count
        self.amplitudes = psi.amplitudes
        self.matrices = [op.matrix for op in ghz_full_operator_set(self.m)]
        # each squared overlap is at most 1
        self.ceiling = float(len(self.matrices))

    def overlap_sum(self, angles: np.ndarray) -> float:
        factors = [rotation(*angles[i:i + 3]) for i in range(0, 3 * self.m, 3)]
        v = apply_local(factors, self.amplitudes)
        flipped = v.conj()
        return math.fsum(abs(np.vdot(v, x @ flipped)) ** 2 for x in self.matrices)

    def __call__(self, angles: np.ndarray) -> float:
        return -self.overlap_sum(angles)


def _refine(objective: _GhzObjective, x0: np.ndarray, iterations: int, index: int) -> Tuple[float, np.ndarray, int]:
    """One Nelder-Mead run; stops as soon as the objective reaches its ceiling."""

    def stop_at_ceiling(intermediate_result) -> None:
        if -intermediate_result.fun >= objective.ceiling - CEILING_TOL:
            raise StopIteration

    simplex = np.vstack([x0, x0 + SIMPLEX_STEP * np.eye(x0.size)])
    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        callback=stop_at_ceiling,
        options={
            "maxiter": iterations,
            "initial_simplex": simplex,
            "adaptive": True,
            "xatol": 1e-9,
            "fatol": 1e-12,
        },
    )
    start = objective.overlap_sum(x0)
    end = objective.overlap_sum(result.x)
    logger.debug("restart %d: %.12f -> %.12f (%d evaluations)", index, start, end, result.nfev)
    if end >= start:
        return end, np.asarray(result.x, dtype=float), int(result.nfev)
    return start, x0, int(result.nfev)


def optimize_ghz_local_unitaries(
    psi: PureState,
    policy: NormalizationPolicy = DEFAULT_POLICY,
    *,
    restarts: Optional[int] = None,
    iterations: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Tuple[ConcurrenceReport, LocalUnitary]:
    """
    Maximize the GHZ^m class value of U psi over local unitaries U.

    Args:
        psi: Pure state with at least 3 qubits.
        policy: Normalization policy for the reported value.
        restarts: Number of restarts (default from settings).
        iterations: Nelder-Mead iterations per restart (default from settings).
        seed: Seed for the per-restart start points (default from settings).
        workers: Threads running restarts concurrently (default from settings).

    Returns:
        (report on the optimized state, achieving LocalUnitary). The result
        depends only on the arguments, not on thread scheduling.
    """
    m = psi.qubit_count
    if m < 3:
        raise ContractViolation(f"GHZ class needs at least 3 qubits, got {m}", invariant="qubit-count")

    settings = get_settings()
    restarts = settings.restarts if restarts is None else restarts
    iterations = settings.iters if iterations is None else iterations
    seed = settings.seed if seed is None else seed
    workers = settings.workers if workers is None else workers
    if restarts < 1 or iterations < 1:
        raise ContractViolation("optimizer budget needs at least one restart and one iteration", invariant="budget")

    objective = _GhzObjective(psi)
    children = np.random.SeedSequence(seed).spawn(restarts)
    starts: List[np.ndarray] = [np.zeros(3 * m)]
    starts += [np.random.default_rng(child).uniform(0.0, 2.0 * np.pi, 3 * m) for child in children[1:]]

    # Parallel returns outcomes in restart order whatever the thread count
    outcomes = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_refine)(objective, starts[i], iterations, i) for i in range(restarts)
    )

    best_index = 0
    for i, (value, _, _) in enumerate(outcomes):
        if value > outcomes[best_index][0]:
            best_index = i
    best_angles = outcomes[best_index][1]

    unitary = LocalUnitary.from_angles(best_angles)
    baseline = ghz_class_pure(psi, policy).aggregate
    report = ghz_class_pure(unitary.apply(psi), policy)
    logger.info(
        "GHZ optimization: baseline %.6f -> %.6f (restart %d of %d)",
        baseline, report.aggregate, best_index, restarts,
    )
    meta = OptimizerMetadata(
        seed=seed,
        restarts=restarts,
        iterations=iterations,
        best_restart=best_index,
        best_angles=tuple(float(x) for x in best_angles),
        baseline=baseline,
        evaluations=sum(nfev for _, _, nfev in outcomes),
    )
    return replace(report, optimized=True, optimizer=meta), unitary
