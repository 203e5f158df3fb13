"""
End-to-end verification suite.

Each check is a plain function registered with @check; run_checks() executes
them in registration order against one VerifyContext and collects results.
Checks use the active normalization policy, so overriding a constant the
worked examples depend on makes the matching check fail.
"""

import json
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from concurrence_classes.concurrence import (
    NormalizationPolicy,
    ghz_class_mixed,
    ghz_class_pure,
    ghz_sub_class_pure,
    lambda_value,
    mixed_lambda_spectrum,
    overlap_magnitude_sq,
    w_class_mixed,
    w_class_pure,
    wootters_concurrence_2q,
)
from concurrence_classes.optimize import LocalUnitary, optimize_ghz_local_unitaries, rotation
from concurrence_classes.povm_operators import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    epr_pair_operator,
    ghz_full_operator,
    ghz_full_operator_set,
    ghz_sub_operator_set,
    povm_normalization_check,
    single_qubit_complement,
    w_class_operator_set,
)
from concurrence_classes.states import (
    DensityMatrix,
    Ensemble,
    densify,
    describe,
    ghz_mixture,
    ghz_state,
    permute_qubits,
    random_ensemble,
    random_pure,
    state_from_dict,
    state_to_dict,
    w_state,
)
from concurrence_classes.tensor_algebra import kron_all, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyContext:
    policy: NormalizationPolicy
    seed: int
    restarts: int
    iters: int
    quick: bool = False

    def samples(self, full: int, quick: int) -> int:
        return quick if self.quick else full


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


CheckFn = Callable[[VerifyContext], Tuple[bool, str]]
_CHECKS: List[Tuple[str, CheckFn]] = []


def check(name: str) -> Callable[[CheckFn], CheckFn]:
    def register(fn: CheckFn) -> CheckFn:
        _CHECKS.append((name, fn))
        return fn

    return register


def check_names() -> List[str]:
    return [name for name, _ in _CHECKS]


# -------------------------
# Worked examples
# -------------------------


@check("w3-worked-example")
def _w3(ctx: VerifyContext) -> Tuple[bool, str]:
    value = w_class_pure(w_state(3), ctx.policy).aggregate
    return abs(value - 1.0) <= 1e-9, f"expected 1.0, got {value:.12g}"


@check("ghz-class-vanishes-on-w")
def _ghz_on_w(ctx: VerifyContext) -> Tuple[bool, str]:
    values = [
        ghz_class_pure(w_state(3), ctx.policy).aggregate,
        ghz_class_pure(w_state(4), ctx.policy).aggregate,
        ghz_sub_class_pure(w_state(4), ctx.policy).aggregate,
    ]
    worst = max(values)
    return worst <= 1e-12, f"largest GHZ-type value on W states {worst:.3e}"


@check("mixed-ghz-family")
def _mixed_ghz(ctx: VerifyContext) -> Tuple[bool, str]:
    worst_value = worst_spectrum = 0.0
    for q in np.linspace(0.0, 1.0, ctx.samples(101, 11)):
        rho = ghz_mixture(3, q)
        # max(0, 2q - 1) on q >= 1/2; below that the descending sort swaps q and 1 - q
        expected = abs(2 * q - 1)
        worst_value = max(worst_value, abs(ghz_class_mixed(rho).aggregate - expected))
        target = np.zeros(8)
        target[:2] = sorted((q, 1 - q), reverse=True)
        for op in ghz_full_operator_set(3):
            worst_spectrum = max(worst_spectrum, max_abs(mixed_lambda_spectrum(rho, op) - target))
    ok = worst_value <= 1e-9 and worst_spectrum <= 1e-9
    return ok, f"value err {worst_value:.2e}, spectrum err {worst_spectrum:.2e}"


@check("w-m-dur-value")
def _wm(ctx: VerifyContext) -> Tuple[bool, str]:
    unit = NormalizationPolicy(w_override=1.0)
    worst = 0.0
    for m in range(2, 9):
        base = 2.0 * (m - 1) / m
        worst = max(worst, abs(w_class_pure(w_state(m), unit).aggregate - math.sqrt(base)))
        scaled = math.sqrt(base * ctx.policy.w_constant(m))
        worst = max(worst, abs(w_class_pure(w_state(m), ctx.policy).aggregate - scaled))
    return worst <= 1e-9, f"max deviation {worst:.2e} over m = 2..8"


@check("w4-worked-example")
def _w4(ctx: VerifyContext) -> Tuple[bool, str]:
    value = w_class_pure(w_state(4), NormalizationPolicy(w_override=1.0)).aggregate
    return abs(value - math.sqrt(1.5)) <= 1e-9, f"expected sqrt(3/2), got {value:.12g}"


@check("two-qubit-reference-values")
def _two_qubit(ctx: VerifyContext) -> Tuple[bool, str]:
    bell = DensityMatrix.from_pure(ghz_state(2))
    mixed = DensityMatrix(2, np.eye(4) / 4)
    values = (wootters_concurrence_2q(bell), wootters_concurrence_2q(mixed))
    ok = abs(values[0] - 1.0) <= 1e-9 and values[1] <= 1e-12
    return ok, f"Bell {values[0]:.12g}, maximally mixed {values[1]:.3e}"


@check("operator-listings")
def _listings(ctx: VerifyContext) -> Tuple[bool, str]:
    y, x, i = SIGMA_Y, SIGMA_X, I2
    cases = [
        ("complement(pi/2)", single_qubit_complement(math.pi / 2), y),
        ("complement(pi)", single_qubit_complement(math.pi), x),
        ("epr(2; 1,2)", epr_pair_operator(2, 1, 2).matrix, kron_all([y, y])),
        ("epr(3; 1,3)", epr_pair_operator(3, 1, 3).matrix, kron_all([y, i, y])),
        ("epr(4; 2,3)", epr_pair_operator(4, 2, 3).matrix, kron_all([i, y, y, i])),
        ("ghz(3; 1,2)", ghz_full_operator(3, 1, 2).matrix, kron_all([y, y, x])),
        ("ghz(4; 2,4)", ghz_full_operator(4, 2, 4).matrix, kron_all([x, y, x, y])),
        ("ghz(3; 2,3)", ghz_full_operator(3, 2, 3).matrix, kron_all([x, y, y])),
    ]
    for name, got, expected in cases:
        err = max_abs(got - expected)
        if err > 1e-12:
            return False, f"{name} off by {err:.2e}"

    sub = [op.describe() for op in ghz_sub_operator_set(4)]
    expected_sub = ["sy x sy x sx x I", "sy x sy x I x sx", "sy x I x sy x sx", "I x sy x sy x sx"]
    if sub != expected_sub:
        return False, f"GHZ^3 listing {sub}"

    h = 1 / math.sqrt(2)
    for sign in (1, -1):
        kets = [(ket, round(a.real, 12)) for ket, a in describe(ghz_state(3, sign))]
        if kets != [("|1,1,1⟩", round(h, 12)), ("|2,2,2⟩", round(sign * h, 12))]:
            return False, f"GHZ_3 sign {sign:+d} expands to {kets}"
    return True, f"{len(cases)} operators, GHZ^3 listing and GHZ_3 forms match"


@check("ghz-mixture-q075")
def _ghz_mixture_q075(ctx: VerifyContext) -> Tuple[bool, str]:
    # W_3 through the state file encoding and back
    restored = state_from_dict(json.loads(json.dumps(state_to_dict(w_state(3)))))
    w_value = w_class_pure(restored, ctx.policy).aggregate
    ensemble = Ensemble(((0.75, ghz_state(3)), (0.25, ghz_state(3, sign=-1))))
    ghz_value = ghz_class_mixed(densify(ensemble)).aggregate
    ok = abs(w_value - 1.0) <= 1e-9 and abs(ghz_value - 0.5) <= 1e-9
    return ok, f"W_3 from file {w_value:.12g}, GHZ mixture at q=0.75 {ghz_value:.12g}"


# -------------------------
# Property sweeps
# -------------------------


def wootters_oracle(rho: np.ndarray) -> float:
    """
    Wootters' closed form from the spectral ensemble of rho.

    With subnormalized eigenvectors v_i, tau_ij = <v_i| sy sy |v_j*> and the
    lambdas are the singular values of tau.
    """
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    mu, vectors = np.linalg.eigh(rho)
    v = vectors * np.sqrt(np.clip(mu, 0.0, None))
    tau = v.conj().T @ yy @ v.conj()
    lams = np.linalg.svd(tau, compute_uv=False)
    return max(0.0, float(lams[0] - lams[1:].sum()))


@check("wootters-equivalence")
def _wootters(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(ctx.samples(500, 50)):
        rank = int(rng.integers(1, 5))
        rho = densify(random_ensemble(2, rank, int(rng.integers(2 ** 32))))
        worst = max(worst, abs(wootters_concurrence_2q(rho) - wootters_oracle(rho.matrix)))
    return worst <= 1e-7, f"max deviation from closed form {worst:.2e}"


@check("pure-mixed-consistency")
def _pure_mixed(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(ctx.samples(200, 20)):
        m = int(rng.choice([2, 3, 4]))
        psi = random_pure(m, int(rng.integers(2 ** 32)))
        rho = DensityMatrix.from_pure(psi)
        ops = list(w_class_operator_set(m))
        if m >= 3:
            ops += ghz_full_operator_set(m)
        if m >= 4:
            ops += ghz_sub_operator_set(m)
        for op in ops:
            pure = math.sqrt(overlap_magnitude_sq(psi, op))
            worst = max(worst, abs(lambda_value(mixed_lambda_spectrum(rho, op)) - pure))
    return worst <= 1e-8, f"max deviation {worst:.2e}"


@check("operator-algebra")
def _algebra(ctx: VerifyContext) -> Tuple[bool, str]:
    worst = 0.0
    for m in range(2, ctx.samples(8, 5) + 1):
        ops = list(w_class_operator_set(m))
        if len(ops) != math.comb(m, 2):
            return False, f"W set for m={m} has {len(ops)} operators"
        if m >= 3:
            ghz = ghz_full_operator_set(m)
            if len(ghz) != math.comb(m, 2):
                return False, f"GHZ set for m={m} has {len(ghz)} operators"
            ops += ghz
        if m >= 4:
            sub = ghz_sub_operator_set(m)
            if len(sub) != math.comb(m, m - 1):
                return False, f"GHZ^(m-1) set for m={m} has {len(sub)} operators"
            ops += sub
        identity = np.eye(2 ** m)
        for op in ops:
            x = op.matrix
            if not np.array_equal(x, x.conj().T):
                return False, f"operator {op.describe()} is not Hermitian"
            worst = max(worst, max_abs(x @ x - identity))
    quadrature = povm_normalization_check(360)
    ok = worst <= 1e-12 and quadrature <= 1e-12
    return ok, f"involution err {worst:.1e}, quadrature err {quadrature:.1e}"


@check("determinant-one-identity")
def _det_one(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(100):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        det = np.linalg.det(a)
        worst = max(worst, max_abs(a @ SIGMA_Y @ a.T - det * SIGMA_Y))
        unit = a / np.sqrt(det)
        worst = max(worst, max_abs(unit @ SIGMA_Y @ unit.T - SIGMA_Y))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


@check("permutation-invariance")
def _permutation(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(ctx.samples(50, 10)):
        m = int(rng.choice([3, 4]))
        psi = random_pure(m, int(rng.integers(2 ** 32)))
        moved = permute_qubits(psi, list(rng.permutation(m)))
        for evaluate in (w_class_pure, ghz_class_pure):
            a = evaluate(psi, ctx.policy).aggregate
            b = evaluate(moved, ctx.policy).aggregate
            worst = max(worst, abs(a - b))
        rho, rho_moved = DensityMatrix.from_pure(psi), DensityMatrix.from_pure(moved)
        for evaluate in (w_class_mixed, ghz_class_mixed):
            worst = max(worst, abs(evaluate(rho).aggregate - evaluate(rho_moved).aggregate))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


@check("optimizer-recovery")
def _optimizer(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    psi = ghz_state(3)
    canonical = ghz_class_pure(psi, ctx.policy).aggregate
    worst = math.inf
    for trial in range(ctx.samples(20, 3)):
        rotated = LocalUnitary(3, tuple(rotation(*rng.uniform(0, 2 * np.pi, 3)) for _ in range(3))).apply(psi)
        report, _ = optimize_ghz_local_unitaries(
            rotated, ctx.policy, restarts=ctx.restarts, iterations=ctx.iters, seed=ctx.seed + trial
        )
        worst = min(worst, report.aggregate / canonical)
    return worst >= 0.99, f"worst recovered fraction {worst:.6f}"


def run_checks(ctx: VerifyContext) -> List[CheckResult]:
    results: List[CheckResult] = []
    for name, fn in _CHECKS:
        started = time.perf_counter()
        try:
            passed, detail = fn(ctx)
        except Exception as exc:  # a crashing check is a failing check
            logger.exception("check %s raised", name)
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - started
        logger.info("%s: %s (%.3fs)", name, "pass" if passed else "FAIL", elapsed)
        results.append(CheckResult(name, bool(passed), detail))
    return results
