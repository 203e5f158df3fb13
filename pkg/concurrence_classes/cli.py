"""
Command-line front end.

    python -m concurrence_classes compute --in state.json [--classes W,GHZ]
    python -m concurrence_classes verify [--quick]
    python -m concurrence_classes sweep ghz-mix-q [--points 5]

Exit codes: 0 success, 1 verification failure, 2 malformed input,
3 contract violation.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import FrozenSet, List, Optional

import click
import numpy as np
import pandas as pd
from dotenv import find_dotenv, load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from concurrence_classes.concurrence import (
    DEFAULT_POLICY,
    NormalizationPolicy,
    entanglement_of_formation_2q,
    ghz_class_mixed,
    ghz_class_pure,
    ghz_sub_class_mixed,
    ghz_sub_class_pure,
    overall_report,
    w_class_mixed,
    w_class_pure,
    wootters_concurrence_2q,
)
from concurrence_classes.config import get_settings
from concurrence_classes.errors import ConfigError, ContractViolation, StateFormatError
from concurrence_classes.optimize import optimize_ghz_local_unitaries
from concurrence_classes.states import (
    DensityMatrix,
    PureState,
    describe,
    densify,
    ghz_mixture,
    load_state,
    w_state,
)
from concurrence_classes.verify import VerifyContext, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_MALFORMED = 2
EXIT_CONTRACT = 3


class Command(str, Enum):
    COMPUTE = "compute"
    VERIFY = "verify"
    SWEEP = "sweep"


class ClassChoice(str, Enum):
    W = "W"
    GHZ = "GHZ"
    GHZ_SUB = "GHZSub"
    OVERALL = "Overall"
    WOOTTERS = "Wootters"
    EOF = "EoF"


class OutputFormat(str, Enum):
    HUMAN = "human"
    MACHINE = "machine"


SWEEPS = ("ghz-mix-q", "w-m")


@dataclass(frozen=True)
class RunConfig:
    command: Command
    input_path: Optional[str] = None
    classes: FrozenSet[ClassChoice] = field(default_factory=frozenset)
    optimize: bool = False
    seed: int = 0
    restarts: int = 1
    iters: int = 1
    workers: int = 1
    output_format: OutputFormat = OutputFormat.HUMAN
    policy: NormalizationPolicy = DEFAULT_POLICY
    sweep: Optional[str] = None
    points: int = 5
    max_m: int = 8
    qubits: int = 3
    quick: bool = False

    def validate(self) -> None:
        if self.command is Command.COMPUTE and not self.input_path:
            raise ConfigError("compute requires an input state file (--in)")
        if self.command is Command.SWEEP and self.sweep not in SWEEPS:
            raise ConfigError(f"unknown sweep {self.sweep!r}; choose one of {', '.join(SWEEPS)}")


# -------------------------
# Output helpers
# -------------------------


def _console() -> Console:
    return Console(highlight=False, soft_wrap=True)


def _emit_machine(payload: dict) -> None:
    def default(obj):
        if hasattr(obj, "item"):
            return obj.item()
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    click.echo(json.dumps(payload, indent=2, sort_keys=True, default=default))


def configure_logging(verbose: int, level_name: str) -> None:
    level = logging.DEBUG if verbose >= 2 else logging.INFO if verbose == 1 else None
    if level is None:
        level = logging.getLevelName(level_name)
        if not isinstance(level, int):
            raise ConfigError(f"unknown log level {level_name!r}")
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


# -------------------------
# compute
# -------------------------


def applicable(choice: ClassChoice, m: int, pure: bool) -> bool:
    return {
        ClassChoice.W: m >= 2,
        ClassChoice.GHZ: m >= 3,
        ClassChoice.GHZ_SUB: m >= 4,
        ClassChoice.OVERALL: pure and m >= 3,
        ClassChoice.WOOTTERS: m == 2,
        ClassChoice.EOF: m == 2,
    }[choice]


def compute_results(state, cfg: RunConfig) -> List[dict]:
    """Evaluate the requested classes on a PureState or Ensemble."""
    pure = isinstance(state, PureState)
    m = state.qubit_count
    rho: Optional[DensityMatrix] = None if pure else densify(state)
    policy = cfg.policy

    if cfg.classes:
        for choice in cfg.classes:
            if not applicable(choice, m, pure):
                kind = "pure" if pure else "mixed"
                raise ContractViolation(
                    f"class {choice.value} does not apply to a {m}-qubit {kind} state", invariant="qubit-count"
                )
        chosen = [c for c in ClassChoice if c in cfg.classes]
    else:
        chosen = [c for c in ClassChoice if applicable(c, m, pure)]
        for choice in ClassChoice:
            if choice not in chosen:
                logger.info("skipping %s class: not defined for this %d-qubit input", choice.value, m)
        if not chosen:
            raise ContractViolation(f"no concurrence class applies to a {m}-qubit state", invariant="qubit-count")
    if cfg.optimize and not pure:
        logger.warning("--optimize applies to pure states only; ignoring it for an ensemble")

    results: List[dict] = []
    for choice in chosen:
        logger.info("computing %s class", choice.value)
        if choice is ClassChoice.W:
            report = w_class_pure(state, policy) if pure else w_class_mixed(rho)
        elif choice is ClassChoice.GHZ:
            if pure and cfg.optimize:
                report, _ = optimize_ghz_local_unitaries(
                    state, policy, restarts=cfg.restarts, iterations=cfg.iters, seed=cfg.seed, workers=cfg.workers
                )
            else:
                report = ghz_class_pure(state, policy) if pure else ghz_class_mixed(rho)
        elif choice is ClassChoice.GHZ_SUB:
            report = ghz_sub_class_pure(state, policy) if pure else ghz_sub_class_mixed(rho)
        elif choice is ClassChoice.OVERALL:
            results.append(overall_report(state, policy).to_dict())
            continue
        else:
            two_qubit = rho if rho is not None else DensityMatrix.from_pure(state)
            fn = wootters_concurrence_2q if choice is ClassChoice.WOOTTERS else entanglement_of_formation_2q
            results.append({"class": choice.value, "aggregate": fn(two_qubit)})
            continue

        entry = report.to_dict()
        entry["class"] = choice.value
        entry["operator_family"] = report.class_tag.value
        results.append(entry)
    return results


def _render_compute(state, results: List[dict]) -> None:
    console = _console()
    if isinstance(state, PureState):
        terms = ", ".join(f"{a.real:+.4g}{a.imag:+.4g}i {ket}" for ket, a in describe(state))
        console.print(f"pure state, {state.qubit_count} qubits: {terms}")
    else:
        weights = ", ".join(f"{w:.4g}" for w, _ in state.members)
        console.print(f"ensemble of {len(state.members)} states on {state.qubit_count} qubits, weights {weights}")

    table = Table(title="Concurrence classes")
    table.add_column("class")
    table.add_column("operator")
    table.add_column("value", justify="right")
    for entry in results:
        for item in entry.get("operators", []):
            label = "Q" + ",".join(str(i) for i in item["indices"])
            table.add_row(entry["class"], label, f"{item['value']:.10f}")
        note = " (heuristic)" if entry.get("heuristic") else ""
        note += " (optimized)" if entry.get("optimized") else ""
        table.add_row(entry["class"], f"aggregate{note}", f"{entry['aggregate']:.10f}", style="bold")
    console.print(table)


def cmd_compute(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        state = load_state(cfg.input_path)
        results = compute_results(state, cfg)
    except (StateFormatError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_MALFORMED
    except ContractViolation as exc:
        click.echo(f"contract violation: {exc}", err=True)
        return EXIT_CONTRACT

    if cfg.output_format is OutputFormat.MACHINE:
        kind = "pure" if isinstance(state, PureState) else "ensemble"
        _emit_machine(
            {
                "input": cfg.input_path,
                "kind": kind,
                "qubits": state.qubit_count,
                "seed": cfg.seed,
                "results": results,
            }
        )
    else:
        _render_compute(state, results)
    return EXIT_OK


# -------------------------
# verify
# -------------------------


def cmd_verify(cfg: RunConfig) -> int:
    ctx = VerifyContext(policy=cfg.policy, seed=cfg.seed, restarts=cfg.restarts, iters=cfg.iters, quick=cfg.quick)
    results = run_checks(ctx)
    failed = [r for r in results if not r.passed]

    if cfg.output_format is OutputFormat.MACHINE:
        _emit_machine(
            {
                "seed": cfg.seed,
                "passed": not failed,
                "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
            }
        )
    else:
        table = Table(title="Verification")
        table.add_column("check")
        table.add_column("status")
        table.add_column("detail")
        for r in results:
            table.add_row(r.name, "[green]pass[/green]" if r.passed else "[red]FAIL[/red]", escape(r.detail))
        _console().print(table)

    if failed:
        click.echo(f"first failing check: {failed[0].name} ({failed[0].detail})", err=True)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


# -------------------------
# sweep
# -------------------------


def run_sweep(name: str, policy: NormalizationPolicy, *, points: int = 5, max_m: int = 8, qubits: int = 3) -> pd.DataFrame:
    """
    Two-column table (parameter, aggregate).

    ghz-mix-q: GHZ-class value of q GHZ+ + (1-q) GHZ- on a uniform q grid.
    w-m: W-class value of the W state for m = 2..max_m.
    """
    if name == "ghz-mix-q":
        if points < 2:
            raise ConfigError("ghz-mix-q needs at least 2 grid points")
        grid = np.linspace(0.0, 1.0, points)
        values = [ghz_class_mixed(ghz_mixture(qubits, float(q))).aggregate for q in grid]
        return pd.DataFrame({"q": grid, "aggregate": values})
    if name == "w-m":
        if max_m < 2:
            raise ConfigError("w-m needs max m of at least 2")
        ms = list(range(2, max_m + 1))
        values = [w_class_pure(w_state(m), policy).aggregate for m in ms]
        return pd.DataFrame({"m": ms, "aggregate": values})
    raise ConfigError(f"unknown sweep {name!r}; choose one of {', '.join(SWEEPS)}")


def cmd_sweep(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        frame = run_sweep(cfg.sweep, cfg.policy, points=cfg.points, max_m=cfg.max_m, qubits=cfg.qubits)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_MALFORMED
    except ContractViolation as exc:
        click.echo(f"contract violation: {exc}", err=True)
        return EXIT_CONTRACT

    parameter = frame.columns[0]
    if cfg.output_format is OutputFormat.MACHINE:
        _emit_machine({"sweep": cfg.sweep, "columns": list(frame.columns), "rows": frame.to_dict(orient="records")})
        return EXIT_OK

    table = Table(title=f"sweep {cfg.sweep}")
    table.add_column(parameter, justify="right")
    table.add_column("aggregate", justify="right")
    for row in frame.itertuples(index=False):
        param = getattr(row, parameter)
        shown = f"{param:.4g}" if isinstance(param, float) and not math.isnan(param) else str(param)
        table.add_row(shown, f"{row.aggregate:.10f}")
    _console().print(table)
    return EXIT_OK


# -------------------------
# click wiring
# -------------------------


def _parse_classes(ctx, param, value: Optional[str]) -> FrozenSet[ClassChoice]:
    if not value:
        return frozenset()
    lookup = {c.value.lower(): c for c in ClassChoice}
    chosen = set()
    for token in value.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() not in lookup:
            raise click.BadParameter(f"unknown class {token!r}; choose from {', '.join(c.value for c in ClassChoice)}")
        chosen.add(lookup[token.lower()])
    return frozenset(chosen)


def _common_options(fn):
    options = [
        click.option("--seed", type=int, default=None, help="Random seed (default: CONCURRENCE_SEED)."),
        click.option("--restarts", type=click.IntRange(min=1), default=None, help="Optimizer restarts."),
        click.option("--iters", type=click.IntRange(min=1), default=None, help="Optimizer iterations per restart."),
        click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]),
                     default=OutputFormat.HUMAN.value, show_default=True),
        click.option("--norm-w", type=float, default=None, help="Override the W-class normalization constant."),
        click.option("--norm-ghz", type=float, default=None, help="Override the GHZ-class normalization constant."),
        click.option("--norm-ghzsub", "norm_ghz_sub", type=float, default=None,
                     help="Override the GHZ^(m-1) normalization constant."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(command: Command, **kwargs) -> RunConfig:
    settings = get_settings()
    seed = kwargs.pop("seed", None)
    restarts = kwargs.pop("restarts", None)
    iters = kwargs.pop("iters", None)
    flags = {
        "w_override": ("--norm-w", kwargs.pop("norm_w", None)),
        "ghz_override": ("--norm-ghz", kwargs.pop("norm_ghz", None)),
        "ghz_sub_override": ("--norm-ghzsub", kwargs.pop("norm_ghz_sub", None)),
    }
    for name, value in flags.values():
        if value is not None and not value > 0:
            raise click.BadParameter(f"{name} must be strictly positive, got {value}")
    # flags replace the CONCURRENCE_NORM_* defaults field by field
    policy = replace(
        NormalizationPolicy.from_settings(settings),
        **{field_name: value for field_name, (_, value) in flags.items() if value is not None},
    )
    return RunConfig(
        command=command,
        seed=settings.seed if seed is None else seed,
        restarts=settings.restarts if restarts is None else restarts,
        iters=settings.iters if iters is None else iters,
        workers=settings.workers,
        output_format=OutputFormat(kwargs.pop("output_format")),
        policy=policy,
        **kwargs,
    )


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info logs, -vv for debug logs.")
def main(verbose: int) -> None:
    """Concurrence classes for multi-qubit states."""
    load_dotenv(find_dotenv(usecwd=True))
    try:
        configure_logging(verbose, get_settings().log_level)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _finish(code: int) -> None:
    click.get_current_context().exit(code)


def _guard_config(build):
    try:
        return build()
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        _finish(EXIT_MALFORMED)


@main.command()
@click.option("--in", "input_path", required=True, type=click.Path(dir_okay=False), help="State file (JSON).")
@click.option("--classes", callback=_parse_classes, default=None,
              help="Comma separated subset of W,GHZ,GHZSub,Overall,Wootters,EoF.")
@click.option("--optimize", is_flag=True, help="Maximize the GHZ class over local unitaries.")
@_common_options
def compute(**kwargs) -> None:
    """Compute class concurrences for a state file."""
    cfg = _guard_config(lambda: _build_config(Command.COMPUTE, **kwargs))
    _finish(cmd_compute(cfg))


@main.command()
@click.option("--quick", is_flag=True, help="Use smaller sample counts.")
@_common_options
def verify(**kwargs) -> None:
    """Run the worked examples and invariant sweeps."""
    cfg = _guard_config(lambda: _build_config(Command.VERIFY, **kwargs))
    _finish(cmd_verify(cfg))


@main.command()
@click.argument("sweep_name", metavar="SWEEP")
@click.option("--points", type=click.IntRange(min=2), default=5, show_default=True, help="q grid size.")
@click.option("--max-m", type=click.IntRange(min=2), default=8, show_default=True, help="Largest m for w-m.")
@click.option("--qubits", type=click.IntRange(min=3), default=3, show_default=True, help="Qubits for ghz-mix-q.")
@_common_options
def sweep(sweep_name: str, **kwargs) -> None:
    """Tabulate a closed-form family: ghz-mix-q or w-m."""
    cfg = _guard_config(lambda: _build_config(Command.SWEEP, sweep=sweep_name, **kwargs))
    _finish(cmd_sweep(cfg))
