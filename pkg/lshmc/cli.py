"""Command-line entry point.

Every subcommand resolves its configuration from built-in defaults, an
optional TOML file (`--config`, keys named like the long flags) and the
flags themselves, in that order of precedence. Output files go to
`--out-dir` and embed the resolved configuration; a one-line JSON summary
is printed to standard output.

Exit status: 0 on success, 1 when a checked bound is violated, 2 on a
usage error and 3 on a runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tomllib
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
from expression import Nothing, Result, Some, pipe
from expression.collections import Block
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from lshmc._version import __version__
from lshmc.core.error import ClaimCheckFailed, LshmcError, SpecError, unwrap
from lshmc.core.hmc import check_equivalence, default_step_size, round_trip_error
from lshmc.core.target import TargetDensity, TargetKind, TargetSpec, exact_draws, make_target
from lshmc.core.validation import validate_target
from lshmc.diagnostics.claims import (
    ClaimCheck,
    check_upper,
    chi_sq_claim,
    concentration_claims,
    grad_concentration_report,
    overlap_claim,
    product_claims,
    rejection_claim,
)
from lshmc.diagnostics.marginals import projected_ks
from lshmc.experiments.lower_bound import LowerBoundRunSpec, lower_bound_claims, lower_bound_experiment
from lshmc.experiments.report import emit_report, write_chains, write_document, write_draws
from lshmc.experiments.scaling import ScalingRunSpec, scaling_claims, scaling_study
from lshmc.sampler.config import HmcConfig
from lshmc.sampler.driver import boosted_samples, exact_log_warmness, iteration_budget, log_warmness, run_chains
from lshmc.sampler.streams import spawn_generators


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CLAIM = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

THREADS_ENV = "LSHMC_THREADS"
TAIL_C_VALUES = [1.0, 2.0]
PRODUCT_CS = [0.01, 0.1, 0.25, 0.5, 0.9]
PRODUCT_TERMS = 60
CHI_SQ_T = 3.0
REJECTION_POINTS = 100

Command = Literal["sample", "diagnose", "equivalence", "lower-bound", "scaling", "validate-target"]
TargetName = Literal["gaussian-iso", "gaussian-diag", "hard", "quartic"]


class CliInvocation(BaseModel):
    """A fully resolved command line.

    Fields left at None take a subcommand-specific default: `kappa` and
    `dim` are 10^4 and 32 for lower-bound and 1 and 4 otherwise, `chains`
    is 256 for scaling and 4 otherwise, `c_values` is 5, 10, 20, 40 for
    lower-bound and 1, 2 for the tail claims of diagnose.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    target: TargetName = "hard"
    kappa: float | None = Field(default=None, ge=1.0)
    dim: int | None = Field(default=None, ge=1)
    eigs: list[float] | None = None
    shift: list[float] | None = None
    weight: float = Field(default=1.0, ge=0.0)
    eps: float = Field(default=0.1, gt=0.0, le=1.0)
    eta: float | None = Field(default=None, gt=0.0)
    auto_step: bool = False
    k: int | None = Field(default=None, ge=0)
    rounds: int | None = Field(default=None, ge=1)
    chains: int | None = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    c_values: list[float] | None = None
    mc_draws: int = Field(default=10_000, ge=2)
    trials: int = Field(default=1_000, ge=1)
    pairs: int = Field(default=1_000, ge=1)
    kappas: list[float] = Field(default_factory=lambda: [1.0, 4.0, 16.0, 64.0])
    dims: list[int] = Field(default_factory=lambda: [16])
    ks_threshold: float = Field(default=0.05, gt=0.0, lt=1.0)
    max_iters: int = Field(default=2_000_000, ge=1)
    budget_constant: float = Field(default=1.0, gt=0.0)
    projections: int = Field(default=5, ge=0)
    threads: int | None = Field(default=None, ge=1)
    out_dir: Path = Path("lshmc-out")
    format: Literal["csv", "json"] = "csv"
    verbose: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _step_choice(self) -> CliInvocation:
        if self.eta is not None and self.auto_step:
            raise ValueError("--eta conflicts with --auto-step")
        return self

    @model_validator(mode="after")
    def _target_choice(self) -> CliInvocation:
        if self.eigs is None:
            return self
        if self.target not in ("gaussian-diag", "quartic"):
            raise ValueError(f"--eigs does not apply to --target {self.target}")
        if self.dim is not None and self.dim != len(self.eigs):
            raise ValueError(f"--dim {self.dim} disagrees with the {len(self.eigs)} values of --eigs")
        return self

    def provenance(self) -> dict[str, Any]:
        return {"lshmc": __version__, **self.model_dump(mode="json", exclude={"verbose", "threads"})}


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exn:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exn


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exn:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exn


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML file with flag values; flags win")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out-dir", type=Path, help="output directory (default lshmc-out)")
    parser.add_argument("--format", choices=["csv", "json"], help="table format (default csv)")
    parser.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    parser.add_argument("-v", "--verbose", action="count", help="-v for info, -vv for debug logging")


def _target(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--target", choices=["gaussian-iso", "gaussian-diag", "hard", "quartic"])
    parser.add_argument("--kappa", type=float, help="condition number")
    parser.add_argument("--dim", type=int, help="dimension")
    parser.add_argument("--eigs", type=_float_list, help="comma separated eigenvalues")
    parser.add_argument("--shift", type=_float_list, help="comma separated minimizer")
    parser.add_argument("--weight", type=float, help="log-cosh weight of the quartic target")


def _step(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eps", type=float, help="target accuracy in (0, 1]")
    parser.add_argument("--eta", type=float, help="explicit leapfrog step size")
    parser.add_argument("--auto-step", action="store_true", help="step size from the accuracy rule (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lshmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, summary: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=summary, argument_default=argparse.SUPPRESS)
        _common(sub)
        return sub

    sample = command("sample", "run chains and boosted draws")
    _target(sample)
    _step(sample)
    sample.add_argument("--k", type=int, help="inner iterations (default from the budget)")
    sample.add_argument("--rounds", type=int, help="boosting rounds (default ceil(log 1/eps))")
    sample.add_argument("--chains", type=int, help="number of chains and replicates")
    sample.add_argument("--budget-constant", type=float, help="constant C of the iteration budget")

    diagnose = command("diagnose", "check the concentration and rejection bounds")
    _target(diagnose)
    _step(diagnose)
    diagnose.add_argument("--c-values", type=_float_list, help="tail parameters c")
    diagnose.add_argument("--mc-draws", type=int, help="Monte Carlo draws per estimate")
    diagnose.add_argument("--chains", type=int, help="replicates for non-Gaussian targets")
    diagnose.add_argument("--budget-constant", type=float)

    equivalence = command("equivalence", "compare HMC and MALA accept ratios")
    _target(equivalence)
    _step(equivalence)
    equivalence.add_argument("--trials", type=int, help="coupled trials")

    lower = command("lower-bound", "acceptance collapse at eta = c / sqrt(kappa)")
    lower.add_argument("--kappa", type=float)
    lower.add_argument("--dim", type=int)
    lower.add_argument("--c-values", type=_float_list)
    lower.add_argument("--mc-draws", type=int, help="stationary draws per c")

    scaling = command("scaling", "mixing time against kappa and d")
    scaling.add_argument("--kappas", type=_float_list)
    scaling.add_argument("--dims", type=_int_list)
    scaling.add_argument("--eps", type=float)
    scaling.add_argument("--ks-threshold", type=float)
    scaling.add_argument("--max-iters", type=int)
    scaling.add_argument("--chains", type=int)
    scaling.add_argument("--budget-constant", type=float)

    validate = command("validate-target", "check a target's declared constants")
    _target(validate)
    validate.add_argument("--pairs", type=int, help="random point pairs to check")

    for sub in (sample, diagnose):
        sub.add_argument("--projections", type=int, help="random projections for KS distances")
    return parser


def _load_config(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as stream:
            values = tomllib.load(stream)
    except (OSError, tomllib.TOMLDecodeError) as exn:
        raise SpecError(f"cannot read config file {path}: {exn}") from exn
    return {key.replace("-", "_"): value for key, value in values.items()}


def resolve(argv: Sequence[str] | None = None) -> CliInvocation:
    """Parse arguments and merge them over the config file.

    Raises:
        SystemExit: On argparse usage errors.
        SpecError: On an unreadable config file or invalid values.
    """
    flags = vars(build_parser().parse_args(argv))
    config = flags.pop("config", None)
    values = _load_config(config) if config is not None else {}
    values.pop("command", None)
    values.update(flags)
    try:
        return CliInvocation.model_validate(values)
    except ValidationError as exn:
        raise SpecError(str(exn)) from exn


def thread_count(inv: CliInvocation) -> int:
    if inv.threads is not None:
        return inv.threads
    env = os.environ.get(THREADS_ENV)
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError as exn:
        raise SpecError(f"{THREADS_ENV} must be an integer, got {env!r}") from exn


def _kappa(inv: CliInvocation) -> float:
    return inv.kappa if inv.kappa is not None else (1e4 if inv.command == "lower-bound" else 1.0)


def _dim(inv: CliInvocation) -> int:
    if inv.dim is not None:
        return inv.dim
    if inv.eigs is not None:
        return len(inv.eigs)
    return 32 if inv.command == "lower-bound" else 4


def target_spec(inv: CliInvocation) -> TargetSpec:
    """Target spec from the flags.

    Without `--eigs` the diagonal kinds use eigenvalues spaced geometrically
    from 1 to kappa.
    """
    kappa, dim = _kappa(inv), _dim(inv)
    eigs = tuple(inv.eigs) if inv.eigs is not None else tuple(np.geomspace(1.0, kappa, dim).tolist())
    match inv.target:
        case "gaussian-iso":
            kind = TargetKind.GaussianIso(dim)
        case "gaussian-diag":
            kind = TargetKind.GaussianDiag(eigs)
        case "hard":
            kind = TargetKind.Hard(kappa, dim)
        case _:
            kind = TargetKind.Quartic(eigs, inv.weight)
    return TargetSpec(kind, Nothing if inv.shift is None else Some(tuple(inv.shift)))


def step_size(inv: CliInvocation, target: TargetDensity) -> float:
    if inv.eta is not None:
        return inv.eta
    return pipe(default_step_size(target.smoothness, target.dim, target.kappa, inv.eps), unwrap).eta


class SampleSummary(BaseModel):
    """Contents of `summary.json`.

    `log_warmness` is (d/2) log kappa for the N(x*, I/L) warm start and
    `exact_log_warmness` its exact value, present for Gaussian targets only.
    """

    target: str
    kappa: float
    dim: int
    eta: float
    eps: float
    k_inner: int
    rounds: int
    seed: int
    accept_rate: float
    mean_grad_norm: float
    ks_per_coordinate: list[float]
    ks_projections: list[float]
    log_warmness: float
    log_warmness_over_eps: float
    exact_log_warmness: float | None = None


class EquivalenceRow(BaseModel):
    target: str
    eta: float
    h: float
    n_trials: int
    max_discrepancy: float
    decision_mismatches: int
    max_round_trip_error: float


class ValidationRow(BaseModel):
    target: str
    check: str
    max_violation: float
    tolerance: float
    passed: bool


class Outcome(BaseModel):
    """What a pipeline reports back for the standard output summary."""

    outputs: list[str]
    claims_failed: list[str] = Field(default_factory=list)
    details: dict[str, Any] = Field(default_factory=dict)


def _claims_outcome(
    inv: CliInvocation, tables: dict[str, Sequence[BaseModel]], claims: Block[ClaimCheck], details: dict[str, Any]
) -> Outcome:
    tables = {**tables, "claims": claims} if claims else tables
    paths = unwrap(emit_report(tables, inv.out_dir, inv.format, inv.provenance()))
    failed = [claim.claim_id for claim in claims if not claim.passed]
    return Outcome(outputs=[str(p) for p in paths], claims_failed=failed, details=details)


def run_sample(inv: CliInvocation) -> Outcome:
    target = unwrap(make_target(target_spec(inv)))
    eta = step_size(inv, target)
    k_budget, rounds_budget = iteration_budget(target.kappa, target.dim, inv.eps, inv.budget_constant)
    cfg = HmcConfig(
        eta=eta,
        eps=inv.eps,
        k=inv.k if inv.k is not None else k_budget,
        outer_rounds=inv.rounds or rounds_budget,
        seed=inv.seed,
        n_chains=inv.chains or 4,
    )
    chains = run_chains(target, cfg, threads=thread_count(inv))
    draws = boosted_samples(target, cfg) if cfg.k >= 1 else np.stack([c.final_x for c in chains])

    ks = projected_ks(draws, target, inv.projections, spawn_generators(inv.seed + 2, 1)[0]).default_value([])
    warmness = log_warmness(target, inv.eps)
    summary = SampleSummary(
        target=target.name,
        kappa=target.kappa,
        dim=target.dim,
        eta=eta,
        eps=inv.eps,
        k_inner=cfg.k,
        rounds=cfg.outer_rounds,
        seed=inv.seed,
        accept_rate=float(np.mean([c.accept_rate for c in chains])),
        mean_grad_norm=float(np.mean(np.linalg.norm(target.grad(draws), axis=1))),
        ks_per_coordinate=ks[: target.dim],
        ks_projections=ks[target.dim :],
        log_warmness=warmness.log_beta,
        log_warmness_over_eps=warmness.log_beta_over_eps,
        exact_log_warmness=exact_log_warmness(target).to_optional(),
    )
    provenance = inv.provenance()
    paths = [
        unwrap(write_chains(list(chains), inv.out_dir / "chains.csv", provenance)),
        unwrap(write_draws(draws, inv.out_dir / "draws.csv", provenance)),
        unwrap(write_document(inv.out_dir / "summary.json", summary.model_dump(mode="json"), provenance)),
    ]
    return Outcome(
        outputs=[str(p) for p in paths],
        details={"accept_rate": summary.accept_rate, "eta": eta, "k_inner": cfg.k, "rounds": cfg.outer_rounds},
    )


def _stationary_points(inv: CliInvocation, target: TargetDensity, eta: float) -> np.ndarray[Any, Any]:
    match exact_draws(target, np.random.default_rng(inv.seed), inv.mc_draws):
        case Result(tag="ok", ok=draws):
            return draws
        case _:
            k, rounds = iteration_budget(target.kappa, target.dim, inv.eps, inv.budget_constant)
            cfg = HmcConfig(eta=eta, eps=inv.eps, k=k, outer_rounds=rounds, seed=inv.seed, n_chains=inv.chains or 4)
            logger.info("no closed-form draws for %s, using %d boosted replicates", target.name, cfg.n_chains)
            return boosted_samples(target, cfg)


def run_diagnose(inv: CliInvocation) -> Outcome:
    target = unwrap(make_target(target_spec(inv)))
    eta = step_size(inv, target)
    points = _stationary_points(inv, target, eta)
    [rng_overlap, rng_reject, rng_chi, rng_ks] = spawn_generators(inv.seed + 1, 4)

    ks = projected_ks(points, target, inv.projections, rng_ks).default_value([])
    summary = grad_concentration_report(
        target,
        points,
        inv.c_values or TAIL_C_VALUES,
        eps=inv.eps,
        ks_per_coordinate=ks[: target.dim],
    )
    claims = (
        concentration_claims(target, summary, inv.eps)
        + Block.singleton(overlap_claim(target, eta, inv.mc_draws, rng_overlap))
        + Block.singleton(
            rejection_claim(target, eta, inv.eps, points, REJECTION_POINTS, inv.mc_draws, rng_reject)
        )
        + Block.singleton(chi_sq_claim(target.dim, CHI_SQ_T, inv.mc_draws, rng_chi))
        + product_claims(PRODUCT_CS, PRODUCT_TERMS)
    )
    details = {"mean_grad_norm": summary.mean_grad_norm, "ks_projections": ks[target.dim :]}
    return _claims_outcome(inv, {}, claims, details)


def run_equivalence(inv: CliInvocation) -> Outcome:
    target = unwrap(make_target(target_spec(inv)))
    eta = step_size(inv, target)
    report = check_equivalence(target, eta, inv.trials, inv.seed)

    rng = np.random.default_rng(inv.seed + 1)
    x = target.minimizer + rng.standard_normal((inv.trials, target.dim)) / np.sqrt(target.strong_convexity)
    v = rng.standard_normal((inv.trials, target.dim))
    round_trip = float(np.max(round_trip_error(target, eta, x, v)))

    row = EquivalenceRow(
        target=target.name,
        eta=eta,
        h=report.h,
        n_trials=report.n_trials,
        max_discrepancy=report.max_discrepancy,
        decision_mismatches=report.decision_mismatches,
        max_round_trip_error=round_trip,
    )
    claims = Block(
        [
            check_upper(
                "hmc-mala-equivalence",
                "HMC and MALA log accept ratios agree for h = eta^2 / 2",
                report.max_discrepancy if report.decision_mismatches == 0 else float("inf"),
                report.tolerance,
            ),
            check_upper("leapfrog-reversibility", "leapfrog round trip returns to the start", round_trip, 1e-10),
        ]
    )
    return _claims_outcome(inv, {"equivalence": [row]}, claims, {"max_discrepancy": report.max_discrepancy})


def run_lower_bound(inv: CliInvocation) -> Outcome:
    spec = LowerBoundRunSpec.model_validate(
        {
            "kappa": _kappa(inv),
            "dim": _dim(inv),
            "c_values": inv.c_values or [5.0, 10.0, 20.0, 40.0],
            "n_draws": inv.mc_draws,
            "seed": inv.seed,
        }
    )
    rows = lower_bound_experiment(spec)
    return _claims_outcome(
        inv,
        {"lower_bound": rows},
        lower_bound_claims(rows),
        {"accept_rates": [row.accept_rate for row in rows]},
    )


def run_scaling(inv: CliInvocation) -> Outcome:
    spec = ScalingRunSpec(
        kappas=inv.kappas,
        dims=inv.dims,
        eps=inv.eps,
        ks_threshold=inv.ks_threshold,
        max_iters=inv.max_iters,
        n_chains=inv.chains or 256,
        C=inv.budget_constant,
        seed=inv.seed,
    )
    rows = scaling_study(spec, threads=thread_count(inv))
    return _claims_outcome(
        inv, {"scaling": rows}, scaling_claims(rows), {"k_hat": [row.k_hat for row in rows]}
    )


def run_validate_target(inv: CliInvocation) -> Outcome:
    target = unwrap(make_target(target_spec(inv)))
    report = validate_target(target, inv.pairs, inv.seed)
    rows = report.checks.map(
        lambda check: ValidationRow(
            target=report.target,
            check=check.name,
            max_violation=check.max_violation,
            tolerance=check.tolerance,
            passed=check.passed,
        )
    )
    failed = report.failures().map(lambda check: check.name)
    claim = check_upper(
        "target-validation", "declared gradient and constants hold on random point pairs", float(len(failed)), 0.0
    )
    return _claims_outcome(inv, {"validation": rows}, Block.singleton(claim), {"failed_checks": list(failed)})


PIPELINES: dict[str, Callable[[CliInvocation], Outcome]] = {
    "sample": run_sample,
    "diagnose": run_diagnose,
    "equivalence": run_equivalence,
    "lower-bound": run_lower_bound,
    "scaling": run_scaling,
    "validate-target": run_validate_target,
}


def _print_summary(command: str, status: int, outcome: Outcome | None, error: str | None = None) -> None:
    summary: dict[str, Any] = {"command": command, "exit": status}
    if outcome is not None:
        summary.update(outputs=outcome.outputs, claims_failed=outcome.claims_failed, **outcome.details)
    if error is not None:
        summary["error"] = error
    sys.stdout.write(json.dumps(summary, sort_keys=True, default=str) + "\n")


def dispatch(inv: CliInvocation) -> int:
    """Run the selected pipeline and map its outcome to an exit status."""
    try:
        outcome = PIPELINES[inv.command](inv)
    except (SpecError, ValidationError) as exn:
        logger.error("%s", exn)
        _print_summary(inv.command, EXIT_USAGE, None, str(exn))
        return EXIT_USAGE
    except ClaimCheckFailed as exn:
        logger.error("%s", exn)
        _print_summary(inv.command, EXIT_CLAIM, None, str(exn))
        return EXIT_CLAIM
    except (LshmcError, OSError, ArithmeticError) as exn:
        logger.exception("%s failed", inv.command)
        _print_summary(inv.command, EXIT_RUNTIME, None, str(exn))
        return EXIT_RUNTIME

    status = EXIT_CLAIM if outcome.claims_failed else EXIT_OK
    if outcome.claims_failed:
        logger.warning("violated: %s", ", ".join(outcome.claims_failed))
    _print_summary(inv.command, status, outcome)
    return status


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        inv = resolve(argv)
    except SystemExit as exn:
        return exn.code if isinstance(exn.code, int) else EXIT_USAGE
    except SpecError as exn:
        _configure_logging(0)
        logger.error("%s", exn)
        return EXIT_USAGE

    _configure_logging(inv.verbose)
    return dispatch(inv)


__all__ = [
    "CliInvocation",
    "EquivalenceRow",
    "Outcome",
    "SampleSummary",
    "ValidationRow",
    "build_parser",
    "dispatch",
    "main",
    "resolve",
    "target_spec",
    "thread_count",
]
