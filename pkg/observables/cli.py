import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from observables import __version__
from observables.config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_SEED,
    DEFAULT_SHOTS,
    DEFAULT_WORKERS,
    DEGENERACY_TOL,
    HERMITIAN_TOL,
    UNITARY_TOL,
    SimulationSettings,
)
from observables.decompose import InvalidToleranceError, decompose, roundtrip_residual
from observables.errors import ObservablesError
from observables.linalg import ComplexScalar, frobenius_norm, hermitian_eig
from observables.matrix_file import (
    MatrixFileError,
    file_digest,
    matrix_payload,
    read_matrix,
    render_json,
    write_records,
)
from observables.multiport import MultiportPlan, reck_decompose, reconstruct
from observables.protocol import (
    NonNormalOperatorError,
    ProtocolConfig,
    ProtocolConfigError,
    ProtocolReport,
    ProtocolRunner,
    ShotRecord,
    resolve_source,
)
from observables.random_stream import RNG_ALGORITHM
from observables.states import DensityState, additivity_residual, expectation
from observables.utils import counterfactual
from observables.utils.enums import ExitCode, ProtocolMode, SourceKind

USAGE_ERRORS = (MatrixFileError, ProtocolConfigError, InvalidToleranceError)
DOMAIN_ERRORS = (NonNormalOperatorError,)


@dataclass(frozen=True, slots=True)
class RunManifest:
    """
    Everything a report depends on. Equal manifests give byte-identical outputs.

    Args:
        subcommand: The subcommand that ran.
        inputs: SHA-256 digest of each input file, keyed by its role.
        seed: Root seed, for sampling subcommands.
        shots: Shot count, for sampling subcommands.
        batch_size: Shots per seeded batch, for sampling subcommands.
        tolerances: Tolerances in effect.
        rng: Random stream algorithm identifier.
        version: Package version.
    """

    subcommand: str
    inputs: dict[str, str]
    seed: int | None = None
    shots: int | None = None
    batch_size: int | None = None
    tolerances: dict[str, float | None] = field(default_factory=dict)
    rng: str | None = None
    version: str = __version__

    def payload(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "inputs": dict(self.inputs),
            "seed": self.seed,
            "shots": self.shots,
            "batch_size": self.batch_size,
            "tolerances": dict(self.tolerances),
            "rng": self.rng,
            "version": self.version,
        }


############
# Payloads #
############
def _pair(z: ComplexScalar) -> list[float]:
    return [z.re, z.im]


def plan_payload(plan: MultiportPlan) -> dict:
    return {
        "dim": plan.dim,
        "factor_count": plan.factor_count,
        "factors": [
            {"m": f.m, "n": f.n, "theta": f.theta, "phi": f.phi} for f in plan.factors
        ],
        "output_phases": [_pair(p) for p in plan.output_phases],
    }


def protocol_payload(report: ProtocolReport) -> dict:
    return {
        "mean": _pair(report.mean),
        "stderr": [report.stderr_re, report.stderr_im],
        "exact": _pair(report.exact),
        "exact_a1": report.exact_a1,
        "exact_a2": report.exact_a2,
        "shots": report.shots,
        "seed": report.seed,
        "rng": report.rng,
        "mode": report.mode.value,
        "source": report.source.value if report.source is not None else None,
    }


def _format_complex(z: ComplexScalar) -> str:
    return f"{z.re:.12g} {'-' if z.im < 0 else '+'} {abs(z.im):.12g}i"


#######
# CLI #
#######
class ObservablesCli:
    """
    Command-line front end.

    This class is responsible for:
    - Building the argument parser for every subcommand
    - Running one subcommand and emitting its report and summary
    - Mapping failures to exit codes with the violated invariant on stderr

    A report goes to `--out` when given, with a human summary on stdout.
    Without `--out` the report itself is written to stdout and the summary is
    logged.
    """

    logger_name = "observables"

    def __init__(self):
        self.logger = self._setup_logger()
        self.parser = self._build_parser()

    def _setup_logger(self) -> logging.Logger:
        """
        Initialize the package logger.

        Returns:
            logging.Logger: The logger shared by every module of the package.
        """
        logger = logging.getLogger(self.logger_name)
        # One handler per process, bound to the current stderr
        for stale in list(logger.handlers):
            logger.removeHandler(stale)
        handler = logging.StreamHandler()
        formatter = logging.Formatter("[%(levelname)s] [%(filename)s] %(message)s")
        handler.setFormatter(formatter)
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)

        return logger

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="observables",
            description="Cartesian decomposition and counterfactual measurement of operators",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        output = argparse.ArgumentParser(add_help=False)
        output.add_argument("--out", type=Path, help="Write the report to this file")

        simulation = argparse.ArgumentParser(add_help=False)
        simulation.add_argument("--shots", type=_positive_int, default=DEFAULT_SHOTS)
        simulation.add_argument("--seed", type=int, default=DEFAULT_SEED)
        simulation.add_argument("--records", type=Path, help="Write per-shot records as CSV")
        simulation.add_argument(
            "--batch-size", type=_positive_int, default=DEFAULT_BATCH_SIZE
        )
        simulation.add_argument("--workers", type=_positive_int, default=DEFAULT_WORKERS)

        decompose_parser = subparsers.add_parser(
            "decompose", parents=[output], help="Split an operator into A1 + iA2"
        )
        decompose_parser.add_argument("operator", type=Path)
        decompose_parser.add_argument("--tol", type=float, help="Normality tolerance")

        expval_parser = subparsers.add_parser(
            "expval", parents=[output], help="Expectation value of an operator"
        )
        expval_parser.add_argument("operator", type=Path)
        expval_parser.add_argument("state", type=Path)

        epr_parser = subparsers.add_parser(
            "epr-sim", parents=[output, simulation], help="Simulate the counterfactual protocol"
        )
        epr_parser.add_argument("operator", type=Path)
        epr_parser.add_argument(
            "--source",
            choices=["auto", *(kind.value for kind in SourceKind)],
            default="auto",
        )

        direct_parser = subparsers.add_parser(
            "direct-sim", parents=[output, simulation], help="Jointly measure a normal operator"
        )
        direct_parser.add_argument("operator", type=Path)
        direct_parser.add_argument("state", type=Path)

        reck_parser = subparsers.add_parser(
            "reck", parents=[output], help="Factor a unitary into two-level rotations"
        )
        reck_parser.add_argument("unitary", type=Path)

        eig_parser = subparsers.add_parser(
            "eig", parents=[output], help="Diagonalize a Hermitian matrix"
        )
        eig_parser.add_argument("hermitian", type=Path)

        return parser

    def run(self, argv: Sequence[str] | None = None) -> int:
        """
        Parse `argv` and run the selected subcommand.

        Returns:
            int: The process exit code.
        """
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code) if e.code is not None else int(ExitCode.SUCCESS)

        handlers = {
            "decompose": self.cmd_decompose,
            "expval": self.cmd_expval,
            "epr-sim": self.cmd_epr_sim,
            "direct-sim": self.cmd_direct_sim,
            "reck": self.cmd_reck,
            "eig": self.cmd_eig,
        }
        try:
            report, summary = handlers[args.subcommand](args)
        except ObservablesError as e:
            print(f"error [{e.invariant}]: {e}", file=sys.stderr)
            return int(self._exit_code(e))

        self._emit(report, summary, args.out)
        return int(ExitCode.SUCCESS)

    @staticmethod
    def _exit_code(error: ObservablesError) -> ExitCode:
        if isinstance(error, USAGE_ERRORS):
            return ExitCode.USAGE
        if isinstance(error, DOMAIN_ERRORS):
            return ExitCode.DOMAIN
        return ExitCode.INVARIANT

    def _emit(self, report: dict, summary: list[str], out: Path | None) -> None:
        rendered = render_json(report) + "\n"
        if out is not None:
            out.write_text(rendered, encoding="utf-8")
            for line in summary:
                print(line)
        else:
            sys.stdout.write(rendered)
            for line in summary:
                self.logger.info(line)

    ###############
    # Subcommands #
    ###############
    def cmd_decompose(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        a = read_matrix(args.operator)
        parts = decompose(a, args.tol)
        residual = roundtrip_residual(a, parts)
        manifest = RunManifest(
            subcommand="decompose",
            inputs={"operator": file_digest(args.operator)},
            tolerances={"normality": parts.tolerance},
        )
        report = {
            "a1": matrix_payload(parts.a1),
            "a2": matrix_payload(parts.a2),
            "commutator_norm": parts.commutator_norm,
            "normal": parts.normal,
            "roundtrip_residual": residual,
            "manifest": manifest.payload(),
        }
        summary = [
            f"dim {a.dim}: ‖[A1, A2]‖_F = {parts.commutator_norm:.6e}",
            "normal: A1 and A2 can be measured jointly"
            if parts.normal
            else "not normal: only the counterfactual measurement applies",
            f"round-trip residual {residual:.3e}",
        ]
        return report, summary

    def cmd_expval(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        a = read_matrix(args.operator)
        rho = DensityState(read_matrix(args.state))
        parts = decompose(a)
        value = expectation(rho, a)
        residual = additivity_residual(rho, a)
        manifest = RunManifest(
            subcommand="expval",
            inputs={"operator": file_digest(args.operator), "state": file_digest(args.state)},
            tolerances={"hermitian": HERMITIAN_TOL},
        )
        report = {
            "expectation": _pair(value),
            "expectation_a1": _pair(expectation(rho, parts.a1)),
            "expectation_a2": _pair(expectation(rho, parts.a2)),
            "additivity_residual": residual,
            "manifest": manifest.payload(),
        }
        summary = [
            f"Tr(ρA) = {_format_complex(value)}",
            f"additivity residual {residual:.3e}",
        ]
        return report, summary

    def cmd_epr_sim(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        a = read_matrix(args.operator)
        source = resolve_source(
            None if args.source == "auto" else SourceKind(args.source), a.dim
        )
        config = ProtocolConfig(
            operator=a,
            source=source,
            shots=args.shots,
            seed=args.seed,
            mode=ProtocolMode.COUNTERFACTUAL,
        )
        records, report = self._runner(args).run(config)
        return self._simulation_report(args, "epr-sim", {"operator": args.operator}, records, report)

    def cmd_direct_sim(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        a = read_matrix(args.operator)
        rho = DensityState(read_matrix(args.state))
        records, report = self._runner(args).direct(a, rho, args.shots, args.seed)
        inputs = {"operator": args.operator, "state": args.state}
        return self._simulation_report(args, "direct-sim", inputs, records, report)

    def cmd_reck(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        u = read_matrix(args.unitary)
        plan = reck_decompose(u)
        residual = frobenius_norm(reconstruct(plan) - u)
        manifest = RunManifest(
            subcommand="reck",
            inputs={"unitary": file_digest(args.unitary)},
            tolerances={"unitary": UNITARY_TOL},
        )
        report = {
            "plan": plan_payload(plan),
            "reconstruction_residual": residual,
            "manifest": manifest.payload(),
        }
        summary = [
            f"dim {plan.dim}: {plan.factor_count} two-level factors "
            f"(at most {plan.dim * (plan.dim - 1) // 2})",
            f"reconstruction residual {residual:.3e}",
        ]
        return report, summary

    def cmd_eig(self, args: argparse.Namespace) -> tuple[dict, list[str]]:
        h = read_matrix(args.hermitian)
        eigensystem = hermitian_eig(h)
        residual = frobenius_norm(eigensystem.reconstruct() - h)
        manifest = RunManifest(
            subcommand="eig",
            inputs={"hermitian": file_digest(args.hermitian)},
            tolerances={"hermitian": HERMITIAN_TOL, "degeneracy": DEGENERACY_TOL},
        )
        report = {
            "eigenvalues": list(eigensystem.eigenvalues),
            "vectors": matrix_payload(eigensystem.vectors),
            "sweeps": eigensystem.sweeps,
            "reconstruction_residual": residual,
            "manifest": manifest.payload(),
        }
        summary = [
            "eigenvalues: " + ", ".join(f"{v:.12g}" for v in eigensystem.eigenvalues),
            f"reconstruction residual {residual:.3e} after {eigensystem.sweeps} sweeps",
        ]
        return report, summary

    ###################
    # Private helpers #
    ###################
    @staticmethod
    def _runner(args: argparse.Namespace) -> ProtocolRunner:
        settings = SimulationSettings(
            shots=args.shots,
            seed=args.seed,
            batch_size=args.batch_size,
            workers=args.workers,
        )
        return ProtocolRunner.from_settings(settings)

    def _simulation_report(
        self,
        args: argparse.Namespace,
        subcommand: str,
        inputs: dict[str, Path],
        records: list[ShotRecord],
        report: ProtocolReport,
    ) -> tuple[dict, list[str]]:
        if args.records is not None:
            write_records(args.records, records)
            self.logger.info(f"Wrote {len(records)} shot records to {args.records}")

        manifest = RunManifest(
            subcommand=subcommand,
            inputs={role: file_digest(path) for role, path in inputs.items()},
            seed=args.seed,
            shots=args.shots,
            batch_size=args.batch_size,
            tolerances={"hermitian": HERMITIAN_TOL, "degeneracy": DEGENERACY_TOL},
            rng=RNG_ALGORITHM,
        )
        payload = protocol_payload(report)
        payload["manifest"] = manifest.payload()

        re_ok, im_ok = report.within_sigma(5.0)
        label = "counterfactual" if counterfactual(report.mode) else "direct"
        summary = [
            f"{label} estimate {_format_complex(report.mean)} "
            f"(stderr {report.stderr_re:.3e}, {report.stderr_im:.3e}) over {report.shots} shots",
            f"exact Tr(ρA) = {_format_complex(report.exact)}",
            f"within 5 standard errors: real {re_ok}, imaginary {im_ok}",
        ]
        return payload, summary


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def main(argv: Sequence[str] | None = None) -> int:
    return ObservablesCli().run(argv)


if __name__ == "__main__":
    sys.exit(main())
