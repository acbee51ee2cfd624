"""
Command line front end: `python -m app.cli <command> ...`

Every command prints one JSON report on stdout. Exit code 0 means success,
2 a failed verification, 1 an input error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel

from app.core.config import settings
from app.core.exceptions import (
    GameFormatError,
    IterationCapExceeded,
    PreconditionError,
    QuittingGameError,
    SingularMatrixError,
)
from app.core.logging import setup_logging
from app.services.equilibrium import EquilibriumService
from app.services.stationary import StationaryConstructor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_VERIFICATION_FAILED = 2


class UsageError(Exception):
    """argparse reported a malformed command line"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_vector(text: str) -> List[float]:
    """Parse "a,b,c" into floats"""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Not a comma-separated vector: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python -m app.cli", description=settings.APP_NAME)
    parser.add_argument("--tolerance", type=float, default=None, help="Numerical tolerance override")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="Normal/abnormal split and R̂")
    p.add_argument("game")

    p = sub.add_parser("lcp", help="Solve LCP(R, q) in simplex form")
    p.add_argument("--matrix", required=True)
    p.add_argument("--q", type=parse_vector, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--standard-form", action="store_true")

    p = sub.add_parser("qtest", help="Q-matrix test of R̂ or of a matrix file")
    p.add_argument("game", nargs="?")
    p.add_argument("--matrix")
    p.add_argument("--samples", type=int, default=settings.QTEST_SAMPLES)
    p.add_argument("--seed", type=int, default=settings.QTEST_SEED)

    p = sub.add_parser("stationary", help="Stationary ε-equilibrium")
    p.add_argument("game")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--candidate", type=parse_vector)
    p.add_argument("--continuation", type=parse_vector)
    p.add_argument("--discount", type=float)

    p = sub.add_parser("block", help="Building block at an anchor")
    p.add_argument("game")
    p.add_argument("--y", type=parse_vector, required=True)
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("sunspot", help="Sunspot ε-equilibrium")
    p.add_argument("game")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--target", type=parse_vector)
    p.add_argument("--start", type=parse_vector)
    p.add_argument("--write-profile")

    p = sub.add_parser("verify", help="Verify a kiloblock profile")
    p.add_argument("game")
    p.add_argument("--profile", required=True)
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("simulate", help="Monte Carlo run of a kiloblock profile")
    p.add_argument("game")
    p.add_argument("--profile", required=True)
    p.add_argument("--seed", type=int, default=settings.SIMULATION_SEED)
    p.add_argument("--runs", type=int, default=settings.SIMULATION_RUNS)

    p = sub.add_parser("mmatrix", help="M-matrix targets")
    p.add_argument("game")
    p.add_argument("--exact", action="store_true")
    return parser


def dispatch(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    """Run one command and print its report; returns the exit code"""
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        _emit(stdout, _envelope("usage", None, [], {"error": str(e)}))
        return EXIT_INPUT_ERROR

    setup_logging(args.log_level)
    service = EquilibriumService(args.tolerance)
    warnings: List[str] = []
    try:
        report, passed = COMMANDS[args.command](service, args, warnings)
    except (GameFormatError, PreconditionError, SingularMatrixError, IterationCapExceeded) as e:
        logger.error("%s failed: %s", args.command, e)
        _emit(stdout, _envelope(args.command, args.tolerance, warnings, {"error": str(e), "type": type(e).__name__}))
        return EXIT_INPUT_ERROR
    except QuittingGameError as e:
        logger.error("%s failed: %s", args.command, e)
        _emit(stdout, _envelope(args.command, args.tolerance, warnings, {"error": str(e), "type": type(e).__name__}))
        return EXIT_VERIFICATION_FAILED

    _emit(stdout, _envelope(args.command, args.tolerance, warnings, report))
    return EXIT_OK if passed else EXIT_VERIFICATION_FAILED


# ------------------------------------------------------------------ commands

def _load_game(service: EquilibriumService, path: str, warnings: List[str]):
    game = service.games.load_game(path)
    warnings.extend(game.warnings)
    if game.scale != 1.0:
        warnings.append(f"payoffs are stored divided by {game.scale:.12g}")
    return game


def _classify(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    _, cls = service.prepare(game)
    return cls.to_report(game.warnings), True


def _lcp(service, args, warnings):
    matrix = service.games.load_matrix(args.matrix)
    return service.solve_lcp(matrix, args.q, standard_form=args.standard_form, exact=args.exact), True


def _qtest(service, args, warnings):
    if args.matrix:
        matrix = service.games.load_matrix(args.matrix)
    elif args.game:
        _, cls = service.prepare(_load_game(service, args.game, warnings))
        matrix = cls.restricted
    else:
        raise PreconditionError("qtest needs a game file or --matrix")
    return service.q_matrix_test(matrix, samples=args.samples, seed=args.seed), True


def _stationary(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    constructor = StationaryConstructor(args.tolerance)
    if args.candidate is not None:
        report = constructor.verify_candidate(
            game, args.candidate, args.eps, continuation=args.continuation, discount=args.discount
        )
    else:
        report = constructor.construct_stationary(game, args.eps)
    return report, report.passed


def _block(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    report = service.build_block(game, args.y, args.eps)
    return report, report.passed


def _sunspot(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    report = service.run_sunspot(game, args.eps, target=args.target, start=args.start)
    if args.write_profile:
        Path(args.write_profile).write_text(
            json.dumps(_rounded(report.profile.model_dump(mode="json", by_alias=True)), indent=2)
        )
        logger.info("profile written to %s", args.write_profile)
    return report, report.evaluation.passed


def _verify(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    profile = service.games.load_profile(args.profile)
    report = service.verify_profile(game, profile, args.eps)
    return report, report.passed


def _simulate(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    profile = service.games.load_profile(args.profile)
    return service.simulate(game, profile, seed=args.seed, runs=args.runs), True


def _mmatrix(service, args, warnings):
    game = _load_game(service, args.game, warnings)
    _, cls = service.prepare(game)
    report = service.m_matrix.report(cls, exact=args.exact)
    return report, report.passed


COMMANDS = {
    "classify": _classify,
    "lcp": _lcp,
    "qtest": _qtest,
    "stationary": _stationary,
    "block": _block,
    "sunspot": _sunspot,
    "verify": _verify,
    "simulate": _simulate,
    "mmatrix": _mmatrix,
}


# ------------------------------------------------------------------ output

def _envelope(command: str, tolerance: Optional[float], warnings: List[str], report: Any) -> Dict[str, Any]:
    if isinstance(report, BaseModel):
        report = report.model_dump(mode="json", by_alias=True)
    return {
        "tool": settings.APP_NAME,
        "version": settings.VERSION,
        "command": command,
        "tolerance": settings.TOLERANCE if tolerance is None else tolerance,
        "warnings": list(dict.fromkeys(warnings)),
        "report": report,
    }


def _rounded(value: Any) -> Any:
    """Floats to REPORT_DIGITS significant digits, recursively"""
    if isinstance(value, float):
        return float(f"{value:.{settings.REPORT_DIGITS}g}")
    if isinstance(value, dict):
        return {key: _rounded(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(item) for item in value]
    return value


def _emit(stream, payload: Dict[str, Any]) -> None:
    stream.write(json.dumps(_rounded(payload), indent=2, ensure_ascii=False))
    stream.write("\n")


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
