import argparse
import sys
from typing import List, Optional

from src.pathsig.bench import BenchConfig, render_csv, render_table, run_benchmark
from src.pathsig.config import Config
from src.pathsig.errors import NotGroupElementError, PathSignatureError, SerializationError
from src.pathsig.recovery import CoreKind, RecoveryOptions, recover
from src.pathsig.serialization import (
    format_flat,
    read_coefficient_csv,
    read_sequence,
    result_to_json,
    sequence_to_json,
)
from src.pathsig.signatures import Algorithm, GeometryType, PathSpec, sig
from src.pathsig.tensor_algebra import CoefficientField, TensorAlgebraSpace

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_USAGE = 2
EXIT_INPUT = 3


def fail(code: int, message: object) -> int:
    text = str(message).splitlines()[0] if str(message) else type(message).__name__
    print(f"Error: {text}", file=sys.stderr)
    return code


def parse_int_list(text: Optional[str], flag: str) -> List[int]:
    if text is None:
        return []
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ValueError(f"{flag} expects a comma-separated list of integers, got '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="config.ini", help="INI file with [Recovery] and [Bench] defaults.")

    parser = argparse.ArgumentParser(description="Compute path signatures, recover paths and benchmark algorithms.")
    commands = parser.add_subparsers(dest="command", required=True)

    p_sig = commands.add_parser("sig", parents=[common], help="Compute a truncated signature.")
    p_sig.add_argument("--dim", type=int, required=True, help="Path dimension d.")
    p_sig.add_argument("--level", type=int, required=True, help="Truncation level k.")
    p_sig.add_argument("--type", dest="geom_type", required=True, choices=[g.value for g in GeometryType])
    p_sig.add_argument("--coef", help="CSV file with the d x m coefficient matrix (required unless axis).")
    p_sig.add_argument("--composition", help="Spline piece degrees, e.g. '2,2'.")
    p_sig.add_argument("--regularity", type=int, default=0, help="Spline derivative order to check at knots.")
    p_sig.add_argument("--algorithm", default=Algorithm.CHEN.value, choices=[a.value for a in Algorithm],
                       help="Piecewise linear algorithm (default: chen).")
    p_sig.add_argument("--field", default=CoefficientField.RATIONAL.value, choices=[f.value for f in CoefficientField])
    p_sig.add_argument("--output", default="json", choices=["json", "flat"])

    p_rec = commands.add_parser("recover", parents=[common], help="Recover path coefficients from a signature.")
    p_rec.add_argument("--target", required=True, help="JSON file with the target signature.")
    p_rec.add_argument("--segments", type=int, required=True, help="Number of segments / monomial columns m.")
    p_rec.add_argument("--core", default=CoreKind.AXIS.value, choices=[c.value for c in CoreKind])
    p_rec.add_argument("--composition", help="Spline piece degrees for --core spline.")
    p_rec.add_argument("--tol", type=float, help="Residual tolerance.")
    p_rec.add_argument("--restarts", type=int, help="Number of random starts.")
    p_rec.add_argument("--seed", type=int, help="Seed of the random starts.")
    p_rec.add_argument("--max-iterations", type=int, help="Iterations per start.")
    p_rec.add_argument("--workers", type=int, help="Threads solving restarts concurrently.")
    p_rec.add_argument("--init", help="CSV file with an initial d x m guess, tried first.")
    p_rec.add_argument("--verbose", action="store_true", help="Print progress per restart on stderr.")

    p_bench = commands.add_parser("bench", parents=[common], help="Time chen against congruence.")
    p_bench.add_argument("--dims", required=True, help="Comma-separated dimensions d.")
    p_bench.add_argument("--segments", required=True, help="Comma-separated segment counts m.")
    p_bench.add_argument("--levels", required=True, help="Comma-separated truncation levels k.")
    p_bench.add_argument("--algorithms", default="chen,congruence", help="Comma-separated algorithms.")
    p_bench.add_argument("--samples", type=int, help="Timed runs per cell (default: 100).")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--format", default="csv", choices=["csv", "table"])
    p_bench.add_argument("--field", default=CoefficientField.FLOAT64.value, choices=[CoefficientField.FLOAT64.value],
                         help="Only float64 is benchmarked.")
    p_bench.add_argument("--parallel", action="store_true", help="Run cells concurrently.")
    p_bench.add_argument("--quiet", "-q", action="store_true", help="Do not print progress.")
    return parser


def cmd_sig(args: argparse.Namespace) -> int:
    try:
        field = CoefficientField.from_name(args.field)
        space = TensorAlgebraSpace(args.dim, args.level, field)
        geom_type = GeometryType(args.geom_type)
        composition = parse_int_list(args.composition, "--composition") if args.composition else None
    except (PathSignatureError, ValueError) as e:
        return fail(EXIT_USAGE, e)
    if geom_type is not GeometryType.AXIS and not args.coef:
        return fail(EXIT_USAGE, f"--coef is required for --type {geom_type.value}")

    coef = None
    if args.coef:
        try:
            coef = read_coefficient_csv(args.coef, field)
        except SerializationError as e:
            return fail(EXIT_INPUT, e)

    spec = PathSpec(geom_type, coef, composition, args.regularity, Algorithm(args.algorithm))
    try:
        signature = sig(space, spec)
    except PathSignatureError as e:
        return fail(EXIT_USAGE, e)

    print(sequence_to_json(signature) if args.output == "json" else format_flat(signature))
    return EXIT_OK


def _pick(value, fallback):
    return fallback if value is None else value


def cmd_recover(args: argparse.Namespace) -> int:
    section = Config(args.config)['Recovery']
    try:
        core = CoreKind(args.core)
        composition = parse_int_list(args.composition, "--composition") if args.composition else None
        options = RecoveryOptions(
            max_iterations=_pick(args.max_iterations, section.getint('max_iterations')),
            residual_tolerance=_pick(args.tol, section.getfloat('residual_tolerance')),
            restarts=_pick(args.restarts, section.getint('restarts')),
            rng_seed=_pick(args.seed, section.getint('seed')),
            workers=_pick(args.workers, section.getint('workers')),
            verbose=args.verbose,
        )
    except ValueError as e:
        return fail(EXIT_USAGE, e)

    try:
        target = read_sequence(args.target)
        if args.init:
            options.initial_guess = read_coefficient_csv(args.init, CoefficientField.FLOAT64)
    except SerializationError as e:
        return fail(EXIT_INPUT, e)

    try:
        result = recover(target, args.segments, core, options, composition)
    except NotGroupElementError as e:
        return fail(EXIT_INPUT, e)
    except PathSignatureError as e:
        return fail(EXIT_USAGE, e)

    print(result_to_json(result))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_bench(args: argparse.Namespace) -> int:
    section = Config(args.config)['Bench']
    try:
        config = BenchConfig(
            dimensions=parse_int_list(args.dims, "--dims"),
            segments=parse_int_list(args.segments, "--segments"),
            levels=parse_int_list(args.levels, "--levels"),
            algorithms=[Algorithm(a.strip()) for a in args.algorithms.split(',') if a.strip()],
            samples=_pick(args.samples, section.getint('samples')),
            rng_seed=args.seed,
            parallel=args.parallel,
            quiet=args.quiet,
        )
        config.validate()
    except ValueError as e:
        return fail(EXIT_USAGE, e)

    rows = run_benchmark(config)
    print(render_csv(rows) if args.format == "csv" else render_table(rows), end="")
    return EXIT_OK


COMMANDS = {
    "sig": cmd_sig,
    "recover": cmd_recover,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
