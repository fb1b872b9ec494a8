"""Command-line surface: ``python -m sphdir <command> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure.
Results go to stdout as ``key=value`` lines (keys as in the JSON document
written by ``--json``); diagnostics go to stderr through logging.
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from sphdir import __version__
from sphdir.config import get_settings
from sphdir.core.distribution import describe, log_density
from sphdir.core.estimation import fit, fit_mle, fit_mom
from sphdir.core.oracle import HALF_PI, angles_to_points
from sphdir.core.sampling import RandomSource, sample_sdd
from sphdir.exceptions import (
    ConvergenceError,
    DataError,
    DimensionMismatchError,
    DomainError,
    NotOnSphereError,
    OptimizationError,
    RootBracketError,
)
from sphdir.schemas.distribution import AlphaVector
from sphdir.schemas.estimation import FitResult, MethodChoice, Tolerances
from sphdir.schemas.run import Command, RunConfig, Transform
from sphdir.utils.dataio import column_names, load_sample, write_matrix
from sphdir.utils.helpers import configure_logging, flatten, format_float, write_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

TABLE1_SCENARIOS: Tuple[Tuple[float, ...], ...] = (
    (2.0, 2.0, 2.0),
    (5.0, 15.0, 2.0),
    (0.5, 0.5, 2.0),
    (2.0, 2.0, 10.0),
)
TABLE1_N = 10_000
TABLE1_MAX_ERROR_PCT = 5.0


def _text(value: Any) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def emit(document: Any, stream=None) -> None:
    stream = stream or sys.stdout
    for key, value in flatten(document).items():
        stream.write(f"{key}={_text(value)}\n")


# --- commands -----------------------------------------------------------------


def cmd_simulate(config: RunConfig) -> int:
    data = sample_sdd(config.alpha, config.n, RandomSource(config.seed))
    write_matrix(data.rows, config.output_path)
    return EXIT_OK


def cmd_fit(config: RunConfig) -> int:
    data = load_sample(config.input_path, config.transform, config.shift)
    if config.truth is not None and config.truth.p != data.p:
        raise DimensionMismatchError(f"--truth has p = {config.truth.p}, data has p = {data.p}")
    results = fit(
        data,
        config.method,
        config.tolerances,
        truth=config.truth,
        moment_coordinate=config.moment_coordinate,
    )
    document = {"n": data.n, "p": data.p, "fit": {r.method.value: r for r in results}}
    emit(document)
    if config.json_path is not None:
        write_document(document, config.json_path)
    failed = [r.method.value for r in results if not r.converged]
    if failed:
        logger.error("no convergence for %s", ", ".join(failed))
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_describe(config: RunConfig) -> int:
    summary = describe(config.alpha)
    emit(summary)
    if config.json_path is not None:
        write_document(summary, config.json_path)
    return EXIT_OK


def density_grid(alpha: AlphaVector, resolution: int) -> Tuple[List[str], np.ndarray]:
    """Midpoint grid over the orthant angles with the density at every node."""
    if alpha.p not in (2, 3):
        raise DomainError(f"density grids exist for p = 2 or 3, got p = {alpha.p}")
    nodes = (np.arange(resolution) + 0.5) * (HALF_PI / resolution)
    if alpha.p == 2:
        angles = nodes[:, None]
        names = ["theta"]
    else:
        tt, ff = np.meshgrid(nodes, nodes, indexing="ij")
        angles = np.column_stack([tt.ravel(), ff.ravel()])
        names = ["theta", "phi"]
    points = angles_to_points(angles, alpha.p)
    dens = np.exp(log_density(points, alpha))
    return names + column_names(alpha.p) + ["density"], np.column_stack([angles, points, dens])


def cmd_density_grid(config: RunConfig) -> int:
    columns, table = density_grid(config.alpha, config.grid)
    write_matrix(table, config.output_path, columns=columns)
    return EXIT_OK


def run_table1_scenario(index: int, alpha: Tuple[float, ...], n: int, seed: int, tolerances: Dict[str, Any]):
    """Sample scenario ``index`` with seed ``seed + index`` and fit it by MOM and MLE."""
    tol = Tolerances(**tolerances)
    data = sample_sdd(alpha, n, RandomSource(seed + index))
    mom = fit_mom(data, tol, truth=alpha)
    mle = fit_mle(data, tolerances=tol, truth=alpha)
    return mom, mle


def _table_row(index: int, alpha: Sequence[float], result: FitResult) -> str:
    estimate = ", ".join(f"{a:.4f}" for a in result.alpha_hat.alpha)
    truth = ", ".join(f"{a:g}" for a in alpha)
    return (
        f"{index + 1:<9d}{'(' + truth + ')':<15}{result.method.value.upper():<7}"
        f"{estimate:<30}{result.iterations:>10d}  {_text(result.converged):<10}{result.norm_error_vs_truth:>9.2f}"
    )


def cmd_reproduce_table1(config: RunConfig) -> int:
    n = config.n or TABLE1_N
    tolerances = config.tolerances.model_dump()
    args = [(i, alpha, n, config.seed, tolerances) for i, alpha in enumerate(TABLE1_SCENARIOS)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(run_table1_scenario, *zip(*args)))
    else:
        outcomes = [run_table1_scenario(*a) for a in args]

    header = f"{'scenario':<9}{'alpha':<15}{'method':<7}{'alpha_hat':<30}{'iterations':>10}  {'converged':<10}{'error_pct':>9}"
    lines = [header]
    document: Dict[str, Any] = {"n": n, "seed": config.seed, "scenarios": []}
    failures = []
    mle_better = 0
    for (i, alpha, *_), (mom, mle) in zip(args, outcomes):
        for result in (mom, mle):
            lines.append(_table_row(i, alpha, result))
            if not result.converged:
                failures.append(f"scenario {i + 1} {result.method.value}: not converged ({result.termination_reason})")
            elif result.norm_error_vs_truth > TABLE1_MAX_ERROR_PCT:
                failures.append(
                    f"scenario {i + 1} {result.method.value}: error {result.norm_error_vs_truth:.2f}% "
                    f"> {TABLE1_MAX_ERROR_PCT}%"
                )
        if mle.norm_error_vs_truth <= mom.norm_error_vs_truth:
            mle_better += 1
        else:
            logger.warning(
                "scenario %d: MLE error %.2f%% exceeds MOM error %.2f%%",
                i + 1,
                mle.norm_error_vs_truth,
                mom.norm_error_vs_truth,
            )
        document["scenarios"].append({"alpha": list(alpha), "mom": mom, "mle": mle})

    sys.stdout.write("\n".join(lines) + "\n")
    logger.info("MLE error <= MOM error in %d of %d scenarios", mle_better, len(args))
    if config.json_path is not None:
        write_document(document, config.json_path)
    if failures:
        raise ConvergenceError("; ".join(failures))
    return EXIT_OK


def cmd_serve(config: RunConfig, host: str, port: int) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run("sphdir.app:create_app", factory=True, host=host, port=port, reload=settings.DEBUG)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------


def _moment_coordinate(text: str):
    if text.strip().lower() == "auto":
        return "auto"
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("moment coordinate is 1-based")
    return k - 1


def _add_tolerance_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, help="Lower bound for each alpha in MLE")
    parser.add_argument("--delta", type=float, help="Step tolerance (MLE) / relative alpha_0 change (MOM)")
    parser.add_argument("--gtol", type=float, help="Projected-gradient tolerance")
    parser.add_argument("--max-iter", type=int, help="Maximum optimizer iterations")
    parser.add_argument("--memory", type=int, help="L-BFGS memory (0 = projected gradient descent)")
    parser.add_argument("--no-accelerate", action="store_true", help="Plain MOM fixed-point iteration")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="sphdir", description="Spherical-Dirichlet distribution toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Draw an SDD sample and write it as CSV.")
    p.add_argument("--alpha", required=True, help="Comma separated alpha, e.g. 2,2,2")
    p.add_argument("--n", type=int, required=True, help="Number of rows")
    p.add_argument("--seed", type=int, default=settings.SEED)
    p.add_argument("--output", "-o", help="CSV path (stdout when omitted)")

    p = sub.add_parser("fit", help="Estimate alpha from a CSV sample.")
    p.add_argument("input", help="CSV with one observation per row")
    p.add_argument("--method", choices=[m.value for m in MethodChoice], default=MethodChoice.BOTH.value)
    p.add_argument("--truth", help="True alpha, reports the norm-ratio error")
    p.add_argument("--transform", type=Transform.parse, default=Transform.NONE,
                   help="none | log-shift (ln(c + v), then unit-normalize rows)")
    p.add_argument("--shift", type=float, default=settings.LOG_SHIFT, help="c for --transform log-shift")
    p.add_argument("--moment-coordinate", type=_moment_coordinate, default=0,
                   help="1..p or auto: coordinate whose first moment MOM matches")
    p.add_argument("--json", dest="json_path", help="Write a flat JSON result document")
    _add_tolerance_flags(p)

    p = sub.add_parser("describe", help="Closed-form summaries for one alpha.")
    p.add_argument("--alpha", required=True)
    p.add_argument("--json", dest="json_path")

    p = sub.add_parser("density-grid", help="Density on a midpoint angle grid (p = 2 or 3).")
    p.add_argument("--alpha", required=True)
    p.add_argument("--grid", type=int, default=100, help="Nodes per angle")
    p.add_argument("--output", "-o")

    p = sub.add_parser("reproduce-table1", help="MOM and MLE on the four simulation scenarios.")
    p.add_argument("--seed", type=int, default=settings.SEED)
    p.add_argument("--n", type=int, default=TABLE1_N)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", dest="json_path")
    _add_tolerance_flags(p)

    p = sub.add_parser("serve", help="Run the HTTP API.")
    p.add_argument("--host", default=settings.HOST)
    p.add_argument("--port", type=int, default=settings.PORT)
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    values: Dict[str, Any] = {"command": Command(args.command)}
    for name in ("seed", "n", "method", "transform", "shift", "moment_coordinate", "json_path", "grid", "workers"):
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    for name in ("alpha", "truth"):
        if getattr(args, name, None):
            values[name] = AlphaVector.parse(getattr(args, name))
    if getattr(args, "input", None):
        values["input_path"] = args.input
    if getattr(args, "output", None):
        values["output_path"] = args.output
    if hasattr(args, "epsilon"):
        values["tolerances"] = Tolerances.from_settings(
            epsilon=args.epsilon,
            delta=args.delta,
            gtol=args.gtol,
            max_iter=args.max_iter,
            memory=args.memory,
            mom_accelerate=False if args.no_accelerate else None,
        )
    else:
        values["tolerances"] = Tolerances.from_settings()
    return RunConfig(**values)


_COMMANDS = {
    Command.SIMULATE: cmd_simulate,
    Command.FIT: cmd_fit,
    Command.DESCRIBE: cmd_describe,
    Command.DENSITY_GRID: cmd_density_grid,
    Command.REPRODUCE_TABLE1: cmd_reproduce_table1,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else get_settings().LOG_LEVEL)

    try:
        config = to_config(args)
    except (ValidationError, ValueError) as e:
        logger.error("invalid arguments: %s", e)
        return EXIT_USAGE

    try:
        if config.command is Command.SERVE:
            return cmd_serve(config, args.host, args.port)
        return _COMMANDS[config.command](config)
    except (DataError, DimensionMismatchError, NotOnSphereError, OSError) as e:
        logger.error("data error: %s", e)
        return EXIT_DATA
    except (ConvergenceError, OptimizationError, RootBracketError) as e:
        logger.error("convergence failure: %s", e)
        return EXIT_CONVERGENCE
    except (DomainError, ValidationError) as e:
        logger.error("invalid arguments: %s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
