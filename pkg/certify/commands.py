"""
Command-line front end: reads the run configuration, dispatches the
subcommand, writes the result files and maps errors to exit codes.

    table   tabulate g, g', G, G^{-1}, f, F
    solve   mountain-pass solve + certificates -> profile.csv, solution.json, verification.json
    verify  re-run the certificates on a stored solution
    sweep   solve and certify over a list of kappa values -> sweep.json, sweep.csv
"""

import argparse
import csv
import io
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.ConfigParser import RunConfig, parse_config, serialize_config
from Modules.Definitions import (
    EXIT_OK,
    CertificateFailure,
    Command,
    ConfigurationError,
    Definitions,
    FileFormatError,
    SolitonError,
    SolverError,
)
from Modules.FileHandler import FileHandler
from Modules.Functional import EnergyReport, mountain_pass_geometry
from Modules.KappaSweep import kappa_sweep, refine_threshold
from Modules.Logger import Logger
from Modules.MountainPassSolver import Solution, mountain_pass_solve
from Modules.RadialGrid import Field, RadialGrid
from Modules.Transforms import transform_table
from Modules.Verifier import VerificationReport, format_summary, verify_solution
from soliton_certifier import __version__
from soliton_certifier.settings import Settings, load_settings

PROFILE_FILE = "profile.csv"
SOLUTION_FILE = "solution.json"
VERIFICATION_FILE = "verification.json"
SWEEP_FILE = "sweep.json"
SWEEP_CSV_FILE = "sweep.csv"
TABLE_FILE = "table.csv"
TABLE_COLUMNS = ("t", "g", "g_prime", "G", "G_inverse", "f", "F")


# --------------------------------------------------------------------
# Argument parsing and configuration
# --------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soliton", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    table = subparsers.add_parser(Command.TABLE.value, help="tabulate the transforms and nonlinearity")
    table.add_argument("--config", help="run configuration file")
    table.add_argument("--out", help="write table.csv into this directory instead of stdout")
    table.add_argument("--t-max", type=float, dest="t_max")
    table.add_argument("--samples", type=int)

    solve = subparsers.add_parser(Command.SOLVE.value, help="compute and certify one soliton")
    solve.add_argument("--config", help="run configuration file")
    solve.add_argument("--out", help="output directory")
    solve.add_argument("--grid-n", type=int, dest="grid_n", help="number of radial nodes")
    solve.add_argument("--radius", type=float, help="truncation radius R")
    solve.add_argument("--kappa", type=float, help="quasilinear coupling")
    solve.add_argument("--quiet", action="store_true", help="only warnings on the console, no summary")

    verify = subparsers.add_parser(Command.VERIFY.value, help="re-run the certificates on a stored solution")
    verify.add_argument("--input", required=True, help="directory written by 'solve'")
    verify.add_argument("--out", help="directory for verification.json (default: the input directory)")
    verify.add_argument("--quiet", action="store_true")

    sweep = subparsers.add_parser(Command.SWEEP.value, help="solve and certify over a list of kappa values")
    sweep.add_argument("--config", help="run configuration file")
    sweep.add_argument("--out", help="output directory")
    sweep.add_argument("--kappas", help="comma-separated kappa values")
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--threshold", action="store_true", help="bisect for the threshold after the sweep")
    sweep.add_argument("--quiet", action="store_true")
    return parser


def parse_kappa_list(text: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError:
        raise ConfigurationError(f"--kappas expects comma-separated numbers, got {text!r}", field="kappas") from None
    if not values:
        raise ConfigurationError("--kappas is empty", field="kappas")
    return values


def load_run_config(options: argparse.Namespace, settings: Settings) -> RunConfig:
    """Config file (or defaults), then environment defaults, then command-line overrides."""
    if getattr(options, "config", None):
        config = parse_config(FileHandler().read_file_as_string(options.config))
    else:
        config = RunConfig()

    definitions = Definitions()
    directory = getattr(options, "out", None)
    if directory is None and config.output.directory == definitions.default_for("output", "directory"):
        directory = settings.output_dir
    workers = getattr(options, "workers", None)
    if workers is None and config.sweep.workers == definitions.default_for("sweep", "workers"):
        workers = settings.workers
    kappas = getattr(options, "kappas", None)
    return config.with_overrides(
        nodes=getattr(options, "grid_n", None),
        radius=getattr(options, "radius", None),
        kappa=getattr(options, "kappa", None),
        directory=directory,
        workers=workers,
        kappas=parse_kappa_list(kappas) if kappas else None,
    )


def configure_logging(settings: Settings, quiet: bool = False) -> Logger:
    logger = Logger()
    try:
        logger.set_level(settings.log_level, "console")
    except ValueError:
        raise ConfigurationError(f"unknown SOLITON_LOG_LEVEL {settings.log_level!r}", field="SOLITON_LOG_LEVEL")
    if quiet:
        logger.set_level("WARNING", "console")
    if settings.log_dir:
        logger.add_file_handler(settings.log_dir)
    return logger


# --------------------------------------------------------------------
# Solution persistence
# --------------------------------------------------------------------
def solution_document(config: RunConfig, solution: Solution) -> Dict[str, Any]:
    return {
        "version": __version__,
        "config": serialize_config(config),
        "energy": solution.energy.to_dict(),
        "converged": solution.converged,
        "iterations": solution.iterations,
        "newton_iterations": solution.newton_iterations,
        "forced_acceptances": solution.forced_acceptances,
        "radius_doublings": solution.radius_doublings,
        "warnings": list(solution.warnings),
        "path_trace": [[int(iteration), float(level)] for iteration, level in solution.path_trace],
    }


def report_document(config: RunConfig, report: VerificationReport) -> Dict[str, Any]:
    return {"version": __version__, "config": serialize_config(config), "report": report.to_dict()}


def save_solution(directory: str, config: RunConfig, solution: Solution, handler: Optional[FileHandler] = None):
    handler = handler or FileHandler()
    grid = solution.grid
    handler.write_profile(os.path.join(directory, PROFILE_FILE), grid.r, solution.v.values, solution.u.values,
                          grid.dim)
    handler.write_json(os.path.join(directory, SOLUTION_FILE), solution_document(config, solution))


def load_solution(directory: str, handler: Optional[FileHandler] = None) -> Tuple[RunConfig, Solution]:
    handler = handler or FileHandler()
    solution_path = os.path.join(directory, SOLUTION_FILE)
    profile_path = os.path.join(directory, PROFILE_FILE)
    document = handler.read_json(solution_path)
    for key in ("config", "energy", "converged", "iterations"):
        if key not in document:
            raise FileFormatError(f"missing field '{key}'", path=solution_path)
    try:
        config = parse_config(document["config"])
    except ConfigurationError as error:
        raise FileFormatError(f"embedded config is invalid: {error}", path=solution_path) from None

    profile = handler.read_profile(profile_path)
    if profile.dim != config.model.dim:
        raise FileFormatError(f"profile dimension {profile.dim} does not match config dimension "
                              f"{config.model.dim}", path=profile_path, line=1)
    grid = RadialGrid(dim=profile.dim, radius=profile.radius, nodes=profile.nodes)
    try:
        energy = EnergyReport.from_dict(document["energy"])
    except TypeError as error:
        raise FileFormatError(f"malformed energy record: {error}", path=solution_path) from None
    solution = Solution(
        v=Field(grid, profile.v),
        u=Field(grid, profile.u),
        energy=energy,
        iterations=int(document["iterations"]),
        converged=bool(document["converged"]),
        path_trace=[(int(item[0]), float(item[1])) for item in document.get("path_trace", [])],
        model_spec=config.model,
        potential=config.potential,
        newton_iterations=int(document.get("newton_iterations", 0)),
        forced_acceptances=int(document.get("forced_acceptances", 0)),
        radius_doublings=int(document.get("radius_doublings", 0)),
        warnings=list(document.get("warnings", [])),
    )
    return config, solution


# --------------------------------------------------------------------
# Subcommand handlers
# --------------------------------------------------------------------
def table_csv(config: RunConfig, t_max: float, samples: int) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in transform_table(config.model).rows(t_max, samples):
        writer.writerow([f"{value:.17g}" for value in row])
    return buffer.getvalue()


def handle_table(config: RunConfig, options: argparse.Namespace) -> int:
    t_max = options.t_max if options.t_max is not None else config.output.table_t_max
    samples = options.samples if options.samples is not None else config.output.table_samples
    if not t_max > 0.0 or samples < 2:
        raise ConfigurationError(f"table needs t_max > 0 and at least 2 samples, got {t_max} and {samples}")
    text = table_csv(config, t_max, samples)
    if options.out:
        FileHandler().write_string_to_file(os.path.join(options.out, TABLE_FILE), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def print_summary(report: VerificationReport, options: argparse.Namespace):
    if not getattr(options, "quiet", False):
        print("\n".join(format_summary(report)))


def handle_solve(config: RunConfig, options: argparse.Namespace) -> int:
    logger = Logger()
    directory = config.output.directory
    solver_config = config.solver_config()
    geometry = mountain_pass_geometry(config.model, config.potential, solver_config.grid,
                                      bump_support=config.solver.bump_radius)
    logger.info(f"Mountain-pass geometry: J >= {geometry.a0:.4e} on ||v|| = {geometry.rho:g}, "
                f"J({geometry.endpoint_scale:g} phi) = {geometry.endpoint_energy:.4e}")

    solution = mountain_pass_solve(solver_config)
    report = verify_solution(solution, config.tolerances())
    handler = FileHandler()
    save_solution(directory, config, solution, handler)
    handler.write_json(os.path.join(directory, VERIFICATION_FILE), report_document(config, report))
    print_summary(report, options)

    if not solution.converged:
        raise SolverError(f"solver did not converge (gradient norm {solution.energy.grad_norm:.3e}); "
                          f"results written to {directory}")
    if not report.passed:
        raise CertificateFailure(f"{len(report.failures)} certificate(s) failed: " + "; ".join(report.failures),
                                 report=report)
    return EXIT_OK


def handle_verify(options: argparse.Namespace) -> int:
    config, solution = load_solution(options.input)
    report = verify_solution(solution, config.tolerances())
    directory = options.out or options.input
    FileHandler().write_json(os.path.join(directory, VERIFICATION_FILE), report_document(config, report))
    print_summary(report, options)
    if not report.passed:
        raise CertificateFailure(f"{len(report.failures)} certificate(s) failed: " + "; ".join(report.failures),
                                 report=report)
    return EXIT_OK


def sweep_lines(result) -> List[str]:
    lines = [f"{'kappa':>10}  {'||u||_inf':>12}  {'threshold':>12}  status"]
    for entry in result.entries:
        status = "pass" if entry.passed else f"fail ({entry.failure_mode})"
        lines.append(f"{entry.kappa:>10.4g}  {entry.linf_u:>12.6g}  {entry.linf_threshold:>12.6g}  {status}")
    empirical = "none" if result.empirical_threshold is None else f"{result.empirical_threshold:.6g}"
    formula = "n/a" if result.formula_threshold is None else f"{result.formula_threshold:.6g}"
    lines.append(f"empirical threshold: {empirical}    formula threshold: {formula}")
    lines.extend(f"anomaly: {anomaly}" for anomaly in result.anomalies)
    return lines


def handle_sweep(config: RunConfig, options: argparse.Namespace) -> int:
    directory = config.output.directory
    base = config.solver_config()
    result = kappa_sweep(base, config.sweep.kappas, config.tolerances(), workers=config.sweep.workers)
    if options.threshold:
        result = refine_threshold(result, base, config.sweep.threshold_tol, config.tolerances())
    handler = FileHandler()
    handler.write_json(os.path.join(directory, SWEEP_FILE),
                       {"version": __version__, "config": serialize_config(config), "result": result.to_dict()})
    handler.write_string_to_file(os.path.join(directory, SWEEP_CSV_FILE), result.to_csv())
    if not options.quiet:
        print("\n".join(sweep_lines(result)))
    if result.empirical_threshold is None:
        raise CertificateFailure("no kappa in the sweep passed all certificates")
    return EXIT_OK


HANDLERS = {
    Command.TABLE: handle_table,
    Command.SOLVE: handle_solve,
    Command.SWEEP: handle_sweep,
}


def dispatch(command: Command, config: Optional[RunConfig], options: argparse.Namespace) -> int:
    """Run one subcommand; library errors become their exit codes here and nowhere else."""
    logger = Logger()
    model = config.model.model.value if config is not None else None
    try:
        with logger.bind(command=command.value, model=model):
            if command is Command.VERIFY:
                return handle_verify(options)
            return HANDLERS[command](config, options)
    except SolitonError as error:
        logger.error(f"{command.value} failed: {error}")
        return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    options = build_parser().parse_args(argv)
    command = Command(options.command)
    logger = Logger()
    try:
        settings = load_settings()
        configure_logging(settings, getattr(options, "quiet", False))
        config = None if command is Command.VERIFY else load_run_config(options, settings)
    except SolitonError as error:
        logger.error(f"{command.value} failed: {error}")
        return error.exit_code
    return dispatch(command, config, options)
