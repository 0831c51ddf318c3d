# KappaSweep.py
# Version: 1.0
# Parameter studies in kappa: one solve + verify per kappa, the empirical
# threshold (largest kappa whose certificates all pass), the explicit
# kappa_0 / kappa_1 value from the measured constants, and a bisection
# search for the threshold between two tested values.

import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import DomainError, SolitonError
from Modules.Logger import Logger
from Modules.MountainPassSolver import Solution, SolverConfig, mountain_pass_solve
from Modules.RadialGrid import Field
from Modules.Transforms import transform_table
from Modules.Verifier import VerificationTolerances, verify_solution

SOLVER_ERROR = "solver_error"
NOT_CONVERGED = "not_converged"
LINF_VIOLATION = "linf_violation"
CERTIFICATE = "certificate"

CSV_COLUMNS = ("kappa", "converged", "linf_u", "linf_threshold", "linf_pass",
               "j_value", "mp_level", "passed", "failure_mode")


@dataclass
class KappaEntry:
    kappa: float
    converged: bool
    linf_u: float
    linf_threshold: float
    linf_pass: bool
    j_value: float
    mp_level: float
    passed: bool
    failure_mode: Optional[str] = None
    residual_max: Optional[float] = None
    kappa_formula: Optional[float] = None
    message: str = ""


@dataclass
class SweepResult:
    entries: List[KappaEntry]
    empirical_threshold: Optional[float]
    formula_threshold: Optional[float]
    anomalies: List[str] = field(default_factory=list)
    bracket: Optional[Tuple[float, float]] = None

    def to_dict(self) -> Dict:
        return asdict(self)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for entry in self.entries:
            writer.writerow([repr(entry.kappa), str(entry.converged).lower(), repr(entry.linf_u),
                             repr(entry.linf_threshold), str(entry.linf_pass).lower(), repr(entry.j_value),
                             repr(entry.mp_level), str(entry.passed).lower(), entry.failure_mode or ""])
        return buffer.getvalue()


@dataclass
class ThresholdSearch:
    lo: float
    hi: float
    evaluations: int
    monotone: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def solve_and_verify(base_config: SolverConfig, kappa: float, tolerances: VerificationTolerances,
                     initial_guess: Optional[Field] = None) -> Tuple[KappaEntry, Optional[Solution]]:
    """One sweep point. Library errors become a recorded failure, never an exception."""
    nan = float("nan")
    threshold = nan
    try:
        with Logger().bind(kappa=f"{kappa:g}"):
            spec = base_config.model_spec.with_kappa(kappa)
            threshold = transform_table(spec).linf_threshold()
            config = replace(base_config, model_spec=spec, initial_guess=initial_guess)
            solution = mountain_pass_solve(config)
            report = verify_solution(solution, tolerances)
    except SolitonError as error:
        return KappaEntry(kappa=kappa, converged=False, linf_u=nan, linf_threshold=threshold, linf_pass=False,
                          j_value=nan, mp_level=nan, passed=False, failure_mode=SOLVER_ERROR,
                          message=str(error)), None

    if not solution.converged:
        mode = NOT_CONVERGED
    elif not report.linf_pass:
        mode = LINF_VIOLATION
    elif not report.passed:
        mode = CERTIFICATE
    else:
        mode = None
    entry = KappaEntry(kappa=kappa, converged=solution.converged, linf_u=report.linf_u,
                       linf_threshold=report.linf_threshold, linf_pass=report.linf_pass,
                       j_value=solution.energy.j_value, mp_level=solution.energy.mp_level,
                       passed=report.passed, failure_mode=mode, residual_max=report.pde_residual_max,
                       kappa_formula=report.kappa0_formula_value, message="; ".join(report.failures))
    return entry, solution


def _solve_entry(arguments) -> KappaEntry:
    base_config, kappa, tolerances = arguments
    return solve_and_verify(base_config, kappa, tolerances)[0]


def kappa_sweep(base_config: SolverConfig, kappas: Sequence[float],
                tolerances: VerificationTolerances = VerificationTolerances(),
                workers: int = 1, warm_start: bool = True) -> SweepResult:
    """
    Solve and certify at each kappa. With workers <= 1 the solves run in
    order and each one starts from the previous converged profile; with
    more workers they run independently in a process pool. Entries come
    back sorted by kappa either way.
    """
    logger = Logger()
    kappas = [float(kappa) for kappa in kappas]
    if not kappas:
        raise DomainError("kappa sweep needs at least one kappa")
    if any(kappa <= 0.0 for kappa in kappas):
        raise DomainError(f"sweep kappas must be positive, got {kappas}")
    if kappas != sorted(kappas):
        raise DomainError(f"sweep kappas must be sorted ascending, got {kappas}")

    logger.info(f"Kappa sweep over {len(kappas)} value(s) with {max(workers, 1)} worker(s)")
    entries: List[KappaEntry] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_solve_entry, [(base_config, kappa, tolerances) for kappa in kappas]))
    else:
        guess = base_config.initial_guess
        for kappa in kappas:
            entry, solution = solve_and_verify(base_config, kappa, tolerances, guess)
            if warm_start and solution is not None and solution.converged:
                guess = solution.v
            entries.append(entry)

    for entry in entries:
        status = "pass" if entry.passed else f"fail ({entry.failure_mode})"
        logger.info(f"  kappa={entry.kappa:g}: ||u||_inf={entry.linf_u:.6g} "
                    f"(threshold {entry.linf_threshold:.6g}) {status}")
    return summarize(entries)


def summarize(entries: List[KappaEntry]) -> SweepResult:
    logger = Logger()
    entries = sorted(entries, key=lambda entry: entry.kappa)
    passing = [entry.kappa for entry in entries if entry.passed]
    empirical = max(passing) if passing else None
    formulas = [entry.kappa_formula for entry in entries if entry.converged and entry.kappa_formula is not None]
    formula = min(formulas) if formulas else None

    anomalies: List[str] = []
    if formula is not None and empirical is not None and formula > empirical:
        anomalies.append(f"formula threshold {formula:.6g} exceeds empirical threshold {empirical:.6g}")
    seen_failure = False
    for entry in entries:
        if not entry.passed:
            seen_failure = True
        elif seen_failure:
            anomalies.append(f"kappa={entry.kappa:g} passes after a failing smaller kappa")
            break
    for anomaly in anomalies:
        logger.warning(f"Sweep anomaly: {anomaly}")
    return SweepResult(entries=entries, empirical_threshold=empirical, formula_threshold=formula,
                       anomalies=anomalies)


def threshold_search(base_config: SolverConfig, lo: float, hi: float, tol: float,
                     tolerances: VerificationTolerances = VerificationTolerances(),
                     predicate: Optional[Callable[[float], bool]] = None) -> ThresholdSearch:
    """
    Bisection on the all-certificates-pass predicate between lo (passing)
    and hi (failing) until hi - lo <= tol. If the end points do not show a
    pass/fail pair, the bracket is returned unchanged with a warning.
    """
    logger = Logger()
    if not tol > 0.0:
        raise DomainError(f"threshold tolerance must be positive, got {tol}")
    if lo > hi:
        raise DomainError(f"threshold bracket is reversed: lo={lo}, hi={hi}")
    if lo == hi:
        return ThresholdSearch(lo, hi, 0, True)

    guesses: Dict[str, Optional[Field]] = {"last": base_config.initial_guess}

    def default_predicate(kappa: float) -> bool:
        entry, solution = solve_and_verify(base_config, kappa, tolerances, guesses["last"])
        if solution is not None and solution.converged:
            guesses["last"] = solution.v
        return entry.passed

    passes = predicate or default_predicate
    lo_pass, hi_pass = passes(lo), passes(hi)
    evaluations = 2
    if not lo_pass or hi_pass:
        message = (f"predicate is not monotone across [{lo:g}, {hi:g}] "
                   f"(lo {'passes' if lo_pass else 'fails'}, hi {'passes' if hi_pass else 'fails'})")
        logger.warning(message)
        return ThresholdSearch(lo, hi, evaluations, False, [message])

    while hi - lo > tol:
        middle = 0.5 * (lo + hi)
        evaluations += 1
        if passes(middle):
            lo = middle
        else:
            hi = middle
        logger.debug(f"Threshold bracket [{lo:.6g}, {hi:.6g}]")
    logger.info(f"Threshold bracket [{lo:.6g}, {hi:.6g}] after {evaluations} evaluations")
    return ThresholdSearch(lo, hi, evaluations, True)


def find_threshold(base_config: SolverConfig, lo: float, hi: float, tol: float,
                   tolerances: VerificationTolerances = VerificationTolerances(),
                   predicate: Optional[Callable[[float], bool]] = None) -> float:
    search = threshold_search(base_config, lo, hi, tol, tolerances, predicate)
    if search.lo == search.hi:
        return search.lo
    return search.midpoint


def refine_threshold(result: SweepResult, base_config: SolverConfig, tol: float,
                     tolerances: VerificationTolerances = VerificationTolerances()) -> SweepResult:
    """Bisect between the largest passing kappa and the next tested kappa, when there is one."""
    if result.empirical_threshold is None:
        return result
    above = [entry.kappa for entry in result.entries if entry.kappa > result.empirical_threshold]
    if not above:
        return result
    search = threshold_search(base_config, result.empirical_threshold, min(above), tol, tolerances)
    anomalies = result.anomalies + search.warnings
    if not search.monotone:
        return replace(result, anomalies=anomalies, bracket=(search.lo, search.hi))
    return replace(result, empirical_threshold=search.midpoint, anomalies=anomalies,
                   bracket=(search.lo, search.hi))
