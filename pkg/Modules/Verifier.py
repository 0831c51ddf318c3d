# Verifier.py
# Version: 1.0
# Certificate suite for a computed Solution: PDE residual of the original
# quasilinear equation, L-infinity bounds, energy bounds, Pohozaev identity,
# Moser iteration chain, qualitative shape, and the explicit kappa thresholds.
#
# All checks are read-only functions of the stored fields, so running them
# on a reloaded Solution reproduces the same report.

import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import linregress

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import ConfigurationError, DomainError, ModelKind
from Modules.Functional import energy_functional
from Modules.Logger import Logger
from Modules.MountainPassSolver import Solution
from Modules.RadialGrid import sphere_area
from Modules.Transforms import ModelSpec, transform_table

MOSER_ITERATES = 3
MIN_RESOLVED_NODES = 8
RESOLVED_FRACTION = 0.9
DECAY_CUTOFF = 1e-6
PATH_ALLOWANCE = 1e-12


@dataclass(frozen=True)
class VerificationTolerances:
    residual_tol: float = 1e-3
    pohozaev_tol: float = 1e-3
    energy_rtol: float = 1e-4
    fit_r2: float = 0.99


@dataclass
class MoserIterate:
    index: int
    beta: float
    lhs: float
    rhs: float
    passed: bool
    reliable: bool


@dataclass
class MoserCheck:
    applicable: bool
    iterates: List[MoserIterate]
    constant: Optional[float]
    bound: Optional[float]
    bound_pass: Optional[bool]
    sobolev_constant: float

    @property
    def chain_pass(self) -> bool:
        return all(item.passed for item in self.iterates)


@dataclass
class LinfCheck:
    linf_u: float
    linf_v: float
    threshold: float
    passed: bool
    ratio: float
    chain_bound: float
    chain_pass: bool
    amplitude_floor: float


@dataclass
class EnergyBoundCheck:
    lhs: float
    rhs: float
    passed: bool
    comparison_rhs: Optional[float]
    comparison_pass: Optional[bool]
    seminorm: bool


@dataclass
class QualitativeCheck:
    nontrivial_pass: bool
    positivity_pass: bool
    monotonicity_pass: bool
    decay_rate: float
    decay_fit_r2: float
    decay_pass: bool


@dataclass
class VerificationReport:
    converged: bool
    pde_residual_max: float
    pde_residual_l2: float
    transformed_residual_max: float
    residual_agreement: float
    linf_u: float
    linf_v: float
    linf_threshold: float
    linf_pass: bool
    linf_chain_pass: bool
    amplitude_floor: float
    energy_bound_lhs: float
    energy_bound_rhs: float
    energy_bound_pass: bool
    energy_bound_comparison_rhs: Optional[float]
    energy_bound_comparison_pass: Optional[bool]
    energy_bound_seminorm: bool
    pohozaev_residual: Optional[float]
    moser_chain: List[MoserIterate]
    moser_applicable: bool
    moser_constant: Optional[float]
    moser_bound: Optional[float]
    moser_bound_pass: Optional[bool]
    sobolev_constant: float
    nontrivial_pass: bool
    positivity_pass: bool
    monotonicity_pass: bool
    decay_rate: float
    decay_fit_r2: float
    decay_pass: bool
    qualitative_applicable: bool
    kappa0_formula_value: Optional[float]
    path_monotone: bool = True
    path_rises: int = 0
    forced_acceptances: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["passed"] = self.passed
        return data


def sobolev_constant(dim: int) -> float:
    """Sharp S with ||w||_{2*}^2 <= S ||grad w||_2^2 on R^N."""
    return 4.0 / (dim * (dim - 2.0)) * sphere_area(dim + 1) ** (-2.0 / dim)


def moser_exponents(spec: ModelSpec) -> Tuple[float, float, float]:
    """(q1, sigma, theta) with 1/q1 + (q-2)/2* = 1, sigma = 2*/(2 q1), theta = (2* - q)/4."""
    two_star = spec.critical_exponent
    q1 = 1.0 / (1.0 - (spec.q - 2.0) / two_star)
    return q1, two_star / (2.0 * q1), (two_star - spec.q) / 4.0


def moser_constant(spec: ModelSpec, level: float) -> float:
    """
    C0 (power model) or C1 (saturable model) from the closed-form product of
    the Moser iteration, with the generic constant C = 2q d_inf/(q-2)
    measured through the comparison level d_inf.
    """
    q = spec.q
    _, sigma, _ = moser_exponents(spec)
    S = sobolev_constant(spec.dim)
    C = 2.0 * q * level / (q - 2.0)
    if spec.model is ModelKind.POWER_Q:
        prefactor = 6.0 ** ((q - 1.0) / 2.0)
    else:
        prefactor = 3.0 ** q * math.sqrt(2.0)
    return (sigma ** (1.0 / (sigma - 1.0) ** 2)
            * (prefactor * S ** (q / 2.0) * C ** ((q - 2.0) / 2.0)) ** (1.0 / (2.0 * (sigma - 1.0)))
            * math.sqrt(S * C))


def kappa_threshold_formulas(spec: ModelSpec, measured_constant: float) -> float:
    """kappa_0 = min{6^(2/(q-2*)), 1/(C0 sqrt 18)} or kappa_1 = min{1/3, (1/(18 C1^2))^((2*-q)/(2*-q+1))}."""
    if not measured_constant > 0.0:
        raise DomainError(f"measured constant must be positive, got {measured_constant}")
    two_star = spec.critical_exponent
    q = spec.q
    if spec.model is ModelKind.POWER_Q:
        return min(6.0 ** (2.0 / (q - two_star)), 1.0 / (measured_constant * math.sqrt(18.0)))
    exponent = (two_star - q) / (two_star - q + 1.0)
    return min(1.0 / 3.0, (1.0 / (18.0 * measured_constant ** 2)) ** exponent)


# --------------------------------------------------------------------
# Individual certificates
# --------------------------------------------------------------------
def residual_profile(solution: Solution) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Nodal residual of -div(g^2 grad u) + g g' |grad u|^2 + V u - l(u), written
    radially as -g^2 Delta u - g g' u'^2 + V u - l(u); the transformed
    residual on v; and the scale max(|V u|) + max(|l(u)|).
    """
    grid = solution.grid
    spec = solution.model_spec
    functional = energy_functional(spec, solution.potential, grid)
    table = transform_table(spec)
    u = solution.u.values
    g = table.g(u)
    g_prime = table.g_prime(u)
    l_value, _ = table.nonlinearity(u)
    du = np.gradient(u, grid.spacing, edge_order=2)
    du[0] = 0.0
    residual = -g * g * grid.apply_laplacian(u) - g * g_prime * du * du + functional.V * u - l_value
    residual[-1] = 0.0
    transformed = functional.gradient(solution.v.values, u)
    scale = float(np.max(np.abs(functional.V * u)) + np.max(np.abs(l_value)))
    return residual, transformed, scale


def pde_residual(solution: Solution) -> Tuple[float, float]:
    """(max, L2) residual of the original equation, normalized by the equation scale."""
    residual, _, scale = residual_profile(solution)
    if scale == 0.0:
        return 0.0, 0.0
    grid = solution.grid
    u = solution.u.values
    functional = energy_functional(solution.model_spec, solution.potential, grid)
    l_value, _ = transform_table(solution.model_spec).nonlinearity(u)
    l2_scale = (math.sqrt(grid.integrate_values((functional.V * u) ** 2))
                + math.sqrt(grid.integrate_values(l_value ** 2)))
    return (float(np.max(np.abs(residual)) / scale),
            math.sqrt(grid.integrate_values(residual ** 2)) / l2_scale)


def check_linf(solution: Solution) -> LinfCheck:
    spec = solution.model_spec
    table = transform_table(spec)
    u = solution.u.values
    v = solution.v.values
    linf_u = float(np.max(np.abs(u)))
    linf_v = float(np.max(np.abs(v)))
    threshold = table.linf_threshold()
    if spec.model is ModelKind.SATURABLE:
        passed = linf_u <= threshold
    else:
        passed = linf_u < threshold
    chain_bound = table.inverse_ratio * linf_v
    slack = 1e-12 * max(1.0, linf_u)
    chain_pass = bool(np.all(np.abs(u) <= table.inverse_ratio * np.abs(v) + slack)
                      and np.all(np.abs(u) + slack >= np.abs(v)))
    ratio = linf_u / linf_v if linf_v > 0.0 else 1.0
    return LinfCheck(linf_u=linf_u, linf_v=linf_v, threshold=threshold, passed=bool(passed), ratio=ratio,
                     chain_bound=chain_bound, chain_pass=chain_pass,
                     amplitude_floor=table.amplitude_floor(solution.potential.v0))


def check_energy_bound(solution: Solution, rtol: float = 1e-4) -> EnergyBoundCheck:
    """
    ||v||^2 <= 2q c/(q-2) (full H1 norm, power model) or
    ||grad v||_2^2 <= 2q c/(q-2) (saturable model), and the same with c
    replaced by the comparison level d_inf >= c.
    """
    spec = solution.model_spec
    grid = solution.grid
    functional = energy_functional(spec, solution.potential, grid)
    v = solution.v.values
    seminorm = spec.model is ModelKind.SATURABLE
    lhs = grid.gradient_squared(v) if seminorm else grid.h1_norm_squared(v, functional.V)
    factor = 2.0 * spec.q / (spec.q - 2.0)
    rhs = factor * solution.energy.mp_level
    comparison_rhs = None
    comparison_pass = None
    if solution.energy.comparison_level is not None:
        comparison_rhs = factor * solution.energy.comparison_level
        comparison_pass = bool(lhs <= comparison_rhs * (1.0 + rtol))
    return EnergyBoundCheck(lhs=lhs, rhs=rhs, passed=bool(lhs <= rhs * (1.0 + rtol)),
                            comparison_rhs=comparison_rhs, comparison_pass=comparison_pass, seminorm=seminorm)


def check_pohozaev(solution: Solution) -> float:
    """|((N-2)/2N) int|grad v|^2 + V_inf/2 int u^2 - int L(u)| / int |grad v|^2."""
    if not solution.potential.is_constant:
        raise ConfigurationError("the Pohozaev identity is only available for constant V = V_inf", field="shape")
    functional = energy_functional(solution.model_spec, solution.potential, solution.grid)
    value, gradient_term = functional.pohozaev(solution.v.values)
    if gradient_term == 0.0:
        return 0.0
    return abs(value) / gradient_term


def _resolved(grid, values: np.ndarray, p: float) -> bool:
    integrand = np.abs(values) ** p * grid.quad_weights
    peak = np.max(integrand)
    if peak == 0.0:
        return True
    return int(np.count_nonzero(integrand >= 1e-3 * peak)) >= MIN_RESOLVED_NODES


def check_moser_chain(solution: Solution) -> MoserCheck:
    """
    For beta in {sigma, sigma^2, sigma^3}:
      ||v||_{beta 2*} <= beta^(1/beta) (6^((q-1)/2) S kappa^(-theta) ||v||_{2*}^(q-2))^(1/(2 beta)) ||v||_{2 beta q1}
    and the limiting bound ||v||_inf <= C0 kappa^(-1/4). For the saturable
    model only C1 and ||v||_inf <= C1 kappa^(1/(2(2*-q))) are reported.
    """
    spec = solution.model_spec
    grid = solution.grid
    v = solution.v.values
    S = sobolev_constant(spec.dim)
    two_star = spec.critical_exponent
    q = spec.q
    kappa = spec.kappa
    q1, sigma, theta = moser_exponents(spec)
    linf_v = float(np.max(np.abs(v)))

    level = solution.energy.comparison_level
    constant = moser_constant(spec, level) if level is not None and level > 0.0 else None
    bound = None
    bound_pass = None
    if constant is not None and kappa > 0.0:
        if spec.model is ModelKind.POWER_Q:
            bound = constant * kappa ** -0.25
        else:
            bound = constant * kappa ** (1.0 / (2.0 * (two_star - q)))
        bound_pass = bool(linf_v <= bound)

    applicable = (spec.model is ModelKind.POWER_Q and kappa > 0.0
                  and kappa <= 6.0 ** (2.0 / (q - two_star)))
    iterates: List[MoserIterate] = []
    if applicable:
        norm_2star = grid.lp_norm(v, two_star)
        beta = 1.0
        for index in range(1, MOSER_ITERATES + 1):
            beta *= sigma
            lhs = grid.lp_norm(v, beta * two_star)
            factor = (6.0 ** ((q - 1.0) / 2.0) * S * kappa ** -theta * norm_2star ** (q - 2.0)) ** (1.0 / (2.0 * beta))
            rhs = beta ** (1.0 / beta) * factor * grid.lp_norm(v, 2.0 * beta * q1)
            iterates.append(MoserIterate(index=index, beta=beta, lhs=lhs, rhs=rhs,
                                         passed=bool(lhs <= rhs * (1.0 + 1e-12)),
                                         reliable=_resolved(grid, v, beta * two_star)))
    return MoserCheck(applicable=applicable, iterates=iterates, constant=constant, bound=bound,
                      bound_pass=bound_pass, sobolev_constant=S)


def check_qualitative(solution: Solution, fit_r2: float = 0.99) -> QualitativeCheck:
    """Positivity, monotone decrease and an exponential-decay fit of log u on the outer third."""
    grid = solution.grid
    u = solution.u.values
    r = grid.r
    peak = float(np.max(np.abs(u)))
    if peak == 0.0:
        return QualitativeCheck(False, False, False, 0.0, 0.0, False)
    resolved = r <= RESOLVED_FRACTION * grid.radius
    resolved[-1] = False
    positivity = bool(np.all(u[resolved] > 0.0))
    monotone = bool(np.all(np.diff(u[resolved]) <= 1e-14 * peak))

    decay_rate, r2, decay_pass = 0.0, 0.0, False
    above = resolved & (u >= DECAY_CUTOFF * peak)
    if positivity and np.count_nonzero(above) >= 3:
        last = int(np.nonzero(above)[0][-1])
        outer = above & (r >= (2.0 / 3.0) * r[last])
        if np.count_nonzero(outer) >= 3:
            fit = linregress(r[outer], np.log(u[outer]))
            decay_rate = float(-fit.slope)
            r2 = float(fit.rvalue ** 2)
            decay_pass = decay_rate > 0.0 and r2 >= fit_r2
    return QualitativeCheck(nontrivial_pass=True, positivity_pass=positivity, monotonicity_pass=monotone,
                            decay_rate=decay_rate, decay_fit_r2=r2, decay_pass=bool(decay_pass))


def check_path_monotone(solution: Solution) -> Tuple[bool, int]:
    """Whether the recorded path maxima never rose, and how many times they did."""
    levels = [level for _, level in solution.path_trace]
    rises = sum(1 for previous, level in zip(levels, levels[1:])
                if level > previous + PATH_ALLOWANCE * max(1.0, abs(previous)))
    return rises == 0, rises


# --------------------------------------------------------------------
# Full report
# --------------------------------------------------------------------
def verify_solution(solution: Solution, tolerances: VerificationTolerances = VerificationTolerances()) -> VerificationReport:
    logger = Logger()
    spec = solution.model_spec
    residual_max, residual_l2 = pde_residual(solution)
    residual, transformed, scale = residual_profile(solution)
    g = transform_table(spec).g(solution.u.values)
    if scale > 0.0:
        transformed_max = float(np.max(np.abs(transformed)) / scale)
        agreement = float(np.max(np.abs(residual - g * transformed)) / scale)
    else:
        transformed_max = agreement = 0.0

    linf = check_linf(solution)
    energy_bound = check_energy_bound(solution, tolerances.energy_rtol)
    constant_potential = solution.potential.is_constant
    pohozaev = check_pohozaev(solution) if constant_potential else None
    moser = check_moser_chain(solution)
    qualitative = check_qualitative(solution, tolerances.fit_r2)
    kappa_formula = kappa_threshold_formulas(spec, moser.constant) if moser.constant else None
    path_monotone, path_rises = check_path_monotone(solution)

    notes: List[str] = []
    if path_rises or solution.forced_acceptances:
        notes.append(f"path maximum rose at {path_rises} iteration(s) after {solution.forced_acceptances} "
                     f"last-resort move(s); mp_level is the maximum of the final path")

    failures: List[str] = []
    if not solution.converged:
        failures.append("solver did not converge")
    if residual_max > tolerances.residual_tol:
        failures.append(f"PDE residual {residual_max:.3e} > {tolerances.residual_tol:g}")
    if not linf.passed:
        failures.append(f"||u||_inf = {linf.linf_u:.6g} violates threshold {linf.threshold:.6g}")
    if not linf.chain_pass:
        failures.append("nodewise v <= u <= ratio * v chain violated")
    if not energy_bound.passed:
        failures.append(f"energy bound {energy_bound.lhs:.6g} > {energy_bound.rhs:.6g}")
    if pohozaev is not None and pohozaev > tolerances.pohozaev_tol:
        failures.append(f"Pohozaev residual {pohozaev:.3e} > {tolerances.pohozaev_tol:g}")
    if moser.applicable and not moser.chain_pass:
        failures.append("Moser chain inequality violated")
    if constant_potential:
        if not qualitative.nontrivial_pass:
            failures.append("trivial profile")
        if not (qualitative.positivity_pass and qualitative.monotonicity_pass):
            failures.append("profile is not positive and radially decreasing")
        if not qualitative.decay_pass:
            failures.append(f"decay fit failed (delta = {qualitative.decay_rate:.4g}, R^2 = {qualitative.decay_fit_r2:.4f})")

    report = VerificationReport(
        converged=solution.converged,
        pde_residual_max=residual_max,
        pde_residual_l2=residual_l2,
        transformed_residual_max=transformed_max,
        residual_agreement=agreement,
        linf_u=linf.linf_u,
        linf_v=linf.linf_v,
        linf_threshold=linf.threshold,
        linf_pass=linf.passed,
        linf_chain_pass=linf.chain_pass,
        amplitude_floor=linf.amplitude_floor,
        energy_bound_lhs=energy_bound.lhs,
        energy_bound_rhs=energy_bound.rhs,
        energy_bound_pass=energy_bound.passed,
        energy_bound_comparison_rhs=energy_bound.comparison_rhs,
        energy_bound_comparison_pass=energy_bound.comparison_pass,
        energy_bound_seminorm=energy_bound.seminorm,
        pohozaev_residual=pohozaev,
        moser_chain=moser.iterates,
        moser_applicable=moser.applicable,
        moser_constant=moser.constant,
        moser_bound=moser.bound,
        moser_bound_pass=moser.bound_pass,
        sobolev_constant=moser.sobolev_constant,
        nontrivial_pass=qualitative.nontrivial_pass,
        positivity_pass=qualitative.positivity_pass,
        monotonicity_pass=qualitative.monotonicity_pass,
        decay_rate=qualitative.decay_rate,
        decay_fit_r2=qualitative.decay_fit_r2,
        decay_pass=qualitative.decay_pass,
        qualitative_applicable=constant_potential,
        kappa0_formula_value=kappa_formula,
        path_monotone=path_monotone,
        path_rises=path_rises,
        forced_acceptances=solution.forced_acceptances,
        tolerances=asdict(tolerances),
        failures=failures,
        notes=notes,
    )
    for note in notes:
        logger.warning(f"Verification note: {note}")
    if failures:
        logger.warning(f"Verification: {len(failures)} certificate(s) failed: " + "; ".join(failures))
    else:
        logger.info("Verification: all certificates passed")
    return report


def format_summary(report: VerificationReport) -> List[str]:
    """Human-readable table of the report, one row per certificate."""
    def status(flag: Optional[bool]) -> str:
        if flag is None:
            return "n/a"
        return "PASS" if flag else "FAIL"

    tol = report.tolerances
    rows: List[Tuple[str, str, str, str]] = [
        ("converged", "", "", status(report.converged)),
        ("PDE residual (max)", f"{report.pde_residual_max:.3e}", f"<= {tol.get('residual_tol', float('nan')):g}",
         status(report.pde_residual_max <= tol.get("residual_tol", math.inf))),
        ("PDE residual (L2)", f"{report.pde_residual_l2:.3e}", "", "info"),
        ("transformed residual", f"{report.transformed_residual_max:.3e}", "", "info"),
        ("||u||_inf", f"{report.linf_u:.6g}", f"threshold {report.linf_threshold:.6g}", status(report.linf_pass)),
        ("u/v chain", f"{report.linf_u / report.linf_v if report.linf_v else 1.0:.6g}", "", status(report.linf_chain_pass)),
        ("amplitude floor", f"{report.amplitude_floor:.6g}", "", "info"),
        ("energy bound", f"{report.energy_bound_lhs:.6g}", f"<= {report.energy_bound_rhs:.6g}",
         status(report.energy_bound_pass)),
        ("energy bound (d_inf)", "", "" if report.energy_bound_comparison_rhs is None
         else f"<= {report.energy_bound_comparison_rhs:.6g}", status(report.energy_bound_comparison_pass)),
        ("Pohozaev residual", "n/a" if report.pohozaev_residual is None else f"{report.pohozaev_residual:.3e}",
         f"<= {tol.get('pohozaev_tol', float('nan')):g}",
         status(None if report.pohozaev_residual is None
                else report.pohozaev_residual <= tol.get("pohozaev_tol", math.inf))),
    ]
    for item in report.moser_chain:
        note = "" if item.reliable else " (under-resolved)"
        rows.append((f"Moser beta={item.beta:.4g}", f"{item.lhs:.6g}", f"<= {item.rhs:.6g}{note}", status(item.passed)))
    if report.moser_bound is not None:
        rows.append(("Moser L_inf bound", f"{report.linf_v:.6g}", f"<= {report.moser_bound:.6g}",
                     status(report.moser_bound_pass)))
    rows.append(("path maxima non-increasing", f"{report.path_rises} rise(s)",
                 f"{report.forced_acceptances} last-resort move(s)", "PASS" if report.path_monotone else "WARN"))
    if report.kappa0_formula_value is not None:
        rows.append(("kappa threshold formula", f"{report.kappa0_formula_value:.6g}", "", "info"))
    if report.qualitative_applicable:
        rows.append(("positive / decreasing", "", "",
                     status(report.positivity_pass and report.monotonicity_pass)))
        rows.append(("decay rate", f"{report.decay_rate:.6g}", f"R^2 {report.decay_fit_r2:.4f}",
                     status(report.decay_pass)))

    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return lines
