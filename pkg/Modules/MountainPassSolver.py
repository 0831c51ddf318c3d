# MountainPassSolver.py
# Version: 1.0
# Numerical mountain-pass solver for the dual functional J_kappa (or
# J-tilde_kappa), with Newton polishing and recovery of u = G^{-1}(v).
#
# The path is the polyline 0 -> p -> e with J(e) < 0. Each outer iteration
# locates the path maximizer w, pushes it downhill with one preconditioned
# descent step, and re-tensions the path through the new interior point.
# A move is accepted only if the new path maximum does not exceed the old
# one; if keeping e fails, e is moved onto the ray through the new point.

import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import ConfigurationError, SolverError
from Modules.Functional import EnergyReport, bump_profile, energy_functional
from Modules.Logger import Logger
from Modules.RadialGrid import Field, PotentialSpec, RadialGrid
from Modules.Transforms import ModelSpec, transform_table

ARMIJO_SLOPE = 1e-4
MIN_STEP = 1e-10
MAX_ESCALATIONS = 60
MAX_NEWTON_ITERATIONS = 30
MIN_NEWTON_DAMPING = 1.0 / 256.0
TRIVIAL_NORM = 1e-8
TAIL_FRACTION = 0.9
TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SolverConfig:
    model_spec: ModelSpec
    potential: PotentialSpec
    grid: RadialGrid
    path_points: int = 17
    descent_tol: float = 1e-8
    max_iters: int = 500
    seed_amplitude: float = 1.0
    bump_support: float = 4.0
    newton: bool = True
    newton_switch: float = 1e-3
    adaptive_radius: bool = False
    max_doublings: int = 3
    initial_guess: Optional[Field] = field(default=None, repr=False)

    def __post_init__(self):
        if self.path_points < 3:
            raise ConfigurationError(f"path_points must be at least 3, got {self.path_points}", field="path_points")
        if not self.descent_tol > 0.0:
            raise ConfigurationError(f"descent_tol must be positive, got {self.descent_tol}", field="descent_tol")
        if not self.newton_switch > 0.0:
            raise ConfigurationError(f"newton_switch must be positive, got {self.newton_switch}", field="newton_switch")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be at least 1, got {self.max_iters}", field="max_iters")
        if not self.seed_amplitude > 0.0:
            raise ConfigurationError(f"seed_amplitude must be positive, got {self.seed_amplitude}",
                                     field="seed_amplitude")
        if not 0.0 < self.bump_support < self.grid.radius:
            raise ConfigurationError(
                f"bump_radius must lie in (0, R = {self.grid.radius:g}), got {self.bump_support}", field="bump_radius")
        if self.model_spec.dim != self.grid.dim:
            raise ConfigurationError(
                f"model dimension {self.model_spec.dim} does not match grid dimension {self.grid.dim}", field="dim")
        self.potential.check_model(self.model_spec.model)


@dataclass
class Solution:
    v: Field
    u: Field
    energy: EnergyReport
    iterations: int
    converged: bool
    path_trace: List[Tuple[int, float]]
    model_spec: ModelSpec
    potential: PotentialSpec
    newton_iterations: int = 0
    forced_acceptances: int = 0
    radius_doublings: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def grid(self) -> RadialGrid:
        return self.v.grid


class MountainPassSolver:
    """One mountain-pass solve on a fixed grid."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.grid = config.grid
        self.functional = energy_functional(config.model_spec, config.potential, config.grid)
        self.logger = Logger()
        half = max(config.path_points // 2, 2)
        ramp = np.linspace(0.0, 1.0, half + 1)
        # clustered toward the interior point s = 1
        self.path_parameters = np.concatenate([1.0 - (1.0 - ramp) ** 2, 1.0 + ramp[1:] ** 2])
        self.warnings: List[str] = []

    # ----------------------------------------------------------------
    # Endpoints and paths
    # ----------------------------------------------------------------
    def escalate(self, direction: np.ndarray, start: float) -> np.ndarray:
        """Return t * direction with t doubled from ``start`` until J < 0."""
        scale = start
        for _ in range(MAX_ESCALATIONS):
            candidate = scale * direction
            if self.functional.energy(candidate) < 0.0:
                return candidate
            scale *= 2.0
        raise SolverError(f"no negative-energy endpoint found after {MAX_ESCALATIONS} doublings "
                          f"(last scale {scale:g})")

    def initial_endpoint(self) -> np.ndarray:
        phi = bump_profile(self.grid, self.config.bump_support)
        endpoint = self.escalate(phi, self.config.seed_amplitude)
        self.logger.debug(f"Initial endpoint amplitude {endpoint[0]:.6g}, "
                          f"J(e) = {self.functional.energy(endpoint):.6e}")
        return endpoint

    @staticmethod
    def path_point(peak: np.ndarray, end: np.ndarray, s: float) -> np.ndarray:
        if s <= 1.0:
            return s * peak
        return peak + (s - 1.0) * (end - peak)

    def path_maximum(self, peak: np.ndarray, end: np.ndarray) -> Tuple[float, float, np.ndarray]:
        """(max J, parameter, point) on 0 -> peak -> end; the smallest index wins ties."""
        energy = self.functional.energy
        params = self.path_parameters
        values = np.array([0.0] + [energy(self.path_point(peak, end, s)) for s in params[1:]])
        k = int(np.argmax(values))
        best_s, best_value = float(params[k]), float(values[k])
        lo, hi = params[max(k - 1, 0)], params[min(k + 1, len(params) - 1)]
        if hi > lo:
            result = minimize_scalar(lambda s: -energy(self.path_point(peak, end, s)),
                                     bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
            if -result.fun > best_value:
                best_s, best_value = float(result.x), float(-result.fun)
        return best_value, best_s, self.path_point(peak, end, best_s)

    def ray_endpoint(self, peak: np.ndarray) -> np.ndarray:
        return self.escalate(peak, 2.0)

    # ----------------------------------------------------------------
    # Descent and Newton
    # ----------------------------------------------------------------
    def project(self, values: np.ndarray) -> np.ndarray:
        projected = np.maximum(values, 0.0)
        projected[-1] = 0.0
        return projected

    def descent(self, w: np.ndarray, step: float) -> Tuple[np.ndarray, float, bool]:
        """
        One H1-preconditioned gradient step with Armijo backtracking.
        Returns (new point, step used, success).
        """
        functional = self.functional
        grad = functional.gradient(w)
        direction = functional.precondition(grad)
        slope = self.grid.inner(direction, grad)
        if slope <= 1e-300:
            return w, step, True
        current = functional.energy(w)
        alpha = step
        while alpha >= MIN_STEP:
            candidate = self.project(w - alpha * direction)
            if functional.energy(candidate) <= current - ARMIJO_SLOPE * alpha * slope:
                return candidate, alpha, True
            alpha *= 0.5
        return w, alpha, False

    def newton_polish(self, w: np.ndarray) -> Tuple[np.ndarray, float, int, bool]:
        """
        Damped Newton on the strong-form gradient with the exact
        tridiagonal Jacobian. A step is taken only if it lowers the H1
        gradient norm. Returns (point, gradient norm, iterations, converged).
        """
        functional = self.functional
        tol = self.config.descent_tol
        v = w.copy()
        grad = functional.gradient(v)
        norm = functional.gradient_norm(v, grad)
        for iteration in range(1, MAX_NEWTON_ITERATIONS + 1):
            shift = functional.reaction_derivative(functional.recover(v))
            delta = self.grid.solve_shifted(shift, -grad)
            damping = 1.0
            while damping >= MIN_NEWTON_DAMPING:
                candidate = self.project(v + damping * delta)
                candidate_grad = functional.gradient(candidate)
                candidate_norm = functional.gradient_norm(candidate, candidate_grad)
                if candidate_norm < norm:
                    break
                damping *= 0.5
            else:
                self.logger.debug(f"Newton stalled at iteration {iteration} with gradient norm {norm:.3e}")
                return v, norm, iteration, norm <= tol
            v, grad, norm = candidate, candidate_grad, candidate_norm
            self.logger.debug(f"Newton iteration {iteration}: damping {damping:g}, gradient norm {norm:.3e}")
            if norm <= tol:
                return v, norm, iteration, True
        return v, norm, MAX_NEWTON_ITERATIONS, False

    def check_nontrivial(self, w: np.ndarray):
        norm = self.functional.h1_norm(w)
        value = self.functional.energy(w)
        if norm < TRIVIAL_NORM or value <= 0.0:
            raise SolverError(f"trivial attractor: path maximizer collapsed (||w|| = {norm:.3e}, J = {value:.3e}); "
                              f"restart with a larger seed_amplitude")

    # ----------------------------------------------------------------
    # Main loop
    # ----------------------------------------------------------------
    def run(self) -> Solution:
        config = self.config
        functional = self.functional
        tol = config.descent_tol

        if config.initial_guess is not None:
            guess = self.grid.interpolate_from(config.initial_guess.grid, config.initial_guess.values)
            peak = self.project(guess)
            end = self.ray_endpoint(peak)
        else:
            end = self.initial_endpoint()
            peak = 0.5 * end
        path_max, _, w = self.path_maximum(peak, end)

        trace: List[Tuple[int, float]] = []
        step = 1.0
        switch = config.newton_switch
        converged = False
        forced = 0
        newton_iterations = 0
        norm = math.inf
        iteration = 0

        for iteration in range(1, config.max_iters + 1):
            trace.append((iteration, path_max))
            self.check_nontrivial(w)
            norm = functional.gradient_norm(w)
            self.logger.debug(f"MP iteration {iteration}: path max {path_max:.12e}, "
                              f"gradient norm {norm:.3e}, step {step:.3g}")
            if norm <= tol:
                converged = True
                break
            if config.newton and norm <= switch:
                polished, polished_norm, used, ok = self.newton_polish(w)
                newton_iterations += used
                if ok:
                    w, norm, converged = polished, polished_norm, True
                    break
                switch *= 0.1
                self.logger.debug(f"Newton polish did not converge; switch lowered to {switch:.1e}")

            accepted = False
            candidate, used_step, ok = w, step, False
            new_max, new_w = path_max, w
            allowance = 1e-12 * max(1.0, abs(path_max))
            while step >= MIN_STEP:
                candidate, used_step, ok = self.descent(w, step)
                if not ok:
                    break
                new_max, _, new_w = self.path_maximum(candidate, end)
                if new_max <= path_max + allowance:
                    accepted = True
                    break
                ray_end = self.ray_endpoint(candidate)
                new_max, _, new_w = self.path_maximum(candidate, ray_end)
                if new_max <= path_max + allowance:
                    end = ray_end
                    accepted = True
                    break
                step = 0.5 * used_step

            if accepted:
                step = min(1.0, 2.0 * used_step)
            elif ok:
                forced += 1
                end = self.ray_endpoint(candidate)
                new_max, _, new_w = self.path_maximum(candidate, end)
                message = (f"iteration {iteration}: path maximum rose from {path_max:.12e} "
                           f"to {new_max:.12e}; move accepted as last resort")
                self.warnings.append(message)
                self.logger.warning(message)
                step = 1.0
            else:
                if config.newton:
                    polished, polished_norm, used, newton_ok = self.newton_polish(w)
                    newton_iterations += used
                    if newton_ok:
                        w, norm, converged = polished, polished_norm, True
                        break
                message = f"iteration {iteration}: line search failed at gradient norm {norm:.3e}"
                self.warnings.append(message)
                self.logger.warning(message)
                break
            path_max, w = new_max, new_w

        return self.build_solution(w, path_max, norm, iteration, converged, trace, newton_iterations, forced)

    def build_solution(self, w, path_max, norm, iterations, converged, trace, newton_iterations, forced) -> Solution:
        functional = self.functional
        config = self.config
        u = functional.recover(w)
        j_value = functional.energy(w)
        converged = bool(converged and j_value > 0.0 and norm <= config.descent_tol)
        report = EnergyReport(
            j_value=j_value,
            i_value=functional.original_energy(u),
            grad_norm=float(norm),
            mp_level=float(max(j_value, path_max)),
            comparison_level=functional.comparison_level(w),
            descent_tol=config.descent_tol,
        )
        if converged:
            self.logger.info(f"Converged after {iterations} iterations ({newton_iterations} Newton): "
                             f"J = {j_value:.10g}, ||v||_inf = {np.max(np.abs(w)):.6g}, "
                             f"gradient norm {norm:.3e}")
        else:
            message = f"not converged after {iterations} iterations (gradient norm {norm:.3e})"
            self.warnings.append(message)
            self.logger.warning(message)
        return Solution(
            v=Field(self.grid, w),
            u=Field(self.grid, u),
            energy=report,
            iterations=iterations,
            converged=converged,
            path_trace=trace,
            model_spec=config.model_spec,
            potential=config.potential,
            newton_iterations=newton_iterations,
            forced_acceptances=forced,
            warnings=list(self.warnings),
        )


# --------------------------------------------------------------------
# Field-level operations
# --------------------------------------------------------------------
def initial_endpoint(config: SolverConfig) -> Field:
    return Field(config.grid, MountainPassSolver(config).initial_endpoint())


def descent_step(v: Field, config: SolverConfig) -> Field:
    solver = MountainPassSolver(config)
    values = config.grid.interpolate_from(v.grid, v.values)
    new_values, _, ok = solver.descent(values, 1.0)
    if not ok:
        solver.logger.warning("descent_step: line search reached the step-size floor; step rejected")
    return Field(config.grid, new_values)


def recover_u(v: Field, spec: ModelSpec) -> Field:
    return Field(v.grid, transform_table(spec).G_inverse(v.values))


def tail_is_negligible(v: Field) -> bool:
    index = v.grid.node_index(TAIL_FRACTION * v.grid.radius)
    peak = v.max_abs()
    return peak == 0.0 or abs(v.values[index]) < TAIL_TOLERANCE * peak


def mountain_pass_solve(config: SolverConfig) -> Solution:
    """
    Solve on config.grid; with adaptive_radius, double R (same spacing)
    while |v(0.9 R)| >= 1e-8 ||v||_inf, warm-starting from the previous
    profile.
    """
    logger = Logger()
    spec = config.model_spec
    logger.info(f"Mountain-pass solve: model={spec.model.value}, kappa={spec.kappa:g}, q={spec.q:g}, "
                f"N={spec.dim}, R={config.grid.radius:g}, n={config.grid.nodes}")
    solution = MountainPassSolver(config).run()
    doublings = 0
    while (config.adaptive_radius and solution.converged and doublings < config.max_doublings
           and not tail_is_negligible(solution.v)):
        grid = config.grid.doubled()
        logger.info(f"Tail not negligible at r = {TAIL_FRACTION * config.grid.radius:g}; "
                    f"doubling radius to {grid.radius:g} (n = {grid.nodes})")
        config = replace(config, grid=grid, initial_guess=solution.v)
        solution = MountainPassSolver(config).run()
        doublings += 1
    solution.radius_doublings = doublings
    if config.adaptive_radius and solution.converged and not tail_is_negligible(solution.v):
        message = f"tail still above {TAIL_TOLERANCE:g} relative after {doublings} radius doublings"
        solution.warnings.append(message)
        logger.warning(message)
    return solution
